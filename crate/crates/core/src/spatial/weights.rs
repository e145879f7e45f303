//! Spatial weight matrix constructions.
//!
//! Six designs: k-nearest-neighbor adjacency, global distance-based
//! closeness, same-label connections and within-label closeness for both
//! city paid areas and fitted mixture components. Distances are Euclidean in
//! raw GPS degree coordinates.

use std::fmt;

use crate::geo::sq_degree_dist;
use crate::ingest::BlockFace;

use super::SpatialError;

/// Which construction produced a weight matrix; carried for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Knn(usize),
    GlobalDistance,
    AreaConnections,
    AreaDistance,
    GmmConnections,
    GmmDistance,
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightMode::Knn(k) => write!(f, "knn({k})"),
            WeightMode::GlobalDistance => write!(f, "global_distance"),
            WeightMode::AreaConnections => write!(f, "area_connections"),
            WeightMode::AreaDistance => write!(f, "area_distance"),
            WeightMode::GmmConnections => write!(f, "gmm_connections"),
            WeightMode::GmmDistance => write!(f, "gmm_distance"),
        }
    }
}

/// A weight construction request with its mode-specific context.
#[derive(Debug, Clone)]
pub enum WeightSpec<'a> {
    /// 1 for each of the k nearest neighbors of a block-face (asymmetric).
    Knn { k: usize },
    /// Per-row min-max normalized closeness: nearest 1, farthest 0.
    GlobalDistance,
    /// 1 iff two block-faces share a paid-area label.
    AreaConnections,
    /// Per-row normalized closeness among same-paid-area pairs, 0 across.
    AreaDistance,
    /// 1 iff two block-faces share a mixture-component label.
    GmmConnections { assignments: &'a [usize] },
    /// Per-row normalized closeness among same-component pairs, 0 across.
    GmmDistance { assignments: &'a [usize] },
}

/// N×N nonnegative spatial weights with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    w: Vec<f64>, // row-major
    mode: WeightMode,
    zero_rows: Vec<usize>,
}

impl WeightMatrix {
    /// Wraps a dense row-major matrix, validating the invariants: square,
    /// zero diagonal, nonnegative entries, at least one positive entry.
    pub fn from_dense(w: Vec<f64>, n: usize, mode: WeightMode) -> Result<Self, SpatialError> {
        assert_eq!(w.len(), n * n, "weight matrix must be n x n");
        let mut any_positive = false;
        let mut zero_rows = Vec::new();
        for i in 0..n {
            assert_eq!(w[i * n + i], 0.0, "diagonal must be zero");
            let mut row_total = 0.0;
            for j in 0..n {
                let v = w[i * n + j];
                assert!(v >= 0.0, "weights must be nonnegative");
                row_total += v;
            }
            if row_total == 0.0 {
                zero_rows.push(i);
            } else {
                any_positive = true;
            }
        }
        if !any_positive {
            return Err(SpatialError::DegenerateWeights);
        }
        Ok(WeightMatrix {
            n,
            w,
            mode,
            zero_rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    /// Rows with no positive entry (e.g. singleton label groups), flagged
    /// for reports.
    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

/// Builds a weight matrix over the block-faces' midpoints.
///
/// Label groups of size 1 produce all-zero rows (flagged, not an error);
/// `knn` requires `1 <= k < n`.
pub fn build_weights(
    blockfaces: &[BlockFace],
    spec: &WeightSpec,
) -> Result<WeightMatrix, SpatialError> {
    let n = blockfaces.len();
    if n < 2 {
        return Err(SpatialError::TooFewBlocks(n));
    }
    let midpoints: Vec<(f64, f64)> = blockfaces.iter().map(|b| b.midpoint()).collect();

    let (mode, w) = match spec {
        WeightSpec::Knn { k } => {
            let k = *k;
            if k == 0 || k >= n {
                return Err(SpatialError::InvalidK { k, n });
            }
            let mut w = vec![0.0; n * n];
            for i in 0..n {
                // Ties at the k-th distance break by block id order.
                let mut neighbors: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                neighbors.sort_by(|&a, &b| {
                    sq_degree_dist(midpoints[i], midpoints[a])
                        .partial_cmp(&sq_degree_dist(midpoints[i], midpoints[b]))
                        .expect("finite distances")
                        .then_with(|| blockfaces[a].id.cmp(&blockfaces[b].id))
                });
                for &j in neighbors.iter().take(k) {
                    w[i * n + j] = 1.0;
                }
            }
            (WeightMode::Knn(k), w)
        }
        WeightSpec::GlobalDistance => {
            let labels: Vec<usize> = vec![0; n];
            (WeightMode::GlobalDistance, closeness(&midpoints, &labels))
        }
        WeightSpec::AreaConnections => {
            let labels = area_labels(blockfaces);
            (WeightMode::AreaConnections, connections(&labels))
        }
        WeightSpec::AreaDistance => {
            let labels = area_labels(blockfaces);
            (WeightMode::AreaDistance, closeness(&midpoints, &labels))
        }
        WeightSpec::GmmConnections { assignments } => {
            check_labels(assignments, n)?;
            (WeightMode::GmmConnections, connections(assignments))
        }
        WeightSpec::GmmDistance { assignments } => {
            check_labels(assignments, n)?;
            (WeightMode::GmmDistance, closeness(&midpoints, assignments))
        }
    };

    WeightMatrix::from_dense(w, n, mode)
}

fn check_labels(labels: &[usize], n: usize) -> Result<(), SpatialError> {
    if labels.len() != n {
        return Err(SpatialError::LabelMismatch {
            labels: labels.len(),
            n,
        });
    }
    Ok(())
}

/// Paid-area strings mapped to dense integer labels.
fn area_labels(blockfaces: &[BlockFace]) -> Vec<usize> {
    let mut seen: Vec<&str> = Vec::new();
    blockfaces
        .iter()
        .map(|b| {
            match seen.iter().position(|s| *s == b.paid_area) {
                Some(i) => i,
                None => {
                    seen.push(&b.paid_area);
                    seen.len() - 1
                }
            }
        })
        .collect()
}

/// Same-label adjacency: 1 iff labels match, diagonal zero.
fn connections(labels: &[usize]) -> Vec<f64> {
    let n = labels.len();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && labels[i] == labels[j] {
                w[i * n + j] = 1.0;
            }
        }
    }
    w
}

/// Per-row min-max normalized closeness among same-label pairs: the nearest
/// same-label neighbor gets 1, the farthest 0, cross-label pairs 0. With all
/// labels equal this is the global distance design. A row whose same-label
/// candidates are all equidistant (including the single-partner case) gets
/// weight 1 on each, matching the "weight 1 to the closest" endpoint.
fn closeness(midpoints: &[(f64, f64)], labels: &[usize]) -> Vec<f64> {
    let n = midpoints.len();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        let peers: Vec<usize> = (0..n)
            .filter(|&j| j != i && labels[j] == labels[i])
            .collect();
        if peers.is_empty() {
            continue; // singleton group: zero row
        }
        let dists: Vec<f64> = peers
            .iter()
            .map(|&j| sq_degree_dist(midpoints[i], midpoints[j]).sqrt())
            .collect();
        let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = dists.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        for (&j, &d) in peers.iter().zip(&dists) {
            w[i * n + j] = if range == 0.0 { 1.0 } else { (max - d) / range };
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn face(id: &str, lat: f64, lon: f64, area: &str) -> BlockFace {
        BlockFace::new(id, (lat, lon), (lat, lon), 4, area, "T").unwrap()
    }

    #[test]
    fn knn_collinear_points() {
        // A---B-C: B is central, C is closer to B than A is.
        let faces = vec![
            face("a", 0.0, 0.0, "X"),
            face("b", 0.0, 1.0, "X"),
            face("c", 0.0, 1.4, "X"),
        ];
        let w = build_weights(&faces, &WeightSpec::Knn { k: 1 }).unwrap();
        assert_eq!(w.get(0, 1), 1.0, "A's nearest is B");
        assert_eq!(w.get(2, 1), 1.0, "C's nearest is B");
        assert_eq!(w.get(1, 2), 1.0, "B's nearest is C (closer than A)");
        assert_eq!(w.get(1, 0), 0.0);
        assert_eq!(w.total(), 3.0);
    }

    #[test]
    fn knn_rejects_k_out_of_range() {
        let faces = vec![face("a", 0.0, 0.0, "X"), face("b", 0.0, 1.0, "X")];
        assert!(matches!(
            build_weights(&faces, &WeightSpec::Knn { k: 2 }),
            Err(SpatialError::InvalidK { k: 2, n: 2 })
        ));
        assert!(matches!(
            build_weights(&faces, &WeightSpec::Knn { k: 0 }),
            Err(SpatialError::InvalidK { .. })
        ));
    }

    #[test]
    fn area_connections_definition() {
        let faces = vec![
            face("1", 0.0, 0.0, "X"),
            face("2", 0.0, 1.0, "X"),
            face("3", 0.0, 2.0, "Y"),
        ];
        let w = build_weights(&faces, &WeightSpec::AreaConnections).unwrap();
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(1, 0), 1.0);
        assert_eq!(w.get(0, 2), 0.0);
        assert_eq!(w.get(2, 1), 0.0);
        assert_eq!(w.total(), 2.0);
        assert_eq!(w.zero_rows(), &[2], "singleton group row is flagged");
    }

    #[test]
    fn global_distance_row_endpoints() {
        let faces = vec![
            face("a", 0.0, 0.0, "X"),
            face("b", 0.0, 1.0, "X"),
            face("c", 0.0, 3.0, "X"),
            face("d", 0.0, 7.0, "X"),
        ];
        let w = build_weights(&faces, &WeightSpec::GlobalDistance).unwrap();
        // From a: nearest is b (weight 1), farthest is d (weight 0).
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(0, 3), 0.0);
        let mid = w.get(0, 2); // 3 of 7 along the range: (7-3)/(7-1)
        assert!((mid - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(w.get(0, 0), 0.0);
    }

    #[test]
    fn gmm_distance_zeroes_cross_component_pairs() {
        let faces = vec![
            face("a", 0.0, 0.0, "X"),
            face("b", 0.0, 1.0, "X"),
            face("c", 0.0, 2.0, "X"),
            face("d", 0.0, 3.0, "X"),
        ];
        let labels = vec![0, 0, 1, 1];
        let w = build_weights(&faces, &WeightSpec::GmmDistance { assignments: &labels }).unwrap();
        assert_eq!(w.get(0, 2), 0.0);
        assert_eq!(w.get(0, 3), 0.0);
        // Single same-label partner: closeness 1 both ways.
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(1, 0), 1.0);
        assert_eq!(w.get(2, 3), 1.0);
    }

    #[test]
    fn all_singleton_groups_is_degenerate() {
        let faces = vec![face("a", 0.0, 0.0, "X"), face("b", 0.0, 1.0, "Y")];
        assert!(matches!(
            build_weights(&faces, &WeightSpec::AreaConnections),
            Err(SpatialError::DegenerateWeights)
        ));
    }

    #[test]
    fn labels_must_align() {
        let faces = vec![face("a", 0.0, 0.0, "X"), face("b", 0.0, 1.0, "X")];
        assert!(matches!(
            build_weights(&faces, &WeightSpec::GmmConnections { assignments: &[0] }),
            Err(SpatialError::LabelMismatch { labels: 1, n: 2 })
        ));
    }
}
