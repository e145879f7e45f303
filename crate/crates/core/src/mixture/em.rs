//! Expectation-maximization for diagonal-covariance Gaussian mixtures.
//!
//! All densities are evaluated in the log domain and combined with
//! log-sum-exp, so responsibilities never underflow to an all-zero row.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::features::{FeatureMatrix, FEATURE_DIM};
use super::model::{GaussianParams, Responsibilities, ZoneModel};
use super::{EmConfig, MixtureError, MASS_FLOOR_PER_SAMPLE, VARIANCE_FLOOR};
use crate::seed;

const LN_2PI: f64 = 1.8378770664093453;

/// Log of the diagonal-covariance Gaussian density at `x`.
fn log_gaussian_diag(
    x: &[f64; FEATURE_DIM],
    mean: &[f64; FEATURE_DIM],
    var: &[f64; FEATURE_DIM],
) -> f64 {
    let mut quad = 0.0;
    let mut log_det = 0.0;
    for d in 0..FEATURE_DIM {
        let diff = x[d] - mean[d];
        quad += diff * diff / var[d];
        log_det += var[d].ln();
    }
    -0.5 * (FEATURE_DIM as f64 * LN_2PI + log_det + quad)
}

fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn validate_model(features: &FeatureMatrix, model: &ZoneModel) -> Result<(), MixtureError> {
    if model.k == 0 {
        return Err(MixtureError::ZeroComponents);
    }
    if model.weights.len() != model.k
        || model.means.len() != model.k
        || model.variances.len() != model.k
    {
        return Err(MixtureError::DimensionMismatch {
            detail: format!(
                "k = {}, weights = {}, means = {}, variances = {}",
                model.k,
                model.weights.len(),
                model.means.len(),
                model.variances.len()
            ),
        });
    }
    if features.is_empty() {
        return Err(MixtureError::TooFewSamples { n: 0, k: model.k });
    }
    for (j, var) in model.variances.iter().enumerate() {
        for &v in var {
            if v < VARIANCE_FLOOR {
                return Err(MixtureError::VarianceBelowFloor {
                    component: j,
                    value: v,
                    floor: VARIANCE_FLOOR,
                });
            }
        }
    }
    Ok(())
}

/// Per-sample vector of `ln pi_j + ln N(x | mu_j, Sigma_j)`.
fn log_joint(params: &GaussianParams, x: &[f64; FEATURE_DIM]) -> Vec<f64> {
    params
        .weights
        .iter()
        .zip(params.means.iter().zip(&params.variances))
        .map(|(&w, (mean, var))| w.ln() + log_gaussian_diag(x, mean, var))
        .collect()
}

fn responsibilities_and_ll(features: &FeatureMatrix, params: &GaussianParams) -> (Responsibilities, f64) {
    let n = features.len();
    let k = params.weights.len();
    let mut r = vec![0.0; n * k];
    let mut ll = 0.0;
    for (i, x) in features.rows().iter().enumerate() {
        let joint = log_joint(params, x);
        let lse = logsumexp(&joint);
        ll += lse;
        let row = &mut r[i * k..(i + 1) * k];
        let mut sum = 0.0;
        for (j, &lj) in joint.iter().enumerate() {
            let v = (lj - lse).exp();
            row[j] = v;
            sum += v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    (Responsibilities::from_rows(n, k, r), ll)
}

/// Total log likelihood of the features under the model (Gaussian mixture
/// objective), computed in the log domain.
pub fn log_likelihood(features: &FeatureMatrix, model: &ZoneModel) -> Result<f64, MixtureError> {
    validate_model(features, model)?;
    let params = GaussianParams {
        weights: model.weights.clone(),
        means: model.means.clone(),
        variances: model.variances.clone(),
    };
    Ok(features
        .rows()
        .iter()
        .map(|x| logsumexp(&log_joint(&params, x)))
        .sum())
}

/// Posterior responsibility of each component for each sample. Rows sum to 1.
pub fn e_step(
    features: &FeatureMatrix,
    model: &ZoneModel,
) -> Result<Responsibilities, MixtureError> {
    validate_model(features, model)?;
    let params = GaussianParams {
        weights: model.weights.clone(),
        means: model.means.clone(),
        variances: model.variances.clone(),
    };
    Ok(responsibilities_and_ll(features, &params).0)
}

/// Maximization step: responsibility-weighted weights, means, and diagonal
/// second central moments (variance-floored).
///
/// Returns [`MixtureError::ComponentCollapse`] when a component's
/// responsibility mass falls below the floor; the caller decides whether to
/// reinitialize or discard.
pub fn m_step(
    features: &FeatureMatrix,
    resp: &Responsibilities,
) -> Result<GaussianParams, MixtureError> {
    let n = features.len();
    let k = resp.k();
    debug_assert_eq!(resp.n(), n);

    let mass_floor = MASS_FLOOR_PER_SAMPLE * n as f64;
    let mut mass = vec![0.0; k];
    for i in 0..n {
        for (j, m) in mass.iter_mut().enumerate() {
            *m += resp.get(i, j);
        }
    }
    if let Some(j) = mass.iter().position(|&m| m < mass_floor) {
        return Err(MixtureError::ComponentCollapse {
            component: j,
            mass: mass[j],
        });
    }

    let mut means = vec![[0.0; FEATURE_DIM]; k];
    for (i, x) in features.rows().iter().enumerate() {
        for j in 0..k {
            let r = resp.get(i, j);
            for d in 0..FEATURE_DIM {
                means[j][d] += r * x[d];
            }
        }
    }
    for (j, mean) in means.iter_mut().enumerate() {
        for m in mean.iter_mut() {
            *m /= mass[j];
        }
    }

    let mut variances = vec![[0.0; FEATURE_DIM]; k];
    for (i, x) in features.rows().iter().enumerate() {
        for j in 0..k {
            let r = resp.get(i, j);
            for d in 0..FEATURE_DIM {
                let diff = x[d] - means[j][d];
                variances[j][d] += r * diff * diff;
            }
        }
    }
    for (j, var) in variances.iter_mut().enumerate() {
        for v in var.iter_mut() {
            *v = (*v / mass[j]).max(VARIANCE_FLOOR);
        }
    }

    let weights = mass.iter().map(|&m| m / n as f64).collect();
    Ok(GaussianParams {
        weights,
        means,
        variances,
    })
}

/// Distance-weighted initialization: the first mean is a random sample, each
/// further mean is drawn with probability proportional to the squared
/// distance to the nearest already-chosen mean. Variances start at the
/// column variances, weights uniform.
fn init_params(features: &FeatureMatrix, k: usize, rng: &mut ChaCha8Rng) -> GaussianParams {
    let rows = features.rows();
    let n = rows.len();

    let mut means: Vec<[f64; FEATURE_DIM]> = Vec::with_capacity(k);
    means.push(rows[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = rows.iter().map(|x| sq_dist(x, &means[0])).collect();
    while means.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        means.push(rows[pick]);
        let last = *means.last().expect("just pushed");
        for (i, x) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, &last));
        }
    }

    let mut variances = features.column_variances();
    for v in &mut variances {
        *v = v.max(VARIANCE_FLOOR);
    }
    GaussianParams {
        weights: vec![1.0 / k as f64; k],
        means,
        variances: vec![variances; k],
    }
}

fn sq_dist(a: &[f64; FEATURE_DIM], b: &[f64; FEATURE_DIM]) -> f64 {
    let mut s = 0.0;
    for d in 0..FEATURE_DIM {
        let diff = a[d] - b[d];
        s += diff * diff;
    }
    s
}

/// Log-likelihood sequences observed while fitting: one entry per restart,
/// each a list of monotone segments (a component reinitialization starts a
/// fresh segment).
#[derive(Debug, Clone, Default)]
pub struct FitTrace {
    pub restarts: Vec<Vec<Vec<f64>>>,
}

struct RestartFit {
    params: GaussianParams,
    resp: Responsibilities,
    ll: f64,
}

/// One seeded EM run. The loop always ends on an E-step, so the returned
/// (params, responsibilities, log likelihood) triple is self-consistent.
fn run_restart(
    features: &FeatureMatrix,
    k: usize,
    config: &EmConfig,
    restart_seed: u64,
) -> (Option<RestartFit>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed);
    let mut params = init_params(features, k, &mut rng);
    let mut segments: Vec<Vec<f64>> = vec![Vec::new()];
    let mut prev_ll = f64::NEG_INFINITY;
    let mut reinitialized = false;
    let mut iterations = 0usize;

    let fit = loop {
        let (resp, ll) = responsibilities_and_ll(features, &params);
        segments.last_mut().expect("segment").push(ll);
        debug_assert!(
            (0..features.len()).all(|i| {
                let s: f64 = resp.row(i).iter().sum();
                (s - 1.0).abs() <= 1e-9
            }),
            "responsibility rows must stay stochastic"
        );

        iterations += 1;
        if ll - prev_ll <= config.epsilon || iterations >= config.max_iter {
            break Some(RestartFit { params, resp, ll });
        }
        prev_ll = ll;

        match m_step(features, &resp) {
            Ok(next) => {
                debug_assert!((next.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                debug_assert!(next
                    .variances
                    .iter()
                    .all(|v| v.iter().all(|&x| x >= VARIANCE_FLOOR)));
                params = next;
            }
            Err(MixtureError::ComponentCollapse { component, .. }) => {
                if reinitialized {
                    // Second collapse: discard this restart.
                    break None;
                }
                reinitialized = true;
                params.means[component] = features.rows()[rng.random_range(0..features.len())];
                let mut var = features.column_variances();
                for v in &mut var {
                    *v = v.max(VARIANCE_FLOOR);
                }
                params.variances[component] = var;
                params.weights[component] = 1.0 / features.len() as f64;
                let total: f64 = params.weights.iter().sum();
                for w in &mut params.weights {
                    *w /= total;
                }
                segments.push(Vec::new());
                prev_ll = f64::NEG_INFINITY;
            }
            Err(other) => unreachable!("m_step only signals collapse: {other}"),
        }
    };

    (fit, segments)
}

/// Fits a k-component mixture with several seeded restarts and keeps the one
/// with the highest converged log likelihood. Identical seed and data give a
/// bit-identical model.
pub fn em_fit(
    features: &FeatureMatrix,
    k: usize,
    config: &EmConfig,
) -> Result<ZoneModel, MixtureError> {
    em_fit_traced(features, k, config).map(|(model, _)| model)
}

/// [`em_fit`] plus the per-restart log-likelihood trace, for monotonicity
/// checks.
pub fn em_fit_traced(
    features: &FeatureMatrix,
    k: usize,
    config: &EmConfig,
) -> Result<(ZoneModel, FitTrace), MixtureError> {
    if k == 0 {
        return Err(MixtureError::ZeroComponents);
    }
    if features.len() < k {
        return Err(MixtureError::TooFewSamples {
            n: features.len(),
            k,
        });
    }

    let outcomes: Vec<(Option<RestartFit>, Vec<Vec<f64>>)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(features, k, config, seed::mix(config.seed, r as u64)))
        .collect();

    let mut trace = FitTrace::default();
    let mut best: Option<RestartFit> = None;
    for (fit, segments) in outcomes {
        trace.restarts.push(segments);
        if let Some(fit) = fit {
            let better = match &best {
                Some(b) => fit.ll > b.ll,
                None => true,
            };
            if better {
                best = Some(fit);
            }
        }
    }

    let best = best.ok_or_else(|| MixtureError::FitFailure {
        restarts: config.restarts,
        slice: format!("n = {}, k = {}", features.len(), k),
    })?;

    let model = ZoneModel {
        k,
        weights: best.params.weights,
        means: best.params.means,
        variances: best.params.variances,
        norm: features.norm().clone(),
        log_likelihood: best.ll,
        assignments: best.resp.hard_assignments(),
        seed: config.seed,
    };
    Ok((model, trace))
}

/// Hard labels for new samples under a fixed model; the model is not refit.
/// The features must carry the model's own normalization.
pub fn assign(features: &FeatureMatrix, model: &ZoneModel) -> Result<Vec<usize>, MixtureError> {
    if features.norm() != &model.norm {
        return Err(MixtureError::NormMismatch);
    }
    Ok(e_step(features, model)?.hard_assignments())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::NormParams;

    fn unit_norm() -> NormParams {
        NormParams {
            min: [0.0; 3],
            max: [1.0; 3],
        }
    }

    fn model_k1_at(mean: [f64; 3]) -> ZoneModel {
        ZoneModel {
            k: 1,
            weights: vec![1.0],
            means: vec![mean],
            variances: vec![[1.0; 3]],
            norm: unit_norm(),
            log_likelihood: 0.0,
            assignments: vec![],
            seed: 0,
        }
    }

    #[test]
    fn ll_of_sample_at_mean_with_unit_variance() {
        // Density at the mean of a d=3 unit-variance Gaussian: (2 pi)^(-3/2).
        let features = FeatureMatrix::with_norm(&[[0.5, 0.5, 0.5]], unit_norm());
        let ll = log_likelihood(&features, &model_k1_at([0.5, 0.5, 0.5])).unwrap();
        let expected = -1.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((ll - expected).abs() < 1e-12, "{ll} vs {expected}");
        assert!((ll - (-2.756815599614018)).abs() < 1e-6);
    }

    #[test]
    fn ll_doubles_when_samples_duplicate() {
        let raw = vec![[0.2, 0.4, 0.9], [0.8, 0.1, 0.3]];
        let doubled: Vec<[f64; 3]> = raw.iter().chain(raw.iter()).cloned().collect();
        let f1 = FeatureMatrix::with_norm(&raw, unit_norm());
        let f2 = FeatureMatrix::with_norm(&doubled, unit_norm());
        let model = model_k1_at([0.4, 0.4, 0.4]);
        let a = log_likelihood(&f1, &model).unwrap();
        let b = log_likelihood(&f2, &model).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn ll_rejects_variance_below_floor() {
        let features = FeatureMatrix::with_norm(&[[0.5, 0.5, 0.5]], unit_norm());
        let mut model = model_k1_at([0.5, 0.5, 0.5]);
        model.variances[0][1] = VARIANCE_FLOOR / 2.0;
        assert!(matches!(
            log_likelihood(&features, &model),
            Err(MixtureError::VarianceBelowFloor { component: 0, .. })
        ));
    }

    #[test]
    fn e_step_symmetric_components_split_evenly() {
        let features = FeatureMatrix::with_norm(&[[0.5, 0.5, 0.5]], unit_norm());
        let model = ZoneModel {
            k: 2,
            weights: vec![0.5, 0.5],
            means: vec![[0.3, 0.5, 0.5], [0.7, 0.5, 0.5]],
            variances: vec![[0.01; 3], [0.01; 3]],
            norm: unit_norm(),
            log_likelihood: 0.0,
            assignments: vec![],
            seed: 0,
        };
        let r = e_step(&features, &model).unwrap();
        assert!((r.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((r.get(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn e_step_single_component_is_one() {
        let features = FeatureMatrix::with_norm(&[[0.1, 0.9, 0.4], [0.6, 0.6, 0.6]], unit_norm());
        let r = e_step(&features, &model_k1_at([0.0, 0.0, 0.0])).unwrap();
        for i in 0..2 {
            assert_eq!(r.get(i, 0), 1.0);
        }
    }

    #[test]
    fn e_step_survives_extreme_underflow() {
        // Both components astronomically far from the sample: densities
        // underflow any direct evaluation, but log-domain responsibilities
        // still sum to one.
        let features = FeatureMatrix::with_norm(&[[1e6, 1e6, 1e6]], unit_norm());
        let model = ZoneModel {
            k: 2,
            weights: vec![0.5, 0.5],
            means: vec![[0.0; 3], [1.0; 3]],
            variances: vec![[1e-6; 3], [1e-6; 3]],
            norm: unit_norm(),
            log_likelihood: 0.0,
            assignments: vec![],
            seed: 0,
        };
        let r = e_step(&features, &model).unwrap();
        let sum: f64 = r.row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "row sum {sum}");
    }

    #[test]
    fn m_step_one_hot_recovers_cluster_moments() {
        let raw = vec![[0.0, 0.0, 0.0], [0.2, 0.0, 0.0], [1.0, 1.0, 1.0], [0.8, 1.0, 1.0]];
        let features = FeatureMatrix::with_norm(&raw, unit_norm());
        let resp = Responsibilities::from_rows(4, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let p = m_step(&features, &resp).unwrap();
        assert!((p.weights[0] - 0.5).abs() < 1e-15);
        assert!((p.means[0][0] - 0.1).abs() < 1e-15);
        assert!((p.means[1][0] - 0.9).abs() < 1e-15);
        // Population variance of {0.0, 0.2} is 0.01.
        assert!((p.variances[0][0] - 0.01).abs() < 1e-15);
        // Constant coordinates floor out.
        assert_eq!(p.variances[0][1], VARIANCE_FLOOR);
    }

    #[test]
    fn m_step_uniform_responsibilities_give_global_moments() {
        let raw = vec![[0.1, 0.5, 0.9], [0.3, 0.1, 0.2], [0.9, 0.9, 0.1]];
        let features = FeatureMatrix::with_norm(&raw, unit_norm());
        let resp = Responsibilities::from_rows(3, 2, vec![0.5; 6]);
        let p = m_step(&features, &resp).unwrap();
        let gmean = features.column_means();
        let gvar = features.column_variances();
        for j in 0..2 {
            for d in 0..3 {
                assert!((p.means[j][d] - gmean[d]).abs() < 1e-12);
                assert!((p.variances[j][d] - gvar[d].max(VARIANCE_FLOOR)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn m_step_signals_collapse() {
        let features = FeatureMatrix::with_norm(&[[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]], unit_norm());
        let resp = Responsibilities::from_rows(2, 2, vec![1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            m_step(&features, &resp),
            Err(MixtureError::ComponentCollapse { component: 1, .. })
        ));
    }

    #[test]
    fn em_fit_rejects_more_components_than_samples() {
        let features = FeatureMatrix::fit(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        assert!(matches!(
            em_fit(&features, 3, &EmConfig::default()),
            Err(MixtureError::TooFewSamples { n: 2, k: 3 })
        ));
    }

    #[test]
    fn em_fit_zero_restarts_is_fit_failure() {
        let features = FeatureMatrix::fit(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        let config = EmConfig {
            restarts: 0,
            ..EmConfig::default()
        };
        assert!(matches!(
            em_fit(&features, 1, &config),
            Err(MixtureError::FitFailure { .. })
        ));
    }

    #[test]
    fn em_fit_k1_closed_form() {
        let raw = vec![
            [0.12, 0.91, 0.33],
            [0.45, 0.27, 0.88],
            [0.71, 0.55, 0.14],
            [0.09, 0.63, 0.72],
            [0.95, 0.08, 0.51],
        ];
        let features = FeatureMatrix::with_norm(&raw, unit_norm());
        let model = em_fit(&features, 1, &EmConfig::default()).unwrap();
        let mean = features.column_means();
        let var = features.column_variances();
        for d in 0..3 {
            assert!((model.means[0][d] - mean[d]).abs() < 1e-12);
            assert!((model.variances[0][d] - var[d].max(VARIANCE_FLOOR)).abs() < 1e-12);
        }
        assert_eq!(model.weights, vec![1.0]);
    }

    #[test]
    fn em_fit_is_deterministic_for_fixed_seed() {
        let raw: Vec<[f64; 3]> = (0..40)
            .map(|i| {
                let t = i as f64 / 39.0;
                [t, (t * 7.3).fract(), (t * 3.1).fract()]
            })
            .collect();
        let features = FeatureMatrix::fit(&raw);
        let config = EmConfig::default().with_seed(99);
        let a = em_fit(&features, 3, &config).unwrap();
        let b = em_fit(&features, 3, &config).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "same seed must give identical bytes");
    }

    #[test]
    fn assign_training_data_reproduces_assignments() {
        let raw: Vec<[f64; 3]> = (0..30)
            .map(|i| {
                if i < 15 {
                    [0.1 + 0.001 * i as f64, 0.1, 0.2]
                } else {
                    [0.9 - 0.001 * i as f64, 0.9, 0.8]
                }
            })
            .collect();
        let features = FeatureMatrix::fit(&raw);
        let model = em_fit(&features, 2, &EmConfig::default().with_seed(5)).unwrap();
        let labels = assign(&features, &model).unwrap();
        assert_eq!(labels, model.assignments);
    }

    #[test]
    fn assign_rejects_foreign_normalization() {
        let features = FeatureMatrix::fit(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]);
        let model = model_k1_at([0.5, 0.5, 0.5]);
        assert!(matches!(
            assign(&features, &model),
            Err(MixtureError::NormMismatch)
        ));
    }

    #[test]
    fn assign_prefers_component_at_point_with_dominant_weight() {
        let model = ZoneModel {
            k: 2,
            weights: vec![0.9, 0.1],
            means: vec![[0.3, 0.3, 0.3], [0.7, 0.7, 0.7]],
            variances: vec![[0.05; 3], [0.05; 3]],
            norm: unit_norm(),
            log_likelihood: 0.0,
            assignments: vec![],
            seed: 0,
        };
        let features = FeatureMatrix::with_norm(&[[0.3, 0.3, 0.3]], unit_norm());
        assert_eq!(assign(&features, &model).unwrap(), vec![0]);
    }
}
