//! Geodesic helpers.

/// Mean Earth radius in meters used for all meter-valued distances.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Great-circle distance in meters between two (latitude, longitude) points
/// given in degrees.
pub fn haversine_m(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());

    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;

    let s = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * s.sqrt().asin() * EARTH_RADIUS_M
}

/// Squared Euclidean distance in raw degree coordinates.
///
/// Spatial weight constructions deliberately use plain GPS-coordinate
/// distances with no geodesic correction; meters appear only in reports.
pub fn sq_degree_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dlat = a.0 - b.0;
    let dlon = a.1 - b.1;
    dlat * dlat + dlon * dlon
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haversine_zero_for_identical_points() {
        assert_eq!(haversine_m((47.61, -122.34), (47.61, -122.34)), 0.0);
    }

    #[test]
    fn haversine_one_degree_latitude() {
        // One degree of latitude on the mean-radius sphere.
        let d = haversine_m((47.0, -122.0), (48.0, -122.0));
        let expected = EARTH_RADIUS_M * 1.0_f64.to_radians();
        assert!((d - expected).abs() < 1e-6, "got {d}, expected {expected}");
    }

    #[test]
    fn degree_distance_is_symmetric() {
        let a = (47.61, -122.34);
        let b = (47.62, -122.35);
        assert_eq!(sq_degree_dist(a, b), sq_degree_dist(b, a));
    }
}
