//! Great-circle distances.

use nalgebra::DMatrix;

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Haversine distance in km between two (lat, lon) points given in degrees.
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn distance_matrix(coords: &[(f64, f64)]) -> DMatrix<f64> {
    let n = coords.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = haversine_km(coords[i], coords[j]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_are_zero_apart() {
        assert_eq!(haversine_km((-33.4, -70.6), (-33.4, -70.6)), 0.0);
    }

    #[test]
    fn half_circumference() {
        let d = haversine_km((0.0, 0.0), (0.0, 180.0));
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_KM).abs() < 1e-6);
        assert!((d - 20015.0).abs() < 1.0);
    }

    #[test]
    fn matrix_is_symmetric_with_zero_diagonal() {
        let c = [(-30.0, -71.0), (-40.0, -72.5), (-20.0, -69.0)];
        let d = distance_matrix(&c);
        for i in 0..3 {
            assert_eq!(d[(i, i)], 0.0);
            for j in 0..3 {
                assert_eq!(d[(i, j)], d[(j, i)]);
            }
        }
    }
}
