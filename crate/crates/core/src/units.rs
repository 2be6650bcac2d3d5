//! Unit conversions shared by the configuration and radio layers.

/// Converts a power level in dBm to watts: `10^((dBm - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Intensities are configured per km²; distances are handled in meters.
pub fn per_km2_to_per_m2(intensity: f64) -> f64 {
    intensity * 1e-6
}

/// Area of a disc of radius `radius_m` meters, in km².
pub fn disc_area_km2(radius_m: f64) -> f64 {
    let r_km = radius_m / 1000.0;
    std::f64::consts::PI * r_km * r_km
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dbm_reference_points() {
        assert_relative_eq!(dbm_to_watts(-110.0), 1e-14, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(10.0), 1e-2, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(-150.0), 1e-18, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(30.0), 1.0);
    }

    #[test]
    fn dbm_round_trip() {
        for dbm in [-150.0, -110.0, -23.5, 0.0, 10.0, 43.0] {
            assert_relative_eq!(watts_to_dbm(dbm_to_watts(dbm)), dbm, epsilon = 1e-10);
        }
    }
}
