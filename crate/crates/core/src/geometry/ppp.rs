use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::units::disc_area_km2;

/// Planar points in meters, all inside the sampling disc.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    pub positions: Vec<[f64; 2]>,
}

impl PointSet {
    pub fn new(positions: Vec<[f64; 2]>) -> Self {
        PointSet { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Euclidean distances to the origin.
    pub fn distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions.iter().map(|p| p[0].hypot(p[1]))
    }
}

/// Samples a homogeneous PPP with `intensity` points per km² on the disc of
/// radius `radius_m` centred at the origin.
pub fn sample_ppp(intensity: f64, radius_m: f64, seed: u64) -> Result<PointSet> {
    let mut rng = rng_from_seed(seed);
    sample_ppp_with(intensity, radius_m, &mut rng)
}

pub fn sample_ppp_with(intensity: f64, radius_m: f64, rng: &mut SimRng) -> Result<PointSet> {
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return Err(Error::invalid(format!("PPP intensity must be nonnegative, got {intensity}")));
    }
    if !(radius_m > 0.0 && radius_m.is_finite()) {
        return Err(Error::invalid(format!("PPP radius must be positive, got {radius_m}")));
    }
    let mean = intensity * disc_area_km2(radius_m);
    if mean == 0.0 {
        return Ok(PointSet::default());
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid(format!("poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    let positions = (0..count)
        .map(|_| {
            // Inverse-CDF radius keeps the points uniform over the area.
            let r = radius_m * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            [r * theta.cos(), r * theta.sin()]
        })
        .collect();
    Ok(PointSet { positions })
}

/// Distance from the origin to the closest point.
pub fn nearest_distance(points: &PointSet) -> Result<f64> {
    points
        .distances()
        .min_by(f64::total_cmp)
        .ok_or(Error::NoCoverage { mno: usize::MAX })
}
