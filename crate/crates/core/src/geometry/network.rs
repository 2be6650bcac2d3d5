use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{sample_ppp_with, BuyerPowerScheme, NetworkConfig};
use crate::channel::{sample_buyer_power, NetworkSample};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, stream, sub_seed, SimRng};

/// Resampling budget of [`sample_network_covered`].
pub const MAX_COVERAGE_RETRIES: u32 = 100;

/// Draws one realization: base stations of every operator, unit-mean
/// exponential fading per base station and sub-band, then buyer powers.
///
/// Fails with [`Error::NoCoverage`] when some operator has no base station
/// inside the sampling window.
pub fn sample_network(config: &NetworkConfig, seed: u64) -> Result<NetworkSample> {
    config.validate()?;
    let mut rng = rng_from_seed(seed);
    let bands = config.total_subbands();
    let owners = config.band_owners();

    let mut points = Vec::with_capacity(config.mno_count());
    for &lambda in &config.bs_intensity {
        points.push(sample_ppp_with(lambda, config.window_radius_m, &mut rng)?);
    }
    let fading: Vec<Vec<f64>> = points
        .iter()
        .map(|pts| (0..pts.len() * bands).map(|_| exp1(&mut rng)).collect())
        .collect();
    let buyer_power: Vec<Vec<f64>> = (0..config.num_buyers)
        .map(|b| {
            let n = points[config.num_sellers + b].len();
            let mut powers = Vec::with_capacity(n * bands);
            for _ in 0..n {
                for &s in &owners {
                    powers.push(draw_power(config, s, &mut rng));
                }
            }
            powers
        })
        .collect();

    NetworkSample::from_parts(config, points, fading, buyer_power, seed)
}

/// Like [`sample_network`], but redraws with derived seeds until every
/// operator has a base station. The retry count is stored on the sample.
pub fn sample_network_covered(config: &NetworkConfig, seed: u64) -> Result<NetworkSample> {
    let mut attempt_seed = seed;
    for retries in 0..=MAX_COVERAGE_RETRIES {
        match sample_network(config, attempt_seed) {
            Ok(mut sample) => {
                sample.retries = retries;
                return Ok(sample);
            }
            Err(Error::NoCoverage { .. }) => {
                attempt_seed = sub_seed(seed, stream::RESAMPLE, u64::from(retries));
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::CoverageRetriesExhausted { retries: MAX_COVERAGE_RETRIES })
}

fn exp1(rng: &mut SimRng) -> f64 {
    loop {
        let h: f64 = Exp1.sample(rng);
        if h > 0.0 {
            return h;
        }
    }
}

fn draw_power(config: &NetworkConfig, seller: usize, rng: &mut SimRng) -> f64 {
    match config.buyer_power {
        BuyerPowerScheme::InterferenceControlled => sample_buyer_power(
            config.interference_threshold_w[seller],
            config.seller_user_intensity(seller),
            config.pathloss_alpha,
            rng,
        ),
        BuyerPowerScheme::UniformRandom { max_w } => max_w * (1.0 - rng.random::<f64>()),
        BuyerPowerScheme::Fixed { power_w } => power_w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::nearest_distance;

    #[test]
    fn deterministic_per_seed() {
        let cfg = NetworkConfig::standard(1, 1, 1);
        let a = sample_network_covered(&cfg, 7).unwrap();
        let b = sample_network_covered(&cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_network_covered(&cfg, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shapes_and_positivity() {
        let cfg = NetworkConfig::standard(2, 2, 2);
        let xi = sample_network_covered(&cfg, 3).unwrap();
        assert_eq!(xi.bs_points.len(), 4);
        for (k, f) in xi.fading.iter().enumerate() {
            assert_eq!(f.len(), xi.bs_points[k].len() * 4);
            assert!(f.iter().all(|&h| h > 0.0));
        }
        for (b, p) in xi.buyer_power.iter().enumerate() {
            assert_eq!(p.len(), xi.bs_points[2 + b].len() * 4);
            assert!(p.iter().all(|&v| v > 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn low_intensity_needs_retries_or_fails() {
        let mut cfg = NetworkConfig::standard(1, 1, 1);
        cfg.window_radius_m = 500.0;
        cfg.bs_intensity = vec![1e-3, 1e-3];
        match sample_network_covered(&cfg, 1) {
            Err(Error::CoverageRetriesExhausted { retries }) => assert_eq!(retries, 100),
            other => panic!("unexpected {other:?}"),
        }
        cfg.bs_intensity = vec![1.5, 1.5];
        let mut seen_retry = false;
        for seed in 0..50 {
            let xi = sample_network_covered(&cfg, seed).unwrap();
            seen_retry |= xi.retries > 0;
        }
        assert!(seen_retry);
    }

    #[test]
    fn mean_bs_count_matches_intensity() {
        let mut cfg = NetworkConfig::standard(1, 1, 1);
        cfg.window_radius_m = 500.0;
        let n = 4000;
        let mut total = 0usize;
        for seed in 0..n {
            match sample_network(&cfg, seed) {
                Ok(xi) => total += xi.bs_points[0].len(),
                Err(Error::NoCoverage { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
        // Conditioning on coverage barely moves the mean at 6.28 expected points.
        let mean = total as f64 / n as f64;
        assert!((mean - 6.283).abs() < 0.15, "{mean}");
    }

    #[test]
    fn fixed_scheme_sets_every_power() {
        let mut cfg = NetworkConfig::standard(1, 1, 1);
        cfg.buyer_power = BuyerPowerScheme::Fixed { power_w: 0.25 };
        let xi = sample_network_covered(&cfg, 11).unwrap();
        assert!(xi.buyer_power[0].iter().all(|&p| p == 0.25));
        assert!(nearest_distance(&xi.bs_points[1]).unwrap() > 0.0);
    }
}
