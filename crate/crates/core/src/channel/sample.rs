use crate::error::{Error, Result};
use crate::geometry::{Association, NetworkConfig, PointSet};

/// One random realization `ξ`: base-station layouts, fading towards the
/// typical user on every sub-band and buyer transmit powers.
///
/// Aggregated link gains that do not depend on the decision variables are
/// computed once at construction, so SINR evaluation is `O(L·B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSample {
    pub seed: u64,
    /// Resampling attempts needed to obtain coverage for every operator.
    pub retries: u32,
    /// Per operator, sellers first.
    pub bs_points: Vec<PointSet>,
    /// Per operator, `fading[k][f * L + l]` for base station `f` on sub-band `l`.
    pub fading: Vec<Vec<f64>>,
    /// Per buyer, `buyer_power[b][f * L + l]` in watts.
    pub buyer_power: Vec<Vec<f64>>,
    pub(crate) gains: LinkGains,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinkGains {
    pub num_sellers: usize,
    pub num_buyers: usize,
    pub bands: usize,
    pub owners: Vec<usize>,
    pub noise: f64,
    /// `h₀ x₀^-α` from the owner's serving base station, per sub-band.
    pub seller_signal: Vec<f64>,
    /// `Σ h x^-α` over the owner's other base stations, per sub-band.
    pub seller_other: Vec<f64>,
    /// `Σ_f p h x^-α` over every base station of buyer `b`, `[b * L + l]`.
    pub buyer_total: Vec<f64>,
    /// Received power from buyer `b`'s serving base station, `[b * L + l]`.
    pub buyer_signal: Vec<f64>,
}

impl NetworkSample {
    /// Assembles a realization from explicit parts. Fails with
    /// [`Error::NoCoverage`] when some operator has no base station.
    pub fn from_parts(
        config: &NetworkConfig,
        bs_points: Vec<PointSet>,
        fading: Vec<Vec<f64>>,
        buyer_power: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let s_count = config.num_sellers;
        let b_count = config.num_buyers;
        let bands = config.total_subbands();
        let alpha = config.pathloss_alpha;
        if bs_points.len() != config.mno_count()
            || fading.len() != config.mno_count()
            || buyer_power.len() != b_count
        {
            return Err(Error::invalid("sample parts do not match the operator count"));
        }
        for (k, pts) in bs_points.iter().enumerate() {
            if pts.is_empty() {
                return Err(Error::NoCoverage { mno: k });
            }
            if fading[k].len() != pts.len() * bands {
                return Err(Error::invalid(format!("fading of operator {k} has wrong length")));
            }
        }
        for b in 0..b_count {
            if buyer_power[b].len() != bs_points[s_count + b].len() * bands {
                return Err(Error::invalid(format!("powers of buyer {b} have wrong length")));
            }
        }

        let pathloss: Vec<Vec<f64>> = bs_points
            .iter()
            .map(|pts| pts.distances().map(|d| d.powf(-alpha)).collect())
            .collect();
        let owners = config.band_owners();

        let mut seller_signal = vec![0.0; bands];
        let mut seller_other = vec![0.0; bands];
        for (l, &s) in owners.iter().enumerate() {
            let pl = &pathloss[s];
            // Equal powers: nearest base station is the strongest on average.
            let serving = argmax(pl.iter().copied());
            let mut other = 0.0;
            for (f, &g) in pl.iter().enumerate() {
                let rx = fading[s][f * bands + l] * g;
                if f == serving {
                    seller_signal[l] = rx;
                } else {
                    other += rx;
                }
            }
            seller_other[l] = other;
        }

        let mut buyer_total = vec![0.0; b_count * bands];
        let mut buyer_signal = vec![0.0; b_count * bands];
        for b in 0..b_count {
            let k = s_count + b;
            let pl = &pathloss[k];
            for l in 0..bands {
                let serving = match config.association {
                    Association::Nearest => argmax(pl.iter().copied()),
                    Association::StrongestMean => {
                        argmax(pl.iter().enumerate().map(|(f, g)| buyer_power[b][f * bands + l] * g))
                    }
                };
                let mut total = 0.0;
                for (f, &g) in pl.iter().enumerate() {
                    let rx = buyer_power[b][f * bands + l] * fading[k][f * bands + l] * g;
                    total += rx;
                    if f == serving {
                        buyer_signal[b * bands + l] = rx;
                    }
                }
                buyer_total[b * bands + l] = total;
            }
        }

        Ok(NetworkSample {
            seed,
            retries: 0,
            bs_points,
            fading,
            buyer_power,
            gains: LinkGains {
                num_sellers: s_count,
                num_buyers: b_count,
                bands,
                owners,
                noise: config.noise_power_w,
                seller_signal,
                seller_other,
                buyer_total,
                buyer_signal,
            },
        })
    }

    pub fn num_sellers(&self) -> usize {
        self.gains.num_sellers
    }

    pub fn num_buyers(&self) -> usize {
        self.gains.num_buyers
    }

    pub fn num_subbands(&self) -> usize {
        self.gains.bands
    }

    pub fn band_owner(&self, l: usize) -> usize {
        self.gains.owners[l]
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}
