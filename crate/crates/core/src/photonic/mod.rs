//! Probabilistic photon sources and post-selected input sampling.

pub mod analytics;

pub use analytics::{
    binomial_mean_std, binomial_upper_tail, ln_binomial_pmf, min_source_factor, source_count, success_curve,
    success_probability,
};

use crate::error::{Result, RnbsError};
use crate::rng::SeededRng;
use analytics::check_probability;

/// Largest photon number a single thermal source may emit per run.
pub const MAX_PHOTONS_PER_SOURCE: usize = 16;

/// Analytic success probabilities below this are refused by the sampler.
pub const MIN_POSTSELECT_PROBABILITY: f64 = 1e-9;

fn check_gamma(gamma: f64) -> Result<f64> {
    if (0.0..1.0).contains(&gamma) {
        Ok(gamma)
    } else {
        Err(RnbsError::Domain(format!("squeezing parameter {gamma} outside [0, 1)")))
    }
}

/// Probability `gamma^2` that a thermal source emits at least one photon.
pub fn prob_at_least_one(gamma: f64) -> Result<f64> {
    let g = check_gamma(gamma)?;
    Ok(g * g)
}

/// Probability `(1 - gamma^2) gamma^2` of exactly one photon.
pub fn prob_exactly_one(gamma: f64) -> Result<f64> {
    let g2 = prob_at_least_one(gamma)?;
    Ok((1.0 - g2) * g2)
}

/// Thermal photon-number law of one heralded down-conversion source,
/// `(1 - gamma^2) gamma^(2n)`.
pub fn spdc_photon_pmf(gamma: f64, n: usize) -> Result<f64> {
    let g2 = prob_at_least_one(gamma)?;
    Ok((1.0 - g2) * g2.powi(n as i32))
}

/// Per-source photon-number statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SourceModel {
    /// Emits one photon with probability `p`, otherwise vacuum.
    SingleEmission { p: f64 },
    /// Emits `n` photons with probability `(1 - gamma^2) gamma^(2n)`.
    ThermalSpdc { gamma: f64 },
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceModel::SingleEmission { p } => check_probability(p).map(drop),
            SourceModel::ThermalSpdc { gamma } => check_gamma(gamma).map(drop),
        }
    }

    /// Probability that one source occupies its port.
    pub fn occupation_probability(&self) -> Result<f64> {
        match *self {
            SourceModel::SingleEmission { p } => check_probability(p),
            SourceModel::ThermalSpdc { gamma } => prob_at_least_one(gamma),
        }
    }

    pub fn max_photons_per_source(&self) -> usize {
        match self {
            SourceModel::SingleEmission { .. } => 1,
            SourceModel::ThermalSpdc { .. } => MAX_PHOTONS_PER_SOURCE,
        }
    }

    /// Cumulative weights of the (truncated, unnormalized) photon-number law.
    fn cumulative_weights(&self) -> Vec<f64> {
        match *self {
            SourceModel::SingleEmission { p } => vec![1.0 - p, 1.0],
            SourceModel::ThermalSpdc { gamma } => {
                let mut acc = 0.0;
                (0..=MAX_PHOTONS_PER_SOURCE)
                    .map(|n| {
                        acc += spdc_photon_pmf(gamma, n).expect("validated gamma");
                        acc
                    })
                    .collect()
            }
        }
    }
}

/// Parameters of one sampling experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Minimum number of occupied input ports, `N`.
    pub n_min: usize,
    /// Source factor; `ceil(a N)` sources feed the first input ports.
    pub a: f64,
    pub m_ports: usize,
    pub source: SourceModel,
    pub allow_bunching: bool,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Default interferometer size `max(ceil(a N), N^2)`.
    pub fn default_ports(n_min: usize, a: f64) -> Result<usize> {
        Ok(source_count(n_min, a)?.max(n_min * n_min))
    }

    pub fn source_count(&self) -> Result<usize> {
        source_count(self.n_min, self.a)
    }

    /// Checks `N >= 1`, `N <= ceil(aN) <= M` and the source parameters.
    ///
    /// A source factor of exactly one is accepted here; configuration files
    /// additionally require `a > 1`.
    pub fn validate(&self) -> Result<()> {
        let sources = self.source_count()?;
        if sources > self.m_ports {
            return Err(RnbsError::InvalidConfig(format!(
                "{sources} sources do not fit on {} ports",
                self.m_ports
            )));
        }
        self.source.validate()
    }

    /// Analytic probability that one run passes post-selection.
    pub fn success_probability(&self) -> Result<f64> {
        success_probability(self.n_min, self.a, self.source.occupation_probability()?)
    }
}

/// Photon numbers on the source ports. Derived counts are always recomputed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputSample {
    occupations: Vec<usize>,
    k_occupied: usize,
    n_total: usize,
}

impl InputSample {
    pub fn new(occupations: Vec<usize>) -> Self {
        let k_occupied = occupations.iter().filter(|&&n| n > 0).count();
        let n_total = occupations.iter().sum();
        InputSample { occupations, k_occupied, n_total }
    }

    pub fn occupations(&self) -> &[usize] {
        &self.occupations
    }

    /// Number of occupied ports, `K`.
    pub fn k_occupied(&self) -> usize {
        self.k_occupied
    }

    /// Total photon number, `N_tot`.
    pub fn n_total(&self) -> usize {
        self.n_total
    }
}

/// Draws every source independently and redraws the whole input until at
/// least `n_min` ports are occupied. Returns the accepted input and the number
/// of draws it took.
///
/// Each source consumes exactly one uniform variate per attempt.
pub fn sample_input(config: &ExperimentConfig, rng: &mut SeededRng) -> Result<(InputSample, usize)> {
    config.validate()?;
    let success = config.success_probability()?;
    if success < MIN_POSTSELECT_PROBABILITY {
        return Err(RnbsError::CannotPostselect { probability: success, threshold: MIN_POSTSELECT_PROBABILITY });
    }
    let sources = config.source_count()?;
    let cumulative = config.source.cumulative_weights();
    let total = *cumulative.last().expect("non-empty law");
    let mut attempts = 0;
    loop {
        attempts += 1;
        let occupations: Vec<usize> = (0..sources)
            .map(|_| {
                let u = rng.uniform() * total;
                cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
            })
            .collect();
        let sample = InputSample::new(occupations);
        if sample.k_occupied() >= config.n_min {
            return Ok((sample, attempts));
        }
    }
}
