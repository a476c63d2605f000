//! Exact multiphoton transition probabilities through a linear interferometer.
//!
//! For an input with `n_s` photons on source port `s` and an output with `n_d`
//! photons on detector `d`, the transition amplitude is the permanent of the
//! `N_tot x N_tot` matrix whose columns are the columns of `U` for each source
//! port repeated `n_s` times and whose rows are the rows of `U` for each
//! detector repeated `n_d` times. The probability is
//! `|perm|^2 / (prod_s n_s! prod_d n_d!)`.

use crate::error::{Result, RnbsError};
use crate::linalg::{ComplexMatrix, UnitaryMatrix};
use crate::numeric::CompensatedSum;
use crate::permanent::{abs_squared, permanent, permanent_with_multiplicities};
use crate::photonic::{sample_input, ExperimentConfig, InputSample};
use crate::rng::SeededRng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt;

/// Largest number of output configurations a table may hold.
pub const MAX_TABLE_ENTRIES: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DetectionMode {
    /// Only outputs with at most one photon per detector are admitted.
    CollisionFree,
    /// Any photon numbers per detector, subject to a minimum click count.
    Bunching,
}

impl fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectionMode::CollisionFree => "collision-free",
            DetectionMode::Bunching => "bunching",
        })
    }
}

/// Photon numbers detected at each output port.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutputSample {
    occupations: Vec<usize>,
    clicks: usize,
}

impl OutputSample {
    pub fn new(occupations: Vec<usize>) -> Self {
        let clicks = occupations.iter().filter(|&&n| n > 0).count();
        OutputSample { occupations, clicks }
    }

    pub fn occupations(&self) -> &[usize] {
        &self.occupations
    }

    /// Number of detectors that registered at least one photon.
    pub fn clicks(&self) -> usize {
        self.clicks
    }

    pub fn n_total(&self) -> usize {
        self.occupations.iter().sum()
    }
}

fn check_pair(u: &UnitaryMatrix, input: &InputSample, output: &OutputSample) -> Result<usize> {
    let m = u.dim();
    if input.occupations().len() > m {
        return Err(RnbsError::InvalidDimension(format!(
            "input covers {} ports of a {m}-port interferometer",
            input.occupations().len()
        )));
    }
    if output.occupations().len() != m {
        return Err(RnbsError::InvalidDimension(format!(
            "output covers {} detectors of a {m}-port interferometer",
            output.occupations().len()
        )));
    }
    if input.n_total() != output.n_total() {
        return Err(RnbsError::Conservation { input: input.n_total(), output: output.n_total() });
    }
    if input.n_total() == 0 {
        return Err(RnbsError::InvalidDimension("no photons to propagate".into()));
    }
    Ok(input.n_total())
}

fn repeated_indices(occupations: &[usize]) -> Vec<usize> {
    occupations.iter().enumerate().flat_map(|(i, &n)| std::iter::repeat_n(i, n)).collect()
}

/// The `N_tot x N_tot` matrix `U[d_r, s_c]` with source ports repeated by
/// input occupation and detectors repeated by output occupation, both in
/// ascending port order.
pub fn build_submatrix(u: &UnitaryMatrix, input: &InputSample, output: &OutputSample) -> Result<ComplexMatrix> {
    let n = check_pair(u, input, output)?;
    let cols = repeated_indices(input.occupations());
    let rows = repeated_indices(output.occupations());
    ComplexMatrix::from_fn(n, n, |r, c| u[(rows[r], cols[c])])
}

fn factorial(n: usize) -> f64 {
    (2..=n).map(|i| i as f64).product()
}

/// Probability of detecting `output` given `input`.
pub fn transition_probability(u: &UnitaryMatrix, input: &InputSample, output: &OutputSample) -> Result<f64> {
    let n = check_pair(u, input, output)?;
    let single = |occ: &[usize]| occ.iter().all(|&k| k <= 1);
    let amplitude = if single(input.occupations()) && single(output.occupations()) {
        permanent(&build_submatrix(u, input, output)?)?.value
    } else {
        let limit = crate::permanent::FAST_MAX_ORDER;
        if n > limit {
            return Err(RnbsError::SizeGuard { what: "permanent order", size: n, limit });
        }
        let occupied = |occ: &[usize]| -> Vec<(usize, usize)> {
            occ.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i, k)).collect()
        };
        let cols = occupied(input.occupations());
        let rows = occupied(output.occupations());
        let distinct = ComplexMatrix::from_fn(rows.len(), cols.len(), |r, c| u[(rows[r].0, cols[c].0)])?;
        let row_mult: Vec<usize> = rows.iter().map(|&(_, k)| k).collect();
        let col_mult: Vec<usize> = cols.iter().map(|&(_, k)| k).collect();
        permanent_with_multiplicities(&distinct, &row_mult, &col_mult)?
    };
    let norm: f64 = input.occupations().iter().chain(output.occupations()).map(|&k| factorial(k)).product();
    Ok(abs_squared(amplitude) / norm)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn fill_outputs(
    current: &mut Vec<usize>,
    remaining: usize,
    m: usize,
    cap: usize,
    n_min: usize,
    out: &mut Vec<OutputSample>,
) {
    let pos = current.len();
    if pos + 1 == m {
        if remaining <= cap {
            current.push(remaining);
            let sample = OutputSample::new(current.clone());
            if sample.clicks() >= n_min {
                out.push(sample);
            }
            current.pop();
        }
        return;
    }
    // Occupation vectors in descending lexicographic order.
    for k in (0..=remaining.min(cap)).rev() {
        // Positions left after this one must absorb the rest.
        if remaining - k > cap * (m - pos - 1) {
            break;
        }
        current.push(k);
        fill_outputs(current, remaining - k, m, cap, n_min, out);
        current.pop();
    }
}

/// Every admissible output for `n_total` photons on `m` detectors, with at
/// least `n_min` clicks, in descending lexicographic order of the occupation
/// vectors.
pub fn enumerate_outputs(m: usize, n_total: usize, mode: DetectionMode, n_min: usize) -> Result<Vec<OutputSample>> {
    if m == 0 {
        return Err(RnbsError::InvalidDimension("no output ports".into()));
    }
    let (count, cap) = match mode {
        DetectionMode::CollisionFree => {
            if n_total > m {
                return Err(RnbsError::Infeasible(format!(
                    "{n_total} photons cannot leave {m} ports without collisions"
                )));
            }
            (binomial(m, n_total), 1)
        }
        DetectionMode::Bunching => (binomial(m + n_total - 1, n_total), n_total),
    };
    if count > MAX_TABLE_ENTRIES as f64 {
        return Err(RnbsError::SizeGuard {
            what: "output table",
            size: count.min(usize::MAX as f64) as usize,
            limit: MAX_TABLE_ENTRIES,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    fill_outputs(&mut Vec::with_capacity(m), n_total, m, cap, n_min, &mut out);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableEntry {
    pub output: OutputSample,
    /// Probability conditioned on the admitted set of outputs.
    pub probability: f64,
    /// Unconditioned transition probability.
    pub transition: f64,
}

/// Exact output distribution for one input.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    pub input: InputSample,
    pub mode: DetectionMode,
    pub n_min: usize,
    pub entries: Vec<TableEntry>,
    /// Total transition probability of the admitted outputs.
    pub admitted_mass: f64,
}

impl DistributionTable {
    /// Transition probability falling outside the admitted outputs.
    pub fn discarded_mass(&self) -> f64 {
        (1.0 - self.admitted_mass).max(0.0)
    }
}

/// Transition probabilities to every admissible output, conditioned on the
/// output being admitted by `mode` and the `n_min` click filter.
pub fn output_distribution(
    u: &UnitaryMatrix,
    input: &InputSample,
    mode: DetectionMode,
    n_min: usize,
) -> Result<DistributionTable> {
    if input.occupations().len() > u.dim() {
        return Err(RnbsError::InvalidDimension(format!(
            "input covers {} ports of a {}-port interferometer",
            input.occupations().len(),
            u.dim()
        )));
    }
    if input.n_total() == 0 {
        return Err(RnbsError::InvalidDimension("no photons to propagate".into()));
    }
    let outputs = enumerate_outputs(u.dim(), input.n_total(), mode, n_min)?;
    let transitions: Vec<f64> =
        outputs.par_iter().map(|o| transition_probability(u, input, o)).collect::<Result<_>>()?;
    let admitted_mass = transitions.iter().copied().collect::<CompensatedSum>().value();
    if !(admitted_mass > 0.0) {
        return Err(RnbsError::Infeasible(format!(
            "no admitted {mode} output with at least {n_min} clicks has nonzero probability"
        )));
    }
    let entries = outputs
        .into_iter()
        .zip(transitions)
        .map(|(output, transition)| TableEntry { output, probability: transition / admitted_mass, transition })
        .collect();
    Ok(DistributionTable { input: input.clone(), mode, n_min, entries, admitted_mass })
}

/// Inverse-CDF draw over the table entries in their stored order.
pub fn sample_output(table: &DistributionTable, rng: &mut SeededRng) -> Result<OutputSample> {
    let Some(last) = table.entries.iter().rposition(|e| e.probability > 0.0) else {
        return Err(RnbsError::Infeasible("empty distribution table".into()));
    };
    let u = rng.uniform();
    let mut cumulative = 0.0;
    for entry in &table.entries[..last] {
        cumulative += entry.probability;
        if u < cumulative {
            return Ok(entry.output.clone());
        }
    }
    Ok(table.entries[last].output.clone())
}

/// One post-selected run: the accepted input, the detected output, the exact
/// transition probability between them and the input draws it took.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub input: InputSample,
    pub output: OutputSample,
    pub probability: f64,
    pub attempts: usize,
}

impl SampleRecord {
    pub fn detection_mode(config: &ExperimentConfig) -> DetectionMode {
        if config.allow_bunching {
            DetectionMode::Bunching
        } else {
            DetectionMode::CollisionFree
        }
    }
}

/// Runs `shots` post-selected experiments on a single random stream: each shot
/// samples an input, then samples an output from its exact distribution.
///
/// In bunching mode outputs must show at least `n_min` clicks.
pub fn run_experiment(
    config: &ExperimentConfig,
    u: &UnitaryMatrix,
    shots: usize,
    rng: &mut SeededRng,
) -> Result<Vec<SampleRecord>> {
    config.validate()?;
    if u.dim() != config.m_ports {
        return Err(RnbsError::InvalidDimension(format!(
            "configuration expects {} ports, interferometer has {}",
            config.m_ports,
            u.dim()
        )));
    }
    let mode = SampleRecord::detection_mode(config);
    let max_photons = config.source_count()? * config.source.max_photons_per_source();
    if mode == DetectionMode::CollisionFree && max_photons > config.m_ports {
        return Err(RnbsError::Infeasible(format!(
            "up to {max_photons} photons may enter {} ports; enable bunching",
            config.m_ports
        )));
    }
    let click_filter = match mode {
        DetectionMode::CollisionFree => 0,
        DetectionMode::Bunching => config.n_min,
    };
    let mut tables: HashMap<InputSample, DistributionTable> = HashMap::new();
    let mut records = Vec::with_capacity(shots);
    for _ in 0..shots {
        let (input, attempts) = sample_input(config, rng)?;
        let table = match tables.get(&input) {
            Some(t) => t,
            None => {
                let t = output_distribution(u, &input, mode, click_filter)?;
                tables.entry(input.clone()).or_insert(t)
            }
        };
        let output = sample_output(table, rng)?;
        let probability = table
            .entries
            .iter()
            .find(|e| e.output == output)
            .map(|e| e.transition)
            .expect("sampled output is in its table");
        records.push(SampleRecord { input, output, probability, attempts });
    }
    Ok(records)
}
