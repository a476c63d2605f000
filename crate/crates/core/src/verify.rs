//! Self-verification suite behind the `verify` subcommand.

use crate::error::Result;
use crate::interferometer::{output_distribution, transition_probability, DetectionMode, OutputSample};
use crate::linalg::{ginibre_matrix, haar_unitary, unitarity_defect, ComplexMatrix, UnitaryMatrix, UNITARITY_TOLERANCE};
use crate::permanent::{permanent_glynn, permanent_naive, permanent_ryser};
use crate::photonic::{sample_input, success_probability, ExperimentConfig, InputSample, SourceModel};
use crate::rng::SeededRng;
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyLevel {
    Quick,
    Full,
}

pub type Kernel = fn(&ComplexMatrix) -> Result<Complex64>;

/// Fast permanent kernels under test.
#[derive(Clone, Copy)]
pub struct Kernels {
    pub ryser: Kernel,
    pub glynn: Kernel,
}

impl Default for Kernels {
    fn default() -> Self {
        Kernels { ryser: permanent_ryser, glynn: permanent_glynn }
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn from_result(name: &'static str, result: Result<std::result::Result<String, String>>) -> Self {
        match result {
            Ok(Ok(detail)) => CheckOutcome { name, passed: true, detail },
            Ok(Err(detail)) => CheckOutcome { name, passed: false, detail },
            Err(e) => CheckOutcome { name, passed: false, detail: e.to_string() },
        }
    }
}

fn relative_error(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

type Check = std::result::Result<String, String>;

fn permanent_agreement(level: VerifyLevel, kernels: Kernels) -> Result<Check> {
    let (max_oracle, per_order, max_cross) = match level {
        VerifyLevel::Quick => (6, 20, 12),
        VerifyLevel::Full => (8, 200, 20),
    };
    let mut rng = SeededRng::with_stream(0x5eed, 1);
    let mut worst = 0.0f64;
    for n in 1..=max_oracle {
        for _ in 0..per_order {
            let a = ginibre_matrix(n, &mut rng)?;
            let oracle = permanent_naive(&a)?;
            for kernel in [kernels.ryser, kernels.glynn] {
                let err = relative_error(kernel(&a)?, oracle);
                if !(err <= 1e-10) {
                    return Ok(Err(format!("order {n}: relative error {err:e} against the naive oracle")));
                }
                worst = worst.max(err);
            }
        }
    }
    for n in max_oracle + 1..=max_cross {
        for _ in 0..3 {
            let a = ginibre_matrix(n, &mut rng)?;
            let err = relative_error((kernels.ryser)(&a)?, (kernels.glynn)(&a)?);
            if !(err <= 1e-10) {
                return Ok(Err(format!("order {n}: Ryser and Glynn differ by {err:e}")));
            }
            worst = worst.max(err);
        }
    }
    Ok(Ok(format!("orders 1..={max_cross}, worst relative error {worst:.2e}")))
}

fn haar_unitarity(level: VerifyLevel) -> Result<Check> {
    let (max_m, seeds) = match level {
        VerifyLevel::Quick => (16, 5),
        VerifyLevel::Full => (32, 100),
    };
    let mut worst = 0.0f64;
    for m in 1..=max_m {
        for seed in 0..seeds {
            let u = haar_unitary(m, &mut SeededRng::new(seed))?;
            worst = worst.max(unitarity_defect(u.matrix())?);
        }
    }
    if worst <= UNITARITY_TOLERANCE {
        Ok(Ok(format!("m in 1..={max_m}, worst defect {worst:.2e}")))
    } else {
        Ok(Err(format!("defect {worst:e}")))
    }
}

fn normalization(level: VerifyLevel) -> Result<Check> {
    let pairs = match level {
        VerifyLevel::Quick => 10,
        VerifyLevel::Full => 50,
    };
    let mut rng = SeededRng::with_stream(0x5eed, 2);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let m = 2 + (rng.next_u64() % 7) as usize;
        let n_total = 1 + (rng.next_u64() % 4) as usize;
        let mut occupations = vec![0usize; m];
        for _ in 0..n_total {
            occupations[(rng.next_u64() % m as u64) as usize] += 1;
        }
        let u = haar_unitary(m, &mut rng)?;
        let table = output_distribution(&u, &InputSample::new(occupations), DetectionMode::Bunching, 0)?;
        worst = worst.max((table.admitted_mass - 1.0).abs());
    }
    if worst <= 1e-9 {
        Ok(Ok(format!("{pairs} tables, worst deviation {worst:.2e}")))
    } else {
        Ok(Err(format!("total probability off by {worst:e}")))
    }
}

fn two_photon_interference() -> Result<Check> {
    let u = UnitaryMatrix::balanced_coupler();
    let input = InputSample::new(vec![1, 1]);
    let want = [([2, 0], 0.5), ([1, 1], 0.0), ([0, 2], 0.5)];
    for (out, p) in want {
        let got = transition_probability(&u, &input, &OutputSample::new(out.to_vec()))?;
        if !((got - p).abs() <= 1e-12) {
            return Ok(Err(format!("{out:?}: {got} instead of {p}")));
        }
    }
    Ok(Ok("balanced coupler (1,1) -> {(2,0): 1/2, (1,1): 0, (0,2): 1/2}".into()))
}

fn postselection_rate(level: VerifyLevel) -> Result<Check> {
    let shots = match level {
        VerifyLevel::Quick => 10_000,
        VerifyLevel::Full => 100_000,
    };
    let cases = [(2usize, 2.0, 0.5), (3, 1.5, 0.7), (1, 3.0, 0.2), (4, 2.5, 0.45)];
    let mut worst_z = 0.0f64;
    for (i, &(n_min, a, p)) in cases.iter().enumerate() {
        let config = ExperimentConfig {
            n_min,
            a,
            m_ports: crate::photonic::source_count(n_min, a)?,
            source: SourceModel::SingleEmission { p },
            allow_bunching: false,
            seed: 0,
        };
        let mut rng = SeededRng::with_stream(0x5eed, 10 + i as u64);
        let mut attempts = 0usize;
        for _ in 0..shots {
            attempts += sample_input(&config, &mut rng)?.1;
        }
        let exact = success_probability(n_min, a, p)?;
        let rate = shots as f64 / attempts as f64;
        let se = (exact * (1.0 - exact) / attempts as f64).sqrt();
        let z = if se > 0.0 { (rate - exact).abs() / se } else { (rate - exact).abs() * f64::INFINITY };
        if !(z <= 3.0) {
            return Ok(Err(format!("N={n_min} a={a} p={p}: rate {rate:.5} vs {exact:.5} ({z:.2} standard errors)")));
        }
        worst_z = worst_z.max(z);
    }
    Ok(Ok(format!("{} configurations, worst deviation {worst_z:.2} standard errors", cases.len())))
}

fn large_n_limit() -> Result<Check> {
    let p = success_probability(1000, 1.15, 0.9)?;
    if 1.0 - p <= 1e-3 {
        Ok(Ok(format!("N=1000, a=1.15, p=0.9: P = {p:.6}")))
    } else {
        Ok(Err(format!("N=1000, a=1.15, p=0.9: P = {p:.6} misses 1 - 1e-3")))
    }
}

/// Runs every check for `level` and returns one outcome per check.
pub fn run_checks(level: VerifyLevel, kernels: Kernels) -> Vec<CheckOutcome> {
    let mut out = vec![
        CheckOutcome::from_result("permanent-agreement", permanent_agreement(level, kernels)),
        CheckOutcome::from_result("haar-unitarity", haar_unitarity(level)),
        CheckOutcome::from_result("normalization", normalization(level)),
        CheckOutcome::from_result("two-photon-interference", two_photon_interference()),
        CheckOutcome::from_result("postselection-rate", postselection_rate(level)),
    ];
    if level == VerifyLevel::Full {
        out.push(CheckOutcome::from_result("large-n-limit", large_n_limit()));
    }
    out
}
