//! File formats: unitary and configuration JSON, sample and distribution CSV.
//!
//! Floating-point values in CSV files are written with 17 significant digits
//! in scientific notation; JSON numbers use the shortest representation that
//! parses back to the same double. Both round-trip exactly.

use crate::error::{Result, RnbsError};
use crate::interferometer::{DistributionTable, SampleRecord};
use crate::linalg::{unitarity_defect, ComplexMatrix, UnitaryMatrix, UNITARITY_TOLERANCE};
use crate::photonic::{ExperimentConfig, SourceModel};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Serialize, Deserialize)]
struct UnitaryFile {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

pub fn unitary_to_json(u: &UnitaryMatrix) -> String {
    let m = u.dim();
    let part = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..m).map(|r| u.matrix().row(r).iter().map(f).collect()).collect()
    };
    let file = UnitaryFile { dim: m, re: part(|z| z.re), im: part(|z| z.im) };
    let mut text = serde_json::to_string(&file).expect("finite entries serialize");
    text.push('\n');
    text
}

/// Parses and validates a unitary file; non-unitary matrices are rejected with
/// their defect.
pub fn unitary_from_json(text: &str) -> Result<UnitaryMatrix> {
    let file: UnitaryFile = serde_json::from_str(text)?;
    let dim = file.dim;
    let shape_ok = |part: &Vec<Vec<f64>>| part.len() == dim && part.iter().all(|row| row.len() == dim);
    if dim == 0 || !shape_ok(&file.re) || !shape_ok(&file.im) {
        return Err(RnbsError::Format(format!("unitary file does not hold two {dim}x{dim} arrays")));
    }
    let entries = file
        .re
        .iter()
        .flatten()
        .zip(file.im.iter().flatten())
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    let matrix = ComplexMatrix::from_row_major(dim, dim, entries)?;
    let defect = unitarity_defect(&matrix)?;
    if !(defect <= UNITARITY_TOLERANCE) {
        return Err(RnbsError::NotUnitary { defect, tolerance: UNITARITY_TOLERANCE });
    }
    UnitaryMatrix::new(matrix)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SourceFile {
    Single { p: f64 },
    Thermal { gamma: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n_min: usize,
    a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m_ports: Option<usize>,
    source: SourceFile,
    #[serde(default)]
    allow_bunching: bool,
    seed: u64,
}

/// Parses an experiment configuration. Unknown fields are rejected, the source
/// factor must exceed one, and `m_ports` defaults to `max(ceil(aN), N^2)`.
pub fn config_from_json(text: &str) -> Result<ExperimentConfig> {
    let file: ConfigFile = serde_json::from_str(text)?;
    if !(file.a > 1.0) {
        return Err(RnbsError::InvalidConfig(format!("source factor a = {} must exceed 1", file.a)));
    }
    let source = match file.source {
        SourceFile::Single { p } => SourceModel::SingleEmission { p },
        SourceFile::Thermal { gamma } => SourceModel::ThermalSpdc { gamma },
    };
    let m_ports = match file.m_ports {
        Some(m) => m,
        None => ExperimentConfig::default_ports(file.n_min, file.a)?,
    };
    let config = ExperimentConfig {
        n_min: file.n_min,
        a: file.a,
        m_ports,
        source,
        allow_bunching: file.allow_bunching,
        seed: file.seed,
    };
    config.validate()?;
    Ok(config)
}

pub fn config_to_json(config: &ExperimentConfig) -> String {
    let source = match config.source {
        SourceModel::SingleEmission { p } => SourceFile::Single { p },
        SourceModel::ThermalSpdc { gamma } => SourceFile::Thermal { gamma },
    };
    let file = ConfigFile {
        n_min: config.n_min,
        a: config.a,
        m_ports: Some(config.m_ports),
        source,
        allow_bunching: config.allow_bunching,
        seed: config.seed,
    };
    serde_json::to_string_pretty(&file).expect("config serializes")
}

/// Seventeen significant digits, scientific notation, no locale.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn join_occupations(occupations: &[usize]) -> String {
    occupations.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

/// Parses `"1;0;2"` (commas are accepted as separators too).
pub fn parse_occupations(text: &str) -> Result<Vec<usize>> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(RnbsError::Format("empty occupation list".into()));
    }
    trimmed
        .split([';', ','])
        .map(|t| t.trim().parse::<usize>().map_err(|_| RnbsError::Format(format!("bad occupation number {t:?}"))))
        .collect()
}

pub const SAMPLE_HEADER: [&str; 7] =
    ["shot", "attempts", "K", "N_tot", "input_occupations", "output_occupations", "probability"];

pub fn write_samples<W: Write>(records: &[SampleRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_HEADER)?;
    for (shot, r) in records.iter().enumerate() {
        w.write_record([
            shot.to_string(),
            r.attempts.to_string(),
            r.input.k_occupied().to_string(),
            r.input.n_total().to_string(),
            join_occupations(r.input.occupations()),
            join_occupations(r.output.occupations()),
            format_float(r.probability),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every output with its transition probability, then a `total` row
/// holding the admitted probability mass.
pub fn write_distribution<W: Write>(table: &DistributionTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["output_occupations", "probability"])?;
    for e in &table.entries {
        w.write_record([join_occupations(e.output.occupations()), format_float(e.transition)])?;
    }
    w.write_record(["total".to_string(), format_float(table.admitted_mass)])?;
    w.flush()?;
    Ok(())
}
