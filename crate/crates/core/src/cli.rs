//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
//! numerical, guard and I/O failures. Data goes to standard output (or the
//! `--out` file), diagnostics and summaries to standard error.

use crate::error::{Result, RnbsError};
use crate::interferometer::{output_distribution, run_experiment, DetectionMode};
use crate::io::{
    config_from_json, format_float, parse_occupations, unitary_from_json, unitary_to_json, write_distribution,
    write_samples,
};
use crate::linalg::{haar_unitary, unitarity_defect};
use crate::photonic::{success_curve, InputSample};
use crate::rng::SeededRng;
use crate::verify::{run_checks, Kernels, VerifyLevel};
use clap::{Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "rnbs", version, about = "Boson sampling with random numbers of photons")]
pub struct Cli {
    /// Worker threads for permanent and table evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a Haar-random unitary and write it as JSON.
    GenUnitary {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the exact post-selection success probability for a range of N.
    SuccessProb {
        /// Inclusive range such as `1..200`, or a single value.
        #[arg(long = "n", value_parser = parse_range)]
        n_range: RangeInclusive<usize>,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        csv: bool,
    },
    /// Run post-selected sampling shots and write one CSV row per shot.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        unitary: PathBuf,
        #[arg(long)]
        shots: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the exact output distribution for one input.
    Distribution {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        unitary: PathBuf,
        /// Input occupation numbers, e.g. `1;1;0`.
        #[arg(long)]
        input: String,
        /// Minimum number of clicks in bunching mode (defaults to the config's N).
        #[arg(long)]
        min_clicks: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in consistency checks.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

fn parse_range(text: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad count {t:?}"));
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (parse(lo)?, parse(hi.trim_start_matches('='))?),
        None => {
            let v = parse(text)?;
            (v, v)
        }
    };
    if lo == 0 || hi < lo {
        return Err(format!("range {text:?} must satisfy 1 <= start <= end"));
    }
    Ok(lo..=hi)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| RnbsError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn emit(out: Option<&Path>, data: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, data)?,
        None => stdout.write_all(data)?,
    }
    Ok(())
}

fn gen_unitary(m: usize, seed: u64, out: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    if !(1..=64).contains(&m) {
        return Err(RnbsError::InvalidDimension(format!("--m {m} outside 1..=64")));
    }
    let u = haar_unitary(m, &mut SeededRng::new(seed))?;
    emit(out, unitary_to_json(&u).as_bytes(), stdout)?;
    writeln!(stderr, "unitarity defect: {:e}", unitarity_defect(u.matrix())?)?;
    Ok(())
}

fn success_prob(range: RangeInclusive<usize>, a: f64, p: f64, csv: bool, stdout: &mut dyn Write) -> Result<()> {
    let curve = success_curve(range, a, p).map_err(|e| match e {
        RnbsError::Domain(msg) => RnbsError::InvalidConfig(msg),
        other => other,
    })?;
    if csv {
        writeln!(stdout, "N,P")?;
        for (n, prob) in curve {
            writeln!(stdout, "{n},{}", format_float(prob))?;
        }
    } else {
        writeln!(stdout, "{:>8}  P", "N")?;
        for (n, prob) in curve {
            writeln!(stdout, "{n:>8}  {prob:.12}")?;
        }
    }
    Ok(())
}

fn sample(
    config: &Path,
    unitary: &Path,
    shots: usize,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let config = config_from_json(&read(config)?)?;
    let u = unitary_from_json(&read(unitary)?)?;
    let records = run_experiment(&config, &u, shots, &mut SeededRng::new(config.seed))?;
    let mut buf = Vec::new();
    write_samples(&records, &mut buf)?;
    emit(out, &buf, stdout)?;

    let predicted = config.success_probability()?;
    writeln!(stderr, "shots: {shots}")?;
    if shots > 0 {
        let n = shots as f64;
        let attempts: usize = records.iter().map(|r| r.attempts).sum();
        let mean_k = records.iter().map(|r| r.input.k_occupied()).sum::<usize>() as f64 / n;
        let mean_total = records.iter().map(|r| r.input.n_total()).sum::<usize>() as f64 / n;
        let rate = n / attempts as f64;
        let se = (predicted * (1.0 - predicted) / attempts as f64).sqrt();
        writeln!(stderr, "mean K: {mean_k:.4}")?;
        writeln!(stderr, "mean N_tot: {mean_total:.4}")?;
        writeln!(stderr, "acceptance rate: {rate:.6} (predicted {predicted:.6} +/- {se:.6})")?;
    } else {
        writeln!(stderr, "predicted acceptance rate: {predicted:.6}")?;
    }
    Ok(())
}

fn distribution(
    config: &Path,
    unitary: &Path,
    input: &str,
    min_clicks: Option<usize>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let config = config_from_json(&read(config)?)?;
    let u = unitary_from_json(&read(unitary)?)?;
    if u.dim() != config.m_ports {
        return Err(RnbsError::InvalidDimension(format!(
            "configuration expects {} ports, unitary has {}",
            config.m_ports,
            u.dim()
        )));
    }
    let input = InputSample::new(parse_occupations(input)?);
    let (mode, n_min) = if config.allow_bunching {
        (DetectionMode::Bunching, min_clicks.unwrap_or(config.n_min))
    } else {
        (DetectionMode::CollisionFree, 0)
    };
    let table = output_distribution(&u, &input, mode, n_min)?;
    let mut buf = Vec::new();
    write_distribution(&table, &mut buf)?;
    emit(out, &buf, stdout)?;
    writeln!(stderr, "mode: {mode}, entries: {}, discarded mass: {:e}", table.entries.len(), table.discarded_mass())?;
    Ok(())
}

fn verify(level: Level, stdout: &mut dyn Write) -> Result<bool> {
    let level = match level {
        Level::Quick => VerifyLevel::Quick,
        Level::Full => VerifyLevel::Full,
    };
    let outcomes = run_checks(level, Kernels::default());
    for o in &outcomes {
        writeln!(stdout, "{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail)?;
    }
    Ok(outcomes.iter().all(|o| o.passed))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::GenUnitary { m, seed, out } => gen_unitary(m, seed, out.as_deref(), stdout, stderr)?,
        Command::SuccessProb { n_range, a, p, csv } => success_prob(n_range, a, p, csv, stdout)?,
        Command::Sample { config, unitary, shots, out } => {
            sample(&config, &unitary, shots, out.as_deref(), stdout, stderr)?
        }
        Command::Distribution { config, unitary, input, min_clicks, out } => {
            distribution(&config, &unitary, &input, min_clicks, out.as_deref(), stdout, stderr)?
        }
        Command::Verify { level } => {
            if !verify(level, stdout)? {
                return Ok(2);
            }
        }
    }
    Ok(0)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    // Output is buffered on the calling side of the pool and flushed after.
    let mut out_buf = Vec::new();
    let mut err_buf = Vec::new();
    let result = pool.install(|| dispatch(cli, &mut out_buf, &mut err_buf));
    let flushed = stdout.write_all(&out_buf).and_then(|_| stderr.write_all(&err_buf));
    match (result, flushed) {
        (Ok(code), Ok(())) => code,
        (Err(e), _) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
        (Ok(_), Err(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}
