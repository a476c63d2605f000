//! Exact simulation and analytics for boson sampling with a random number of
//! photons.
//!
//! `ceil(a N)` probabilistic sources feed the first input ports of an
//! `M`-port interferometer. Every run draws the photon number of each source;
//! runs with fewer than `N` occupied ports are discarded. Accepted inputs are
//! propagated exactly: output probabilities are squared permanents of
//! submatrices of the interferometer unitary with rows and columns repeated by
//! the photon occupation numbers.
//!
//! - [`linalg`]: complex matrices, seeded Ginibre and Haar-random unitaries.
//! - [`permanent`]: naive, Ryser and Glynn permanents.
//! - [`photonic`]: source models, post-selected input sampling and the
//!   closed-form success probability.
//! - [`interferometer`]: transition probabilities, output tables and sampling.
//! - [`io`], [`cli`], [`verify`]: file formats and the command-line tool.

// NaN must fail validation, so bounds are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod interferometer;
pub mod io;
pub mod linalg;
pub mod numeric;
pub mod permanent;
pub mod photonic;
pub mod rng;
pub mod verify;

pub use error::{Result, RnbsError};
pub use interferometer::{
    build_submatrix, enumerate_outputs, output_distribution, run_experiment, sample_output, transition_probability,
    DetectionMode, DistributionTable, OutputSample, SampleRecord, TableEntry,
};
pub use linalg::{ginibre_matrix, haar_unitary, mat_mul_adjoint, unitarity_defect, ComplexMatrix, UnitaryMatrix};
pub use permanent::{
    abs_squared, permanent, permanent_glynn, permanent_naive, permanent_ryser, PermanentAlgorithm, PermanentResult,
};
pub use photonic::{
    binomial_mean_std, min_source_factor, prob_at_least_one, prob_exactly_one, sample_input, spdc_photon_pmf,
    success_curve, success_probability, ExperimentConfig, InputSample, SourceModel,
};
pub use rng::SeededRng;
