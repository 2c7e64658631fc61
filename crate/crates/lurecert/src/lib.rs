//! Input-output stability certification for Lur'e feedback loops: a linear
//! time-invariant plant in positive feedback with a static nonlinearity
//! drawn from a monotone or slope-restricted class.
//!
//! The pipeline has three layers:
//!
//! * descriptions of the loop — transfer functions ([`lti`]), nonlinearity
//!   classes ([`nonlin`]), and the one-sided-exponential multiplier bases
//!   that encode class structure in the frequency domain ([`multiplier`]);
//! * frequency-domain verification — a worst-case scan of the multiplier
//!   test value over an explicit grid, with zero-frequency and
//!   high-frequency-tail handling and a refinement pass ([`iqc`]);
//! * search — a linear program over basis gains plus bisection over the
//!   slope bound, always re-verified on the full grid before a verdict
//!   ([`search`]), cross-examined by time-domain simulation ([`sim`]).
//!
//! Certification is grid-based: a verdict asserts the test inequality on the
//! scanned frequencies and the tail limit, not between grid points. Grids
//! are recorded in every certificate so runs can be replayed exactly.

pub mod benchmarks;
pub mod error;
pub mod io;
pub mod iqc;
pub mod lti;
pub mod multiplier;
pub mod nonlin;
pub mod search;
pub mod signal;
pub mod sim;
pub mod simplex;

pub use error::{Error, Result};
pub use iqc::{
    fdi_margin, fdi_rows, parseval_check, Certificate, FdiScan, FrequencyGrid, GridSpec, Verdict,
    WorstFreq,
};
pub use lti::{StateSpace, TransferFunction};
pub use multiplier::MultiplierBasis;
pub use nonlin::{ClassTag, NonlinearitySpec, Shape};
pub use search::{
    bisect_alpha, certify, circle_baseline, search_certify, BisectResult, SearchConfig,
    SearchStrategy,
};
pub use signal::SampledSignal;
pub use sim::{falsify, simulate_lure, td_iqc_value, FalsifyReport, SimResult};
