//! Numerical laboratory for the Dirichlet–Piltz divisor problem.
//!
//! Exact `d_k` tables and summatory functions, the error term
//! `Δ_k(x) = D_k(x) − x P_{k−1}(log x)`, truncated Voronoï sums, moment
//! integrals, root-sum tuple counting and extreme-value scans.

// `!(x >= a)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod dd;
pub mod delta;
pub mod error;
pub mod main_term;
pub mod moments;
pub mod omega;
pub mod quadrature;
pub mod series;
pub mod sieve;
pub mod stats;
pub mod sum;
pub mod summatory;
pub mod voronoi;
pub mod zeta;

pub use counting::{BoundRow, CountAlgo, CountResult};
pub use delta::DeltaEvaluator;
pub use error::{Error, Result};
pub use main_term::{main_term_coeffs, MainTermPolynomial, Provenance};
pub use moments::{FitResult, IntervalAverage, MomentResult, ShortIntervalMoment};
pub use omega::{AlphaEstimate, ExtremaRecord, ScanResult, ShiuResult, SignRun};
pub use series::SeriesValue;
pub use sieve::{sieve_dk, DivisorTable, SieveMethod};
pub use summatory::SummatoryMethod;
pub use voronoi::{ErrorProfile, ProfileRow, VoronoiSeries};
