//! Exact and numerical spectral analysis of bijective binary block
//! substitutions on `Z^d`: fixed points, autocorrelations, Wiener sums,
//! Riesz-product approximants of the diffraction measure, and the squiral's
//! pure-point factor.

pub mod autocorr;
pub mod error;
pub mod export;
pub mod factor;
pub mod riesz;
pub mod shape;
pub mod spectral;
pub mod subst;

pub use autocorr::{CoeffTable, Correlation, EtaTable, Rational, SectionTable};
pub use error::{Error, MapError, Result};
pub use riesz::{GridFunction, SeriesCoeffs, TrigKernel};
pub use subst::{BlockMap, LatticePatch, SeedCycle};
