//! Temperature derivatives under a mean-reverting model driven by a Gamma
//! time-changed Brownian motion with seasonal level and volatility.
//!
//! The crate covers the deterministic kernels of the model, characteristic
//! functions under the historical and Esscher measures, selection of the
//! Esscher parameter, Fourier-cosine pricing of CAT strangles, path
//! simulation, and calibration from daily temperature series.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod charfun;
pub mod cli;
pub mod cos;
pub mod error;
pub mod esscher;
pub mod quad;
pub mod seasonal;
pub mod simulator;

pub use charfun::{CatMode, GammaTimeChange, ModelParams};
pub use cos::{ContractSpec, CosGrid};
pub use error::{Error, Result};
pub use esscher::MarketParams;
pub use seasonal::FourCoeffs;
