//! Littlewood–Paley analysis, Bony paraproducts and their Log-Lipschitz estimates on periodic
//! grids, plus a pseudospectral solver for second-order strictly hyperbolic equations whose
//! principal coefficients are only Log-Lipschitz.

pub mod calibration;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod norms;
pub mod paraproducts;
pub mod random;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
