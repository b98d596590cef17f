//! Numerical laboratory for pseudodifferential operators with Hölder continuous symbols
//! on periodic grids.

pub mod acceptance;
pub mod calculus;
pub mod coord_transform;
pub mod core_grid;
pub mod csvio;
pub mod error;
pub mod jet;
pub mod function_spaces;
pub mod littlewood_paley;
pub mod oscillatory;
pub mod quantize;
pub mod stats;
pub mod symbols;

pub use core_grid::{Grid, GridFunction, Side, C64};
pub use error::{Error, Result};
