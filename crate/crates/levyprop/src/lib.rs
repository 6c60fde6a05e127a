//! File formats, parallel execution, dense eigensolvers and the command-line
//! front end around `levyprop-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod eigen;
pub mod error;
pub mod io;
pub mod pool;
pub mod spectrum;
pub mod svg;
pub mod table;

pub use eigen::{empirical_spectrum, FaerEigen};
pub use error::{Error, Result};
pub use pool::Pool;
