//! Expected worst-case coverage cost of unreliable sensors placed on the
//! unit interval or the unit circle.

pub mod catalog;
pub mod checks;
pub mod cortes;
pub mod cost;
pub mod error;
pub mod lp;
pub mod model;
pub mod numeric;
pub mod optimizer;
pub mod random;
pub mod runs;
pub mod simplex;

pub use error::{Error, Result};
