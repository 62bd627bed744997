pub mod autodiff;
pub mod enrich;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod model;
pub mod train;

pub use error::{Error, Result};
