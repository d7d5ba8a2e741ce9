//! Anti-periodic elliptic problem on a cusped cone, solved through the
//! flattening onto a cylinder and a resolvent contour-integral representation.

pub mod abstract_solver;
pub mod cli;
pub mod contour;
pub mod disc_operator;
pub mod error;
pub mod geometry;
pub mod golden;
pub mod limit_scheme;
pub mod linalg;
pub mod oracle;

pub use error::{Error, Result};
