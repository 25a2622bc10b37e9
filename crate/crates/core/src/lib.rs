//! Renormalization of generalized interval exchange maps.

pub mod combinatorics;
pub mod error;
pub mod fit;
pub mod giem;
pub mod real;
pub mod renorm;
pub mod smoothmap;
pub mod symbolic;

pub use error::{GiemError, Result};
pub use real::{DoubleDouble, Precision, Real};
