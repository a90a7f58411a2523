//! Exact local toric periods for CM supercuspidal representations of `GL_2(Q_q)`,
//! Gauss/Jacobi/epsilon arithmetic, plus/minus theta elements over ring-class towers
//! and the associated Iwasawa valuation formulas.

pub mod characters;
pub mod cyclotomic;
pub mod error;
pub mod iwasawa;
pub mod local_rings;
pub mod theta;
pub mod toric_period;

pub use error::{Error, Result};
