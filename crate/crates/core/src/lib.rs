//! p-adic L-functions of Eisenstein series at critical slope, via overconvergent modular symbols.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod linalg;
pub mod characters;
pub mod lfunc;
pub mod qexp;
pub mod padic;
pub mod modsym;
pub mod dist;
pub mod overconvergent;
pub mod verify;

pub use error::{Error, Result};
pub use characters::DirichletCharacter;
pub use dist::TruncDist;
pub use lfunc::{LValue, WeightChar};
pub use modsym::classical::{EisensteinData, Normalization};
pub use modsym::{Cusp, Matrix2, Symbol};
pub use overconvergent::{OCSymbol, SolveConfig};
pub use padic::PadicNumber;
pub use qexp::{QExpansion, Stabilization};
pub use verify::selftest::SelftestReport;
pub use verify::{CheckRecord, FormSpec, RunConfig, SigmaSpec, VerificationReport};
