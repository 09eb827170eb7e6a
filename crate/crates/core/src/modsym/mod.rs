//! Modular symbols over Z/p^P with polynomial or distribution coefficients.

pub mod action;
pub mod classical;
pub mod cusp;
pub mod p1;
pub mod space;

pub use action::MomentAction;
pub use cusp::{Cusp, Matrix2};
pub use space::{HeckeOp, Presentation, Space, Symbol};
