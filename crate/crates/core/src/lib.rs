//! Forward-backward truncated-Newton (FBTN) for `minimize f(x) + g(x)`.
//!
//! `f` is convex with Lipschitz gradient and supplies Hessian-vector products
//! ([`smooth::SmoothOracle`]); `g` is proper closed convex with an inexpensive
//! proximal mapping and a generalized Jacobian of that mapping
//! ([`prox::ProxOracle`]). The solver minimizes the forward-backward envelope
//! ([`fbe`]) with regularized, inexact Newton directions computed by
//! matrix-free conjugate gradient ([`cg`]) and a linesearch that blends each
//! direction with a forward-backward step ([`driver`]).

pub mod cg;
pub mod driver;
pub mod error;
pub mod fbe;
pub mod prox;
pub mod smooth;

pub use error::{Error, Result};
