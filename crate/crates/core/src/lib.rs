//! Uniform-marginal lifts of stationary processes.
//!
//! Any strictly stationary `R^d`-valued process `X` is the image, under the
//! coordinatewise quantile map `π = (F_1^{-1}, ..., F_d^{-1})`, of a
//! stationary `(0,1)^d`-valued process `U` with uniform one-dimensional
//! marginals. `U` is obtained by replacing each atom value of `X` with an
//! independent uniform level inside that atom's quantile interval, and it
//! inherits the mixing coefficients of `X`.
//!
//! Modules:
//! - [`marginals`]: mixed discrete/continuous distribution functions and
//!   their generalized inverses.
//! - [`chains`]: finite-state ground-truth processes with exact laws.
//! - [`lift`]: path lifting, projection and exact lifted cylinder measures.
//! - [`mixing`]: α, β, φ coefficients, exact and Monte Carlo.
//! - [`empirical`]: empirical processes, `Γ(s, s')` and Kiefer processes.
//! - [`cli`] and [`verify`]: the batch tool and its verification suite.

pub mod chains;
pub mod cli;
pub mod empirical;
pub mod error;
pub mod io;
pub mod lift;
pub mod marginals;
pub mod mixing;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
