//! Multivariate concentration bounds for exchangeable-pair and size-bias
//! couplings.
//!
//! The crate has three layers:
//!
//! * [`bounds`]: the generic tail bounds driven by a linearity matrix
//!   (exchangeable pairs) or by bounded size-bias couplings, plus the small
//!   dense linear algebra they need.
//! * The statistic families the bounds are applied to: complete U-statistics
//!   ([`ustat`]), doubly indexed permutation statistics ([`dips`], including
//!   the Mann-Whitney-Wilcoxon and graph-intersection specializations) and
//!   circular pattern counts in random permutations ([`patterns`]).
//! * [`harness`]: exact enumeration and Monte Carlo machinery that checks the
//!   coupling identities and tests every bound for dominance over the true
//!   tail.

// NaN-rejecting guards are written as `!(x >= 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dips;
pub mod error;
pub mod harness;
pub mod io;
pub mod patterns;
pub mod perm;
pub mod rng;
pub mod ustat;

pub use error::{Error, Result};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
