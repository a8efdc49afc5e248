//! Exact state-vector laboratory for system-environment entanglement.
//!
//! States live on a [`SpaceLayout`] of labelled subsystems. The modules
//! build on each other:
//!
//! * [`tensor_core`]: states, unitaries on subsystems, partial traces,
//!   Schmidt decompositions and relative states (re-exported here);
//! * [`info_measures`]: entropies, mutual information, redundancy;
//! * [`measurement_models`]: premeasurement, environment records,
//!   cascades and observers;
//! * [`envariance`]: envariance tests, counting probabilities and
//!   rational bounds.
//!
//! ```
//! use envlab::{PureState, SpaceLayout, C64};
//!
//! # fn main() -> envlab::Result<()> {
//! let layout = SpaceLayout::new([("S", 2), ("E", 2)])?;
//! let psi = PureState::new(layout, vec![C64::new(0.6, 0.0), 0.0.into(), 0.0.into(), C64::new(0.8, 0.0)])?;
//! let sd = psi.schmidt_decompose(&["S"])?;
//! assert!((sd.coefficients()[0] - 0.8).abs() < 1e-12);
//! # Ok(())
//! # }
//! ```

pub mod envariance;
pub mod error;
pub mod info_measures;
mod linalg;
pub mod measurement_models;
pub mod random;
pub mod tensor_core;

pub use error::{Error, Result};
pub use linalg::C64;
pub use tensor_core::*;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/information.md")]
    mod information {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/envariance.md")]
    mod envariance {}
    #[doc = include_str!("../../../book/src/born.md")]
    mod born {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
