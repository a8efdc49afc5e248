//! Exact dense representation of multi-partite pure states and reduced
//! density operators.

mod density;
mod layout;
mod relative;
mod schmidt;
mod state;
mod unitary;

pub use density::{DensityOperator, DENSITY_TOLERANCE};
pub use layout::{SpaceLayout, SubsystemLabel, DEFAULT_DIM_GUARD};
pub use relative::{RelativeState, ZERO_BRANCH};
pub use schmidt::{schmidt_decompose, SchmidtDecomposition, DEGENERACY_TOLERANCE, SCHMIDT_FLOOR};
pub use state::{states_equal_up_to_global_phase, PureState, NORM_TOLERANCE};
pub use unitary::{apply_unitary, SubsystemUnitary, READY_TOLERANCE, UNITARY_TOLERANCE};
