//! Envariance: transformations of a system that an action on its
//! entangled environment can undo, and the counting argument built on it.
//!
//! * [`symmetry`] tests envariance constructively and provides the phase
//!   and swap symmetries of Schmidt states.
//! * [`born`] fine-grains a state with commensurate squared amplitudes into
//!   equal-amplitude terms and counts them.
//! * [`bounds`] brackets incommensurate squared amplitudes between
//!   rationals with a common denominator.
//! * [`witness`] contrasts phase sensitivity of a lone system with its
//!   insensitivity once records of its pointer exist.

pub mod born;
pub mod bounds;
pub mod symmetry;
pub mod witness;

pub use born::{
    born_counting, born_probabilities, commensurate_counts, born_probabilities_with_cap, equal_amplitude_probabilities,
    equal_amplitude_subset_probability, fine_grain, BornCounting, FineGrainingPlan, DEFAULT_M_CAP,
};
pub use bounds::{comparison_state, rational_bounds, Endpoint, ProbabilityBound};
pub use symmetry::{
    envariant_swap, is_envariant, schmidt_phase_mirror, schmidt_phase_unitary, EnvarianceVerdict, NotEnvariant,
    ENVARIANCE_TOLERANCE,
};
pub use witness::{phase_sensitivity_witness, InterferenceObservable, PhaseWitness};

use crate::tensor_core::SpaceLayout;

/// A label not yet used in `layout`, starting from `base`.
pub(crate) fn fresh_label(layout: &SpaceLayout, base: &str) -> String {
    if !layout.contains(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}{i}")).find(|l| !layout.contains(l)).unwrap()
}
