//! Phases of an isolated superposition are observable through
//! interference; once the pointer states are recorded elsewhere, the
//! system's reduced state no longer carries them.

use serde::Serialize;

use super::fresh_label;
use crate::error::{Error, Result};
use crate::tensor_core::{PureState, SpaceLayout};

/// `X_ab = |a⟩⟨b| + |b⟩⟨a|` or `Y_ab = −i|a⟩⟨b| + i|b⟩⟨a|`, `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterferenceObservable {
    X { a: usize, b: usize },
    Y { a: usize, b: usize },
}

impl InterferenceObservable {
    /// `⟨ψ|O|ψ⟩` on a single-subsystem state.
    pub fn expectation(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        match *self {
            Self::X { a, b } => 2.0 * (v[a].conj() * v[b]).re,
            Self::Y { a, b } => 2.0 * (v[a].conj() * v[b]).im,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseWitness {
    /// Largest `|⟨O⟩_ψ − ⟨O⟩_ψ′|` over all interference observables.
    pub observable_expectation_gap: f64,
    /// The observable achieving it (first in `X` before `Y`, `(a, b)`
    /// lexicographic order among ties).
    pub observable: Option<InterferenceObservable>,
    /// Trace distance between the system's reduced operators after each
    /// state's pointer is copied into a fresh record subsystem.
    pub post_entanglement_gap: f64,
}

/// Compares two single-subsystem states before and after their pointer
/// basis is recorded.
pub fn phase_sensitivity_witness(psi: &PureState, psi_prime: &PureState) -> Result<PhaseWitness> {
    let layout = psi.layout();
    if layout.len() != 1 {
        return Err(Error::LayoutMismatch(format!("expected one subsystem, found {layout}")));
    }
    psi.require_same_layout(psi_prime)?;
    let d = layout.dims()[0];

    let mut best = (0.0, None);
    for make in [
        (|a, b| InterferenceObservable::X { a, b }) as fn(usize, usize) -> InterferenceObservable,
        |a, b| InterferenceObservable::Y { a, b },
    ] {
        for a in 0..d {
            for b in a + 1..d {
                let o = make(a, b);
                let gap = (o.expectation(psi) - o.expectation(psi_prime)).abs();
                if gap > best.0 {
                    best = (gap, Some(o));
                }
            }
        }
    }

    let label = layout.subsystems()[0].0.as_str();
    let record = fresh_label(layout, "E");
    let fresh = PureState::basis(SpaceLayout::with_guard([(record.as_str(), d)], layout.guard())?, &[0])?;
    let reduced = |s: &PureState| -> Result<_> {
        s.tensor_product(&fresh)?.controlled_shift(&[label], &record)?.partial_trace(&[label])
    };
    let post_entanglement_gap = reduced(psi)?.trace_distance(&reduced(psi_prime)?)?;
    Ok(PhaseWitness { observable_expectation_gap: best.0, observable: best.1, post_entanglement_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn qutrit(xs: [f64; 3]) -> PureState {
        PureState::normalized(SpaceLayout::new([("S", 3)]).unwrap(), xs.map(|x| C64::new(x, 0.0)).to_vec()).unwrap()
    }

    #[test]
    fn interference_separates_reshuffled_phases() {
        let psi = qutrit([1.0, 1.0, -1.0]);
        let psi_prime = qutrit([-1.0, 1.0, 1.0]);
        let w = phase_sensitivity_witness(&psi, &psi_prime).unwrap();
        // ⟨X_01⟩ goes from 2/3 to −2/3
        assert!((w.observable_expectation_gap - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(w.observable, Some(InterferenceObservable::X { a: 0, b: 1 }));
        assert!(w.post_entanglement_gap < 1e-12);
    }

    #[test]
    fn global_phase_is_invisible() {
        let psi = qutrit([0.3, -0.5, 0.8]);
        let rotated = PureState::new(
            psi.layout().clone(),
            psi.amplitudes().iter().map(|z| z * C64::from_polar(1.0, 0.7)).collect::<Vec<_>>(),
        )
        .unwrap();
        let w = phase_sensitivity_witness(&psi, &rotated).unwrap();
        assert!(w.observable_expectation_gap < 1e-12 && w.post_entanglement_gap < 1e-12);
    }

    #[test]
    fn rejects_composite_layouts() {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        let psi = PureState::basis(l, &[0, 0]).unwrap();
        assert!(matches!(phase_sensitivity_witness(&psi, &psi), Err(Error::LayoutMismatch(_))));
    }
}
