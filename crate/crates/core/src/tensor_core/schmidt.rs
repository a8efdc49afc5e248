//! Schmidt decomposition of a pure state across a bipartition.
//!
//! Conventions:
//!
//! * coefficients are strictly positive and sorted descending; terms below
//!   [`SCHMIDT_FLOOR`] are dropped, so the number of terms is the rank of
//!   either reduced operator;
//! * each left vector has its first significant amplitude real and positive,
//!   and the matching right vector carries the compensating phase, so the
//!   terms reconstruct the state exactly (not merely up to a global phase);
//! * vectors sharing a coefficient (within [`DEGENERACY_TOLERANCE`]) are
//!   ordered by the index of their first significant amplitude.

use nalgebra::DVector;

use super::layout::{SpaceLayout, SubsystemLabel};
use super::state::PureState;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Coefficients at or below this value are treated as absent.
pub const SCHMIDT_FLOOR: f64 = 1e-12;

/// Coefficients closer than this are treated as degenerate when ordering.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    layout: SpaceLayout,
    left_positions: Vec<usize>,
    right_positions: Vec<usize>,
    coefficients: Vec<f64>,
    left_basis: Vec<DVector<C64>>,
    right_basis: Vec<DVector<C64>>,
}

impl SchmidtDecomposition {
    /// Coefficients `λ_k`, descending.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Left vectors over the left subsystems, row-major in layout order.
    pub fn left_basis(&self) -> &[DVector<C64>] {
        &self.left_basis
    }

    pub fn right_basis(&self) -> &[DVector<C64>] {
        &self.right_basis
    }

    /// Layout of the decomposed state.
    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn left_layout(&self) -> SpaceLayout {
        self.layout.sub_layout(&self.left_positions)
    }

    pub fn right_layout(&self) -> SpaceLayout {
        self.layout.sub_layout(&self.right_positions)
    }

    pub fn left_labels(&self) -> Vec<SubsystemLabel> {
        self.left_layout().labels().cloned().collect()
    }

    pub fn right_labels(&self) -> Vec<SubsystemLabel> {
        self.right_layout().labels().cloned().collect()
    }

    pub fn left_dim(&self) -> usize {
        self.layout.dim_at(&self.left_positions)
    }

    pub fn right_dim(&self) -> usize {
        self.layout.dim_at(&self.right_positions)
    }

    /// `Σ_k λ_k |l_k⟩|r_k⟩` laid out in the original subsystem order.
    pub fn reconstruct(&self) -> Result<PureState> {
        let l_off = self.layout.offsets(&self.left_positions);
        let r_off = self.layout.offsets(&self.right_positions);
        let mut amps = DVector::<C64>::zeros(self.layout.total_dim());
        for ((lam, l), r) in self.coefficients.iter().zip(&self.left_basis).zip(&self.right_basis) {
            for (i, li) in l.iter().enumerate() {
                if *li == C64::new(0.0, 0.0) {
                    continue;
                }
                for (j, rj) in r.iter().enumerate() {
                    amps[l_off[i] + r_off[j]] += li * rj * *lam;
                }
            }
        }
        PureState::normalized(self.layout.clone(), amps.as_slice().to_vec())
    }

    /// Builds a state `Σ_k c_k |l_k⟩|r_k⟩` on the same frames with new
    /// coefficients (one per term; need not be normalised).
    pub fn with_coefficients(&self, coefficients: &[C64]) -> Result<PureState> {
        if coefficients.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: coefficients.len() });
        }
        let l_off = self.layout.offsets(&self.left_positions);
        let r_off = self.layout.offsets(&self.right_positions);
        let mut amps = vec![C64::new(0.0, 0.0); self.layout.total_dim()];
        for ((c, l), r) in coefficients.iter().zip(&self.left_basis).zip(&self.right_basis) {
            for (i, li) in l.iter().enumerate() {
                for (j, rj) in r.iter().enumerate() {
                    amps[l_off[i] + r_off[j]] += li * rj * c;
                }
            }
        }
        PureState::normalized(self.layout.clone(), amps)
    }
}

impl PureState {
    /// Schmidt decomposition across `left` versus the remaining subsystems.
    pub fn schmidt_decompose<L: AsRef<str>>(&self, left: &[L]) -> Result<SchmidtDecomposition> {
        let layout = self.layout();
        let left_positions = layout.positions(left)?;
        let right_positions = layout.complement(&left_positions);
        if left_positions.is_empty() || right_positions.is_empty() {
            return Err(Error::InvalidBipartition);
        }
        let psi = linalg::bipartite_matrix(
            self.amplitudes().as_slice(),
            &layout.offsets(&left_positions),
            &layout.offsets(&right_positions),
        );
        let mut terms = linalg::block_svd(&psi, SCHMIDT_FLOOR);
        for t in terms.iter_mut() {
            let phase = linalg::leading_phase(&t.left);
            t.left *= phase.conj();
            t.right *= phase;
        }
        terms.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
        // order degenerate runs by first significant index
        let mut start = 0;
        while start < terms.len() {
            let head = terms[start].sigma;
            let mut end = start + 1;
            while end < terms.len() && head - terms[end].sigma <= DEGENERACY_TOLERANCE {
                end += 1;
            }
            terms[start..end].sort_by_key(|t| linalg::first_significant(&t.left).unwrap_or(usize::MAX));
            start = end;
        }
        Ok(SchmidtDecomposition {
            layout: layout.clone(),
            left_positions,
            right_positions,
            coefficients: terms.iter().map(|t| t.sigma).collect(),
            left_basis: terms.iter().map(|t| t.left.clone()).collect(),
            right_basis: terms.into_iter().map(|t| t.right).collect(),
        })
    }

    /// Eigenvalues of the reduced operator on `labels` (squared Schmidt
    /// coefficients), descending, without computing any vectors.
    pub fn reduced_spectrum<L: AsRef<str>>(&self, labels: &[L]) -> Result<Vec<f64>> {
        let layout = self.layout();
        if labels.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let kept = layout.positions(labels)?;
        let rest = layout.complement(&kept);
        if rest.is_empty() {
            return Ok(vec![1.0]);
        }
        let psi = linalg::bipartite_matrix(
            self.amplitudes().as_slice(),
            &layout.offsets(&kept),
            &layout.offsets(&rest),
        );
        Ok(linalg::schmidt_spectrum(&psi))
    }
}

/// Free-function form of [`PureState::schmidt_decompose`].
pub fn schmidt_decompose<L: AsRef<str>>(state: &PureState, left: &[L]) -> Result<SchmidtDecomposition> {
    state.schmidt_decompose(left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn two_qubits(amps: [f64; 4]) -> PureState {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        PureState::new(l, amps.iter().map(|x| r(*x)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn product_state_has_one_term() {
        let sd = two_qubits([0.0, 1.0, 0.0, 0.0]).schmidt_decompose(&["S"]).unwrap();
        assert_eq!(sd.coefficients().len(), 1);
        assert!((sd.coefficients()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_state_coefficients() {
        let sd = two_qubits([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).schmidt_decompose(&["S"]).unwrap();
        assert_eq!(sd.len(), 2);
        for c in sd.coefficients() {
            assert!((c - FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn unequal_two_term_state() {
        // √0.8 and √0.2, frozen from the reduced-operator eigenvalues
        let psi = two_qubits([0.8f64.sqrt(), 0.0, 0.0, 0.2f64.sqrt()]);
        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        assert!((sd.coefficients()[0] - 0.8944272).abs() < 1e-6);
        assert!((sd.coefficients()[1] - 0.4472136).abs() < 1e-6);
        assert!(sd.reconstruct().unwrap().phase_distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn phase_convention_on_left_vectors() {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        let psi = PureState::normalized(l, vec![C64::new(0.0, 0.6), r(0.0), r(0.0), C64::new(-0.8, 0.0)]).unwrap();
        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        for v in sd.left_basis() {
            let i = linalg::first_significant(v).unwrap();
            assert!(v[i].im.abs() < 1e-15 && v[i].re > 0.0);
        }
        assert!(sd.reconstruct().unwrap().phase_distance(&psi).unwrap() < 1e-12);
        // exact, not only up to a global phase
        let back = sd.reconstruct().unwrap();
        assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn trivial_bipartitions_rejected() {
        let psi = two_qubits([1.0, 0.0, 0.0, 0.0]);
        assert_eq!(psi.schmidt_decompose(&["S", "E"]).unwrap_err(), Error::InvalidBipartition);
        let none: [&str; 0] = [];
        assert_eq!(psi.schmidt_decompose(&none).unwrap_err(), Error::InvalidBipartition);
    }
}
