//! Envariance tests and the symmetries of a Schmidt state.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::tensor_core::{PureState, SchmidtDecomposition, SubsystemUnitary};

/// Threshold for both the reduced-state comparison and the undo residual.
pub const ENVARIANCE_TOLERANCE: f64 = 1e-10;

/// Why a transformation was judged not envariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NotEnvariant {
    /// The system's reduced operator moved, so nothing acting on the
    /// environment alone can restore the state.
    ReducedStateChanged { trace_distance: f64 },
    /// The reduced operator stayed put but the constructed undo missed.
    UndoFailed { residual: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvarianceVerdict {
    pub envariant: bool,
    /// Environment-side unitary restoring the state, when envariant.
    pub undo: Option<SubsystemUnitary>,
    /// `min_θ ‖restored − e^{iθ} original‖`; without an undo, the distance
    /// of the transformed state from the original.
    pub residual: f64,
    /// Trace distance between the system's reduced operators before and
    /// after the transformation.
    pub reduced_change: f64,
    pub reason: Option<NotEnvariant>,
}

fn projector_sum(vectors: &[DVector<C64>], weights: &[C64], dim: usize) -> DMatrix<C64> {
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for (v, w) in vectors.iter().zip(weights) {
        u += v * v.adjoint() * (*w - C64::new(1.0, 0.0));
    }
    u
}

fn phase_factors(sd: &SchmidtDecomposition, phases: &[f64], sign: f64) -> Result<Vec<C64>> {
    if phases.len() != sd.len() {
        return Err(Error::LengthMismatch { expected: sd.len(), found: phases.len() });
    }
    Ok(phases.iter().map(|p| C64::from_polar(1.0, sign * p)).collect())
}

/// `Σ_k e^{iφ_k} |s_k⟩⟨s_k|` on the left subsystems, identity on the
/// complement of the Schmidt support.
pub fn schmidt_phase_unitary(sd: &SchmidtDecomposition, phases: &[f64]) -> Result<SubsystemUnitary> {
    let w = phase_factors(sd, phases, 1.0)?;
    SubsystemUnitary::new(&sd.left_labels(), projector_sum(sd.left_basis(), &w, sd.left_dim()))
}

/// `Σ_k e^{−iφ_k} |ε_k⟩⟨ε_k|` on the right subsystems: the environment
/// action that undoes [`schmidt_phase_unitary`] with the same phases.
pub fn schmidt_phase_mirror(sd: &SchmidtDecomposition, phases: &[f64]) -> Result<SubsystemUnitary> {
    let w = phase_factors(sd, phases, -1.0)?;
    SubsystemUnitary::new(&sd.right_labels(), projector_sum(sd.right_basis(), &w, sd.right_dim()))
}

/// Decides whether `u`, acting away from `environment_side`, can be undone
/// by a unitary on `environment_side` alone.
///
/// The reduced operator of the system side must be unchanged; if it is,
/// the undo maps the transformed state's relative environment states (with
/// respect to the original Schmidt vectors of the system) back onto the
/// original ones, and is checked by applying it.
pub fn is_envariant<L: AsRef<str>>(
    state: &PureState,
    u: &SubsystemUnitary,
    environment_side: &[L],
) -> Result<EnvarianceVerdict> {
    let layout = state.layout();
    let env_pos = layout.positions(environment_side)?;
    if let Some(t) = u.targets().iter().find(|t| env_pos.contains(&layout.position(t.as_str()).unwrap_or(usize::MAX))) {
        return Err(Error::SideViolation(t.to_string()));
    }
    let system: Vec<String> = layout
        .subsystems()
        .iter()
        .enumerate()
        .filter(|(i, _)| !env_pos.contains(i))
        .map(|(_, (l, _))| l.to_string())
        .collect();
    if env_pos.is_empty() || system.is_empty() {
        return Err(Error::InvalidBipartition);
    }
    let moved = state.apply_unitary(u)?;
    let reduced_change = state.partial_trace(&system)?.trace_distance(&moved.partial_trace(&system)?)?;
    if reduced_change > ENVARIANCE_TOLERANCE {
        return Ok(EnvarianceVerdict {
            envariant: false,
            undo: None,
            residual: moved.phase_distance(state)?,
            reduced_change,
            reason: Some(NotEnvariant::ReducedStateChanged { trace_distance: reduced_change }),
        });
    }

    let sd = state.schmidt_decompose(&system)?;
    let basis = linalg::complete_basis(sd.left_basis(), sd.left_dim());
    let branches = moved.relative_states(&system, &basis)?;
    let mut from: Vec<DVector<C64>> = Vec::with_capacity(sd.len());
    for (lam, b) in sd.coefficients().iter().zip(&branches) {
        let w = match &b.partner {
            Some(p) => p.amplitudes() * (b.coefficient / *lam),
            None => DVector::zeros(sd.right_dim()),
        };
        from.push(w);
    }
    orthonormalize(&mut from);
    let failed = |residual: f64| EnvarianceVerdict {
        envariant: false,
        undo: None,
        residual,
        reduced_change,
        reason: Some(NotEnvariant::UndoFailed { residual }),
    };
    let matrix = linalg::unitary_mapping(&from, sd.right_basis(), sd.right_dim());
    let undo = match SubsystemUnitary::new(&sd.right_labels(), matrix) {
        Ok(undo) => undo,
        Err(_) => return Ok(failed(moved.phase_distance(state)?)),
    };
    let residual = moved.apply_unitary(&undo)?.phase_distance(state)?;
    if residual >= ENVARIANCE_TOLERANCE {
        return Ok(failed(residual));
    }
    Ok(EnvarianceVerdict { envariant: true, undo: Some(undo), residual, reduced_change, reason: None })
}

/// Two-pass Gram–Schmidt in place; vectors that vanish stay zero.
fn orthonormalize(vs: &mut [DVector<C64>]) {
    for i in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(i);
        let w = &mut rest[0];
        for _ in 0..2 {
            for b in done.iter() {
                let c = b.dotc(w);
                *w -= b * c;
            }
        }
        let n = w.norm();
        if n > 1e-8 {
            *w /= C64::new(n, 0.0);
        } else {
            w.fill(C64::new(0.0, 0.0));
        }
    }
}

fn transposition(a: &DVector<C64>, b: &DVector<C64>) -> DMatrix<C64> {
    let n = a.len();
    DMatrix::<C64>::identity(n, n) - a * a.adjoint() - b * b.adjoint() + a * b.adjoint() + b * a.adjoint()
}

/// Swaps Schmidt vectors `|s_k⟩ ↔ |s_l⟩` on the system side of `state`
/// and returns the result with the environment counterswap
/// `|ε_k⟩ ↔ |ε_l⟩`. The counterswap restores the state exactly when the two
/// coefficients agree; otherwise it leaves them exchanged.
pub fn envariant_swap(
    state: &PureState,
    k: usize,
    l: usize,
    sd: &SchmidtDecomposition,
) -> Result<(PureState, SubsystemUnitary)> {
    if sd.layout() != state.layout() {
        return Err(Error::SchmidtMismatch);
    }
    let diff = (sd.reconstruct()?.amplitudes() - state.amplitudes()).norm();
    if diff > ENVARIANCE_TOLERANCE {
        return Err(Error::SchmidtMismatch);
    }
    for i in [k, l] {
        if i >= sd.len() {
            return Err(Error::BadIndex { index: i, terms: sd.len() });
        }
    }
    let (s, e) = (sd.left_basis(), sd.right_basis());
    let swap = SubsystemUnitary::new(&sd.left_labels(), transposition(&s[k], &s[l]))?;
    let counter = SubsystemUnitary::new(&sd.right_labels(), transposition(&e[k], &e[l]))?;
    Ok((state.apply_unitary(&swap)?, counter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_core::SpaceLayout;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn two_term(a: f64, b: f64) -> PureState {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        PureState::new(l, vec![r(a), r(0.0), r(0.0), r(b)]).unwrap()
    }

    #[test]
    fn zero_phases_give_identity() {
        let psi = two_term(0.8f64.sqrt(), 0.2f64.sqrt());
        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        let u = schmidt_phase_unitary(&sd, &[0.0, 0.0]).unwrap();
        assert!((u.matrix() - DMatrix::<C64>::identity(2, 2)).norm() < 1e-15);
        assert_eq!(
            schmidt_phase_unitary(&sd, &[0.0]).unwrap_err(),
            Error::LengthMismatch { expected: 2, found: 1 }
        );
    }

    #[test]
    fn bell_phase_pi_is_z() {
        let psi = two_term(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        let u = schmidt_phase_unitary(&sd, &[0.0, PI]).unwrap();
        let z = DMatrix::from_diagonal(&DVector::from_vec(vec![r(1.0), r(-1.0)]));
        assert!((u.matrix() - z).norm() < 1e-15);
    }

    #[test]
    fn mirror_undoes_phases() {
        let psi = two_term(0.8f64.sqrt(), 0.2f64.sqrt());
        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        let phases = [0.3, -1.1];
        let moved = psi.apply_unitary(&schmidt_phase_unitary(&sd, &phases).unwrap()).unwrap();
        let back = moved.apply_unitary(&schmidt_phase_mirror(&sd, &phases).unwrap()).unwrap();
        assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn phase_unitary_is_envariant() {
        let psi = two_term(0.8f64.sqrt(), 0.2f64.sqrt());
        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        let u = schmidt_phase_unitary(&sd, &[0.7, 2.0]).unwrap();
        let v = is_envariant(&psi, &u, &["E"]).unwrap();
        assert!(v.envariant && v.undo.is_some() && v.residual < 1e-10);
    }

    #[test]
    fn bit_flip_is_not_envariant() {
        let psi = two_term(0.8f64.sqrt(), 0.2f64.sqrt());
        let x = DMatrix::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)]);
        let v = is_envariant(&psi, &SubsystemUnitary::new(&["S"], x).unwrap(), &["E"]).unwrap();
        assert!(!v.envariant && v.undo.is_none());
        // ρ_S goes from diag(0.8, 0.2) to diag(0.2, 0.8)
        assert!((v.reduced_change - 0.6).abs() < 1e-12);
        assert!(matches!(v.reason, Some(NotEnvariant::ReducedStateChanged { .. })));
    }

    #[test]
    fn any_local_unitary_on_bell_is_envariant() {
        let psi = two_term(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let (c, s) = (0.4f64.cos(), 0.4f64.sin());
        let m = DMatrix::from_row_slice(2, 2, &[r(c), C64::new(0.0, s), C64::new(0.0, s), r(c)]);
        let u = SubsystemUnitary::new(&["S"], m).unwrap();
        let v = is_envariant(&psi, &u, &["E"]).unwrap();
        assert!(v.envariant);
        // the conjugate mirror is an undo as well
        let mirror = u.conjugate_on(&["E"]).unwrap();
        let back = psi.apply_unitary(&u).unwrap().apply_unitary(&mirror).unwrap();
        assert!(back.phase_distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn side_violation() {
        let psi = two_term(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let u = SubsystemUnitary::identity(&["E"], 2).unwrap();
        assert_eq!(is_envariant(&psi, &u, &["E"]).unwrap_err(), Error::SideViolation("E".into()));
    }

    #[test]
    fn swap_and_counterswap() {
        let psi = two_term(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        let (swapped, counter) = envariant_swap(&psi, 0, 1, &sd).unwrap();
        assert!(swapped.phase_distance(&psi).unwrap() > 0.1);
        let back = swapped.apply_unitary(&counter).unwrap();
        assert!(back.phase_distance(&psi).unwrap() < 1e-10);

        let (same, _) = envariant_swap(&psi, 1, 1, &sd).unwrap();
        assert!((same.amplitudes() - psi.amplitudes()).norm() < 1e-15);
        assert_eq!(envariant_swap(&psi, 0, 2, &sd).unwrap_err(), Error::BadIndex { index: 2, terms: 2 });
    }

    #[test]
    fn unequal_swap_exchanges_coefficients() {
        let (a, b) = (0.8f64.sqrt(), 0.2f64.sqrt());
        let psi = two_term(a, b);
        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        let (swapped, counter) = envariant_swap(&psi, 0, 1, &sd).unwrap();
        let back = swapped.apply_unitary(&counter).unwrap();
        assert!(back.phase_distance(&two_term(b, a)).unwrap() < 1e-12);
        // ‖(a−b)(|00⟩ − |11⟩)‖
        let expected = (a - b).abs() * 2f64.sqrt();
        assert!((back.phase_distance(&psi).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn mismatched_decomposition_rejected() {
        let psi = two_term(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let other = two_term(0.6, 0.8).schmidt_decompose(&["S"]).unwrap();
        assert_eq!(envariant_swap(&psi, 0, 1, &other).unwrap_err(), Error::SchmidtMismatch);
    }
}
