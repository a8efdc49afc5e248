use nalgebra::DVector;

use super::state::PureState;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Coefficient magnitude below which a relative state is reported as absent.
pub const ZERO_BRANCH: f64 = 1e-12;

/// One branch `b_k |r_k⟩|B_k⟩` of a state expanded in a chosen left basis.
#[derive(Clone, Debug)]
pub struct RelativeState {
    /// `b_k`. The partner's first significant amplitude is real positive, so
    /// any phase of the branch sits here.
    pub coefficient: C64,
    /// `|B_k⟩` on the complement of the left subsystems, or `None` when
    /// `|b_k| < ZERO_BRANCH`.
    pub partner: Option<PureState>,
}

impl PureState {
    /// Expands the state as `Σ_k b_k |r_k⟩|B_k⟩` for the orthonormal basis
    /// `{|r_k⟩}` of the `left` subsystems (row-major in layout order).
    pub fn relative_states<L: AsRef<str>>(&self, left: &[L], basis: &[DVector<C64>]) -> Result<Vec<RelativeState>> {
        let layout = self.layout();
        let left_pos = layout.positions(left)?;
        let right_pos = layout.complement(&left_pos);
        if left_pos.is_empty() || right_pos.is_empty() {
            return Err(Error::InvalidBipartition);
        }
        linalg::check_orthonormal_basis(basis, layout.dim_at(&left_pos), 1e-10).map_err(Error::BadBasis)?;
        let psi = linalg::bipartite_matrix(
            self.amplitudes().as_slice(),
            &layout.offsets(&left_pos),
            &layout.offsets(&right_pos),
        );
        let right_layout = layout.sub_layout(&right_pos);
        basis
            .iter()
            .map(|r| {
                // ⟨r|ψ⟩ as a vector on the right factor
                let w: DVector<C64> = psi.tr_mul(&r.map(|z| z.conj()));
                let n = w.norm();
                if n < ZERO_BRANCH {
                    return Ok(RelativeState { coefficient: C64::new(n, 0.0), partner: None });
                }
                let phase = linalg::leading_phase(&w);
                let partner = PureState::new(right_layout.clone(), (w * (phase.conj() / n)).as_slice().to_vec())?;
                Ok(RelativeState { coefficient: phase * n, partner: Some(partner) })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_core::SpaceLayout;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn v(xs: &[f64]) -> DVector<C64> {
        DVector::from_vec(xs.iter().map(|x| r(*x)).collect())
    }

    fn bell() -> PureState {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        PureState::new(l, vec![r(FRAC_1_SQRT_2), r(0.0), r(0.0), r(FRAC_1_SQRT_2)]).unwrap()
    }

    #[test]
    fn bell_in_hadamard_basis() {
        let s = FRAC_1_SQRT_2;
        let basis = [v(&[s, s]), v(&[s, -s])];
        let rel = bell().relative_states(&["S"], &basis).unwrap();
        // (|00⟩+|11⟩)/√2 = (|++⟩ + |−−⟩)/√2
        for (k, b) in rel.iter().enumerate() {
            assert!((b.coefficient - r(s)).norm() < 1e-15);
            let p = b.partner.as_ref().unwrap();
            assert!((p.amplitudes() - &basis[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_branch_is_flagged() {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        let psi = PureState::basis(l, &[0, 1]).unwrap();
        let rel = psi.relative_states(&["S"], &[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        assert!(rel[0].partner.is_some());
        assert!(rel[1].partner.is_none());
        assert_eq!(rel[1].coefficient, r(0.0));
    }

    #[test]
    fn bad_basis_rejected() {
        let err = bell().relative_states(&["S"], &[v(&[1.0, 0.0]), v(&[1.0, 0.0])]).unwrap_err();
        assert!(matches!(err, Error::BadBasis(_)));
        let err = bell().relative_states(&["S"], &[v(&[1.0, 0.0])]).unwrap_err();
        assert!(matches!(err, Error::BadBasis(_)));
    }
}
