use nalgebra::DMatrix;
use serde::Serialize;

use super::layout::SpaceLayout;
use super::state::PureState;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Tolerance for Hermiticity, trace and positivity checks.
pub const DENSITY_TOLERANCE: f64 = 1e-10;

/// Hermitian, positive semidefinite, unit-trace operator over a set of
/// subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    layout: SpaceLayout,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(layout: SpaceLayout, matrix: DMatrix<C64>) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > DENSITY_TOLERANCE {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:e})")));
        }
        let trace = matrix.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > DENSITY_TOLERANCE {
            return Err(Error::InvalidDensity(format!("trace {trace}")));
        }
        let op = Self { layout, matrix };
        let min = op.eigenvalues().last().copied().unwrap_or(0.0);
        if min < -DENSITY_TOLERANCE {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(op)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &PureState) -> Self {
        let v = state.amplitudes();
        Self { layout: state.layout().clone(), matrix: v * v.adjoint() }
    }

    pub(crate) fn from_parts(layout: SpaceLayout, matrix: DMatrix<C64>) -> Self {
        Self { layout, matrix }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Largest entrywise difference from another operator on the same layout.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> Result<f64> {
        self.require_same_layout(other)?;
        Ok((&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        self.require_same_layout(other)?;
        Ok(linalg::trace_distance(&self.matrix, &other.matrix))
    }

    /// Frobenius norm of the off-diagonal part (computational basis).
    pub fn off_diagonal_norm(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += self.matrix[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    /// Diagonal in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)].re).collect()
    }

    fn require_same_layout(&self, other: &DensityOperator) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(format!("{} vs {}", self.layout, other.layout)));
        }
        Ok(())
    }

    /// Traces out every subsystem not in `keep`. The result lists the kept
    /// subsystems in this operator's layout order.
    pub fn partial_trace<L: AsRef<str>>(&self, keep: &[L]) -> Result<DensityOperator> {
        let (kept, dropped) = split_keep(&self.layout, keep)?;
        let k_off = self.layout.offsets(&kept);
        let d_off = self.layout.offsets(&dropped);
        let m = DMatrix::from_fn(k_off.len(), k_off.len(), |i, j| {
            d_off.iter().map(|d| self.matrix[(k_off[i] + d, k_off[j] + d)]).sum::<C64>()
        });
        Ok(Self::from_parts(self.layout.sub_layout(&kept), m))
    }
}

pub(crate) fn split_keep<L: AsRef<str>>(layout: &SpaceLayout, keep: &[L]) -> Result<(Vec<usize>, Vec<usize>)> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let kept = layout.positions(keep)?;
    let dropped = layout.complement(&kept);
    Ok((kept, dropped))
}

impl PureState {
    /// Reduced operator `Tr_discarded |ψ⟩⟨ψ|` on the subsystems in `keep`,
    /// listed in layout order.
    pub fn partial_trace<L: AsRef<str>>(&self, keep: &[L]) -> Result<DensityOperator> {
        let layout = self.layout();
        let (kept, dropped) = split_keep(layout, keep)?;
        let psi = linalg::bipartite_matrix(
            self.amplitudes().as_slice(),
            &layout.offsets(&kept),
            &layout.offsets(&dropped),
        );
        Ok(DensityOperator::from_parts(layout.sub_layout(&kept), linalg::gram_rows(&psi)))
    }
}

/// Serialises as `{layout, matrix: [[[re, im], ...], ...]}` (row-major).
impl Serialize for DensityOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            layout: &'a SpaceLayout,
            matrix: Vec<Vec<[f64; 2]>>,
        }
        let n = self.matrix.nrows();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im]).collect())
            .collect();
        Doc { layout: &self.layout, matrix: rows }.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn bell() -> PureState {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        PureState::new(l, vec![r(FRAC_1_SQRT_2), r(0.0), r(0.0), r(FRAC_1_SQRT_2)]).unwrap()
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let rho = bell().partial_trace(&["S"]).unwrap();
        let want = DMatrix::from_diagonal_element(2, 2, r(0.5));
        assert!((rho.matrix() - want).norm() < 1e-15);
        assert!((rho.purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn keep_errors() {
        let empty: [&str; 0] = [];
        assert_eq!(bell().partial_trace(&empty).unwrap_err(), Error::EmptyKeepSet);
        assert_eq!(bell().partial_trace(&["Q"]).unwrap_err(), Error::UnknownLabel("Q".into()));
    }

    #[test]
    fn operator_partial_trace_agrees_with_state() {
        let l = SpaceLayout::new([("A", 2), ("B", 3), ("C", 2)]).unwrap();
        let amps: Vec<C64> = (0..12).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.7).cos())).collect();
        let psi = PureState::normalized(l, amps).unwrap();
        let full = DensityOperator::from_pure(&psi);
        for keep in [vec!["A"], vec!["B"], vec!["C", "A"], vec!["B", "C"]] {
            let a = psi.partial_trace(&keep).unwrap();
            let b = full.partial_trace(&keep).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-14);
        }
    }

    #[test]
    fn validation() {
        let l = SpaceLayout::new([("S", 2)]).unwrap();
        let bad_trace = DMatrix::from_diagonal_element(2, 2, r(1.0));
        assert!(matches!(DensityOperator::new(l.clone(), bad_trace), Err(Error::InvalidDensity(_))));
        let negative = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r(1.5), r(-0.5)]));
        assert!(matches!(DensityOperator::new(l.clone(), negative), Err(Error::InvalidDensity(_))));
        let ok = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r(0.8), r(0.2)]));
        assert!(DensityOperator::new(l, ok).is_ok());
    }
}
