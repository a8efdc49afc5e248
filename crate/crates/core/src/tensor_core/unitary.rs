//! Unitaries on subsets of subsystems and the controlled-shift kernels used
//! by the measurement chain.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::layout::{SpaceLayout, SubsystemLabel};
use super::state::PureState;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Allowed deviation of `U U^†` from the identity.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Weight outside `|0⟩` below which a subsystem counts as "ready".
pub const READY_TOLERANCE: f64 = 1e-12;

/// A unitary matrix acting on an ordered list of target subsystems.
///
/// Row and column indices run over the targets row-major in the order given
/// here, which need not match the order of the state the unitary is applied
/// to.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsystemUnitary {
    targets: Vec<SubsystemLabel>,
    #[serde(serialize_with = "serialize_matrix")]
    matrix: DMatrix<C64>,
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<[f64; 2]> = (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

impl SubsystemUnitary {
    pub fn new<L: AsRef<str>>(targets: &[L], matrix: DMatrix<C64>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let mut labels: Vec<SubsystemLabel> = Vec::with_capacity(targets.len());
        for t in targets {
            let l = SubsystemLabel::new(t.as_ref())?;
            if labels.contains(&l) {
                return Err(Error::LabelCollision(l.to_string()));
            }
            labels.push(l);
        }
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let deviation = linalg::unitarity_deviation(&matrix);
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { targets: labels, matrix })
    }

    pub fn identity<L: AsRef<str>>(targets: &[L], dim: usize) -> Result<Self> {
        Self::new(targets, DMatrix::identity(dim, dim))
    }

    pub fn targets(&self) -> &[SubsystemLabel] {
        &self.targets
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> SubsystemUnitary {
        Self { targets: self.targets.clone(), matrix: self.matrix.adjoint() }
    }

    /// Entrywise complex conjugate, retargeted onto `targets`.
    pub fn conjugate_on<L: AsRef<str>>(&self, targets: &[L]) -> Result<SubsystemUnitary> {
        Self::new(targets, self.matrix.map(|z| z.conj()))
    }
}

impl PureState {
    /// `(I ⊗ U ⊗ I)|ψ⟩` with `U` embedded on its target subsystems.
    pub fn apply_unitary(&self, u: &SubsystemUnitary) -> Result<PureState> {
        let layout = self.layout();
        let mut target_pos = Vec::with_capacity(u.targets.len());
        for t in &u.targets {
            let p = layout.position(t.as_str())?;
            target_pos.push(p);
        }
        let dt = layout.dim_at(&target_pos);
        if dt != u.matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: dt, found: u.matrix.nrows() });
        }
        // target offsets in the unitary's own order, rest in layout order
        let t_off = layout.offsets(&target_pos);
        let mut sorted = target_pos.clone();
        sorted.sort_unstable();
        let r_off = layout.offsets(&layout.complement(&sorted));

        let amps = self.amplitudes();
        let mut out = DVector::<C64>::zeros(amps.len());
        let mut block = DVector::<C64>::zeros(dt);
        for &base in &r_off {
            let mut any = false;
            for (t, &o) in t_off.iter().enumerate() {
                block[t] = amps[base + o];
                any |= block[t] != C64::new(0.0, 0.0);
            }
            if !any {
                continue;
            }
            let image = &u.matrix * &block;
            for (t, &o) in t_off.iter().enumerate() {
                out[base + o] = image[t];
            }
        }
        Ok(PureState::from_parts(layout.clone(), out))
    }

    /// Probability weight of `label` outside its `|0⟩` basis state.
    pub fn weight_outside_ready(&self, label: &str) -> Result<f64> {
        let layout = self.layout();
        let p = layout.position(label)?;
        let strides = layout.strides();
        Ok(self
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(i, _)| layout.digit(&strides, *i, p) != 0)
            .map(|(_, z)| z.norm_sqr())
            .sum())
    }

    /// Errors with `ApparatusNotReady` unless `label` is in `|0⟩`.
    pub fn require_ready(&self, label: &str) -> Result<()> {
        let weight = self.weight_outside_ready(label)?;
        if weight > READY_TOLERANCE {
            return Err(Error::ApparatusNotReady { label: label.to_string(), weight });
        }
        Ok(())
    }

    /// Controlled shift `|c⟩|t⟩ → |c⟩|t + c mod d_t⟩`, where `c` is the
    /// composite index of the `controls` (row-major in the order given).
    ///
    /// This is a permutation of basis states for any dimensions, hence
    /// unitary; recording faithfully additionally needs `d_t ≥ d_c`.
    pub fn controlled_shift<L: AsRef<str>>(&self, controls: &[L], target: &str) -> Result<PureState> {
        let layout = self.layout();
        let t = layout.position(target)?;
        let c_pos = control_positions(layout, controls, t)?;
        let strides = layout.strides();
        let dt = layout.subsystems()[t].1;
        let amps = self.amplitudes();
        let mut out = DVector::<C64>::zeros(amps.len());
        for (i, z) in amps.iter().enumerate() {
            if *z == C64::new(0.0, 0.0) {
                continue;
            }
            let c = composite_digit(layout, &strides, i, &c_pos);
            let digit = layout.digit(&strides, i, t);
            let shifted = (digit + c) % dt;
            let j = i - digit * strides[t] + shifted * strides[t];
            out[j] = *z;
        }
        Ok(PureState::from_parts(layout.clone(), out))
    }

    /// Controlled preparation `|c⟩|0⟩ → |c⟩|records[c]⟩` on a ready target.
    ///
    /// This is the action on ready inputs of the controlled unitary
    /// `Σ_c |c⟩⟨c| ⊗ V_c` with any `V_c` taking `|0⟩` to `records[c]`.
    pub fn controlled_record<L: AsRef<str>>(
        &self,
        controls: &[L],
        target: &str,
        records: &[DVector<C64>],
    ) -> Result<PureState> {
        let layout = self.layout();
        let t = layout.position(target)?;
        let c_pos = control_positions(layout, controls, t)?;
        let dc = layout.dim_at(&c_pos);
        let dt = layout.subsystems()[t].1;
        if records.len() != dc {
            return Err(Error::LengthMismatch { expected: dc, found: records.len() });
        }
        for r in records {
            if r.len() != dt {
                return Err(Error::DimensionMismatch { expected: dt, found: r.len() });
            }
            if (r.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::NotNormalized { norm: r.norm() });
            }
        }
        self.require_ready(target)?;
        let strides = layout.strides();
        let amps = self.amplitudes();
        let mut out = DVector::<C64>::zeros(amps.len());
        for (i, z) in amps.iter().enumerate() {
            if *z == C64::new(0.0, 0.0) || layout.digit(&strides, i, t) != 0 {
                continue;
            }
            let c = composite_digit(layout, &strides, i, &c_pos);
            for (d, e) in records[c].iter().enumerate() {
                out[i + d * strides[t]] = z * e;
            }
        }
        let norm = out.norm();
        out /= C64::new(norm, 0.0);
        Ok(PureState::from_parts(layout.clone(), out))
    }
}

fn control_positions<L: AsRef<str>>(layout: &SpaceLayout, controls: &[L], target: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(controls.len());
    for c in controls {
        let p = layout.position(c.as_ref())?;
        if p == target || out.contains(&p) {
            return Err(Error::LabelCollision(c.as_ref().to_string()));
        }
        out.push(p);
    }
    Ok(out)
}

fn composite_digit(layout: &SpaceLayout, strides: &[usize], index: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .fold(0, |acc, &p| acc * layout.subsystems()[p].1 + layout.digit(strides, index, p))
}

/// Free-function form of [`PureState::apply_unitary`].
pub fn apply_unitary(state: &PureState, u: &SubsystemUnitary) -> Result<PureState> {
    state.apply_unitary(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn x_gate() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)])
    }

    #[test]
    fn bit_flip_on_s() {
        let l = SpaceLayout::new([("S", 2), ("A", 2)]).unwrap();
        let psi = PureState::basis(l.clone(), &[0, 0]).unwrap();
        let u = SubsystemUnitary::new(&["S"], x_gate()).unwrap();
        let out = psi.apply_unitary(&u).unwrap();
        assert_eq!(out, PureState::basis(l, &[1, 0]).unwrap());
    }

    #[test]
    fn rejects_non_unitary_and_unknown_targets() {
        let m = DMatrix::from_row_slice(2, 2, &[r(1.0), r(1.0), r(0.0), r(1.0)]);
        assert!(matches!(SubsystemUnitary::new(&["S"], m), Err(Error::NotUnitary { .. })));
        let psi = PureState::basis(SpaceLayout::new([("S", 2)]).unwrap(), &[0]).unwrap();
        let u = SubsystemUnitary::new(&["Q"], x_gate()).unwrap();
        assert_eq!(psi.apply_unitary(&u).unwrap_err(), Error::UnknownLabel("Q".into()));
    }

    #[test]
    fn target_order_is_respected() {
        // CNOT with control listed second
        let l = SpaceLayout::new([("S", 2), ("A", 2)]).unwrap();
        let cnot = DMatrix::from_row_slice(
            4,
            4,
            &[
                r(1.0), r(0.0), r(0.0), r(0.0),
                r(0.0), r(1.0), r(0.0), r(0.0),
                r(0.0), r(0.0), r(0.0), r(1.0),
                r(0.0), r(0.0), r(1.0), r(0.0),
            ],
        );
        let u = SubsystemUnitary::new(&["A", "S"], cnot).unwrap();
        let psi = PureState::basis(l.clone(), &[0, 1]).unwrap();
        assert_eq!(psi.apply_unitary(&u).unwrap(), PureState::basis(l, &[1, 1]).unwrap());
    }

    #[test]
    fn controlled_shift_wraps_modulo_target() {
        let l = SpaceLayout::new([("S", 3), ("A", 3)]).unwrap();
        let psi = PureState::basis(l.clone(), &[2, 2]).unwrap();
        let out = psi.controlled_shift(&["S"], "A").unwrap();
        assert_eq!(out, PureState::basis(l, &[2, 1]).unwrap());
    }

    #[test]
    fn record_requires_ready_target() {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        let psi = PureState::basis(l, &[0, 1]).unwrap();
        let recs = vec![DVector::from_vec(vec![r(1.0), r(0.0)]), DVector::from_vec(vec![r(0.0), r(1.0)])];
        assert!(matches!(
            psi.controlled_record(&["S"], "E", &recs),
            Err(Error::ApparatusNotReady { .. })
        ));
    }
}
