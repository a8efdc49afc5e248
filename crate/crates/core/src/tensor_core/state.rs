//! Normalised pure states over a [`SpaceLayout`] and their document format.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::layout::SpaceLayout;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Allowed deviation of a state's norm from one.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// A normalised amplitude vector over an ordered set of labelled subsystems.
///
/// Amplitudes follow the layout's row-major convention: the leftmost label is
/// the slowest-varying index.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: SpaceLayout,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Validates length and normalisation.
    pub fn new(layout: SpaceLayout, amplitudes: impl Into<Vec<C64>>) -> Result<Self> {
        let amplitudes = DVector::from_vec(amplitudes.into());
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { layout, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm. Fails on the zero vector.
    pub fn normalized(layout: SpaceLayout, amplitudes: impl Into<Vec<C64>>) -> Result<Self> {
        let mut v: Vec<C64> = amplitudes.into();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        v.iter_mut().for_each(|z| *z /= norm);
        Self::new(layout, v)
    }

    /// Single-subsystem state with the given amplitudes.
    pub fn single(label: &str, amplitudes: impl Into<Vec<C64>>) -> Result<Self> {
        let amplitudes = amplitudes.into();
        let layout = SpaceLayout::new([(label, amplitudes.len())])?;
        Self::new(layout, amplitudes)
    }

    /// Computational basis state with the given digit per subsystem.
    pub fn basis(layout: SpaceLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() {
            return Err(Error::LengthMismatch { expected: layout.len(), found: digits.len() });
        }
        let strides = layout.strides();
        let mut index = 0;
        for (i, (&d, &dim)) in digits.iter().zip(layout.dims().iter()).enumerate() {
            if d >= dim {
                return Err(Error::DimensionMismatch { expected: dim, found: d + 1 });
            }
            index += d * strides[i];
        }
        let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(layout, amps)
    }

    /// Used by kernels whose output is normalised by construction.
    pub(crate) fn from_parts(layout: SpaceLayout, amplitudes: DVector<C64>) -> Self {
        debug_assert_eq!(layout.total_dim(), amplitudes.len());
        debug_assert!((amplitudes.norm() - 1.0).abs() < 1e-8, "norm {}", amplitudes.norm());
        Self { layout, amplitudes }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Amplitude of the computational basis state with these digits.
    pub fn amplitude(&self, digits: &[usize]) -> C64 {
        let strides = self.layout.strides();
        let index: usize = digits.iter().zip(strides.iter()).map(|(d, s)| d * s).sum();
        self.amplitudes[index]
    }

    /// Same amplitudes under a different dimension guard.
    pub fn with_dim_guard(&self, guard: usize) -> Result<Self> {
        Ok(Self { layout: self.layout.with_dim_guard(guard)?, amplitudes: self.amplitudes.clone() })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.require_same_layout(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub(crate) fn require_same_layout(&self, other: &PureState) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(format!("{} vs {}", self.layout, other.layout)));
        }
        Ok(())
    }

    /// `|self⟩ ⊗ |other⟩`, with `self`'s subsystems first.
    pub fn tensor_product(&self, other: &PureState) -> Result<PureState> {
        let layout = self.layout.concat(&other.layout)?;
        let n = other.amplitudes.len();
        let amps = DVector::from_fn(layout.total_dim(), |idx, _| {
            self.amplitudes[idx / n] * other.amplitudes[idx % n]
        });
        Ok(Self::from_parts(layout, amps))
    }

    /// Distance `min_θ ‖self − e^{iθ} other‖`.
    pub fn phase_distance(&self, other: &PureState) -> Result<f64> {
        let overlap = self.inner(other)?;
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
        Ok((&self.amplitudes - &other.amplitudes * phase).norm())
    }

    /// Whether the states agree up to a global phase, within `tol` in norm.
    pub fn equals_up_to_global_phase(&self, other: &PureState, tol: f64) -> Result<bool> {
        Ok(self.phase_distance(other)? <= tol)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Free-function form of [`PureState::equals_up_to_global_phase`].
pub fn states_equal_up_to_global_phase(a: &PureState, b: &PureState, tol: f64) -> Result<bool> {
    a.equals_up_to_global_phase(b, tol)
}

#[derive(Serialize, Deserialize)]
struct StateDocument {
    layout: SpaceLayout,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateDocument {
            layout: self.layout.clone(),
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = StateDocument::deserialize(d)?;
        let amps: Vec<C64> = doc.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        PureState::new(doc.layout, amps).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn basis_product() {
        let a = PureState::single("S", vec![r(1.0), r(0.0)]).unwrap();
        let b = PureState::single("E", vec![r(1.0), r(0.0)]).unwrap();
        let ab = a.tensor_product(&b).unwrap();
        assert_eq!(ab.amplitudes().as_slice(), &[r(1.0), r(0.0), r(0.0), r(0.0)]);
        assert_eq!(ab.layout().labels().map(|l| l.as_str()).collect::<Vec<_>>(), ["S", "E"]);
    }

    #[test]
    fn plus_times_one() {
        let plus = PureState::single("S", vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)]).unwrap();
        let one = PureState::single("E", vec![r(0.0), r(1.0)]).unwrap();
        let v = plus.tensor_product(&one).unwrap();
        let want = [r(0.0), r(FRAC_1_SQRT_2), r(0.0), r(FRAC_1_SQRT_2)];
        for (a, b) in v.amplitudes().iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn label_collision_and_guard() {
        let a = PureState::single("S", vec![r(1.0), r(0.0)]).unwrap();
        assert_eq!(a.tensor_product(&a).unwrap_err(), Error::LabelCollision("S".into()));
        let big = PureState::basis(SpaceLayout::with_guard([("E", 4)], 4).unwrap(), &[0]).unwrap();
        let s = PureState::basis(SpaceLayout::new([("S", 2)]).unwrap(), &[0]).unwrap();
        assert!(matches!(s.tensor_product(&big), Err(Error::SpaceTooLarge { dim: 8, guard: 4 })));
    }

    #[test]
    fn rejects_unnormalised() {
        let l = SpaceLayout::new([("S", 2)]).unwrap();
        assert!(matches!(PureState::new(l.clone(), vec![r(1.0), r(1.0)]), Err(Error::NotNormalized { .. })));
        assert!(matches!(PureState::new(l, vec![r(1.0)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn global_phase_equality() {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        let a = PureState::new(l.clone(), vec![r(0.6), C64::new(0.0, 0.8), r(0.0), r(0.0)]).unwrap();
        let minus_a = PureState::new(l.clone(), a.amplitudes().iter().map(|z| -z).collect::<Vec<_>>()).unwrap();
        let zero = PureState::basis(l.clone(), &[0, 0]).unwrap();
        let bell = PureState::new(l, vec![r(FRAC_1_SQRT_2), r(0.0), r(0.0), r(FRAC_1_SQRT_2)]).unwrap();
        assert!(states_equal_up_to_global_phase(&a, &a, 1e-12).unwrap());
        assert!(states_equal_up_to_global_phase(&a, &minus_a, 1e-12).unwrap());
        assert!(!states_equal_up_to_global_phase(&zero, &bell, 1e-10).unwrap());
        let other = PureState::single("S", vec![r(1.0), r(0.0)]).unwrap();
        assert!(matches!(a.equals_up_to_global_phase(&other, 1e-10), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn document_round_trip() {
        let l = SpaceLayout::new([("S", 2), ("E1", 2)]).unwrap();
        let a = PureState::normalized(l, vec![C64::new(0.1, -0.3), r(0.7), C64::new(1.0 / 3.0, 0.2), r(0.0)]).unwrap();
        let text = a.to_json().unwrap();
        assert!(text.contains("\"layout\"") && text.contains("\"amplitudes\""));
        let back = PureState::from_json(&text).unwrap();
        for (x, y) in a.amplitudes().iter().zip(back.amplitudes().iter()) {
            assert!((x - y).norm() <= 1e-15);
        }
    }
}
