//! Labelled subsystems and the index convention shared by every state and
//! operator in the crate.
//!
//! A [`SpaceLayout`] is an ordered list of `(label, dimension)` pairs. The
//! leftmost subsystem is the slowest-varying index of the flattened amplitude
//! vector (row-major order), so for a layout `[("S", 2), ("A", 3)]` the
//! amplitude of `|s⟩|a⟩` lives at index `3 * s + a`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest total dimension a layout may have unless a different guard is
/// requested explicitly.
pub const DEFAULT_DIM_GUARD: usize = 1 << 20;

/// Name of one tensor factor, e.g. `"S"`, `"A"`, `"E3"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SubsystemLabel(String);

impl SubsystemLabel {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::EmptyLabel);
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SubsystemLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::new(s)
    }
}

impl From<SubsystemLabel> for String {
    fn from(l: SubsystemLabel) -> String {
        l.0
    }
}

impl AsRef<str> for SubsystemLabel {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubsystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct LayoutEntry {
    label: SubsystemLabel,
    dim: usize,
}

/// Ordered list of labelled subsystems.
///
/// Equality compares only the subsystems; the dimension guard is a resource
/// limit, not part of the space.
#[derive(Clone, Debug)]
pub struct SpaceLayout {
    subsystems: Vec<(SubsystemLabel, usize)>,
    guard: usize,
}

impl PartialEq for SpaceLayout {
    fn eq(&self, other: &Self) -> bool {
        self.subsystems == other.subsystems
    }
}

impl SpaceLayout {
    /// Builds a layout under [`DEFAULT_DIM_GUARD`].
    pub fn new<L: AsRef<str>>(subsystems: impl IntoIterator<Item = (L, usize)>) -> Result<Self> {
        Self::with_guard(subsystems, DEFAULT_DIM_GUARD)
    }

    pub fn with_guard<L: AsRef<str>>(
        subsystems: impl IntoIterator<Item = (L, usize)>,
        guard: usize,
    ) -> Result<Self> {
        let subsystems = subsystems
            .into_iter()
            .map(|(l, d)| Ok((SubsystemLabel::new(l.as_ref())?, d)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(subsystems, guard)
    }

    pub(crate) fn from_parts(subsystems: Vec<(SubsystemLabel, usize)>, guard: usize) -> Result<Self> {
        let mut total: u128 = 1;
        for (i, (label, dim)) in subsystems.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::ZeroDimension { label: label.to_string() });
            }
            if subsystems[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::LabelCollision(label.to_string()));
            }
            total = total.saturating_mul(*dim as u128);
        }
        if total > guard as u128 {
            return Err(Error::SpaceTooLarge { dim: total, guard });
        }
        Ok(Self { subsystems, guard })
    }

    /// Same subsystems under a different dimension guard.
    pub fn with_dim_guard(&self, guard: usize) -> Result<Self> {
        Self::from_parts(self.subsystems.clone(), guard)
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|(_, d)| d).product()
    }

    pub fn labels(&self) -> impl Iterator<Item = &SubsystemLabel> + '_ {
        self.subsystems.iter().map(|(l, _)| l)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|(_, d)| *d).collect()
    }

    pub fn subsystems(&self) -> &[(SubsystemLabel, usize)] {
        &self.subsystems
    }

    pub fn contains(&self, label: &str) -> bool {
        self.subsystems.iter().any(|(l, _)| l.as_str() == label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|(l, _)| l.as_str() == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.subsystems[self.position(label)?].1)
    }

    /// Positions of `labels`, sorted into layout order. Duplicates are an error.
    pub fn positions<L: AsRef<str>>(&self, labels: &[L]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l.as_ref())?;
            if out.contains(&p) {
                return Err(Error::LabelCollision(l.as_ref().to_string()));
            }
            out.push(p);
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Positions not in `positions`, in layout order.
    pub(crate) fn complement(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|p| !positions.contains(p)).collect()
    }

    /// Row-major strides: `stride[i]` is the index step of subsystem `i`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for i in (0..self.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.subsystems[i + 1].1;
        }
        strides
    }

    /// Layout restricted to `positions` (which must be in layout order).
    pub(crate) fn sub_layout(&self, positions: &[usize]) -> SpaceLayout {
        SpaceLayout {
            subsystems: positions.iter().map(|&p| self.subsystems[p].clone()).collect(),
            guard: self.guard,
        }
    }

    /// Product dimension of the subsystems at `positions`.
    pub(crate) fn dim_at(&self, positions: &[usize]) -> usize {
        positions.iter().map(|&p| self.subsystems[p].1).product()
    }

    /// Concatenation `self` then `other`; the tighter of the two guards applies.
    pub fn concat(&self, other: &SpaceLayout) -> Result<SpaceLayout> {
        let subsystems = self.subsystems.iter().chain(other.subsystems.iter()).cloned().collect();
        Self::from_parts(subsystems, self.guard.min(other.guard))
    }

    /// Flat offsets of every configuration of the subsystems at `positions`,
    /// enumerated row-major over those subsystems (first position slowest).
    pub(crate) fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &p in positions {
            let (dim, stride) = (self.subsystems[p].1, strides[p]);
            out = out
                .iter()
                .flat_map(|&base| (0..dim).map(move |d| base + d * stride))
                .collect();
        }
        out
    }

    /// Digit of subsystem `position` inside the flat index `index`.
    pub(crate) fn digit(&self, strides: &[usize], index: usize, position: usize) -> usize {
        (index / strides[position]) % self.subsystems[position].1
    }
}

impl Serialize for SpaceLayout {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<LayoutEntry> = self
            .subsystems
            .iter()
            .map(|(label, dim)| LayoutEntry { label: label.clone(), dim: *dim })
            .collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpaceLayout {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<LayoutEntry>::deserialize(d)?;
        SpaceLayout::from_parts(
            entries.into_iter().map(|e| (e.label, e.dim)).collect(),
            DEFAULT_DIM_GUARD,
        )
        .map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for SpaceLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.subsystems.iter().map(|(l, d)| format!("{l}:{d}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_are_row_major() {
        let l = SpaceLayout::new([("S", 2), ("A", 3), ("E", 4)]).unwrap();
        assert_eq!(l.strides(), vec![12, 4, 1]);
        assert_eq!(l.total_dim(), 24);
        assert_eq!(l.offsets(&[1]), vec![0, 4, 8]);
        assert_eq!(l.offsets(&[0, 2]), vec![0, 1, 2, 3, 12, 13, 14, 15]);
    }

    #[test]
    fn rejects_bad_layouts() {
        assert_eq!(SpaceLayout::new([("", 2)]).unwrap_err(), Error::EmptyLabel);
        assert!(matches!(SpaceLayout::new([("S", 0)]), Err(Error::ZeroDimension { .. })));
        assert_eq!(
            SpaceLayout::new([("S", 2), ("S", 2)]).unwrap_err(),
            Error::LabelCollision("S".into())
        );
        assert!(matches!(
            SpaceLayout::with_guard([("S", 4), ("E", 4)], 8),
            Err(Error::SpaceTooLarge { dim: 16, guard: 8 })
        ));
    }

    #[test]
    fn positions_sort_into_layout_order() {
        let l = SpaceLayout::new([("S", 2), ("A", 2), ("E", 2)]).unwrap();
        assert_eq!(l.positions(&["E", "S"]).unwrap(), vec![0, 2]);
        assert_eq!(l.positions(&["X"]).unwrap_err(), Error::UnknownLabel("X".into()));
        assert_eq!(l.complement(&[0, 2]), vec![1]);
    }

    #[test]
    fn json_shape() {
        let l = SpaceLayout::new([("S", 2), ("E1", 3)]).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        assert_eq!(s, r#"[{"label":"S","dim":2},{"label":"E1","dim":3}]"#);
        let back: SpaceLayout = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }
}
