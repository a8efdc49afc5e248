//! Rational brackets for squared amplitudes that no small denominator
//! represents exactly.
//!
//! For a denominator `M`, each `λ_k²` lies between `⌊λ_k² M⌋ / M` and
//! `⌈λ_k² M⌉ / M`. Each endpoint is the probability of outcome `k` in a
//! comparison state on the same Schmidt frames whose squared coefficients
//! are all multiples of `1/M`, so the counting argument applies to it.
//! Continuity of probabilities in the amplitudes then squeezes `p_k` into
//! an interval of width at most `1/M`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::tensor_core::{PureState, SchmidtDecomposition};

/// `x` within this of an integer counts as that integer.
const SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbabilityBound {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub m_used: u64,
    /// `⌊λ_k² M⌋` and `⌈λ_k² M⌉`.
    pub lower_counts: Vec<u64>,
    pub upper_counts: Vec<u64>,
    /// `λ_k²`, in Schmidt order.
    pub amplitude_squared: Vec<f64>,
}

impl ProbabilityBound {
    pub fn widths(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }

    /// Whether every `λ_k²` lies in its interval (endpoints snapped to an
    /// integer count are allowed the snapping slack).
    pub fn contains_all(&self) -> bool {
        let slack = SNAP / self.m_used as f64;
        self.amplitude_squared
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(p, (l, u))| l - slack <= *p && *p <= u + slack)
    }

    /// Counts `c_j` (summing to `M`) of the comparison state realising the
    /// given endpoint for outcome `k`: `c_k` is the endpoint count and the
    /// remaining counts go to the other terms by largest remainder.
    pub fn comparison_counts(&self, k: usize, endpoint: Endpoint) -> Result<Vec<u64>> {
        let n = self.lower.len();
        if k >= n {
            return Err(Error::BadIndex { index: k, terms: n });
        }
        let ck = match endpoint {
            Endpoint::Lower => self.lower_counts[k],
            Endpoint::Upper => self.upper_counts[k],
        };
        let m = self.m_used;
        let mut counts = self.lower_counts.clone();
        counts[k] = ck;
        let mut left = m.saturating_sub(counts.iter().sum::<u64>());
        let mut order: Vec<usize> = (0..n).filter(|j| *j != k).collect();
        let frac = |j: usize| self.amplitude_squared[j] * m as f64 - self.lower_counts[j] as f64;
        order.sort_by(|a, b| frac(*b).total_cmp(&frac(*a)));
        for j in order.into_iter().cycle() {
            if left == 0 {
                break;
            }
            counts[j] += 1;
            left -= 1;
        }
        Ok(counts)
    }
}

/// `⌊λ_k² M⌋/M ≤ λ_k² ≤ ⌈λ_k² M⌉/M` for each Schmidt outcome of `system`.
pub fn rational_bounds<L: AsRef<str>>(state: &PureState, system: &[L], m: u64) -> Result<ProbabilityBound> {
    let sd = state.schmidt_decompose(system)?;
    if (m as usize) < sd.len() || m == 0 {
        return Err(Error::MTooSmall { m, terms: sd.len() });
    }
    let p: Vec<f64> = sd.coefficients().iter().map(|l| l * l).collect();
    let mf = m as f64;
    let mut lower_counts = Vec::with_capacity(p.len());
    let mut upper_counts = Vec::with_capacity(p.len());
    for x in &p {
        let scaled = x * mf;
        let nearest = scaled.round();
        let (lo, hi) = if (scaled - nearest).abs() <= SNAP { (nearest, nearest) } else { (scaled.floor(), scaled.ceil()) };
        lower_counts.push(lo as u64);
        upper_counts.push(hi as u64);
    }
    Ok(ProbabilityBound {
        lower: lower_counts.iter().map(|c| *c as f64 / mf).collect(),
        upper: upper_counts.iter().map(|c| *c as f64 / mf).collect(),
        m_used: m,
        lower_counts,
        upper_counts,
        amplitude_squared: p,
    })
}

/// `Σ_k √(c_k / M) |s_k⟩|ε_k⟩` on the Schmidt frames of `sd`.
pub fn comparison_state(sd: &SchmidtDecomposition, counts: &[u64]) -> Result<PureState> {
    let m: u64 = counts.iter().sum();
    if m == 0 {
        return Err(Error::MTooSmall { m, terms: sd.len() });
    }
    let c: Vec<C64> = counts.iter().map(|c| C64::new((*c as f64 / m as f64).sqrt(), 0.0)).collect();
    sd.with_coefficients(&c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_core::SpaceLayout;

    fn cos_sin_state() -> PureState {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        PureState::new(l, vec![C64::new(1f64.cos(), 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1f64.sin(), 0.0)])
            .unwrap()
    }

    #[test]
    fn brackets_cos_squared_one() {
        let b = rational_bounds(&cos_sin_state(), &["S"], 1000).unwrap();
        // Schmidt order puts sin²(1) ≈ 0.708 first
        assert_eq!((b.lower[1], b.upper[1]), (0.291, 0.292));
        assert!(b.contains_all());
        assert!(b.max_width() <= 2.0 / 1000.0);
        let lo: f64 = b.lower.iter().sum();
        let hi: f64 = b.upper.iter().sum();
        assert!(lo <= 1.0 && 1.0 <= hi);
    }

    #[test]
    fn exact_rationals_have_zero_width() {
        let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
        let psi =
            PureState::new(l, vec![C64::new(0.75f64.sqrt(), 0.0), 0.0.into(), 0.0.into(), C64::new(0.5, 0.0)]).unwrap();
        let b = rational_bounds(&psi, &["S"], 4).unwrap();
        assert_eq!(b.lower, b.upper);
        assert_eq!(b.lower, vec![0.75, 0.25]);
    }

    #[test]
    fn widths_shrink_with_m() {
        for m in [100, 1000, 10_000] {
            let b = rational_bounds(&cos_sin_state(), &["S"], m).unwrap();
            assert!(b.max_width() <= 2.0 / m as f64);
            assert!(b.contains_all());
        }
        assert_eq!(
            rational_bounds(&cos_sin_state(), &["S"], 1).unwrap_err(),
            Error::MTooSmall { m: 1, terms: 2 }
        );
    }

    #[test]
    fn comparison_states_realise_endpoints() {
        let psi = cos_sin_state();
        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        let b = rational_bounds(&psi, &["S"], 1000).unwrap();
        for k in 0..2 {
            for (e, target) in [(Endpoint::Lower, b.lower[k]), (Endpoint::Upper, b.upper[k])] {
                let counts = b.comparison_counts(k, e).unwrap();
                assert_eq!(counts.iter().sum::<u64>(), 1000);
                let phi = comparison_state(&sd, &counts).unwrap();
                // weight of the k-th product term |s_k⟩|ε_k⟩ of the original frames
                let mut unit = vec![C64::new(0.0, 0.0); 2];
                unit[k] = C64::new(1.0, 0.0);
                let term = sd.with_coefficients(&unit).unwrap();
                let weight = term.inner(&phi).unwrap().norm_sqr();
                assert!((weight - target).abs() < 1e-12, "k={k} {e:?}");
            }
        }
    }
}
