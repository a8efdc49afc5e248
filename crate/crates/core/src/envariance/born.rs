//! Equal-amplitude probabilities, fine-graining and counting.
//!
//! A Schmidt state `Σ_k λ_k |s_k⟩|ε_k⟩` with `λ_k² = m_k / M` is turned into
//! `M` equal-amplitude terms: a unitary on the environment maps each `|ε_k⟩`
//! onto the uniform superposition over a block of `m_k` consecutive basis
//! states, and a controlled shift copies the environment index into an
//! ancilla. Counting terms then gives `p_k = m_k / M`.

use serde::Serialize;

use super::fresh_label;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::tensor_core::{PureState, SchmidtDecomposition, SpaceLayout, SubsystemLabel};

/// Default largest denominator tried when looking for `m_k / M`.
pub const DEFAULT_M_CAP: u64 = 10_000;

/// Coefficient spread tolerated by [`equal_amplitude_probabilities`].
const EQUAL_TOLERANCE: f64 = 1e-10;

fn equal_amplitude_check(sd: &SchmidtDecomposition, tol: f64) -> Result<Vec<f64>> {
    let c = sd.coefficients();
    let spread = c.first().unwrap_or(&0.0) - c.last().unwrap_or(&0.0);
    if spread > tol {
        return Err(Error::NotEqualAmplitude { spread });
    }
    Ok(vec![1.0 / c.len() as f64; c.len()])
}

/// `1/N` for each of the `N` Schmidt terms of an equal-amplitude state.
pub fn equal_amplitude_probabilities<L: AsRef<str>>(state: &PureState, system: &[L]) -> Result<Vec<f64>> {
    equal_amplitude_check(&state.schmidt_decompose(system)?, EQUAL_TOLERANCE)
}

/// Probability that the outcome is any of `indices` (Schmidt term indices,
/// repeats counted once) in an equal-amplitude state: `n / N`.
pub fn equal_amplitude_subset_probability<L: AsRef<str>>(
    state: &PureState,
    system: &[L],
    indices: &[usize],
) -> Result<f64> {
    let p = equal_amplitude_probabilities(state, system)?;
    let mut seen = vec![false; p.len()];
    for &i in indices {
        if i >= p.len() {
            return Err(Error::BadIndex { index: i, terms: p.len() });
        }
        seen[i] = true;
    }
    Ok(seen.iter().filter(|s| **s).count() as f64 / p.len() as f64)
}

/// How to split each Schmidt term into equal-amplitude pieces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FineGrainingPlan {
    pub system: Vec<SubsystemLabel>,
    /// `m_k`, in the order of the Schmidt terms (descending coefficient).
    pub counts: Vec<u64>,
    /// `M = Σ m_k`.
    pub total: u64,
    pub ancilla_label: SubsystemLabel,
    pub ancilla_dimension: usize,
    /// Allowed `|λ_k² − m_k / M|`.
    pub tolerance: f64,
}

impl FineGrainingPlan {
    pub fn new<L: AsRef<str>>(system: &[L], counts: Vec<u64>, ancilla: &str) -> Result<Self> {
        if counts.is_empty() || counts.contains(&0) {
            return Err(Error::PlanMismatch(format!("counts must be positive, got {counts:?}")));
        }
        let total: u64 = counts.iter().sum();
        let system = system.iter().map(|l| SubsystemLabel::new(l.as_ref())).collect::<Result<Vec<_>>>()?;
        let ancilla_label = SubsystemLabel::new(ancilla)?;
        if system.contains(&ancilla_label) {
            return Err(Error::LabelCollision(ancilla.to_string()));
        }
        Ok(Self { system, counts, total, ancilla_label, ancilla_dimension: total as usize, tolerance: 1e-10 })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_ancilla_dimension(mut self, dim: usize) -> Self {
        self.ancilla_dimension = dim;
        self
    }
}

/// Rewrites `state` as `M^{-1/2} Σ_j |s_{k(j)}⟩|j⟩_E|j⟩_A` using a unitary on
/// the environment followed by a controlled shift onto the ancilla.
///
/// The environment is every subsystem outside the system and the ancilla;
/// the ancilla is appended in `|0⟩` when the layout lacks it.
pub fn fine_grain(state: &PureState, plan: &FineGrainingPlan) -> Result<PureState> {
    let m = plan.total as usize;
    let anc = plan.ancilla_label.as_str();
    if plan.ancilla_dimension < m {
        return Err(Error::AncillaTooSmall { needed: m, found: plan.ancilla_dimension });
    }
    let state = if state.layout().contains(anc) {
        let found = state.layout().dim_of(anc)?;
        if found < m {
            return Err(Error::AncillaTooSmall { needed: m, found });
        }
        state.require_ready(anc)?;
        state.clone()
    } else {
        let fresh = PureState::basis(
            SpaceLayout::with_guard([(anc, plan.ancilla_dimension)], state.layout().guard())?,
            &[0],
        )?;
        state.tensor_product(&fresh)?
    };
    let layout = state.layout().clone();
    let sys_pos = layout.positions(&plan.system)?;
    let anc_pos = layout.position(anc)?;
    let env_pos: Vec<usize> = (0..layout.len()).filter(|p| *p != anc_pos && !sys_pos.contains(p)).collect();
    let env_dim = if env_pos.is_empty() { 0 } else { layout.dim_at(&env_pos) };
    if env_dim < m {
        return Err(Error::EnvironmentTooSmall { needed: m, found: env_dim });
    }

    let sd = state.schmidt_decompose(&plan.system)?;
    if sd.len() != plan.counts.len() {
        return Err(Error::PlanMismatch(format!("{} Schmidt terms, {} counts", sd.len(), plan.counts.len())));
    }
    for (k, (lam, mk)) in sd.coefficients().iter().zip(&plan.counts).enumerate() {
        let gap = (lam * lam - *mk as f64 / m as f64).abs();
        if gap > plan.tolerance {
            return Err(Error::PlanMismatch(format!("term {k}: |λ² − m/M| = {gap:e}")));
        }
    }

    let sys_off = layout.offsets(&sys_pos);
    let env_off = layout.offsets(&env_pos);
    let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
    let mut start = 0;
    for ((lam, s), mk) in sd.coefficients().iter().zip(sd.left_basis()).zip(&plan.counts) {
        let mk = *mk as usize;
        let weight = lam / (mk as f64).sqrt();
        for (i, si) in s.iter().enumerate() {
            if *si == C64::new(0.0, 0.0) {
                continue;
            }
            for off in &env_off[start..start + mk] {
                amps[sys_off[i] + off] += si * weight;
            }
        }
        start += mk;
    }
    let aligned = PureState::normalized(layout.clone(), amps)?;
    let env_labels: Vec<&str> = env_pos.iter().map(|p| layout.subsystems()[*p].0.as_str()).collect();
    aligned.controlled_shift(&env_labels, anc)
}

/// Outcome of the counting pipeline for one state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BornCounting {
    /// Terms of the fine-grained state attributed to each outcome.
    pub counts: Vec<u64>,
    pub total: u64,
    /// `counts[k] / total`.
    pub probabilities: Vec<f64>,
    /// `λ_k²`, for comparison.
    pub amplitude_squared: Vec<f64>,
}

/// Smallest `M ≤ cap` with positive counts `m_k = round(p_k M)` summing to
/// `M` and `|p_k − m_k/M| ≤ tol` for every `k`.
pub fn commensurate_counts(p: &[f64], tol: f64, cap: u64) -> Option<(Vec<u64>, u64)> {
    let n = p.len() as u64;
    (n.max(1)..=cap).find_map(|m| {
        let counts: Vec<u64> = p.iter().map(|x| (x * m as f64).round() as u64).collect();
        let fits = counts.iter().all(|c| *c >= 1)
            && counts.iter().sum::<u64>() == m
            && p.iter().zip(&counts).all(|(x, c)| (x - *c as f64 / m as f64).abs() <= tol);
        fits.then_some((counts, m))
    })
}

/// Probabilities of the Schmidt outcomes of `system`, in Schmidt order,
/// obtained by fine-graining and counting equal-amplitude terms.
pub fn born_probabilities<L: AsRef<str>>(state: &PureState, system: &[L], tolerance: f64) -> Result<Vec<f64>> {
    born_probabilities_with_cap(state, system, tolerance, DEFAULT_M_CAP)
}

pub fn born_probabilities_with_cap<L: AsRef<str>>(
    state: &PureState,
    system: &[L],
    tolerance: f64,
    cap: u64,
) -> Result<Vec<f64>> {
    Ok(born_counting(state, system, tolerance, cap)?.probabilities)
}

/// The full counting pipeline: find `M ≤ cap` with `|λ_k² − m_k/M| ≤
/// tolerance`, enlarge the environment if it has fewer than `M` states,
/// fine-grain, confirm the `M` terms have equal amplitudes, and count how
/// many land on each `|s_k⟩`.
pub fn born_counting<L: AsRef<str>>(state: &PureState, system: &[L], tolerance: f64, cap: u64) -> Result<BornCounting> {
    let sd = state.schmidt_decompose(system)?;
    let p: Vec<f64> = sd.coefficients().iter().map(|l| l * l).collect();
    let (counts, m) = commensurate_counts(&p, tolerance, cap).ok_or(Error::UseBoundsInstead { cap })?;
    let mu = m as usize;

    let layout = state.layout();
    let sys_pos = layout.positions(system)?;
    let env_pos = layout.complement(&sys_pos);
    let env_dim = layout.dim_at(&env_pos);
    let mut work = state.clone();
    if env_dim < mu {
        let ext = fresh_label(layout, "ext");
        let fresh = PureState::basis(SpaceLayout::with_guard([(ext.as_str(), mu.div_ceil(env_dim))], layout.guard())?, &[0])?;
        work = work.tensor_product(&fresh)?;
    }
    let anc = fresh_label(work.layout(), "anc");
    let plan = FineGrainingPlan::new(system, counts, &anc)?.with_tolerance(tolerance);
    let fine = fine_grain(&work, &plan)?;

    let left: Vec<String> = fine.layout().labels().filter(|l| l.as_str() != anc).map(|l| l.to_string()).collect();
    let terms = fine.schmidt_decompose(&left)?;
    if terms.len() != mu {
        return Err(Error::PlanMismatch(format!("{} fine-grained terms, expected {m}", terms.len())));
    }
    // λ_k/√m_k differs from 1/√M by about tolerance·√M/m_k
    equal_amplitude_check(&terms, 1e-10 + tolerance * (m as f64).sqrt())?;

    let outcome_basis = linalg::complete_basis(sd.left_basis(), sd.left_dim());
    let left_layout = terms.left_layout();
    let mut weight = vec![0.0; sd.len()];
    for v in terms.left_basis() {
        let term = PureState::new(left_layout.clone(), v.as_slice().to_vec())?;
        for (k, b) in term.relative_states(system, &outcome_basis)?.iter().take(sd.len()).enumerate() {
            weight[k] += b.coefficient.norm_sqr();
        }
    }
    let counts: Vec<u64> = weight.iter().map(|w| w.round() as u64).collect();
    if counts.iter().sum::<u64>() != m {
        return Err(Error::PlanMismatch(format!("term counts {counts:?} do not add up to {m}")));
    }
    let probabilities: Vec<f64> = counts.iter().map(|c| *c as f64 / m as f64).collect();
    for (k, (pk, ak)) in probabilities.iter().zip(&p).enumerate() {
        if (pk - ak).abs() > tolerance + 1.0 / m as f64 {
            return Err(Error::PlanMismatch(format!("outcome {k}: counted {pk}, amplitude squared {ak}")));
        }
    }
    Ok(BornCounting { counts, total: m, probabilities, amplitude_squared: p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    /// Σ_k a_k |k⟩_S |k⟩_E on d-dimensional S and E.
    fn diagonal_state(a: &[f64]) -> PureState {
        let d = a.len();
        let l = SpaceLayout::new([("S", d), ("E", d)]).unwrap();
        let mut amps = vec![r(0.0); d * d];
        for (k, x) in a.iter().enumerate() {
            amps[k * d + k] = r(*x);
        }
        PureState::new(l, amps).unwrap()
    }

    /// (√2 |0⟩|+⟩ + |2⟩|2⟩)/√3 on qutrits.
    fn commensurate_example() -> PureState {
        let l = SpaceLayout::new([("S", 3), ("E", 3)]).unwrap();
        let mut amps = vec![r(0.0); 9];
        let s = 1.0 / 3f64.sqrt();
        amps[0] = r(s); // √2 · (1/√2) / √3
        amps[1] = r(s);
        amps[8] = r(s);
        PureState::new(l, amps).unwrap()
    }

    #[test]
    fn equal_amplitudes() {
        let p = equal_amplitude_probabilities(&diagonal_state(&[0.5; 4]), &["S"]).unwrap();
        assert_eq!(p, vec![0.25; 4]);
        let one = PureState::basis(SpaceLayout::new([("S", 2), ("E", 2)]).unwrap(), &[1, 1]).unwrap();
        assert_eq!(equal_amplitude_probabilities(&one, &["S"]).unwrap(), vec![1.0]);
        let s3 = 1.0 / 3f64.sqrt();
        let three = diagonal_state(&[s3, s3, s3]);
        let p = equal_amplitude_subset_probability(&three, &["S"], &[1, 2]).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            equal_amplitude_subset_probability(&three, &["S"], &[3]),
            Err(Error::BadIndex { index: 3, terms: 3 })
        ));
        assert!(matches!(
            equal_amplitude_probabilities(&diagonal_state(&[0.6, 0.8]), &["S"]),
            Err(Error::NotEqualAmplitude { .. })
        ));
    }

    #[test]
    fn fine_grains_commensurate_example() {
        let psi = commensurate_example();
        let plan = FineGrainingPlan::new(&["S"], vec![2, 1], "A").unwrap();
        let out = fine_grain(&psi, &plan).unwrap();
        // (|0⟩|0⟩|0′⟩ + |0⟩|1⟩|1′⟩ + |2⟩|2⟩|2′⟩)/√3
        let s = 1.0 / 3f64.sqrt();
        for (digits, amp) in [([0, 0, 0], s), ([0, 1, 1], s), ([2, 2, 2], s)] {
            assert!((out.amplitude(&digits) - r(amp)).norm() < 1e-12, "{digits:?}");
        }
        assert!((out.norm() - 1.0).abs() < 1e-12);
        let before = psi.partial_trace(&["S"]).unwrap();
        assert!(before.max_abs_diff(&out.partial_trace(&["S"]).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn fine_grain_equal_pair_has_two_terms() {
        let psi = diagonal_state(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let out = fine_grain(&psi, &FineGrainingPlan::new(&["S"], vec![1, 1], "A").unwrap()).unwrap();
        let nonzero = out.amplitudes().iter().filter(|z| z.norm() > 1e-12).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn fine_grain_errors() {
        let psi = commensurate_example();
        let small = FineGrainingPlan::new(&["S"], vec![2, 1], "A").unwrap().with_ancilla_dimension(2);
        assert_eq!(fine_grain(&psi, &small).unwrap_err(), Error::AncillaTooSmall { needed: 3, found: 2 });
        let wrong = FineGrainingPlan::new(&["S"], vec![1, 1], "A").unwrap();
        assert!(matches!(fine_grain(&psi, &wrong), Err(Error::PlanMismatch(_))));
        let wide = FineGrainingPlan::new(&["S"], vec![4, 2], "A").unwrap();
        assert_eq!(fine_grain(&psi, &wide).unwrap_err(), Error::EnvironmentTooSmall { needed: 6, found: 3 });
    }

    #[test]
    fn born_examples() {
        let p = born_probabilities(&commensurate_example(), &["S"], 1e-10).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);

        let p = born_probabilities(&diagonal_state(&[0.5; 4]), &["S"], 1e-10).unwrap();
        assert_eq!(p, vec![0.25; 4]);

        let a = [(3.0f64 / 8.0).sqrt(), (1.0f64 / 8.0).sqrt(), (4.0f64 / 8.0).sqrt()];
        let c = born_counting(&diagonal_state(&a), &["S"], 1e-10, DEFAULT_M_CAP).unwrap();
        // Schmidt order is descending: 4/8, 3/8, 1/8
        assert_eq!(c.total, 8);
        assert_eq!(c.counts, vec![4, 3, 1]);
        assert_eq!(c.probabilities, vec![0.5, 0.375, 0.125]);
    }

    #[test]
    fn incommensurate_needs_bounds() {
        let (c, s) = (1f64.cos(), 1f64.sin());
        let err = born_probabilities_with_cap(&diagonal_state(&[c, s]), &["S"], 1e-12, 1000).unwrap_err();
        assert_eq!(err, Error::UseBoundsInstead { cap: 1000 });
    }
}
