//! The measurement chain as circuits of controlled shifts: a system is
//! pre-measured by an apparatus, the apparatus pointer is copied into one
//! or many environment subsystems, environment fragments can be copied on
//! into a distant environment, and an observer's memory records the system.
//!
//! Every operation is a permutation of basis states (or, for imperfect
//! records, a controlled preparation on ready subsystems), so the global
//! state stays pure and normalised. Ready subsystems sit in `|0⟩`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::tensor_core::{PureState, SpaceLayout, SubsystemLabel, NORM_TOLERANCE};

/// Probability below which a memory outcome has no conditional row.
pub const UNDEFINED_ROW: f64 = 1e-12;

/// A system prepared as `Σ_k a_k |s_k⟩` together with the quality of the
/// environment records its pointer will leave.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchSpec {
    pub system_label: SubsystemLabel,
    pub pointer_dimension: usize,
    pub amplitudes: Vec<C64>,
    /// `⟨e_k|e_l⟩` for `k ≠ l`; 0 gives perfect records.
    pub record_overlap: f64,
}

impl BranchSpec {
    pub fn new(system: &str, amplitudes: Vec<C64>, record_overlap: f64) -> Result<Self> {
        let d = amplitudes.len();
        if d < 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: d });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        if !(0.0..=1.0).contains(&record_overlap) {
            return Err(Error::BadOverlap(record_overlap));
        }
        Ok(Self { system_label: SubsystemLabel::new(system)?, pointer_dimension: d, amplitudes, record_overlap })
    }

    /// The system in `Σ_k a_k |k⟩` followed by ready subsystems of the
    /// pointer dimension for each label in `ready` (apparatus, environment,
    /// memory, ...).
    pub fn initial_state<L: AsRef<str>>(&self, ready: &[L]) -> Result<PureState> {
        self.initial_state_with_guard(ready, crate::tensor_core::DEFAULT_DIM_GUARD)
    }

    pub fn initial_state_with_guard<L: AsRef<str>>(&self, ready: &[L], guard: usize) -> Result<PureState> {
        let d = self.pointer_dimension;
        let subsystems = std::iter::once((self.system_label.as_str(), d)).chain(ready.iter().map(|l| (l.as_ref(), d)));
        let layout = SpaceLayout::with_guard(subsystems, guard)?;
        let stride = layout.total_dim() / d;
        let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
        for (k, a) in self.amplitudes.iter().enumerate() {
            amps[k * stride] = *a;
        }
        PureState::new(layout, amps)
    }
}

/// Unit vectors `e_0, …, e_{d−1}` in `C^dim` with `⟨e_k|e_l⟩ = overlap`
/// for `k ≠ l`, as rows of the Cholesky factor of the Gram matrix
/// `(1 − c)I + cJ`. `e_0 = |0⟩` always, and overlap 0 gives the
/// computational basis.
pub fn record_states(d: usize, dim: usize, overlap: f64) -> Result<Vec<DVector<C64>>> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::BadOverlap(overlap));
    }
    if dim < d {
        return Err(Error::DimensionMismatch { expected: d, found: dim });
    }
    let gram = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { overlap });
    // hand-rolled so that the singular overlap = 1 case still factors
    let mut l = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let s: f64 = (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum();
        let pivot = (gram[(j, j)] - s).max(0.0).sqrt();
        l[(j, j)] = pivot;
        for i in j + 1..d {
            let s: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            l[(i, j)] = if pivot > 1e-15 { (gram[(i, j)] - s) / pivot } else { 0.0 };
        }
    }
    Ok((0..d)
        .map(|i| {
            let mut v = DVector::<C64>::zeros(dim);
            for k in 0..=i {
                v[k] = C64::new(l[(i, k)], 0.0);
            }
            let n = v.norm();
            v / C64::new(n, 0.0)
        })
        .collect())
}

fn check_recorder(state: &PureState, control: &str, target: &str) -> Result<()> {
    let dc = state.layout().dim_of(control)?;
    let dt = state.layout().dim_of(target)?;
    if dt < dc {
        return Err(Error::DimensionMismatch { expected: dc, found: dt });
    }
    state.require_ready(target)
}

/// `|s_k⟩|A_0⟩ → |s_k⟩|A_k⟩`.
pub fn premeasure(state: &PureState, system: &str, apparatus: &str) -> Result<PureState> {
    check_recorder(state, system, apparatus)?;
    state.controlled_shift(&[system], apparatus)
}

/// `|A_k⟩|e_0⟩ → |A_k⟩|e_k⟩` with orthonormal records.
pub fn entangle_environment(state: &PureState, pointer: &str, environment: &str) -> Result<PureState> {
    check_recorder(state, pointer, environment)?;
    state.controlled_shift(&[pointer], environment)
}

/// Copies the pointer into every listed environment subsystem, with record
/// states at the given mutual overlap.
pub fn broadcast_environment<L: AsRef<str>>(
    state: &PureState,
    pointer: &str,
    environments: &[L],
    overlap: f64,
) -> Result<PureState> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::BadOverlap(overlap));
    }
    let d = state.layout().dim_of(pointer)?;
    for e in environments {
        check_recorder(state, pointer, e.as_ref())?;
    }
    let mut out = state.clone();
    for e in environments {
        let e = e.as_ref();
        out = if overlap == 0.0 {
            out.controlled_shift(&[pointer], e)?
        } else {
            let records = record_states(d, out.layout().dim_of(e)?, overlap)?;
            out.controlled_record(&[pointer], e, &records)?
        };
    }
    Ok(out)
}

/// Copies each immediate environment subsystem into its distant partner,
/// one pair at a time.
pub fn cascade_environment<A: AsRef<str>, B: AsRef<str>>(
    state: &PureState,
    immediate: &[A],
    distant: &[B],
) -> Result<PureState> {
    if immediate.len() != distant.len() {
        return Err(Error::LengthMismatch { expected: immediate.len(), found: distant.len() });
    }
    for (i, d) in immediate.iter().zip(distant) {
        check_recorder(state, i.as_ref(), d.as_ref())?;
    }
    let mut out = state.clone();
    for (i, d) in immediate.iter().zip(distant) {
        out = out.controlled_shift(&[i.as_ref()], d.as_ref())?;
    }
    Ok(out)
}

/// An observer's memory `μ` records the system's pointer state.
pub fn observer_record(state: &PureState, system: &str, memory: &str) -> Result<PureState> {
    check_recorder(state, system, memory)?;
    state.controlled_shift(&[system], memory)
}

/// Pointer-basis statistics of a system as seen from an observer's memory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObserverOutcomeTable {
    /// `p(s_l)`.
    pub prior: Vec<f64>,
    /// Row `k` is `p(s_l | μ_k)`, or `None` when `p(μ_k) < UNDEFINED_ROW`.
    pub conditional: Vec<Option<Vec<f64>>>,
}

impl ObserverOutcomeTable {
    /// Header `row,s_0,…`, then the prior, then one row per memory outcome.
    pub fn to_csv(&self) -> String {
        let cols: Vec<String> = (0..self.prior.len()).map(|l| format!("s_{l}")).collect();
        let mut out = format!("row,{}\n", cols.join(","));
        let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        out.push_str(&format!("prior,{}\n", join(&self.prior)));
        for (k, row) in self.conditional.iter().enumerate() {
            match row {
                Some(r) => out.push_str(&format!("mu_{k},{}\n", join(r))),
                None => out.push_str(&format!("mu_{k},{}\n", vec!["undefined"; self.prior.len()].join(","))),
            }
        }
        out
    }
}

/// Joint memory/system distribution in the pointer bases, turned into a
/// prior and per-outcome conditionals.
pub fn conditional_probability(state: &PureState, memory: &str, system: &str) -> Result<ObserverOutcomeTable> {
    let layout = state.layout();
    let pm = layout.position(memory)?;
    let ps = layout.position(system)?;
    if pm == ps {
        return Err(Error::LabelCollision(memory.to_string()));
    }
    let (dm, ds) = (layout.subsystems()[pm].1, layout.subsystems()[ps].1);
    let strides = layout.strides();
    let mut joint = DMatrix::<f64>::zeros(dm, ds);
    for (i, z) in state.amplitudes().iter().enumerate() {
        let w = z.norm_sqr();
        if w > 0.0 {
            joint[(layout.digit(&strides, i, pm), layout.digit(&strides, i, ps))] += w;
        }
    }
    let prior = (0..ds).map(|l| joint.column(l).sum()).collect();
    let conditional = (0..dm)
        .map(|k| {
            let pk = joint.row(k).sum();
            (pk >= UNDEFINED_ROW).then(|| joint.row(k).iter().map(|x| x / pk).collect())
        })
        .collect();
    Ok(ObserverOutcomeTable { prior, conditional })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info_measures::{mutual_information, redundancy_report, FragmentSpec};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn env_labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("E{i}")).collect()
    }

    fn broadcast(a: Vec<C64>, n: usize, overlap: f64) -> PureState {
        let spec = BranchSpec::new("S", a, 0.0).unwrap();
        let envs = env_labels(n);
        let mut ready = vec!["A".to_string()];
        ready.extend(envs.iter().cloned());
        let psi = premeasure(&spec.initial_state(&ready).unwrap(), "S", "A").unwrap();
        broadcast_environment(&psi, "A", &envs, overlap).unwrap()
    }

    #[test]
    fn premeasurement_copies_pointer() {
        let (a, b) = (r(0.6), C64::new(0.0, 0.8));
        let spec = BranchSpec::new("S", vec![a, b], 0.0).unwrap();
        let psi = premeasure(&spec.initial_state(&["A"]).unwrap(), "S", "A").unwrap();
        assert_eq!(psi.amplitude(&[0, 0]), a);
        assert_eq!(psi.amplitude(&[1, 1]), b);
        assert_eq!(psi.amplitude(&[1, 0]), r(0.0));

        let eigen = BranchSpec::new("S", vec![r(1.0), r(0.0)], 0.0).unwrap().initial_state(&["A"]).unwrap();
        assert_eq!(premeasure(&eigen, "S", "A").unwrap(), eigen);
    }

    #[test]
    fn qutrit_premeasurement_schmidt_coefficients() {
        let spec = BranchSpec::new("S", vec![r(0.6), r(0.0), r(0.8)], 0.0).unwrap();
        let psi = premeasure(&spec.initial_state(&["A"]).unwrap(), "S", "A").unwrap();
        let c = psi.schmidt_decompose(&["S"]).unwrap().coefficients().to_vec();
        assert_eq!(c.len(), 2);
        assert!((c[0] - 0.8).abs() < 1e-12 && (c[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn recorder_preconditions() {
        let spec = BranchSpec::new("S", vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)], 0.0).unwrap();
        let psi = premeasure(&spec.initial_state(&["A"]).unwrap(), "S", "A").unwrap();
        assert!(matches!(premeasure(&psi, "S", "A"), Err(Error::ApparatusNotReady { .. })));

        let l = SpaceLayout::new([("S", 3), ("A", 2)]).unwrap();
        let psi = PureState::basis(l, &[0, 0]).unwrap();
        assert_eq!(premeasure(&psi, "S", "A").unwrap_err(), Error::DimensionMismatch { expected: 3, found: 2 });
        assert!(matches!(premeasure(&psi, "S", "B"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn environment_decoheres_pointer() {
        let spec = BranchSpec::new("S", vec![r(0.6), r(0.8)], 0.0).unwrap();
        let psi = premeasure(&spec.initial_state(&["A", "E"]).unwrap(), "S", "A").unwrap();
        let phi = entangle_environment(&psi, "A", "E").unwrap();
        let rho = phi.partial_trace(&["S", "A"]).unwrap();
        assert!(rho.off_diagonal_norm() < 1e-12);
        let d = rho.diagonal();
        assert!((d[0] - 0.36).abs() < 1e-12 && (d[3] - 0.64).abs() < 1e-12);
    }

    #[test]
    fn record_states_have_requested_overlap() {
        for &c in &[0.0, 0.3, FRAC_PI_4.cos(), 1.0] {
            let rec = record_states(3, 4, c).unwrap();
            for (k, a) in rec.iter().enumerate() {
                assert!((a.norm() - 1.0).abs() < 1e-14);
                for b in &rec[k + 1..] {
                    assert!((a.dotc(b).re - c).abs() < 1e-12);
                }
            }
        }
        assert_eq!(record_states(2, 2, 0.0).unwrap()[1], DVector::from_vec(vec![r(0.0), r(1.0)]));
        assert_eq!(record_states(2, 2, 1.5).unwrap_err(), Error::BadOverlap(1.5));
    }

    #[test]
    fn perfect_broadcast_redundancy() {
        let psi = broadcast(vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)], 8, 0.0);
        let frags: Vec<Vec<String>> = env_labels(8).into_iter().map(|e| vec![e]).collect();
        let rep = redundancy_report(&psi, &["S"], &frags).unwrap();
        assert!((rep.ratio - 8.0).abs() < 1e-9);
    }

    #[test]
    fn imperfect_broadcast_redundancy_is_partial() {
        let psi = broadcast(vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)], 4, FRAC_PI_4.cos());
        let frags: Vec<Vec<String>> = env_labels(4).into_iter().map(|e| vec![e]).collect();
        let rep = redundancy_report(&psi, &["S"], &frags).unwrap();
        for mi in &rep.per_fragment_mi {
            assert!(*mi > 0.0 && *mi < 1.0);
        }
        assert!(rep.ratio > 0.0 && rep.ratio < 4.0);
    }

    #[test]
    fn empty_broadcast_is_identity() {
        let psi = broadcast(vec![r(0.6), r(0.8)], 0, 0.0);
        let none: [&str; 0] = [];
        assert_eq!(broadcast_environment(&psi, "A", &none, 0.0).unwrap(), psi);
        assert_eq!(broadcast_environment(&psi, "A", &none, -0.1).unwrap_err(), Error::BadOverlap(-0.1));
    }

    #[test]
    fn cascade_length_mismatch() {
        let psi = broadcast(vec![r(0.6), r(0.8)], 2, 0.0);
        assert_eq!(
            cascade_environment(&psi, &["E1", "E2"], &["E1"]).unwrap_err(),
            Error::LengthMismatch { expected: 2, found: 1 }
        );
    }

    #[test]
    fn observer_tables() {
        let a = vec![r(0.8f64.sqrt()), r(0.2f64.sqrt())];
        let spec = BranchSpec::new("S", a, 0.0).unwrap();
        let psi = premeasure(&spec.initial_state(&["E", "M"]).unwrap(), "S", "E").unwrap();

        let before = conditional_probability(&psi, "M", "S").unwrap();
        assert!((before.prior[0] - 0.8).abs() < 1e-12);
        let row = before.conditional[0].as_ref().unwrap();
        assert!((row[0] - 0.8).abs() < 1e-12 && (row[1] - 0.2).abs() < 1e-12);
        assert!(before.conditional[1].is_none());

        let after = observer_record(&psi, "S", "M").unwrap();
        let table = conditional_probability(&after, "M", "S").unwrap();
        for (k, row) in table.conditional.iter().enumerate() {
            for (l, p) in row.as_ref().unwrap().iter().enumerate() {
                assert!((p - if k == l { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let split = FragmentSpec::new(&["S"], &["M"]).unwrap();
        assert!(mutual_information(&after, &split).unwrap() > 0.7);

        let csv = before.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "row,s_0,s_1");
        assert_eq!(csv.lines().nth(3).unwrap(), "mu_1,undefined,undefined");
    }
}
