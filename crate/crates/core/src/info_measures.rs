//! Von Neumann entropies, mutual information between a system and
//! environment fragments, redundancy of records, and the information a
//! fragment yields when read out in one fixed local basis.
//!
//! All entropies are in bits. Eigenvalues at or below [`EIGENVALUE_FLOOR`]
//! contribute nothing (the `0 log 0` convention). Mutual informations are
//! clamped at zero after checking that any negativity is roundoff.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::tensor_core::{DensityOperator, PureState, SubsystemLabel, DENSITY_TOLERANCE};

pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Negative mutual information beyond this is a bug, not roundoff.
const MI_SLACK: f64 = 1e-9;

/// `−Σ p log₂ p` over a spectrum.
pub fn entropy_of_spectrum(spectrum: &[f64]) -> f64 {
    let h: f64 = spectrum
        .iter()
        .filter(|&&p| p > EIGENVALUE_FLOOR)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Von Neumann entropy of a density operator, in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let spectrum = rho.eigenvalues();
    if let Some(&min) = spectrum.last() {
        if min < -DENSITY_TOLERANCE {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
    }
    Ok(entropy_of_spectrum(&spectrum))
}

/// Entropy of the reduced state on `labels`, computed from the Schmidt
/// spectrum of the cut (whichever side is smaller).
pub fn subsystem_entropy<L: AsRef<str>>(state: &PureState, labels: &[L]) -> Result<f64> {
    Ok(entropy_of_spectrum(&state.reduced_spectrum(labels)?))
}

/// A system/fragment split of a state's subsystems.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FragmentSpec {
    pub system: Vec<SubsystemLabel>,
    pub fragment: Vec<SubsystemLabel>,
}

impl FragmentSpec {
    pub fn new<A: AsRef<str>, B: AsRef<str>>(system: &[A], fragment: &[B]) -> Result<Self> {
        let system = labels(system)?;
        let fragment = labels(fragment)?;
        if system.is_empty() || fragment.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        if let Some(l) = system.iter().find(|l| fragment.contains(l)) {
            return Err(Error::OverlappingSplit(l.to_string()));
        }
        Ok(Self { system, fragment })
    }

    fn joint(&self) -> Vec<SubsystemLabel> {
        self.system.iter().chain(self.fragment.iter()).cloned().collect()
    }
}

fn labels<L: AsRef<str>>(ls: &[L]) -> Result<Vec<SubsystemLabel>> {
    let mut out: Vec<SubsystemLabel> = Vec::with_capacity(ls.len());
    for l in ls {
        let l = SubsystemLabel::new(l.as_ref())?;
        if out.contains(&l) {
            return Err(Error::LabelCollision(l.to_string()));
        }
        out.push(l);
    }
    Ok(out)
}

fn clamp_mi(raw: f64) -> f64 {
    debug_assert!(raw >= -MI_SLACK, "mutual information {raw} below roundoff slack");
    raw.max(0.0)
}

/// `I(S:F) = H(S) + H(F) − H(S,F)` in bits.
pub fn mutual_information(state: &PureState, split: &FragmentSpec) -> Result<f64> {
    let hs = subsystem_entropy(state, &split.system)?;
    let hf = subsystem_entropy(state, &split.fragment)?;
    let hsf = subsystem_entropy(state, &split.joint())?;
    Ok(clamp_mi(hs + hf - hsf))
}

/// Per-fragment mutual informations about a system and their redundancy
/// ratio `Σ_k I(S:F_k) / H(S)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RedundancyReport {
    pub per_fragment_mi: Vec<f64>,
    pub mi_sum: f64,
    pub system_entropy: f64,
    pub ratio: f64,
}

impl RedundancyReport {
    /// Running sums of the per-fragment informations.
    pub fn cumulative(&self) -> Vec<f64> {
        self.per_fragment_mi
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    /// One row per fragment: index, MI, cumulative MI, overall ratio.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fragment_index,mi_bits,cumulative_bits,ratio\n");
        for (i, (mi, cum)) in self.per_fragment_mi.iter().zip(self.cumulative()).enumerate() {
            out.push_str(&format!("{i},{mi},{cum},{}\n", self.ratio));
        }
        out
    }
}

/// Redundancy of the records of `system` held by disjoint `fragments`.
///
/// The system label set is a parameter, so both `I(S:E_k)` and the
/// apparatus-inclusive `I(SA:E_k)` readings can be computed.
pub fn redundancy_report<S: AsRef<str>, F: AsRef<str>>(
    state: &PureState,
    system: &[S],
    fragments: &[Vec<F>],
) -> Result<RedundancyReport> {
    let specs = fragments
        .iter()
        .map(|f| FragmentSpec::new(system, f))
        .collect::<Result<Vec<_>>>()?;
    for (i, a) in specs.iter().enumerate() {
        for b in &specs[i + 1..] {
            if let Some(l) = a.fragment.iter().find(|l| b.fragment.contains(l)) {
                return Err(Error::OverlappingSplit(l.to_string()));
            }
        }
    }
    let system_entropy = subsystem_entropy(state, system)?;
    if system_entropy <= EIGENVALUE_FLOOR {
        // still validate labels before reporting
        for s in &specs {
            state.layout().positions(&s.fragment)?;
        }
        return Err(Error::UndefinedRatio { entropy: system_entropy });
    }
    let per_fragment_mi = specs
        .iter()
        .map(|s| mutual_information(state, s))
        .collect::<Result<Vec<_>>>()?;
    let mi_sum: f64 = per_fragment_mi.iter().sum();
    Ok(RedundancyReport { ratio: mi_sum / system_entropy, per_fragment_mi, mi_sum, system_entropy })
}

/// The computational basis `|0⟩, …, |d−1⟩`.
pub fn pointer_basis(d: usize) -> Vec<DVector<C64>> {
    (0..d)
        .map(|k| {
            let mut v = DVector::zeros(d);
            v[k] = C64::new(1.0, 0.0);
            v
        })
        .collect()
}

/// `|f_j⟩ = d^{-1/2} Σ_k e^{2πi jk/d} |k⟩`, mutually unbiased with the
/// pointer basis.
pub fn fourier_basis(d: usize) -> Vec<DVector<C64>> {
    let norm = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|j| {
            DVector::from_fn(d, |k, _| C64::from_polar(norm, std::f64::consts::TAU * (j * k) as f64 / d as f64))
        })
        .collect()
}

/// Information about the system obtained by reading the fragment out in
/// `fragment_basis`: `H(S) − Σ_j p_j H(S | j)`, where outcome `j` projects
/// the fragment onto the j-th basis vector.
pub fn basis_conditioned_mutual_information(
    state: &PureState,
    split: &FragmentSpec,
    fragment_basis: &[DVector<C64>],
) -> Result<f64> {
    let hs = subsystem_entropy(state, &split.system)?;
    let branches = state.relative_states(&split.fragment, fragment_basis)?;
    let mut conditional = 0.0;
    for b in &branches {
        if let Some(partner) = &b.partner {
            conditional += b.coefficient.norm_sqr() * subsystem_entropy(partner, &split.system)?;
        }
    }
    let raw = hs - conditional;
    debug_assert!(raw >= -MI_SLACK && raw <= hs + MI_SLACK);
    Ok(raw.clamp(0.0, hs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_core::SpaceLayout;
    use nalgebra::DMatrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn diag(ps: &[f64]) -> DensityOperator {
        let l = SpaceLayout::new([("S", ps.len())]).unwrap();
        DensityOperator::new(l, DMatrix::from_diagonal(&DVector::from_vec(ps.iter().map(|p| r(*p)).collect()))).unwrap()
    }

    /// Branch state Σ_k a_k |k⟩_S |k⟩_E1 ... |k⟩_En on qubits.
    fn branches(a: [f64; 2], records: usize) -> PureState {
        let mut subsystems = vec![("S".to_string(), 2)];
        subsystems.extend((1..=records).map(|i| (format!("E{i}"), 2)));
        let l = SpaceLayout::new(subsystems).unwrap();
        let n = l.total_dim();
        let mut amps = vec![r(0.0); n];
        amps[0] = r(a[0]);
        amps[n - 1] = r(a[1]);
        PureState::new(l, amps).unwrap()
    }

    #[test]
    fn readout_bases_are_orthonormal() {
        for d in 2..6 {
            for basis in [pointer_basis(d), fourier_basis(d)] {
                for (i, a) in basis.iter().enumerate() {
                    for (j, b) in basis.iter().enumerate() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((a.dotc(b) - r(want)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(von_neumann_entropy(&diag(&[1.0, 0.0])).unwrap(), 0.0);
        assert!((von_neumann_entropy(&diag(&[0.5, 0.5])).unwrap() - 1.0).abs() < 1e-15);
        // −0.8 log₂ 0.8 − 0.2 log₂ 0.2
        assert!((von_neumann_entropy(&diag(&[0.8, 0.2])).unwrap() - 0.7219281).abs() < 1e-6);
    }

    #[test]
    fn mutual_information_examples() {
        let product = PureState::basis(SpaceLayout::new([("S", 2), ("E1", 2)]).unwrap(), &[1, 0]).unwrap();
        let split = FragmentSpec::new(&["S"], &["E1"]).unwrap();
        assert_eq!(mutual_information(&product, &split).unwrap(), 0.0);

        let even = branches([FRAC_1_SQRT_2, FRAC_1_SQRT_2], 3);
        assert!((mutual_information(&even, &split).unwrap() - 1.0).abs() < 1e-12);

        let uneven = branches([0.8f64.sqrt(), 0.2f64.sqrt()], 3);
        for e in ["E1", "E2", "E3"] {
            let split = FragmentSpec::new(&["S"], &[e]).unwrap();
            assert!((mutual_information(&uneven, &split).unwrap() - 0.7219281).abs() < 1e-6);
        }
    }

    #[test]
    fn overlapping_split_rejected() {
        assert_eq!(
            FragmentSpec::new(&["S", "E1"], &["E1"]).unwrap_err(),
            Error::OverlappingSplit("E1".into())
        );
        let psi = branches([FRAC_1_SQRT_2, FRAC_1_SQRT_2], 2);
        let err = redundancy_report(&psi, &["S"], &[vec!["E1"], vec!["E1", "E2"]]).unwrap_err();
        assert_eq!(err, Error::OverlappingSplit("E1".into()));
    }

    #[test]
    fn undefined_ratio_for_pure_system() {
        let psi = PureState::basis(SpaceLayout::new([("S", 2), ("E1", 2)]).unwrap(), &[0, 0]).unwrap();
        assert!(matches!(redundancy_report(&psi, &["S"], &[vec!["E1"]]), Err(Error::UndefinedRatio { .. })));
    }

    #[test]
    fn uncorrelated_environment_gives_zero_ratio() {
        // (|00⟩+|11⟩)/√2 on S,A times |0⟩|0⟩ on E1,E2
        let l = SpaceLayout::new([("S", 2), ("A", 2), ("E1", 2), ("E2", 2)]).unwrap();
        let mut amps = vec![r(0.0); 16];
        amps[0] = r(FRAC_1_SQRT_2);
        amps[0b1100] = r(FRAC_1_SQRT_2);
        let psi = PureState::new(l, amps).unwrap();
        let rep = redundancy_report(&psi, &["S"], &[vec!["E1"], vec!["E2"]]).unwrap();
        assert_eq!(rep.per_fragment_mi, vec![0.0, 0.0]);
        assert_eq!(rep.ratio, 0.0);
        assert!((rep.system_entropy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditioned_information_depends_on_readout_basis() {
        let psi = branches([FRAC_1_SQRT_2, FRAC_1_SQRT_2], 2);
        let split = FragmentSpec::new(&["S"], &["E1"]).unwrap();
        let record = [DVector::from_vec(vec![r(1.0), r(0.0)]), DVector::from_vec(vec![r(0.0), r(1.0)])];
        let s = FRAC_1_SQRT_2;
        let hadamard = [DVector::from_vec(vec![r(s), r(s)]), DVector::from_vec(vec![r(s), r(-s)])];
        assert!((basis_conditioned_mutual_information(&psi, &split, &record).unwrap() - 1.0).abs() < 1e-12);
        assert!(basis_conditioned_mutual_information(&psi, &split, &hadamard).unwrap() < 1e-10);

        let product = PureState::basis(SpaceLayout::new([("S", 2), ("E1", 2)]).unwrap(), &[0, 1]).unwrap();
        assert_eq!(basis_conditioned_mutual_information(&product, &split, &hadamard).unwrap(), 0.0);
    }

    #[test]
    fn redundancy_csv_rows() {
        let psi = branches([FRAC_1_SQRT_2, FRAC_1_SQRT_2], 2);
        let rep = redundancy_report(&psi, &["S"], &[vec!["E1"], vec!["E2"]]).unwrap();
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "fragment_index,mi_bits,cumulative_bits,ratio");
        assert_eq!(lines.len(), 3);
    }
}
