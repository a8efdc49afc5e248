//! Library results against independent brute-force computations.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use envlab::envariance::{born_counting, rational_bounds, DEFAULT_M_CAP};
use envlab::info_measures::{basis_conditioned_mutual_information, redundancy_report, FragmentSpec};
use envlab::measurement_models::{broadcast_environment, cascade_environment, premeasure, BranchSpec};
use envlab::random::{random_state, random_unitary};
use envlab::{DensityOperator, PureState, SpaceLayout, SubsystemUnitary, C64};

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `I ⊗ … ⊗ U ⊗ … ⊗ I` built as an explicit Kronecker product.
fn embedded(dims: &[usize], target: usize, u: &DMatrix<C64>) -> DMatrix<C64> {
    dims.iter().enumerate().fold(DMatrix::from_element(1, 1, r(1.0)), |acc, (p, d)| {
        let factor = if p == target { u.clone() } else { DMatrix::identity(*d, *d) };
        acc.kronecker(&factor)
    })
}

/// `−Σ λ log₂ λ` from a fresh eigen-decomposition.
fn entropy(rho: &DMatrix<C64>) -> f64 {
    nalgebra::SymmetricEigen::new(rho.clone())
        .eigenvalues
        .iter()
        .filter(|x| **x > 1e-12)
        .map(|x| -x * x.log2())
        .sum()
}

/// Reduced operator on one subsystem by summing over every other digit.
fn reduce_to(psi: &PureState, keep: usize) -> DMatrix<C64> {
    let dims = psi.layout().dims();
    let stride: usize = dims[keep + 1..].iter().product();
    let d = dims[keep];
    let mut rho = DMatrix::<C64>::zeros(d, d);
    let amps = psi.amplitudes();
    for i in 0..amps.len() {
        for j in 0..amps.len() {
            let (ki, kj) = ((i / stride) % d, (j / stride) % d);
            if i - ki * stride == j - kj * stride {
                rho[(ki, kj)] += amps[i] * amps[j].conj();
            }
        }
    }
    rho
}

#[test]
fn apply_unitary_matches_kronecker_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let dims: Vec<usize> = (0..3).map(|_| rng.random_range(2..=4)).collect();
        let layout = SpaceLayout::new(dims.iter().enumerate().map(|(i, d)| (format!("Q{i}"), *d))).unwrap();
        let psi = random_state(layout, &mut rng).unwrap();
        let t = rng.random_range(0..3);
        let u = random_unitary(dims[t], &mut rng);
        let got = psi.apply_unitary(&SubsystemUnitary::new(&[format!("Q{t}")], u.clone()).unwrap()).unwrap();
        let want = embedded(&dims, t, &u) * psi.amplitudes();
        assert!((got.amplitudes() - want).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    }
}

#[test]
fn single_subsystem_reduction_matches_index_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let psi = random_state(SpaceLayout::new([("A", 3), ("B", 2), ("C", 4)]).unwrap(), &mut rng).unwrap();
    for (p, l) in ["A", "B", "C"].iter().enumerate() {
        let got = psi.partial_trace(&[*l]).unwrap();
        assert!((got.matrix() - reduce_to(&psi, p)).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    }
}

#[test]
fn binary_entropy_value() {
    // −0.8 log₂ 0.8 − 0.2 log₂ 0.2 = 0.72192809...
    let rho = DMatrix::from_diagonal(&DVector::from_vec(vec![r(0.8), r(0.2)]));
    let want = entropy(&rho);
    assert!((want - 0.7219281).abs() < 1e-6);
    let op = DensityOperator::new(SpaceLayout::new([("S", 2)]).unwrap(), rho).unwrap();
    assert!((envlab::info_measures::von_neumann_entropy(&op).unwrap() - want).abs() < 1e-12);
}

fn broadcast(a: Vec<C64>, n: usize, overlap: f64) -> (PureState, Vec<String>) {
    let spec = BranchSpec::new("S", a, 0.0).unwrap();
    let envs: Vec<String> = (1..=n).map(|i| format!("E{i}")).collect();
    let mut ready = vec!["A".to_string()];
    ready.extend(envs.iter().cloned());
    let psi = premeasure(&spec.initial_state(&ready).unwrap(), "S", "A").unwrap();
    (broadcast_environment(&psi, "A", &envs, overlap).unwrap(), envs)
}

#[test]
fn redundancy_matches_entropy_oracle() {
    for (angle, lo, hi) in [(FRAC_PI_2, 4.0, 4.0), (FRAC_PI_4, 0.0, 4.0)] {
        let (psi, envs) = broadcast(vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)], 4, angle.cos().max(0.0));
        let frags: Vec<Vec<String>> = envs.iter().map(|e| vec![e.clone()]).collect();
        let rep = redundancy_report(&psi, &["S"], &frags).unwrap();
        let hs = entropy(&reduce_to(&psi, 0));
        let mut sum = 0.0;
        for (k, e) in envs.iter().enumerate() {
            let pos = psi.layout().position(e).unwrap();
            let joint = psi.partial_trace(&["S", e.as_str()]).unwrap();
            let oracle = hs + entropy(&reduce_to(&psi, pos)) - entropy(joint.matrix());
            assert!((rep.per_fragment_mi[k] - oracle).abs() < 1e-10);
            sum += oracle;
        }
        assert!((rep.ratio - sum / hs).abs() < 1e-10);
        if lo == hi {
            assert!((rep.ratio - lo).abs() < 1e-9);
        } else {
            assert!(rep.ratio > lo && rep.ratio < hi, "ratio {}", rep.ratio);
            assert!(rep.per_fragment_mi.iter().all(|mi| *mi > 0.0 && *mi < 1.0));
        }
    }
}

/// Conditional entropies of S after reading `fragment` in `basis`, by
/// projecting the full state vector outcome by outcome.
fn local_information_oracle(psi: &PureState, fragment: &str, basis: &[DVector<C64>]) -> f64 {
    let dims = psi.layout().dims();
    let p = psi.layout().position(fragment).unwrap();
    let after: usize = dims[p + 1..].iter().product();
    let d = dims[p];
    let hs = entropy(&reduce_to(psi, 0));
    let mut conditional = 0.0;
    for b in basis {
        let mut proj = psi.amplitudes().clone();
        for i in 0..proj.len() {
            let digit = (i / after) % d;
            let base = i - digit * after;
            proj[i] = (0..d).map(|k| b[digit] * b[k].conj() * psi.amplitudes()[base + k * after]).sum();
        }
        let w = proj.norm_squared();
        if w < 1e-14 {
            continue;
        }
        let cond = PureState::normalized(psi.layout().clone(), proj.as_slice().to_vec()).unwrap();
        conditional += w * entropy(&reduce_to(&cond, 0));
    }
    hs - conditional
}

#[test]
fn cascade_information_matches_projection_oracle() {
    let spec = BranchSpec::new("S", vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)], 0.0).unwrap();
    let ready = ["A", "E1", "E2", "E3", "F1", "F2", "F3"];
    let psi = premeasure(&spec.initial_state(&ready).unwrap(), "S", "A").unwrap();
    let psi = broadcast_environment(&psi, "A", &["E1", "E2", "E3"], 0.0).unwrap();
    let out = cascade_environment(&psi, &["E1", "E2", "E3"], &["F1", "F2", "F3"]).unwrap();
    let pointer = [DVector::from_vec(vec![r(1.0), r(0.0)]), DVector::from_vec(vec![r(0.0), r(1.0)])];
    let s = FRAC_1_SQRT_2;
    let hadamard = [DVector::from_vec(vec![r(s), r(s)]), DVector::from_vec(vec![r(s), r(-s)])];
    for f in ["F1", "F2", "F3"] {
        let split = FragmentSpec::new(&["S"], &[f]).unwrap();
        let got = basis_conditioned_mutual_information(&out, &split, &pointer).unwrap();
        assert!((got - local_information_oracle(&out, f, &pointer)).abs() < 1e-10);
        assert!((got - 1.0).abs() < 1e-10);
        let conj = basis_conditioned_mutual_information(&out, &split, &hadamard).unwrap();
        assert!(conj.abs() < 1e-10);
        assert!(local_information_oracle(&out, f, &hadamard).abs() < 1e-10);
    }

    // no branches: every distant fragment carries nothing
    let eigen = BranchSpec::new("S", vec![r(1.0), r(0.0)], 0.0).unwrap();
    let psi = premeasure(&eigen.initial_state(&["A", "E1", "F1"]).unwrap(), "S", "A").unwrap();
    let psi = broadcast_environment(&psi, "A", &["E1"], 0.0).unwrap();
    let out = cascade_environment(&psi, &["E1"], &["F1"]).unwrap();
    let split = FragmentSpec::new(&["S"], &["F1"]).unwrap();
    assert_eq!(basis_conditioned_mutual_information(&out, &split, &pointer).unwrap(), 0.0);
}

#[test]
fn counting_matches_term_enumeration() {
    // amplitudes √(3/8), √(1/8), √(4/8) on a qutrit with perfect records
    let a: Vec<C64> = [3.0, 1.0, 4.0].iter().map(|x: &f64| r((x / 8.0).sqrt())).collect();
    let spec = BranchSpec::new("S", a, 0.0).unwrap();
    let psi = premeasure(&spec.initial_state(&["E"]).unwrap(), "S", "E").unwrap();
    let c = born_counting(&psi, &["S"], 1e-10, DEFAULT_M_CAP).unwrap();
    assert_eq!(c.total, 8);
    // Schmidt order is descending; map back to pointer order by squared amplitude
    let mut by_outcome: Vec<(f64, f64)> = c.amplitude_squared.iter().copied().zip(c.probabilities.iter().copied()).collect();
    by_outcome.sort_by(|x, y| x.0.total_cmp(&y.0));
    let probs: Vec<f64> = by_outcome.iter().map(|x| x.1).collect();
    assert_eq!(probs, vec![0.125, 0.375, 0.5]);
}

#[test]
fn bounds_match_direct_evaluation() {
    let p = 1f64.cos().powi(2);
    let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
    let psi = PureState::new(l, vec![r(1f64.cos()), r(0.0), r(0.0), r(1f64.sin())]).unwrap();
    for m in [100u64, 1000, 10_000] {
        let b = rational_bounds(&psi, &["S"], m).unwrap();
        let k = b.amplitude_squared.iter().position(|x| (x - p).abs() < 1e-15).unwrap();
        assert_eq!(b.lower[k], (p * m as f64).floor() / m as f64);
        assert_eq!(b.upper[k], (p * m as f64).ceil() / m as f64);
    }
    let b = rational_bounds(&psi, &["S"], 1000).unwrap();
    assert_eq!(b.lower[1], 0.291);
    assert_eq!(b.upper[1], 0.292);
}
