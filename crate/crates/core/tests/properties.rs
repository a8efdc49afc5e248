use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use envlab::envariance::{fine_grain, rational_bounds, schmidt_phase_unitary, FineGrainingPlan};
use envlab::info_measures::{
    basis_conditioned_mutual_information, mutual_information, subsystem_entropy, von_neumann_entropy, FragmentSpec,
};
use envlab::measurement_models::{
    broadcast_environment, cascade_environment, conditional_probability, entangle_environment, observer_record,
    premeasure, BranchSpec,
};
use envlab::random::{random_orthonormal, random_state, random_unitary};
use envlab::{DensityOperator, PureState, SpaceLayout, SubsystemUnitary, C64};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn layout(dims: &[usize]) -> SpaceLayout {
    SpaceLayout::new(dims.iter().enumerate().map(|(i, d)| (format!("Q{i}"), *d))).unwrap()
}

fn label(i: usize) -> String {
    format!("Q{i}")
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=4, 2..=4)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn branch_amplitudes(d: usize, r: &mut ChaCha8Rng) -> Vec<C64> {
    random_orthonormal(1, d, r).remove(0).iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unitaries_preserve_norm(dims in dims_strategy(), seed: u64, target in 0usize..4) {
        let mut r = rng(seed);
        let psi = random_state(layout(&dims), &mut r).unwrap();
        let t = target % dims.len();
        let u = SubsystemUnitary::new(&[label(t)], random_unitary(dims[t], &mut r)).unwrap();
        prop_assert!((psi.apply_unitary(&u).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_round_trip(ds in 1usize..=8, de in 1usize..=8, seed: u64) {
        let psi = random_state(layout(&[ds, de]), &mut rng(seed)).unwrap();
        let sd = psi.schmidt_decompose(&["Q0"]).unwrap();
        prop_assert!((sd.reconstruct().unwrap().amplitudes() - psi.amplitudes()).norm() < 1e-10);
        for w in sd.coefficients().windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn reduced_operators_are_states(dims in dims_strategy(), seed: u64, mask in 1u32..15) {
        let psi = random_state(layout(&dims), &mut rng(seed)).unwrap();
        let keep: Vec<String> = (0..dims.len()).filter(|i| mask >> i & 1 == 1).map(label).collect();
        prop_assume!(!keep.is_empty());
        let rho = psi.partial_trace(&keep).unwrap();
        let trace: C64 = rho.matrix().diagonal().iter().sum();
        prop_assert!((trace.re - 1.0).abs() < 1e-10 && trace.im.abs() < 1e-12);
        prop_assert!(rho.eigenvalues().iter().all(|x| *x >= -1e-10));
    }

    #[test]
    fn relative_states_in_schmidt_basis_are_orthogonal(ds in 2usize..=5, de in 2usize..=5, seed: u64) {
        let psi = random_state(layout(&[ds, de]), &mut rng(seed)).unwrap();
        let sd = psi.schmidt_decompose(&["Q0"]).unwrap();
        let mut basis = sd.left_basis().to_vec();
        // complete with an orthonormal frame of the remaining space
        for e in 0..ds {
            if basis.len() == ds {
                break;
            }
            let mut w = DVector::<C64>::zeros(ds);
            w[e] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dotc(&w);
                    w -= b * c;
                }
            }
            if w.norm() > 1e-8 {
                let n = w.norm();
                basis.push(w / C64::new(n, 0.0));
            }
        }
        let partners: Vec<PureState> =
            psi.relative_states(&["Q0"], &basis).unwrap().into_iter().filter_map(|b| b.partner).collect();
        for (i, a) in partners.iter().enumerate() {
            for b in &partners[i + 1..] {
                prop_assert!(a.inner(b).unwrap().norm() < 1e-10);
            }
        }
    }

    #[test]
    fn mutual_information_bounds_and_symmetry(dims in dims_strategy(), seed: u64) {
        let psi = random_state(layout(&dims), &mut rng(seed)).unwrap();
        let n = dims.len();
        let split = FragmentSpec::new(&["Q0"], &[label(n - 1)]).unwrap();
        let mirrored = FragmentSpec::new(&[label(n - 1)], &["Q0"]).unwrap();
        let mi = mutual_information(&psi, &split).unwrap();
        let hs = subsystem_entropy(&psi, &["Q0"]).unwrap();
        let hf = subsystem_entropy(&psi, &[label(n - 1)]).unwrap();
        prop_assert!(mi >= 0.0 && mi <= 2.0 * hs.min(hf) + 1e-9);
        prop_assert!((mi - mutual_information(&psi, &mirrored).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn local_readout_never_beats_mutual_information(dims in dims_strategy(), seed: u64) {
        let mut r = rng(seed);
        let psi = random_state(layout(&dims), &mut r).unwrap();
        let n = dims.len();
        let split = FragmentSpec::new(&["Q0"], &[label(n - 1)]).unwrap();
        let basis = random_orthonormal(dims[n - 1], dims[n - 1], &mut r);
        let local = basis_conditioned_mutual_information(&psi, &split, &basis).unwrap();
        prop_assert!(local <= mutual_information(&psi, &split).unwrap() + 1e-9);
    }

    #[test]
    fn global_pure_state_has_zero_entropy(dims in dims_strategy(), seed: u64) {
        let psi = random_state(layout(&dims), &mut rng(seed)).unwrap();
        prop_assert!(von_neumann_entropy(&DensityOperator::from_pure(&psi)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn measurement_chain_stays_pure_and_decoheres(d in 2usize..=4, seed: u64) {
        let mut r = rng(seed);
        let spec = BranchSpec::new("S", branch_amplitudes(d, &mut r), 0.0).unwrap();
        let psi = premeasure(&spec.initial_state(&["A", "E"]).unwrap(), "S", "A").unwrap();
        let phi = entangle_environment(&psi, "A", "E").unwrap();
        for state in [&psi, &phi] {
            prop_assert!((state.norm() - 1.0).abs() < 1e-12);
            prop_assert!((DensityOperator::from_pure(state).purity() - 1.0).abs() < 1e-10);
        }
        prop_assert!(phi.partial_trace(&["S", "A"]).unwrap().off_diagonal_norm() < 1e-12);
    }

    #[test]
    fn enlarging_environment_leaves_pointer_state_alone(d in 2usize..=3, seed: u64) {
        let mut r = rng(seed);
        let spec = BranchSpec::new("S", branch_amplitudes(d, &mut r), 0.0).unwrap();
        let envs = ["E1", "E2", "E3"];
        let start = premeasure(&spec.initial_state(&["A", "E1", "E2", "E3"]).unwrap(), "S", "A").unwrap();
        let small = broadcast_environment(&start, "A", &envs[..1], 0.0).unwrap();
        let large = broadcast_environment(&start, "A", &envs, 0.0).unwrap();
        let a = small.partial_trace(&["S", "A"]).unwrap();
        let b = large.partial_trace(&["S", "A"]).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        prop_assert!((large.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cascade_is_local(d in 2usize..=3, seed: u64) {
        let mut r = rng(seed);
        let spec = BranchSpec::new("S", branch_amplitudes(d, &mut r), 0.0).unwrap();
        let start = spec.initial_state(&["A", "E1", "E2", "F1", "F2"]).unwrap();
        let psi = premeasure(&start, "S", "A").unwrap();
        let psi = broadcast_environment(&psi, "A", &["E1", "E2"], 0.0).unwrap();
        let out = cascade_environment(&psi, &["E1", "E2"], &["F1", "F2"]).unwrap();
        // the cascade touches only E* and F*, so nothing else can tell
        for keep in [&["S", "A"][..], &["S"][..], &["A"][..]] {
            let before = psi.partial_trace(keep).unwrap();
            prop_assert!(before.max_abs_diff(&out.partial_trace(keep).unwrap()).unwrap() < 1e-12);
        }
        let pointer: Vec<DVector<C64>> =
            (0..d).map(|k| DVector::from_fn(d, |i, _| C64::new((i == k) as u8 as f64, 0.0))).collect();
        for (imm, far) in [("E1", "F1"), ("E2", "F2")] {
            let a = basis_conditioned_mutual_information(&out, &FragmentSpec::new(&["S"], &[imm]).unwrap(), &pointer).unwrap();
            let b = basis_conditioned_mutual_information(&out, &FragmentSpec::new(&["S"], &[far]).unwrap(), &pointer).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn conditional_rows_are_distributions(d in 2usize..=4, seed: u64, record: bool) {
        let mut r = rng(seed);
        let spec = BranchSpec::new("S", branch_amplitudes(d, &mut r), 0.0).unwrap();
        let mut psi = premeasure(&spec.initial_state(&["E", "M"]).unwrap(), "S", "E").unwrap();
        if record {
            psi = observer_record(&psi, "S", "M").unwrap();
        }
        let table = conditional_probability(&psi, "M", "S").unwrap();
        prop_assert!((table.prior.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for row in table.conditional.iter().flatten() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn schmidt_phases_leave_system_untouched(ds in 2usize..=5, de in 2usize..=5, seed: u64) {
        let mut r = rng(seed);
        let psi = random_state(layout(&[ds, de]), &mut r).unwrap();
        let sd = psi.schmidt_decompose(&["Q0"]).unwrap();
        let phases: Vec<f64> = (0..sd.len()).map(|_| r.random_range(-3.2..3.2)).collect();
        let moved = psi.apply_unitary(&schmidt_phase_unitary(&sd, &phases).unwrap()).unwrap();
        let a = psi.partial_trace(&["Q0"]).unwrap();
        prop_assert!(a.max_abs_diff(&moved.partial_trace(&["Q0"]).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn fine_graining_preserves_system(seed: u64, counts in prop::collection::vec(1u64..=6, 1..=3)) {
        let mut r = rng(seed);
        let m: u64 = counts.iter().sum();
        let mut counts = counts;
        counts.sort_by(|a, b| b.cmp(a));
        let ds = counts.len().max(2);
        let s = random_orthonormal(counts.len(), ds, &mut r);
        let e = random_orthonormal(counts.len(), m as usize, &mut r);
        let mut amps = vec![C64::new(0.0, 0.0); ds * m as usize];
        for ((c, sk), ek) in counts.iter().zip(&s).zip(&e) {
            let lam = (*c as f64 / m as f64).sqrt();
            for i in 0..ds {
                for j in 0..m as usize {
                    amps[i * m as usize + j] += sk[i] * ek[j] * lam;
                }
            }
        }
        let psi = PureState::normalized(SpaceLayout::new([("S", ds), ("E", m as usize)]).unwrap(), amps).unwrap();
        let plan = FineGrainingPlan::new(&["S"], counts.clone(), "A").unwrap();
        let out = fine_grain(&psi, &plan).unwrap();
        let a = psi.partial_trace(&["S"]).unwrap();
        prop_assert!(max_abs(&(a.matrix() - out.partial_trace(&["S"]).unwrap().matrix())) < 1e-12);
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rational_bounds_contain_amplitudes(ds in 2usize..=4, seed: u64, m in 4u64..=5000) {
        let psi = random_state(layout(&[ds, ds]), &mut rng(seed)).unwrap();
        let b = rational_bounds(&psi, &["Q0"], m).unwrap();
        prop_assert!(b.contains_all());
        prop_assert!(b.max_width() <= 2.0 / m as f64);
        prop_assert!(b.lower.iter().sum::<f64>() <= 1.0 + 1e-12);
        prop_assert!(b.upper.iter().sum::<f64>() >= 1.0 - 1e-12);
    }
}
