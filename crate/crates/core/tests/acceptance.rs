//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::FRAC_1_SQRT_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use envlab::envariance::{
    born_counting, born_probabilities, equal_amplitude_probabilities, equal_amplitude_subset_probability,
    fine_grain, is_envariant, phase_sensitivity_witness, rational_bounds, schmidt_phase_unitary,
    FineGrainingPlan, NotEnvariant, DEFAULT_M_CAP,
};
use envlab::info_measures::{mutual_information, redundancy_report, FragmentSpec};
use envlab::measurement_models::{
    broadcast_environment, conditional_probability, entangle_environment, observer_record, premeasure, BranchSpec,
};
use envlab::random::{random_orthonormal, random_state, random_unitary};
use envlab::{PureState, SpaceLayout, SubsystemUnitary, C64};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn random_amplitudes(d: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v = random_orthonormal(1, d, rng).remove(0);
    v.iter().copied().collect()
}

/// Σ_k λ_k |s_k⟩|e_k⟩ with the given frames on S ⊗ E.
fn schmidt_state(lambda: &[f64], s: &[DVector<C64>], e: &[DVector<C64>]) -> PureState {
    let (ds, de) = (s[0].len(), e[0].len());
    let mut amps = vec![r(0.0); ds * de];
    for ((l, sk), ek) in lambda.iter().zip(s).zip(e) {
        for i in 0..ds {
            for j in 0..de {
                amps[i * de + j] += sk[i] * ek[j] * *l;
            }
        }
    }
    PureState::normalized(SpaceLayout::new([("S", ds), ("E", de)]).unwrap(), amps).unwrap()
}

fn criterion_1() -> Check {
    // (√2|0⟩|+⟩ + |2⟩|2⟩)/√3
    let l = SpaceLayout::new([("S", 3), ("E", 3)]).unwrap();
    let s = 1.0 / 3f64.sqrt();
    let mut amps = vec![r(0.0); 9];
    amps[0] = r(s);
    amps[1] = r(s);
    amps[8] = r(s);
    let psi = PureState::new(l, amps).map_err(|e| e.to_string())?;
    let p = born_probabilities(&psi, &["S"], 1e-12).map_err(|e| e.to_string())?;
    ensure((p[0] - 2.0 / 3.0).abs() < 1e-12 && (p[1] - 1.0 / 3.0).abs() < 1e-12, || format!("p = {p:?}"))?;

    let plan = FineGrainingPlan::new(&["S"], vec![2, 1], "A").unwrap();
    let fine = fine_grain(&psi, &plan).map_err(|e| e.to_string())?;
    let mut expected = vec![r(0.0); 27];
    for digits in [[0, 0, 0], [0, 1, 1], [2, 2, 2]] {
        expected[digits[0] * 9 + digits[1] * 3 + digits[2]] = r(s);
    }
    let expected = PureState::new(fine.layout().clone(), expected).unwrap();
    let dist = fine.phase_distance(&expected).unwrap();
    ensure(dist < 1e-10, || format!("fine-grained state off by {dist:e}"))?;
    Ok(format!("p = ({}, {}), fine-grained distance {dist:.1e}", p[0], p[1]))
}

fn criterion_2() -> Check {
    let mut worst: f64 = 0.0;
    for n in 1..=10 {
        let spec = BranchSpec::new("S", vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)], 0.0).unwrap();
        let envs: Vec<String> = (1..=n).map(|i| format!("E{i}")).collect();
        let mut ready = vec!["A".to_string()];
        ready.extend(envs.iter().cloned());
        let psi = premeasure(&spec.initial_state(&ready).unwrap(), "S", "A").unwrap();
        let psi = broadcast_environment(&psi, "A", &envs, 0.0).unwrap();
        let frags: Vec<Vec<String>> = envs.iter().map(|e| vec![e.clone()]).collect();
        let rep = redundancy_report(&psi, &["S"], &frags).map_err(|e| e.to_string())?;
        let gap = (rep.ratio - n as f64).abs();
        worst = worst.max(gap);
        ensure(gap < 1e-9, || format!("N={n}: ratio {}", rep.ratio))?;
    }
    Ok(format!("R = N for N = 1..10, worst gap {worst:.1e}"))
}

fn criterion_3(rng: &mut ChaCha8Rng) -> Check {
    let mut worst_off: f64 = 0.0;
    let mut worst_diag: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(2..=4);
        let a = random_amplitudes(d, rng);
        let spec = BranchSpec::new("S", a.clone(), 0.0).unwrap();
        let psi = premeasure(&spec.initial_state(&["A", "E"]).unwrap(), "S", "A").unwrap();
        let phi = entangle_environment(&psi, "A", "E").unwrap();
        let rho = phi.partial_trace(&["S", "A"]).unwrap();
        let m = rho.matrix();
        for i in 0..d * d {
            for j in 0..d * d {
                let (si, ai, sj, aj) = (i / d, i % d, j / d, j % d);
                let expected = if i == j && si == ai && sj == aj { a[si].norm_sqr() } else { 0.0 };
                let dev = (m[(i, j)] - r(expected)).norm();
                if i == j {
                    worst_diag = worst_diag.max(dev);
                } else {
                    worst_off = worst_off.max(m[(i, j)].norm());
                }
                ensure(dev < 1e-12, || format!("d={d}: entry ({i},{j}) off by {dev:e}"))?;
            }
        }
    }
    Ok(format!("100 states, max off-diagonal {worst_off:.1e}, max diagonal error {worst_diag:.1e}"))
}

fn criterion_4(rng: &mut ChaCha8Rng) -> Check {
    let mut subsets = 0;
    for n in 2..=16usize {
        let s = random_orthonormal(n, n, rng);
        let e = random_orthonormal(n, n, rng);
        let psi = schmidt_state(&vec![1.0; n], &s, &e);
        let p = equal_amplitude_probabilities(&psi, &["S"]).map_err(|e| e.to_string())?;
        ensure(p.len() == n, || format!("N={n}: {} outcomes", p.len()))?;
        for x in &p {
            ensure((x - 1.0 / n as f64).abs() < 1e-12, || format!("N={n}: p = {x}"))?;
        }
        for _ in 0..8 {
            let picked: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
            let q = equal_amplitude_subset_probability(&psi, &["S"], &picked).map_err(|e| e.to_string())?;
            let sum: f64 = picked.iter().map(|k| p[*k]).sum();
            ensure(q == picked.len() as f64 / n as f64, || format!("N={n}: subset {picked:?} gave {q}"))?;
            ensure((q - sum).abs() < 1e-12, || format!("N={n}: subset {picked:?} not additive"))?;
            subsets += 1;
        }
    }
    Ok(format!("N = 2..16, {subsets} subsets additive"))
}

fn criterion_5(rng: &mut ChaCha8Rng) -> Check {
    let (mut yes, mut no, mut phases) = (0, 0, 0);
    for trial in 0..200 {
        let (ds, de) = (rng.random_range(2..=6), rng.random_range(2..=6));
        // half the states are maximally entangled, where every system unitary is envariant
        let psi = if trial % 2 == 0 && ds <= de {
            schmidt_state(&vec![1.0; ds], &random_orthonormal(ds, ds, rng), &random_orthonormal(ds, de, rng))
        } else {
            random_state(SpaceLayout::new([("S", ds), ("E", de)]).unwrap(), rng).unwrap()
        };
        let u = SubsystemUnitary::new(&["S"], random_unitary(ds, rng)).unwrap();
        let v = is_envariant(&psi, &u, &["E"]).map_err(|e| e.to_string())?;
        if v.envariant {
            let undo = v.undo.as_ref().ok_or("true verdict without undo")?;
            let residual = psi.apply_unitary(&u).unwrap().apply_unitary(undo).unwrap().phase_distance(&psi).unwrap();
            ensure(residual < 1e-10, || format!("undo residual {residual:e}"))?;
            yes += 1;
        } else {
            match v.reason {
                Some(NotEnvariant::ReducedStateChanged { trace_distance }) if trace_distance > 1e-10 => no += 1,
                other => return Err(format!("false verdict without witness: {other:?}")),
            }
        }

        let sd = psi.schmidt_decompose(&["S"]).unwrap();
        let angles: Vec<f64> = (0..sd.len()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let w = schmidt_phase_unitary(&sd, &angles).unwrap();
        let v = is_envariant(&psi, &w, &["E"]).map_err(|e| e.to_string())?;
        ensure(v.envariant && v.residual < 1e-10, || format!("Schmidt phases rejected: {:?}", v.reason))?;
        phases += 1;
    }
    Ok(format!("{yes} envariant / {no} witnessed among random unitaries, {phases} Schmidt-phase unitaries envariant"))
}

fn criterion_6(rng: &mut ChaCha8Rng) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=4usize);
        let m = rng.random_range(n.max(2)..=512usize);
        // random composition of m into n positive parts
        let mut cuts: Vec<usize> = Vec::new();
        while cuts.len() < n - 1 {
            let c = rng.random_range(1..m);
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
        cuts.sort_unstable();
        let mut counts = Vec::with_capacity(n);
        let mut prev = 0;
        for c in cuts.into_iter().chain(std::iter::once(m)) {
            counts.push(c - prev);
            prev = c;
        }
        let lambda: Vec<f64> = counts.iter().map(|c| (*c as f64 / m as f64).sqrt()).collect();
        let ds = rng.random_range(n.max(2)..=4);
        let psi = schmidt_state(&lambda, &random_orthonormal(n, ds, rng), &random_orthonormal(n, m, rng));
        let got = born_counting(&psi, &["S"], 1e-10, DEFAULT_M_CAP)
            .map_err(|e| format!("counts {counts:?} of {m}: {e} {:?}", psi.schmidt_decompose(&["S"]).unwrap().coefficients()))?;
        let mut expected: Vec<f64> = counts.iter().map(|c| *c as f64 / m as f64).collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (p, q) in got.probabilities.iter().zip(&expected) {
            worst = worst.max((p - q).abs());
            ensure((p - q).abs() < 1e-10, || format!("counts {counts:?}: {:?}", got.probabilities))?;
        }
    }
    Ok(format!("200 rational spectra, worst gap {worst:.1e}"))
}

fn criterion_7() -> Check {
    let target = 1f64.cos().powi(2);
    let l = SpaceLayout::new([("S", 2), ("E", 2)]).unwrap();
    let psi = PureState::new(l, vec![r(1f64.cos()), r(0.0), r(0.0), r(1f64.sin())]).unwrap();
    let mut widths = Vec::new();
    for m in [100u64, 1000, 10_000] {
        let b = rational_bounds(&psi, &["S"], m).map_err(|e| e.to_string())?;
        let k = b.amplitude_squared.iter().position(|p| (p - target).abs() < 1e-15).ok_or("outcome not found")?;
        let w = b.upper[k] - b.lower[k];
        ensure(w <= 2.0 / m as f64, || format!("M={m}: width {w}"))?;
        ensure(b.lower[k] <= target && target <= b.upper[k], || format!("M={m}: [{}, {}]", b.lower[k], b.upper[k]))?;
        widths.push(format!("{w:.0e}"));
    }
    Ok(format!("widths {} at M = 1e2, 1e3, 1e4", widths.join(", ")))
}

fn criterion_8(rng: &mut ChaCha8Rng) -> Check {
    let mut cases: Vec<Vec<C64>> = vec![vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)]];
    cases.extend((0..20).map(|_| {
        let d = rng.random_range(2..=4);
        random_amplitudes(d, rng)
    }));
    for a in &cases {
        let spec = BranchSpec::new("S", a.clone(), 0.0).unwrap();
        let psi = premeasure(&spec.initial_state(&["E", "M"]).unwrap(), "S", "E").unwrap();
        let before = conditional_probability(&psi, "M", "S").unwrap();
        for row in before.conditional.iter().flatten() {
            for (x, y) in row.iter().zip(&before.prior) {
                ensure((x - y).abs() < 1e-12, || format!("row {row:?} differs from prior {:?}", before.prior))?;
            }
        }
        let after = conditional_probability(&observer_record(&psi, "S", "M").unwrap(), "M", "S").unwrap();
        for (k, row) in after.conditional.iter().enumerate() {
            if a[k].norm_sqr() < 1e-12 {
                continue;
            }
            let row = row.as_ref().ok_or_else(|| format!("row {k} undefined"))?;
            for (l, p) in row.iter().enumerate() {
                let delta = if k == l { 1.0 } else { 0.0 };
                ensure((p - delta).abs() < 1e-12, || format!("p(s_{l}|mu_{k}) = {p}"))?;
            }
        }
    }
    Ok(format!("{} branch states: rows = prior before, identity after", cases.len()))
}

fn criterion_9() -> Check {
    let l = SpaceLayout::new([("S", 3)]).unwrap();
    let psi = PureState::normalized(l.clone(), vec![r(1.0), r(1.0), r(-1.0)]).unwrap();
    let psi_prime = PureState::normalized(l, vec![r(-1.0), r(1.0), r(1.0)]).unwrap();
    let w = phase_sensitivity_witness(&psi, &psi_prime).map_err(|e| e.to_string())?;
    ensure(w.observable_expectation_gap > 0.1, || format!("gap {}", w.observable_expectation_gap))?;
    ensure(w.post_entanglement_gap < 1e-12, || format!("post gap {:e}", w.post_entanglement_gap))?;
    Ok(format!(
        "interference gap {:.6}, post-record trace distance {:.1e}",
        w.observable_expectation_gap, w.post_entanglement_gap
    ))
}

/// Reduced operator by summing `ψ_i ψ_j^*` over matching traced digits.
fn partial_trace_oracle(psi: &PureState, keep: &[usize]) -> DMatrix<C64> {
    let dims = psi.layout().dims();
    let digits = |mut i: usize| {
        let mut out = vec![0; dims.len()];
        for p in (0..dims.len()).rev() {
            out[p] = i % dims[p];
            i /= dims[p];
        }
        out
    };
    let kd: usize = keep.iter().map(|p| dims[*p]).product();
    let index = |ds: &[usize]| keep.iter().fold(0, |acc, p| acc * dims[*p] + ds[*p]);
    let amps = psi.amplitudes();
    let mut rho = DMatrix::<C64>::zeros(kd, kd);
    for i in 0..amps.len() {
        let di = digits(i);
        for j in 0..amps.len() {
            let dj = digits(j);
            if (0..dims.len()).all(|p| keep.contains(&p) || di[p] == dj[p]) {
                rho[(index(&di), index(&dj))] += amps[i] * amps[j].conj();
            }
        }
    }
    rho
}

fn entropy_oracle(rho: &DMatrix<C64>) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(rho.clone()).eigenvalues;
    eig.iter().filter(|x| **x > 1e-12).map(|x| -x * x.log2()).sum()
}

fn criterion_10(rng: &mut ChaCha8Rng) -> Check {
    let mut worst_pt: f64 = 0.0;
    let mut worst_mi: f64 = 0.0;
    let mut worst_fg: f64 = 0.0;
    for trial in 0..40 {
        let n = rng.random_range(2..=4);
        let mut dims: Vec<usize> = (0..n).map(|_| rng.random_range(2..=4)).collect();
        while dims.iter().product::<usize>() > 256 {
            let last = dims.len() - 1;
            dims[last] -= 1;
        }
        let labels: Vec<String> = (0..n).map(|i| format!("Q{i}")).collect();
        let layout = SpaceLayout::new(labels.iter().zip(&dims).map(|(l, d)| (l.as_str(), *d))).unwrap();
        let psi = random_state(layout, rng).unwrap();
        let keep: Vec<usize> = (0..n).filter(|p| (trial >> p) & 1 == 1 || *p == 0).collect();
        let keep_labels: Vec<&str> = keep.iter().map(|p| labels[*p].as_str()).collect();
        let got = psi.partial_trace(&keep_labels).unwrap();
        let dev = (got.matrix() - partial_trace_oracle(&psi, &keep)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst_pt = worst_pt.max(dev);
        ensure(dev < 1e-12, || format!("partial trace off by {dev:e}"))?;

        let all: Vec<usize> = (0..n).collect();
        let (sys, frag) = (vec![0usize], vec![n - 1]);
        let joint = vec![0, n - 1];
        let mi_oracle = entropy_oracle(&partial_trace_oracle(&psi, &sys))
            + entropy_oracle(&partial_trace_oracle(&psi, &frag))
            - entropy_oracle(&partial_trace_oracle(&psi, if n == 2 { &all } else { &joint }));
        let split = FragmentSpec::new(&[labels[0].as_str()], &[labels[n - 1].as_str()]).unwrap();
        let mi = mutual_information(&psi, &split).unwrap();
        let dev = (mi - mi_oracle.max(0.0)).abs();
        worst_mi = worst_mi.max(dev);
        ensure(dev < 1e-12, || format!("mutual information off by {dev:e}"))?;
    }

    for _ in 0..40 {
        let ds = rng.random_range(2..=4usize);
        let n = rng.random_range(1..=ds.min(3));
        let max_m = ((256 / ds) as f64).sqrt() as usize;
        // distinct positive counts summing to at most max_m
        let mut counts: Vec<u64> = Vec::new();
        let mut m = 0;
        for c in (1..=max_m as u64).rev() {
            if counts.len() < n && m + c as usize <= max_m && rng.random_bool(0.6) {
                counts.push(c);
                m += c as usize;
            }
        }
        if counts.is_empty() {
            counts.push(1);
            m = 1;
        }
        counts.sort_by(|a, b| b.cmp(a));
        let lambda: Vec<f64> = counts.iter().map(|c| (*c as f64 / m as f64).sqrt()).collect();
        let s = random_orthonormal(counts.len(), ds, rng);
        let e = random_orthonormal(counts.len(), m.max(2), rng);
        let psi = schmidt_state(&lambda, &s, &e);
        let plan = FineGrainingPlan::new(&["S"], counts.clone(), "A").unwrap();
        let got = fine_grain(&psi, &plan).map_err(|e| e.to_string())?;

        // term enumeration: Σ_j λ_k/√m_k |s_k⟩|j⟩|j⟩ with s_k phased so its
        // first significant entry is real positive
        let de = m.max(2);
        let mut want = vec![r(0.0); ds * de * m];
        let mut j = 0;
        for ((sk, l), mk) in s.iter().zip(&lambda).zip(&counts) {
            let first = sk.iter().find(|z| z.norm() > 1e-10).unwrap();
            let sk = sk * (first.conj() / first.norm());
            for _ in 0..*mk {
                for i in 0..ds {
                    want[(i * de + j) * m + j] += sk[i] * (l / (*mk as f64).sqrt());
                }
                j += 1;
            }
        }
        let dev = got.amplitudes().iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst_fg = worst_fg.max(dev);
        ensure(dev < 1e-12, || format!("fine-grained counts {counts:?} off by {dev:e}"))?;
    }
    Ok(format!(
        "max deviations: partial trace {worst_pt:.1e}, mutual information {worst_mi:.1e}, fine-graining {worst_fg:.1e}"
    ))
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let criteria: Vec<(&str, Box<dyn FnMut() -> Check>)> = vec![
        ("worked counting example", Box::new(criterion_1)),
        ("redundancy ratio equals record count", Box::new(criterion_2)),
        ("decohered pointer form", Box::new({
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            move || criterion_3(&mut rng)
        })),
        ("equal-amplitude probabilities", Box::new({
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            move || criterion_4(&mut rng)
        })),
        ("envariance soundness and necessity", Box::new({
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            move || criterion_5(&mut rng)
        })),
        ("counting matches squared amplitudes", Box::new({
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            move || criterion_6(&mut rng)
        })),
        ("rational bounds converge", Box::new(criterion_7)),
        ("conditional collapse", Box::new({
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            move || criterion_8(&mut rng)
        })),
        ("no envariance without entanglement", Box::new(criterion_9)),
        ("oracle equivalence", Box::new(move || criterion_10(&mut rng))),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, mut run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(&mut run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", 10 - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
