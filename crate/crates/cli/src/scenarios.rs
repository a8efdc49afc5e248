//! The five experiment pipelines. Each builds its state from the validated
//! configuration, runs the library operations, and returns its tables with
//! the largest residual it saw for every invariant it checks.

use std::time::Instant;

use nalgebra::DMatrix;

use envlab::envariance::{
    born_counting, commensurate_counts, envariant_swap, is_envariant, phase_sensitivity_witness, rational_bounds,
    schmidt_phase_unitary, InterferenceObservable, ProbabilityBound,
};
use envlab::info_measures::{
    basis_conditioned_mutual_information, fourier_basis, mutual_information, pointer_basis, redundancy_report,
    subsystem_entropy, FragmentSpec,
};
use envlab::measurement_models::{broadcast_environment, cascade_environment, premeasure, BranchSpec};
use envlab::{PureState, SpaceLayout, SubsystemUnitary, C64, NORM_TOLERANCE};

use crate::config::{check_dimensions, load_state, ScenarioConfig, ScenarioKind};
use crate::error::CliError;
use crate::report::{Cell, RunResult, Table, ToleranceEntry};

/// Residual allowed for exact reconstructions (undo maps, counterswaps).
const EXACT: f64 = 1e-10;

/// Denominators of the convergence study.
const CONVERGENCE_M: [u64; 3] = [100, 1000, 10_000];

type Output = (Vec<Table>, Vec<ToleranceEntry>);

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunResult, CliError> {
    check_dimensions(cfg)?;
    let start = Instant::now();
    let (tables, tolerance) = match cfg.scenario {
        ScenarioKind::Einselect => einselect(cfg)?,
        ScenarioKind::Redundancy => redundancy(cfg)?,
        ScenarioKind::Born => born(cfg)?,
        ScenarioKind::Envariance => envariance(cfg)?,
        ScenarioKind::Cascade => cascade(cfg)?,
    };
    Ok(RunResult { config: cfg.clone(), tables, tolerance, duration: start.elapsed() })
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// `S` in `Σ_k a_k |k⟩` with ready `A` and `ready` subsystems.
fn prepared(cfg: &ScenarioConfig, ready: &[String]) -> Result<PureState, CliError> {
    let spec = BranchSpec::new("S", cfg.amplitudes.clone(), cfg.overlap)?;
    Ok(spec.initial_state_with_guard(ready, cfg.dim_guard)?)
}

/// `S`, `A`, `E_1..E_N` after premeasurement and broadcast.
fn recorded(cfg: &ScenarioConfig, envs: &[String], extra: &[String]) -> Result<(PureState, PureState, PureState), CliError> {
    let mut ready = vec!["A".to_string()];
    ready.extend(envs.iter().cloned());
    ready.extend(extra.iter().cloned());
    let initial = prepared(cfg, &ready)?;
    let premeasured = premeasure(&initial, "S", "A")?;
    let decohered = broadcast_environment(&premeasured, "A", envs, cfg.overlap)?;
    Ok((initial, premeasured, decohered))
}

fn einselect(cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let d = cfg.pointer_dimension();
    let envs = labels("E", cfg.env_count);
    let (initial, premeasured, decohered) = recorded(cfg, &envs, &[])?;
    let s_a = FragmentSpec::new(&["S"], &["A"])?;
    let sa_e = FragmentSpec::new(&["S", "A"], &envs)?;

    let mut stages = Table::new("stages", &["stage", "offdiag_norm", "mi_s_a", "mi_sa_e", "purity"]);
    let mut norm_residual: f64 = 0.0;
    for (name, psi) in [("initial", &initial), ("premeasured", &premeasured), ("decohered", &decohered)] {
        let rho = psi.partial_trace(&["S", "A"])?;
        norm_residual = norm_residual.max((psi.norm() - 1.0).abs());
        stages.push(vec![
            name.into(),
            rho.off_diagonal_norm().into(),
            mutual_information(psi, &s_a)?.into(),
            mutual_information(psi, &sa_e)?.into(),
            rho.purity().into(),
        ]);
    }

    let rho = decohered.partial_trace(&["S", "A"])?;
    let diag = rho.diagonal();
    let mut pointer = Table::new("pointer_diagonal", &["outcome_index", "amplitude_squared", "rho_sa_diagonal"]);
    let mut diag_residual: f64 = 0.0;
    for (k, a) in cfg.amplitudes.iter().enumerate() {
        let entry = diag[k * d + k];
        diag_residual = diag_residual.max((entry - a.norm_sqr()).abs());
        pointer.push(vec![k.into(), a.norm_sqr().into(), entry.into()]);
    }

    let mut tolerance = vec![
        ToleranceEntry::new("state_norm", norm_residual, NORM_TOLERANCE),
        ToleranceEntry::new("pointer_diagonal", diag_residual, cfg.tolerance),
    ];
    if cfg.overlap == 0.0 {
        tolerance.push(ToleranceEntry::new("decohered_offdiag", rho.off_diagonal_norm(), cfg.tolerance));
    }
    Ok((vec![stages, pointer], tolerance))
}

fn redundancy(cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let envs = labels("E", cfg.env_count);
    let (_, _, psi) = recorded(cfg, &envs, &[])?;
    let fragments: Vec<Vec<String>> = envs.iter().map(|e| vec![e.clone()]).collect();
    let report = redundancy_report(&psi, &["S", "A"], &fragments)?;

    let mut table = Table::new("redundancy", &["fragment_index", "mi_bits", "cumulative_bits", "ratio"]);
    let mut bound_excess: f64 = 0.0;
    for (k, (mi, cum)) in report.per_fragment_mi.iter().zip(report.cumulative()).enumerate() {
        let he = subsystem_entropy(&psi, &[envs[k].as_str()])?;
        bound_excess = bound_excess.max(mi - 2.0 * report.system_entropy.min(he));
        table.push(vec![(k + 1).into(), (*mi).into(), cum.into(), report.ratio.into()]);
    }
    let mut tolerance = vec![ToleranceEntry::new("mi_within_entropy_bound", bound_excess.max(0.0), cfg.tolerance)];
    if cfg.overlap == 0.0 {
        tolerance.push(ToleranceEntry::new("ratio_equals_env_count", (report.ratio - cfg.env_count as f64).abs(), 1e-9));
    }
    Ok((vec![table], tolerance))
}

/// Counts `⌊p_k M⌋` topped up by largest remainder so they sum to `M`.
fn nearest_counts(b: &ProbabilityBound) -> Vec<u64> {
    let m = b.m_used;
    let mut counts = b.lower_counts.clone();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    let frac = |k: usize| b.amplitude_squared[k] * m as f64 - b.lower_counts[k] as f64;
    order.sort_by(|x, y| frac(*y).total_cmp(&frac(*x)));
    let mut left = m.saturating_sub(counts.iter().sum());
    for k in order.into_iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    counts
}

fn born(cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let (psi, system, from_amplitudes) = match &cfg.state {
        Some(path) => (load_state(path, cfg.dim_guard)?, cfg.system.clone(), false),
        None => {
            let psi = premeasure(&prepared(cfg, &["E".to_string()])?, "S", "E")?;
            (psi, vec!["S".to_string()], true)
        }
    };
    let sd = psi.schmidt_decompose(&system).map_err(|e| match e {
        envlab::Error::UnknownLabel(l) => CliError::field("system", format!("{l:?} is not in the state's layout {}", psi.layout())),
        envlab::Error::InvalidBipartition => CliError::field("system", "must leave at least one environment subsystem"),
        other => other.into(),
    })?;
    let p: Vec<f64> = sd.coefficients().iter().map(|l| l * l).collect();
    if (cfg.m_cap as usize) < p.len() {
        return Err(CliError::field("m_cap", format!("must be at least the number of outcomes, {}", p.len())));
    }

    let (counted, m, method) = match commensurate_counts(&p, cfg.tolerance, cfg.m_cap) {
        Some(_) => {
            let c = born_counting(&psi, &system, cfg.tolerance, cfg.m_cap)?;
            (c.probabilities, c.total, "counting")
        }
        None => {
            let b = rational_bounds(&psi, &system, cfg.m_cap)?;
            let m = b.m_used;
            (nearest_counts(&b).iter().map(|c| *c as f64 / m as f64).collect(), m, "bounds")
        }
    };

    // with prepared amplitudes each Schmidt vector is a pointer state; list rows by pointer index
    let mut rows: Vec<(usize, f64, f64)> = if from_amplitudes {
        let mut rows: Vec<(usize, f64, f64)> = (0..cfg.pointer_dimension()).map(|k| (k, 0.0, 0.0)).collect();
        for (k, v) in sd.left_basis().iter().enumerate() {
            let j = v.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|(j, _)| j).unwrap_or(0);
            rows[j] = (j, counted[k], p[k]);
        }
        rows
    } else {
        (0..p.len()).map(|k| (k, counted[k], p[k])).collect()
    };
    rows.sort_by_key(|r| r.0);

    let mut table = Table::new("born", &["outcome_index", "p_counting", "p_amplitude_squared", "abs_gap"]);
    let mut worst_gap: f64 = 0.0;
    for (k, pc, pa) in rows {
        worst_gap = worst_gap.max((pc - pa).abs());
        table.push(vec![k.into(), pc.into(), pa.into(), (pc - pa).abs().into()]);
    }
    let mut summary = Table::new("counting", &["method", "m_used"]);
    summary.push(vec![method.into(), m.into()]);

    let mut convergence = Table::new("convergence", &["m", "max_width", "width_bound", "all_contain"]);
    let mut width_ratio: f64 = 0.0;
    for m in CONVERGENCE_M.into_iter().filter(|m| *m <= cfg.m_cap && *m as usize >= p.len()) {
        let b = rational_bounds(&psi, &system, m)?;
        let bound = 2.0 / m as f64;
        width_ratio = width_ratio.max(b.max_width() / bound);
        convergence.push(vec![m.into(), b.max_width().into(), bound.into(), b.contains_all().into()]);
    }

    let tolerance = vec![
        ToleranceEntry::new("counting_vs_amplitude_squared", worst_gap, cfg.tolerance + 1.0 / m as f64),
        ToleranceEntry::new("width_over_bound", width_ratio, 1.0),
    ];
    Ok((vec![table, summary, convergence], tolerance))
}

fn permutation(d: usize, a: usize, b: usize) -> DMatrix<C64> {
    let mut u = DMatrix::<C64>::identity(d, d);
    u.swap_rows(a, b);
    u
}

fn hadamard_block(d: usize) -> DMatrix<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut u = DMatrix::<C64>::identity(d, d);
    u[(0, 0)] = s;
    u[(0, 1)] = s;
    u[(1, 0)] = s;
    u[(1, 1)] = -s;
    u
}

fn observable_name(o: Option<InterferenceObservable>) -> String {
    match o {
        Some(InterferenceObservable::X { a, b }) => format!("X_{a}_{b}"),
        Some(InterferenceObservable::Y { a, b }) => format!("Y_{a}_{b}"),
        None => "none".to_string(),
    }
}

fn envariance(cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let d = cfg.pointer_dimension();
    let psi = broadcast_environment(&prepared(cfg, &["E".to_string()])?, "S", &["E"], cfg.overlap)?;
    let sd = psi.schmidt_decompose(&["S"])?;

    let mut table = Table::new("certificates", &["certificate", "envariant", "residual", "reduced_change"]);
    let mut undo_residual: f64 = 0.0;
    let phases: Vec<f64> = (0..sd.len()).map(|k| 0.5 * (k + 1) as f64).collect();
    let candidates = [
        ("schmidt_phase", schmidt_phase_unitary(&sd, &phases)?),
        ("pointer_swap_0_1", SubsystemUnitary::new(&["S"], permutation(d, 0, 1))?),
        ("hadamard_0_1", SubsystemUnitary::new(&["S"], hadamard_block(d))?),
    ];
    for (name, u) in &candidates {
        let v = is_envariant(&psi, u, &["E"])?;
        if v.envariant {
            undo_residual = undo_residual.max(v.residual);
        }
        table.push(vec![(*name).into(), v.envariant.into(), v.residual.into(), v.reduced_change.into()]);
    }
    let mut counterswap_residual: f64 = 0.0;
    if sd.len() >= 2 {
        let (swapped, counter) = envariant_swap(&psi, 0, 1, &sd)?;
        let residual = swapped.apply_unitary(&counter)?.phase_distance(&psi)?;
        let change = psi.partial_trace(&["S"])?.trace_distance(&swapped.partial_trace(&["S"])?)?;
        let restored = residual < EXACT;
        if restored {
            counterswap_residual = residual;
        }
        table.push(vec!["swap_counterswap".into(), restored.into(), residual.into(), change.into()]);
    } else {
        table.push(vec!["swap_counterswap".into(), "undefined".into(), "undefined".into(), "undefined".into()]);
    }

    // the same phases on an isolated system are visible to interference
    let layout = SpaceLayout::with_guard([("S", d)], cfg.dim_guard)?;
    let bare = PureState::new(layout.clone(), cfg.amplitudes.clone())?;
    let flipped: Vec<C64> = cfg.amplitudes.iter().enumerate().map(|(k, a)| if k % 2 == 1 { -a } else { *a }).collect();
    let w = phase_sensitivity_witness(&bare, &PureState::new(layout, flipped)?)?;
    let mut witness = Table::new("phase_witness", &["observable", "expectation_gap", "post_record_gap"]);
    witness.push(vec![
        Cell::Text(observable_name(w.observable)),
        w.observable_expectation_gap.into(),
        w.post_entanglement_gap.into(),
    ]);

    let tolerance = vec![
        ToleranceEntry::new("undo_residual", undo_residual, EXACT),
        ToleranceEntry::new("counterswap_residual", counterswap_residual, EXACT),
        ToleranceEntry::new("post_record_gap", w.post_entanglement_gap, cfg.tolerance),
    ];
    Ok((vec![table, witness], tolerance))
}

fn cascade(cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let d = cfg.pointer_dimension();
    let immediate = labels("E", cfg.env_count);
    let distant = labels("F", cfg.env_count);
    let (_, _, psi) = recorded(cfg, &immediate, &distant)?;
    let out = cascade_environment(&psi, &immediate, &distant)?;
    let (pointer, conjugate) = (pointer_basis(d), fourier_basis(d));

    let mut table = Table::new(
        "cascade",
        &["fragment_index", "immediate_pointer_bits", "distant_pointer_bits", "distant_conjugate_bits"],
    );
    let mut gap: f64 = 0.0;
    for (k, (e, f)) in immediate.iter().zip(&distant).enumerate() {
        let near = basis_conditioned_mutual_information(&out, &FragmentSpec::new(&["S"], &[e])?, &pointer)?;
        let split = FragmentSpec::new(&["S"], &[f])?;
        let far = basis_conditioned_mutual_information(&out, &split, &pointer)?;
        let conj = basis_conditioned_mutual_information(&out, &split, &conjugate)?;
        gap = gap.max((far - near).abs());
        table.push(vec![(k + 1).into(), near.into(), far.into(), conj.into()]);
    }
    Ok((vec![table], vec![ToleranceEntry::new("distant_matches_immediate", gap, cfg.tolerance)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate, AmplitudeInput, RawConfig};

    fn run(kind: ScenarioKind, amps: &[&str], env_count: i64) -> RunResult {
        let raw = RawConfig {
            amplitudes: Some(amps.iter().map(|a| AmplitudeInput::Text(a.to_string())).collect()),
            env_count: Some(env_count),
            ..Default::default()
        };
        run_scenario(&validate(kind, raw, 1 << 20).unwrap()).unwrap()
    }

    fn all_ok(r: &RunResult) {
        for e in &r.tolerance {
            assert!(e.ok(), "{}: {} > {}", e.invariant, e.max_residual, e.limit);
        }
    }

    #[test]
    fn born_two_thirds() {
        let r = run(ScenarioKind::Born, &["sqrt(2/3)", "sqrt(1/3)"], 1);
        let t = r.table("born").unwrap();
        assert_eq!(t.column("p_counting"), vec![2.0 / 3.0, 1.0 / 3.0]);
        // pointer order, not Schmidt order
        let r = run(ScenarioKind::Born, &["sqrt(1/3)", "sqrt(2/3)"], 1);
        assert_eq!(r.table("born").unwrap().column("p_counting"), vec![1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(r.table("convergence").unwrap().rows.len(), 3);
        all_ok(&r);
    }

    #[test]
    fn born_falls_back_to_bounds() {
        // cos(1), sin(1)
        let r = run(ScenarioKind::Born, &["0.5403023058681398", "0.8414709848078965"], 1);
        assert_eq!(r.table("counting").unwrap().rows[0][0], Cell::Text("bounds".into()));
        all_ok(&r);
    }

    #[test]
    fn redundancy_counts_records() {
        let r = run(ScenarioKind::Redundancy, &["sqrt(1/2)", "sqrt(1/2)"], 5);
        let t = r.table("redundancy").unwrap();
        assert!(t.column("ratio").iter().all(|x| (x - 5.0).abs() < 1e-9));
        assert!((t.column("cumulative_bits")[4] - 5.0).abs() < 1e-9);
        all_ok(&r);
    }

    #[test]
    fn einselect_single_branch_is_trivial() {
        let r = run(ScenarioKind::Einselect, &["1", "0"], 3);
        let t = r.table("stages").unwrap();
        for c in ["offdiag_norm", "mi_s_a", "mi_sa_e"] {
            assert!(t.column(c).iter().all(|x| *x == 0.0), "{c}");
        }
        all_ok(&r);
    }

    #[test]
    fn einselect_decoheres() {
        let r = run(ScenarioKind::Einselect, &["0.6", "0.8"], 2);
        let t = r.table("stages").unwrap();
        let off = t.column("offdiag_norm");
        assert!(off[1] > 0.5 && off[2] < 1e-12);
        assert!(t.column("mi_sa_e")[1].abs() < 1e-12);
        all_ok(&r);
    }

    #[test]
    fn envariance_certificates() {
        let r = run(ScenarioKind::Envariance, &["sqrt(1/2)", "sqrt(1/2)"], 1);
        let t = r.table("certificates").unwrap();
        assert!(t.rows.iter().all(|row| row[1] == Cell::Bool(true)), "{:?}", t.rows);
        let r = run(ScenarioKind::Envariance, &["0.6", "0.8"], 1);
        let verdicts: Vec<Cell> = r.table("certificates").unwrap().rows.iter().map(|row| row[1].clone()).collect();
        assert_eq!(verdicts, [true, false, false, false].map(Cell::Bool));
        all_ok(&r);
    }

    #[test]
    fn cascade_keeps_pointer_information() {
        let r = run(ScenarioKind::Cascade, &["sqrt(1/2)", "sqrt(1/2)"], 2);
        let t = r.table("cascade").unwrap();
        assert!(t.column("distant_pointer_bits").iter().all(|x| (x - 1.0).abs() < 1e-10));
        assert!(t.column("distant_conjugate_bits").iter().all(|x| x.abs() < 1e-10));
        all_ok(&r);
    }
}
