//! Acceptance criteria: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use mosq_core::integrator::advance;
use mosq_core::recipes::{fig2a, fig2b, fig2c, fig5, random_battery, section3};
use mosq_core::{
    basin_bound, check_persistence_condition, classify_regime, compare_averaged, compute_integrals,
    find_fixed_points, g0_thresholds, integrate, inverse_third_derivative, omega_limit,
    p2_zero_closed_form, par, poincare_eval, sweep_g0, ultimate_bound, BifurcationType, Error,
    ModelSpec, Numerics, RegimeCase, Stability, Tolerances, Variant,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn p2_reproduction() -> Outcome {
    let cases: [(&str, ModelSpec, f64, f64); 3] = [
        ("a", fig2a(5.0 / 6.0), 2.6682, 5e-3),
        ("b", fig2b(2.0), 0.0, 1e-3),
        ("c", fig2c(16.0 / 6.5), -0.3056, 5e-3),
    ];
    let mut detail = Vec::new();
    for (name, m, target, band) in cases {
        let closed = p2_zero_closed_form(&m).map_err(err)?;
        let numeric = poincare_eval(&m, 0.0, tol()).map_err(err)?.d2p;
        for (kind, v) in [("closed", closed), ("numeric", numeric)] {
            ensure((v - target).abs() < band, || {
                format!("fig2{name} {kind} P''(0) = {v:.6} outside {target} +- {band}")
            })?;
        }
        detail.push(format!(
            "fig2{name} closed={closed:.6} numeric={numeric:.6}"
        ));
    }
    Ok(detail.join(", "))
}

fn bifurcation_types() -> Outcome {
    let num = Numerics::default();
    let families: [(&str, ModelSpec, f64, BifurcationType, bool, f64); 3] = [
        (
            "fig2a",
            fig2a(0.0),
            1.5,
            BifurcationType::Backward,
            false,
            0.83333,
        ),
        (
            "fig2b",
            fig2b(0.0),
            3.0,
            BifurcationType::Transcritical,
            true,
            2.0,
        ),
        (
            "fig2c",
            fig2c(0.0),
            3.5,
            BifurcationType::Transcritical,
            false,
            2.46154,
        ),
    ];
    let mut detail = Vec::new();
    for (name, m, g_max, kind, boundary, critical) in families {
        let start = Instant::now();
        let d = sweep_g0(&m, 0.0, g_max, 200, &num).map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        let found = d.critical_g0.unwrap_or(f64::NAN);
        ensure(d.bifurcation_type == kind && d.boundary == boundary, || {
            format!(
                "{name}: got {:?} (boundary {})",
                d.bifurcation_type, d.boundary
            )
        })?;
        ensure((found - critical).abs() <= 1e-4, || {
            format!("{name}: critical g0 {found} not within 1e-4 of {critical}")
        })?;
        ensure(secs < 60.0, || format!("{name}: sweep took {secs:.1} s"))?;
        let past = d.points.iter().filter(|p| p.g0 > found + 1e-3);
        let past_max = past
            .map(|p| p.fixed_points.positive_count())
            .max()
            .unwrap_or(0);
        if kind == BifurcationType::Backward {
            ensure(past_max == 2, || {
                format!("{name}: no bistable window past critical")
            })?;
        } else {
            ensure(past_max == 0, || {
                format!("{name}: positive branch past critical")
            })?;
        }
        detail.push(format!("{name} {kind:?} g*={found:.6} {secs:.1}s"));
    }
    Ok(detail.join(", "))
}

fn trichotomy() -> Outcome {
    let num = Numerics::default();
    let limits = |g0: f64| -> Result<Vec<f64>, String> {
        [0.2, 2.5]
            .iter()
            .map(|&w0| {
                omega_limit(&fig2a(g0), w0, num.max_periods, num.omega_tol, tol()).map_err(err)
            })
            .collect()
    };
    let l = limits(0.5)?;
    ensure(l[0] > 0.0 && (l[0] - l[1]).abs() <= 1e-6, || {
        format!("g0=0.5 limits {l:?} are not one positive value")
    })?;
    let persist = l[0];
    let l = limits(0.9)?;
    ensure(l[0] == 0.0 && l[1] > 0.0, || {
        format!("g0=0.9 limits {l:?} do not split")
    })?;
    let split = l[1];
    let m = fig2a(1.0);
    let report = classify_regime(&m, &num).map_err(err)?;
    let l = limits(1.0)?;
    let stable: Vec<f64> = report
        .fixed_points
        .points
        .iter()
        .filter(|p| p.stability == Stability::Stable)
        .map(|p| p.w_star)
        .collect();
    let consistent = match report.case {
        RegimeCase::GlobalExtinction => l.iter().all(|&x| x == 0.0),
        RegimeCase::GlobalPersistence => (l[0] - l[1]).abs() <= 1e-6 && l[0] > 0.0,
        RegimeCase::BiStability | RegimeCase::SemiStable => l
            .iter()
            .all(|&x| stable.iter().any(|&s| (x - s).abs() <= 1e-6)),
        _ => false,
    };
    ensure(consistent, || {
        format!("g0=1 case {:?} inconsistent with limits {l:?}", report.case)
    })?;
    Ok(format!(
        "g0=0.5 -> {persist:.6}, g0=0.9 -> 0 / {split:.6}, g0=1 -> {:?} {:?}",
        report.case, l
    ))
}

fn worked_example() -> Outcome {
    let m = section3();
    let ints = compute_integrals(&m);
    let i2 = ints.i2.unwrap_or(f64::NAN);
    ensure(
        (ints.i1 + 0.5375).abs() <= 1e-12 && (i2 - 0.9625).abs() <= 1e-12,
        || format!("I1 = {}, I2 = {i2}", ints.i1),
    )?;
    ensure(check_persistence_condition(&m, 1.0), || {
        "persistence condition false".into()
    })?;
    let fps = find_fixed_points(&m, &Numerics::default()).map_err(err)?;
    ensure(fps.positive_count() == 2, || {
        format!("{} positive fixed points", fps.positive_count())
    })?;
    let bound = basin_bound(&m).ok_or("no basin bound")?;
    ensure((bound - 0.026380).abs() <= 1e-5, || {
        format!("basin bound {bound}")
    })?;
    let num = Numerics::default();
    for k in 1..=10 {
        let w0 = bound * k as f64 / 11.0;
        let l = omega_limit(&m, w0, num.max_periods, num.omega_tol, tol()).map_err(err)?;
        ensure(l == 0.0, || format!("w0 = {w0} tends to {l}"))?;
    }
    Ok(format!(
        "I1={} I2={i2} fixed points {:?} bound={bound:.7}",
        ints.i1,
        fps.positive().iter().map(|p| p.w_star).collect::<Vec<_>>()
    ))
}

fn averaged_splits() -> Outcome {
    let num = Numerics::default();
    let start = Instant::now();
    let f4 = compare_averaged(&fig2a(0.75), &[0.4], num.max_periods, &num).map_err(err)?;
    let f5 = compare_averaged(&fig5(), &[1.0], num.max_periods, &num).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let (s4, a4) = (f4.seasonal.limits[0].limit, f4.averaged.limits[0].limit);
    let (s5, a5) = (f5.seasonal.limits[0].limit, f5.averaged.limits[0].limit);
    let fig5_line = format!(
        "fig5 seasonal {:?} -> {s5}, averaged {:?} -> {a5:.6}",
        f5.seasonal.regime.case, f5.averaged.regime.case
    );
    let fig4_line = format!(
        "fig4 seasonal {:?} -> {s4:.6}, averaged {:?} -> {a4:.6}",
        f4.seasonal.regime.case, f4.averaged.regime.case
    );
    ensure(
        f5.seasonal.regime.case == RegimeCase::GlobalExtinction
            && s5 == 0.0
            && f5.averaged.regime.case == RegimeCase::BiStability,
        || fig5_line.clone(),
    )?;
    ensure(s4 > 0.0 && a4 == 0.0, || {
        // the fates separate at a stronger release; report it alongside the failure
        let split = compare_averaged(&fig2a(0.922), &[0.4], num.max_periods, &num)
            .map(|c| {
                format!(
                    "at g0=0.922 seasonal -> {:.6}, averaged -> {:.6}",
                    c.seasonal.limits[0].limit, c.averaged.limits[0].limit
                )
            })
            .unwrap_or_else(|e| e.to_string());
        format!("{fig4_line}; {split}; {fig5_line}")
    })?;
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{fig4_line}; {fig5_line}; {secs:.1}s"))
}

#[derive(Default)]
struct BatteryFindings {
    count: Vec<String>,
    inverse: Vec<String>,
    lloyd: Vec<String>,
    origin: Vec<String>,
    bounds: Vec<String>,
    tags: Vec<String>,
    inverse_checked: usize,
    lloyd_checked: usize,
    /// Derivative comparisons not dominated by the rounding floor.
    lloyd_resolved: usize,
    dominated: usize,
    tags_checked: usize,
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

fn check_member(i: usize, m: &ModelSpec, num: &Numerics) -> BatteryFindings {
    let mut f = BatteryFindings::default();
    let tag = format!("#{i} {}", m.variant().name());
    let fps = match find_fixed_points(m, num) {
        Ok(fps) => fps,
        Err(e) => {
            f.count.push(format!("{tag}: {e}"));
            return f;
        }
    };
    if fps.points.len() > 3 {
        f.count
            .push(format!("{tag}: {} fixed points", fps.points.len()));
    }

    // inverse map third derivative on [0, 1.2 delta]
    if m.release_active() {
        for k in 0..20 {
            let w = 1.2 * fps.delta * k as f64 / 19.0;
            match inverse_third_derivative(m, w, tol()) {
                Ok(v) if v > 0.0 => f.inverse_checked += 1,
                Ok(v) => f.inverse.push(format!("{tag}: Q'''({w}) = {v}")),
                Err(Error::OutOfRange { .. }) => {}
                Err(e) => f.inverse.push(format!("{tag}: {e}")),
            }
        }
    }

    // Lloyd derivatives against differences of a smooth fixed-step map
    let probe = if fps.delta > 0.0 { fps.delta } else { 1.0 };
    for w in [0.5 * probe, probe] {
        let e = match poincare_eval(m, w, tol()) {
            Ok(e) => e,
            Err(e) => {
                f.lloyd.push(format!("{tag}: {e}"));
                continue;
            }
        };
        let fd = common::best_differences(|x| common::smooth_map(m, x), w);
        let lloyd = [e.dp, e.d2p, e.d3p];
        let rel = [1e-4, 1e-3, 1e-2];
        let mut ok = true;
        for k in 0..3 {
            let (value, h) = fd[k];
            // rounding in P (a few ulps per step, accumulated) divided by h^k
            let floor = 1e-12 * e.p.abs() / h.powi(k as i32 + 1);
            ok &= (lloyd[k] - value).abs() <= rel[k] * value.abs() + floor;
            if floor < rel[k] * value.abs() {
                f.lloyd_resolved += 1;
            }
        }
        if ok {
            f.lloyd_checked += 1;
        } else {
            f.lloyd.push(format!(
                "{tag} w={w:.4}: lloyd ({:.6e}, {:.6e}, {:.6e}) vs fd ({:.6e}, {:.6e}, {:.6e})",
                e.dp, e.d2p, e.d3p, fd[0].0, fd[1].0, fd[2].0
            ));
        }
    }

    // origin multiplier
    match poincare_eval(m, 0.0, tol()) {
        Ok(e) => {
            let predicted = compute_integrals(m).origin_exponent.exp();
            if !close(predicted, e.dp, 1e-8) {
                f.origin
                    .push(format!("{tag}: exp = {predicted}, P'(0) = {}", e.dp));
            }
        }
        Err(e) => f.origin.push(format!("{tag}: {e}")),
    }

    // logistic domination and the ultimate bound
    let gamma = ultimate_bound(m);
    let horizon = 3.0 * m.full_period();
    for w0 in [0.1, 0.5 * gamma] {
        match integrate(m, w0, 0.0, horizon, tol()) {
            Ok(traj) => {
                if traj
                    .samples
                    .iter()
                    .any(|&(_, w)| w > gamma * (1.0 + 1e-9) && w0 < gamma)
                {
                    f.bounds
                        .push(format!("{tag}: trajectory from {w0} exceeds bound {gamma}"));
                }
                if !matches!(m.variant(), Variant::CompetitionSurvival { .. }) {
                    let times: Vec<f64> = traj.samples.iter().map(|s| s.0).collect();
                    let upper = common::logistic_majorant(m, w0, &times);
                    let bad = traj
                        .samples
                        .iter()
                        .zip(&upper)
                        .find(|(s, &u)| s.1 > u * (1.0 + 1e-8) + 1e-12);
                    match bad {
                        Some((s, u)) => f
                            .bounds
                            .push(format!("{tag}: w({}) = {} above majorant {u}", s.0, s.1)),
                        None => f.dominated += 1,
                    }
                }
            }
            Err(e) => f.bounds.push(format!("{tag}: {e}")),
        }
    }
    match advance(m, 100.0 * gamma, 0.0, 50.0 * m.full_period(), tol()) {
        Ok(w) if w <= gamma * (1.0 + 1e-3) => {}
        Ok(w) => f.bounds.push(format!(
            "{tag}: 50 periods from 100 Gamma end at {w} > {gamma}"
        )),
        Err(e) => f.bounds.push(format!("{tag}: {e}")),
    }

    // stability tags against forward orbits
    for p in &fps.points {
        if p.stability == Stability::Degenerate {
            continue;
        }
        let delta = 100.0 * num.rtol * p.w_star.max(1.0);
        for start in [p.w_star + delta, p.w_star - delta] {
            if start <= 0.0 {
                continue;
            }
            let reached = match omega_limit(m, start, num.max_periods, num.omega_tol, tol()) {
                Ok(l) => l,
                Err(Error::NotConverged { last, .. }) => last,
                Err(e) => {
                    f.tags.push(format!("{tag}: {e}"));
                    continue;
                }
            };
            let gap = (reached - p.w_star).abs();
            let ok = match p.stability {
                Stability::Stable => gap <= 1e-6 * p.w_star.max(1.0),
                _ => gap > 10.0 * delta,
            };
            f.tags_checked += 1;
            if !ok {
                f.tags.push(format!(
                    "{tag}: {} point {} (multiplier {}) from {start} reached {reached}",
                    p.stability.as_str(),
                    p.w_star,
                    p.multiplier
                ));
            }
        }
    }
    f
}

fn property_battery() -> Outcome {
    let num = Numerics::default();
    let battery = random_battery(20_240_601, 100);
    let start = Instant::now();
    let indexed: Vec<(usize, &ModelSpec)> = battery.iter().enumerate().collect();
    let found = par::map(&indexed, |&(i, m)| check_member(i, m, &num));
    let secs = start.elapsed().as_secs_f64();
    let mut failures = Vec::new();
    let mut push = |label: &str, items: Vec<String>| {
        if !items.is_empty() {
            let shown: Vec<_> = items.iter().take(3).cloned().collect();
            failures.push(format!(
                "({label}) {} failures: {}",
                items.len(),
                shown.join("; ")
            ));
        }
    };
    let gather = |pick: fn(&BatteryFindings) -> &Vec<String>| -> Vec<String> {
        found.iter().flat_map(|f| pick(f).iter().cloned()).collect()
    };
    push("a", gather(|f| &f.count));
    push("b", gather(|f| &f.inverse));
    push("c", gather(|f| &f.lloyd));
    push("d", gather(|f| &f.origin));
    push("e", gather(|f| &f.bounds));
    push("f", gather(|f| &f.tags));
    let sum = |pick: fn(&BatteryFindings) -> usize| found.iter().map(pick).sum::<usize>();
    let summary = format!(
        "{} models, {} Q''' samples, {} Lloyd probes ({} resolved derivatives), {} dominated runs, {} tag probes, {secs:.1}s",
        battery.len(),
        sum(|f| f.inverse_checked),
        sum(|f| f.lloyd_checked),
        sum(|f| f.lloyd_resolved),
        sum(|f| f.dominated),
        sum(|f| f.tags_checked)
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", failures.join(" | ")))
    }
}

fn threshold_trichotomy() -> Outcome {
    let num = Numerics::default();
    let families = common::random_base_families(99, 20);
    let results = par::map(&families, |m| -> Result<(), String> {
        let th = g0_thresholds(m).map_err(err)?;
        let (lo, hi) = match (th.g_lower, th.g_upper) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(format!("missing thresholds {th:?}")),
        };
        let case_at = |g0: f64| -> Result<RegimeCase, String> {
            let mg = m.with_g0(g0).map_err(err)?;
            Ok(classify_regime(&mg, &num).map_err(err)?.case)
        };
        let below = case_at(0.9 * lo)?;
        ensure(below == RegimeCase::GlobalPersistence, || {
            format!("0.9 g_lower -> {below:?}")
        })?;
        let above = case_at(1.1 * hi)?;
        ensure(above == RegimeCase::ExtinctionByI2, || {
            format!("1.1 g_upper -> {above:?}")
        })?;
        for k in 1..=5 {
            let g0 = lo + (hi - lo) * k as f64 / 6.0;
            let c = case_at(g0)?;
            ensure(
                matches!(
                    c,
                    RegimeCase::GlobalExtinction | RegimeCase::SemiStable | RegimeCase::BiStability
                ),
                || format!("g0 = {g0} in ({lo}, {hi}) -> {c:?}"),
            )?;
        }
        Ok(())
    });
    let bad: Vec<String> = results
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.err().map(|e| format!("#{i}: {e}")))
        .collect();
    if bad.is_empty() {
        Ok(format!("{} families, 7 g0 values each", families.len()))
    } else {
        Err(bad.join("; "))
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 P''(0) at the critical release level", p2_reproduction),
        (
            "2 bifurcation type of the three families",
            bifurcation_types,
        ),
        (
            "3 persistence / bistability / extinction trichotomy",
            trichotomy,
        ),
        ("4 constant-coefficient worked example", worked_example),
        ("5 seasonal versus averaged fates", averaged_splits),
        ("6 randomized property battery", property_battery),
        (
            "7 threshold trichotomy on random families",
            threshold_trichotomy,
        ),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
