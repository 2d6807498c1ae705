//! The invariant suite behind `mosq verify`: named checks over the figure
//! recipes, the configured model (if any) and a seeded random battery.

use mosq_core::integrator::{advance, advance_fixed_step};
use mosq_core::recipes::{fig2a, fig2b, fig2c, fig5, random_battery, section3};
use mosq_core::{
    classify_regime, compute_integrals, find_fixed_points, integrate, inverse_third_derivative,
    omega_limit, par, poincare_eval, poincare_inverse, ultimate_bound, Error, FixedPointSet,
    ModelSpec, Numerics, SeasonalFunction, Stability, Variant,
};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{CliError, Options, RunConfig};

type CheckFn = fn(&Member, &Numerics, &mut Tally);

/// Every check with a one-line description, in execution order.
pub const CHECKS: &[(&str, &str, CheckFn)] = &[
    (
        "rhs_partials",
        "analytic w-partials of F match central differences",
        rhs_partials,
    ),
    ("origin_invariant", "F(t, 0) = 0", origin_invariant),
    (
        "trajectory_shape",
        "samples monotone in t, positive, switch instants hit",
        trajectory_shape,
    ),
    (
        "ultimate_bound",
        "orbits enter and stay below the ultimate bound",
        ultimate,
    ),
    (
        "logistic_domination",
        "solutions stay below the logistic majorant",
        domination,
    ),
    (
        "map_monotone",
        "the period map is strictly increasing",
        map_monotone,
    ),
    (
        "forward_backward",
        "backward integration inverts the period map",
        forward_backward,
    ),
    (
        "origin_multiplier",
        "exp of the origin integral equals P'(0)",
        origin_multiplier,
    ),
    (
        "lloyd_vs_fd",
        "Lloyd derivatives match differences of a smooth map",
        lloyd_vs_fd,
    ),
    (
        "fixed_point_count",
        "at most three fixed points",
        fixed_point_count,
    ),
    (
        "above_delta",
        "P(w) < w above the largest fixed point",
        above_delta,
    ),
    (
        "inverse_d_concavity",
        "third derivative of the inverse map is positive",
        inverse_concavity,
    ),
    (
        "stability_tags",
        "stability tags predict forward orbits",
        stability_tags,
    ),
    (
        "regime_consistency",
        "classification succeeds with theorem tags",
        regime_consistency,
    ),
];

pub struct Member {
    pub label: String,
    pub model: ModelSpec,
    seed: u64,
    fixed_points: OnceLock<Result<FixedPointSet, String>>,
}

#[derive(Default)]
pub struct Tally {
    cases: usize,
    failures: Vec<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(msg());
        }
    }

    fn error(&mut self, e: impl std::fmt::Display) {
        self.cases += 1;
        self.failures.push(e.to_string());
    }
}

#[derive(Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub description: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub failure_count: usize,
    /// The first few failures, each prefixed by the battery member.
    pub failures: Vec<String>,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    command: &'static str,
    seed: u64,
    battery_size: usize,
    rtol: f64,
    atol: f64,
    passed: bool,
    checks: &'a [CheckOutcome],
}

/// Reference scenarios, the configured model and `random` seeded battery members.
pub fn battery(config: Option<&RunConfig>, seed: u64, random: usize) -> Vec<Member> {
    let mut named: Vec<(String, ModelSpec)> = vec![
        ("section3".into(), section3()),
        ("fig2a_g0.5".into(), fig2a(0.5)),
        ("fig2a_g0.75".into(), fig2a(0.75)),
        ("fig2a_g0.9".into(), fig2a(0.9)),
        ("fig2a_g0.8333".into(), fig2a(5.0 / 6.0)),
        ("fig2a_g1".into(), fig2a(1.0)),
        ("fig2b_g1".into(), fig2b(1.0)),
        ("fig2c_g2".into(), fig2c(2.0)),
        ("fig5".into(), fig5()),
        ("fig5_averaged".into(), fig5().averaged()),
    ];
    if let Some(cfg) = config {
        named.push(("config".into(), cfg.model.clone()));
    }
    for (i, m) in random_battery(seed, random).into_iter().enumerate() {
        named.push((format!("random_{i}_{}", m.variant().name()), m));
    }
    named
        .into_iter()
        .enumerate()
        .map(|(i, (label, model))| Member {
            label,
            model,
            seed: seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64),
            fixed_points: OnceLock::new(),
        })
        .collect()
}

pub fn run_checks(
    members: &[Member],
    num: &Numerics,
    only: Option<&str>,
) -> Result<Vec<CheckOutcome>, CliError> {
    let selected: Vec<&(&str, &str, CheckFn)> = match only {
        Some(name) => {
            let hit: Vec<_> = CHECKS.iter().filter(|c| c.0 == name).collect();
            if hit.is_empty() {
                let names: Vec<&str> = CHECKS.iter().map(|c| c.0).collect();
                return Err(CliError::Config(format!(
                    "unknown check {name:?}; available: {}",
                    names.join(", ")
                )));
            }
            hit
        }
        None => CHECKS.iter().collect(),
    };
    let mut outcomes = Vec::new();
    for &(name, description, check) in selected {
        let tallies = par::map(members, |m| {
            let mut t = Tally::default();
            check(m, num, &mut t);
            t.failures = t
                .failures
                .into_iter()
                .map(|f| format!("{}: {f}", m.label))
                .collect();
            t
        });
        let cases = tallies.iter().map(|t| t.cases).sum();
        let all: Vec<String> = tallies.into_iter().flat_map(|t| t.failures).collect();
        outcomes.push(CheckOutcome {
            name,
            description,
            passed: all.is_empty(),
            cases,
            failure_count: all.len(),
            failures: all.into_iter().take(5).collect(),
        });
    }
    Ok(outcomes)
}

pub fn verify(opts: &Options, only: Option<&str>, random: usize) -> Result<Vec<String>, CliError> {
    let config = match &opts.config {
        Some(_) => Some(opts.load()?),
        None => None,
    };
    let mut num = config.as_ref().map(|c| c.numerics).unwrap_or_default();
    opts.apply_overrides(&mut num)?;
    let members = battery(config.as_ref(), opts.seed, random);
    let outcomes = run_checks(&members, &num, only)?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    opts.write_json(
        "verify.json",
        &VerifyReport {
            command: "verify",
            seed: opts.seed,
            battery_size: members.len(),
            rtol: num.rtol,
            atol: num.atol,
            passed: failed == 0,
            checks: &outcomes,
        },
    )?;
    let lines: Vec<String> = outcomes
        .iter()
        .map(|o| {
            let head = format!(
                "{} {} ({} cases)",
                if o.passed { "PASS" } else { "FAIL" },
                o.name,
                o.cases
            );
            match o.failures.first() {
                Some(first) if !o.passed => {
                    format!("{head}: {} failures, e.g. {first}", o.failure_count)
                }
                _ => head,
            }
        })
        .collect();
    crate::print_lines(&lines);
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(vec![format!(
        "{} checks passed on {} models",
        outcomes.len(),
        members.len()
    )])
}

fn rel_close(got: f64, want: f64, rel: f64, floor: f64) -> bool {
    (got - want).abs() <= rel * want.abs() + floor
}

fn rhs_partials(m: &Member, _: &Numerics, t: &mut Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
    let period = m.model.full_period();
    for _ in 0..20 {
        let time = rng.gen_range(0.0..period);
        let w = rng.gen_range(0.01..10.0);
        let h = 1e-4 * w;
        let d = m.model.eval_all(time, w);
        for order in 1..=3u8 {
            let lower = |x: f64| m.model.eval_all(time, x)[order as usize - 1];
            let fd = (lower(w + h) - lower(w - h)) / (2.0 * h);
            let exact = d[order as usize];
            // rounding of the lower-order value, divided by the step
            let floor = 1e-6 * d[order as usize - 1].abs() / w + 1e-12;
            t.record(rel_close(exact, fd, 1e-6, floor), || {
                format!("order {order} at (t={time:.4}, w={w:.4}): {exact} vs {fd}")
            });
        }
    }
}

fn origin_invariant(m: &Member, _: &Numerics, t: &mut Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(m.seed ^ 1);
    for _ in 0..20 {
        let time = rng.gen_range(-50.0..50.0);
        match m.model.eval_rhs(time, 0.0) {
            Ok(v) => t.record(v == 0.0, || format!("F({time}, 0) = {v}")),
            Err(e) => t.error(e),
        }
    }
}

fn trajectory_shape(m: &Member, num: &Numerics, t: &mut Tally) {
    let end = 3.0 * m.model.full_period();
    let switches = m.model.schedule().switch_times(0.0, end);
    for w0 in [0.0, 0.05, 2.0] {
        match integrate(&m.model, w0, 0.0, end, num.tolerances()) {
            Ok(traj) => {
                let monotone = traj.samples.windows(2).all(|p| p[1].0 > p[0].0);
                let positive =
                    traj.samples
                        .iter()
                        .all(|s| if w0 > 0.0 { s.1 > 0.0 } else { s.1 == 0.0 });
                let hit = switches
                    .iter()
                    .filter(|&&s| s > 0.0 && s < end)
                    .all(|s| traj.switch_times_hit.contains(s));
                t.record(monotone && positive && hit, || {
                    format!("w0={w0}: monotone {monotone}, sign ok {positive}, switches hit {hit}")
                });
            }
            Err(e) => t.error(e),
        }
    }
}

fn ultimate(m: &Member, num: &Numerics, t: &mut Tally) {
    let gamma = ultimate_bound(&m.model);
    let period = m.model.full_period();
    match advance(
        &m.model,
        100.0 * gamma,
        0.0,
        50.0 * period,
        num.tolerances(),
    ) {
        Ok(w) => t.record(w <= gamma * (1.0 + 1e-3), || {
            format!("50 periods from 100 Gamma end at {w} > Gamma = {gamma}")
        }),
        Err(e) => t.error(e),
    }
    match integrate(&m.model, 0.5 * gamma, 0.0, 3.0 * period, num.tolerances()) {
        Ok(traj) => {
            let peak = traj.samples.iter().map(|s| s.1).fold(0.0, f64::max);
            t.record(peak <= gamma * (1.0 + 1e-9), || {
                format!("peak {peak} above Gamma = {gamma}")
            });
        }
        Err(e) => t.error(e),
    }
}

/// `w` of the logistic majorant `w' = w (a - xi w)` at each sample time, from
/// the linear equation `u' = -a u + xi` for `u = 1/w`: exact on intervals with
/// constant coefficients, fine classical RK4 otherwise.
fn logistic_majorant(m: &ModelSpec, w0: f64, times: &[f64]) -> Vec<f64> {
    let constant = |f: &SeasonalFunction| f.is_piecewise_constant();
    let exact = constant(m.a()) && constant(m.xi());
    let mut u = 1.0 / w0;
    let mut out = vec![w0];
    for pair in times.windows(2) {
        let (t0, t1) = (pair[0], pair[1]);
        if exact {
            let mid = 0.5 * (t0 + t1);
            let (a, xi) = (m.a().eval(mid), m.xi().eval(mid));
            let rest = xi / a;
            u = rest + (u - rest) * (-a * (t1 - t0)).exp();
        } else {
            let n = ((t1 - t0) / 1e-3).ceil().max(1.0) as usize;
            let h = (t1 - t0) / n as f64;
            let rate = |s: f64, u: f64| -m.a().eval(s) * u + m.xi().eval(s);
            for i in 0..n {
                let s = t0 + i as f64 * h;
                let k1 = rate(s, u);
                let k2 = rate(s + 0.5 * h, u + 0.5 * h * k1);
                let k3 = rate(s + 0.5 * h, u + 0.5 * h * k2);
                let k4 = rate(s + h, u + h * k3);
                u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        out.push(1.0 / u);
    }
    out
}

fn domination(m: &Member, num: &Numerics, t: &mut Tally) {
    // newborn survival replaces the competition term, so there is no logistic majorant
    if matches!(m.model.variant(), Variant::CompetitionSurvival { .. }) {
        return;
    }
    let slack = (100.0 * num.rtol).max(1e-9);
    for w0 in [0.1, 1.0, 5.0] {
        match integrate(
            &m.model,
            w0,
            0.0,
            2.0 * m.model.full_period(),
            num.tolerances(),
        ) {
            Ok(traj) => {
                let times: Vec<f64> = traj.samples.iter().map(|s| s.0).collect();
                let upper = logistic_majorant(&m.model, w0, &times);
                let bad = traj
                    .samples
                    .iter()
                    .zip(&upper)
                    .find(|(s, &u)| s.1 > u * (1.0 + slack));
                t.record(bad.is_none(), || {
                    let (s, u) = bad.unwrap();
                    format!("w0={w0}: w({}) = {} above majorant {u}", s.0, s.1)
                });
            }
            Err(e) => t.error(e),
        }
    }
}

fn map_monotone(m: &Member, num: &Numerics, t: &mut Tally) {
    let gamma = ultimate_bound(&m.model);
    let grid: Vec<f64> = (1..=10).map(|i| 0.15 * gamma * i as f64).collect();
    let values: Result<Vec<f64>, Error> = grid
        .iter()
        .map(|&w| advance(&m.model, w, 0.0, m.model.full_period(), num.tolerances()))
        .collect();
    match values {
        Ok(v) => t.record(v.windows(2).all(|p| p[1] > p[0]), || {
            format!("P not increasing: {v:?}")
        }),
        Err(e) => t.error(e),
    }
}

fn forward_backward(m: &Member, num: &Numerics, t: &mut Tally) {
    let gamma = ultimate_bound(&m.model);
    for w in [0.01, 0.3 * gamma, gamma] {
        let e = match poincare_eval(&m.model, w, num.tolerances()) {
            Ok(e) => e,
            Err(e) => {
                t.error(e);
                continue;
            }
        };
        let forward = match advance(&m.model, w, 0.0, m.model.full_period(), num.tolerances()) {
            Ok(p) => p,
            Err(e) => {
                t.error(e);
                continue;
            }
        };
        // relative error of the forward value is magnified by the inverse map
        let condition = ((e.p / w) / e.dp).max(1.0);
        match poincare_inverse(&m.model, forward, num.tolerances()) {
            Ok(back) => t.record(
                ((back - w) / w).abs() <= 10.0 * num.rtol * condition,
                || format!("P^-1(P({w})) = {back} (condition {condition:.3e})"),
            ),
            Err(Error::OutOfRange { .. }) => {}
            Err(e) => t.error(e),
        }
    }
}

fn origin_multiplier(m: &Member, num: &Numerics, t: &mut Tally) {
    match poincare_eval(&m.model, 0.0, num.tolerances()) {
        Ok(e) => {
            let predicted = compute_integrals(&m.model).origin_exponent.exp();
            t.record(rel_close(predicted, e.dp, 1e-8, 0.0), || {
                format!("exp(origin integral) = {predicted}, P'(0) = {}", e.dp)
            });
        }
        Err(e) => t.error(e),
    }
}

/// The member's fixed points, computed once per run.
fn fixed_points_of<'m>(m: &'m Member, num: &Numerics, t: &mut Tally) -> Option<&'m FixedPointSet> {
    let found = m
        .fixed_points
        .get_or_init(|| find_fixed_points(&m.model, num).map_err(|e| e.to_string()));
    match found {
        Ok(set) => Some(set),
        Err(e) => {
            t.error(e);
            None
        }
    }
}

/// Richardson-extrapolated central differences of orders 1 to 3 of `f` at `x`.
/// Each order is evaluated on the step ladder `x * STEPS` and the estimate that
/// agrees best with its coarser neighbour is kept, together with its step.
fn best_differences(f: impl Fn(f64) -> f64, x: f64) -> [(f64, f64); 3] {
    const STEPS: [f64; 5] = [3e-2, 1e-2, 3e-3, 1e-3, 3e-4];
    let raw = |order: usize, h: f64| match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        _ => {
            (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h)
        }
    };
    let mut out = [(0.0, 0.0); 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let est: Vec<(f64, f64)> = STEPS
            .iter()
            .map(|s| {
                let h = s * x;
                ((4.0 * raw(k + 1, 0.5 * h) - raw(k + 1, h)) / 3.0, h)
            })
            .collect();
        let mut best = (est[1], f64::INFINITY);
        for pair in est.windows(2) {
            let gap = (pair[1].0 - pair[0].0).abs();
            if gap < best.1 {
                best = (pair[1], gap);
            }
        }
        *slot = best.0;
    }
    out
}

fn lloyd_vs_fd(m: &Member, num: &Numerics, t: &mut Tally) {
    let Some(set) = fixed_points_of(m, num, t) else {
        return;
    };
    let probe = if set.delta > 0.0 { set.delta } else { 1.0 };
    for w in [0.5 * probe, probe] {
        let e = match poincare_eval(&m.model, w, num.tolerances()) {
            Ok(e) => e,
            Err(e) => {
                t.error(e);
                continue;
            }
        };
        // the fixed-step map is smooth in the initial value
        let map = |x: f64| advance_fixed_step(&m.model, x, 0.0, m.model.full_period(), 400.0);
        let fd = best_differences(map, w);
        let lloyd = [e.dp, e.d2p, e.d3p];
        let rel = [1e-4, 1e-3, 1e-2];
        for k in 0..3 {
            let (value, h) = fd[k];
            // accumulated rounding of the map divided by h^k
            let floor = 1e-12 * e.p.abs() / h.powi(k as i32 + 1);
            t.record(rel_close(lloyd[k], value, rel[k], floor), || {
                format!(
                    "derivative {} at w={w}: Lloyd {} vs differences {value}",
                    k + 1,
                    lloyd[k]
                )
            });
        }
    }
}

fn fixed_point_count(m: &Member, num: &Numerics, t: &mut Tally) {
    if let Some(set) = fixed_points_of(m, num, t) {
        t.record(set.points.len() <= 3, || {
            format!("{} fixed points", set.points.len())
        });
    }
}

fn above_delta(m: &Member, num: &Numerics, t: &mut Tally) {
    let Some(set) = fixed_points_of(m, num, t) else {
        return;
    };
    let gap = set.search_cap - set.delta;
    for i in 1..=10 {
        let w = set.delta + gap * i as f64 / 10.0;
        match advance(&m.model, w, 0.0, m.model.full_period(), num.tolerances()) {
            Ok(p) => t.record(p < w, || format!("P({w}) = {p} is not below w")),
            Err(e) => t.error(e),
        }
    }
}

fn inverse_concavity(m: &Member, num: &Numerics, t: &mut Tally) {
    if !m.model.release_active() {
        return;
    }
    let Some(set) = fixed_points_of(m, num, t) else {
        return;
    };
    for k in 0..20 {
        let w = 1.2 * set.delta * k as f64 / 19.0;
        match inverse_third_derivative(&m.model, w, num.tolerances()) {
            Ok(v) => t.record(v > 0.0, || {
                format!("third derivative of the inverse at {w} is {v}")
            }),
            Err(Error::OutOfRange { .. }) => {}
            Err(e) => t.error(e),
        }
    }
}

fn stability_tags(m: &Member, num: &Numerics, t: &mut Tally) {
    let Some(set) = fixed_points_of(m, num, t) else {
        return;
    };
    for p in &set.points {
        if p.stability == Stability::Degenerate {
            continue;
        }
        let delta = 100.0 * num.rtol * p.w_star.max(1.0);
        for start in [p.w_star + delta, p.w_star - delta] {
            if start <= 0.0 {
                continue;
            }
            let reached = match omega_limit(
                &m.model,
                start,
                num.max_periods,
                num.omega_tol,
                num.tolerances(),
            ) {
                Ok(l) => l,
                Err(Error::NotConverged { last, .. }) => last,
                Err(e) => {
                    t.error(e);
                    continue;
                }
            };
            let gap = (reached - p.w_star).abs();
            let ok = match p.stability {
                Stability::Stable => gap <= 1e-6 * p.w_star.max(1.0),
                _ => gap > 10.0 * delta,
            };
            t.record(ok, || {
                format!(
                    "{} point {} from {start} reached {reached}",
                    p.stability.as_str(),
                    p.w_star
                )
            });
        }
    }
}

fn regime_consistency(m: &Member, num: &Numerics, t: &mut Tally) {
    match classify_regime(&m.model, num) {
        Ok(r) => t.record(!r.theorem_basis.is_empty(), || {
            format!("{:?} without theorem tags", r.case)
        }),
        Err(e) => t.error(e),
    }
}
