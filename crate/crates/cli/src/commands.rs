//! Subcommands. Each writes its files under `--out` and returns the lines to print.

use mosq_core::integrator::advance;
use mosq_core::{
    classify_regime, compare_averaged, find_fixed_points, fmt_num, integrate, par, poincare_eval,
    sweep_g0, FixedPoint, ModelSpec, Numerics, PoincareEvaluation, Stability,
};
use serde::Serialize;

use crate::{CliError, Options, RunConfig};

fn missing(section: &str) -> CliError {
    CliError::Config(format!("the configuration has no [{section}] section"))
}

/// Density on the periodic orbit through `w_star` at time `t`.
fn orbit_value(m: &ModelSpec, w_star: f64, t: f64, num: &Numerics) -> Result<f64, CliError> {
    let phase = t.rem_euclid(m.full_period());
    Ok(advance(m, w_star, 0.0, phase, num.tolerances())?)
}

#[derive(Serialize)]
struct SimulationRun {
    model: &'static str,
    w0: f64,
    t_end: f64,
    final_value: f64,
    steps: usize,
    rejected: usize,
    file: String,
    /// Fixed point of the period map whose orbit is nearest at `t_end`.
    attractor: Option<f64>,
    distance: Option<f64>,
    within_tol: bool,
}

#[derive(Serialize)]
struct SimulationSummary {
    command: &'static str,
    attractor_tol: f64,
    runs: Vec<SimulationRun>,
}

/// Relative distance below which a terminal value counts as on the attractor.
const ATTRACTOR_TOL: f64 = 1e-6;

pub fn simulate(opts: &Options) -> Result<Vec<String>, CliError> {
    let cfg = opts.load()?;
    let sec = cfg.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
    let num = cfg.numerics;
    let mut models = vec![("seasonal", cfg.model.clone())];
    if sec.averaged {
        models.push(("averaged", cfg.model.averaged()));
    }
    let mut runs = Vec::new();
    let mut lines = Vec::new();
    for (label, m) in &models {
        let attractors: Vec<FixedPoint> = find_fixed_points(m, &num)?
            .points
            .into_iter()
            .filter(|p| p.stability == Stability::Stable)
            .collect();
        for (i, &w0) in sec.w0.iter().enumerate() {
            let traj = integrate(m, w0, 0.0, sec.t_end, num.tolerances())?;
            let file = format!("trajectory_{label}_{i}.csv");
            opts.write(&file, &traj.to_csv())?;
            let end = traj.final_value();
            let mut nearest: Option<(f64, f64)> = None;
            for p in &attractors {
                let on_orbit = orbit_value(m, p.w_star, sec.t_end, &num)?;
                let d = (end - on_orbit).abs() / on_orbit.max(1.0);
                if nearest.is_none_or(|(_, best)| d < best) {
                    nearest = Some((p.w_star, d));
                }
            }
            let within = nearest.is_some_and(|(_, d)| d <= ATTRACTOR_TOL);
            lines.push(format!(
                "{label} w0={w0}: w({})={}{}",
                sec.t_end,
                fmt_num(end),
                match nearest {
                    Some((w, d)) if within =>
                        format!(", on the periodic orbit through {w} (distance {d:.2e})"),
                    Some((w, d)) =>
                        format!(", nearest periodic orbit through {w} at distance {d:.2e}"),
                    None => ", no stable periodic orbit".to_string(),
                }
            ));
            runs.push(SimulationRun {
                model: label,
                w0,
                t_end: sec.t_end,
                final_value: end,
                steps: traj.stats.steps,
                rejected: traj.stats.rejected,
                file,
                attractor: nearest.map(|n| n.0),
                distance: nearest.map(|n| n.1),
                within_tol: within,
            });
        }
    }
    opts.write_json(
        "simulate.json",
        &SimulationSummary {
            command: "simulate",
            attractor_tol: ATTRACTOR_TOL,
            runs,
        },
    )?;
    Ok(lines)
}

pub fn poincare_csv(rows: &[PoincareEvaluation]) -> String {
    let mut out = String::from("w0,P,dP,d2P,d3P\n");
    for e in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_num(e.w0),
            fmt_num(e.p),
            fmt_num(e.dp),
            fmt_num(e.d2p),
            fmt_num(e.d3p)
        ));
    }
    out
}

pub fn poincare(opts: &Options) -> Result<Vec<String>, CliError> {
    let cfg = opts.load()?;
    let sec = cfg.poincare.as_ref().ok_or_else(|| missing("poincare"))?;
    let step = (sec.w_max - sec.w_min) / (sec.points - 1) as f64;
    let grid: Vec<f64> = (0..sec.points)
        .map(|i| sec.w_min + step * i as f64)
        .collect();
    let tol = cfg.numerics.tolerances();
    let rows = par::map(&grid, |&w| poincare_eval(&cfg.model, w, tol))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let path = opts.write("poincare.csv", &poincare_csv(&rows))?;
    Ok(vec![format!(
        "{} grid points -> {}",
        rows.len(),
        path.display()
    )])
}

#[derive(Serialize)]
struct FixedPointSummary<'a> {
    command: &'static str,
    #[serde(flatten)]
    set: &'a mosq_core::FixedPointSet,
}

fn describe(points: &[FixedPoint]) -> Vec<String> {
    points
        .iter()
        .map(|p| {
            format!(
                "w* = {} multiplier {} ({})",
                fmt_num(p.w_star),
                fmt_num(p.multiplier),
                p.stability.as_str()
            )
        })
        .collect()
}

pub fn fixed_points(opts: &Options) -> Result<Vec<String>, CliError> {
    let cfg = opts.load()?;
    let set = find_fixed_points(&cfg.model, &cfg.numerics)?;
    opts.write("fixed_points.csv", &set.to_csv())?;
    opts.write_json(
        "fixed_points.json",
        &FixedPointSummary {
            command: "fixed-points",
            set: &set,
        },
    )?;
    Ok(describe(&set.points))
}

#[derive(Serialize)]
struct ClassifySummary<'a> {
    command: &'static str,
    #[serde(flatten)]
    report: &'a mosq_core::RegimeReport,
}

pub fn classify(opts: &Options) -> Result<Vec<String>, CliError> {
    let cfg = opts.load()?;
    let report = classify_regime(&cfg.model, &cfg.numerics)?;
    opts.write_json(
        "classify.json",
        &ClassifySummary {
            command: "classify",
            report: &report,
        },
    )?;
    let mut lines = vec![
        format!("case: {:?}", report.case),
        format!("origin: {:?}", report.origin),
        format!("theorem basis: {}", report.theorem_basis.join(", ")),
    ];
    if let Some(b) = report.basin_bound {
        lines.push(format!("basin bound: {}", fmt_num(b)));
    }
    lines.extend(describe(&report.fixed_points.points));
    Ok(lines)
}

#[derive(Serialize)]
struct FlaggedPoint {
    g0: f64,
    flag: String,
}

#[derive(Serialize)]
struct BifurcationSummary {
    command: &'static str,
    parameter: String,
    g0_min: f64,
    g0_max: f64,
    requested_points: usize,
    evaluated_points: usize,
    critical_g0: Option<f64>,
    bifurcation_type: mosq_core::BifurcationType,
    boundary: bool,
    p2_origin: Option<f64>,
    fold_g0: Option<f64>,
    max_positive_count: usize,
    flagged: Vec<FlaggedPoint>,
}

pub fn bifurcate(opts: &Options) -> Result<Vec<String>, CliError> {
    let cfg = opts.load()?;
    let sec = cfg.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
    let d = sweep_g0(
        &cfg.model,
        sec.g0_min,
        sec.g0_max,
        sec.points,
        &cfg.numerics,
    )?;
    opts.write("bifurcation.csv", &d.to_csv())?;
    let summary = BifurcationSummary {
        command: "bifurcate",
        parameter: d.parameter_name.clone(),
        g0_min: sec.g0_min,
        g0_max: sec.g0_max,
        requested_points: sec.points,
        evaluated_points: d.points.len(),
        critical_g0: d.critical_g0,
        bifurcation_type: d.bifurcation_type,
        boundary: d.boundary,
        p2_origin: d.p2_origin,
        fold_g0: d.fold_g0,
        max_positive_count: d.max_positive_count(),
        flagged: d
            .points
            .iter()
            .filter_map(|p| p.flag.clone().map(|flag| FlaggedPoint { g0: p.g0, flag }))
            .collect(),
    };
    opts.write_json("bifurcation.json", &summary)?;
    let mut lines = vec![format!(
        "{:?}{} bifurcation at g0 = {}",
        d.bifurcation_type,
        if d.boundary { " (boundary)" } else { "" },
        d.critical_g0.map(fmt_num).unwrap_or_else(|| "none".into())
    )];
    if let Some(p2) = d.p2_origin {
        lines.push(format!("P''(0) at the critical level: {}", fmt_num(p2)));
    }
    if let Some(fold) = d.fold_g0 {
        lines.push(format!("fold at g0 = {}", fmt_num(fold)));
    }
    lines.push(format!("{} sweep points", d.points.len()));
    Ok(lines)
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    command: &'static str,
    #[serde(flatten)]
    comparison: &'a mosq_core::AveragedComparison,
}

pub fn compare(opts: &Options) -> Result<Vec<String>, CliError> {
    let cfg: RunConfig = opts.load()?;
    let sec = cfg.compare.as_ref().ok_or_else(|| missing("compare"))?;
    let c = compare_averaged(&cfg.model, &sec.w0, sec.horizon_periods, &cfg.numerics)?;
    opts.write_json(
        "compare.json",
        &CompareSummary {
            command: "compare-averaged",
            comparison: &c,
        },
    )?;
    let mut lines = Vec::new();
    for (label, side) in [("seasonal", &c.seasonal), ("averaged", &c.averaged)] {
        lines.push(format!("{label}: {:?}", side.regime.case));
        for l in &side.limits {
            lines.push(format!(
                "  w0={} -> {}{}",
                l.w0,
                fmt_num(l.limit),
                if l.converged { "" } else { " (not converged)" }
            ));
        }
    }
    Ok(lines)
}
