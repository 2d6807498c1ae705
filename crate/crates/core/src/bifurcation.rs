//! Sweeps over the release amplitude `g0`, the type of the bifurcation at the
//! origin, and side-by-side runs of a seasonal model and its averaged version.

use serde::Serialize;

use crate::analysis::{
    classify_regime, g0_thresholds, p2_zero_closed_form, RegimeCase, RegimeReport,
};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Variant};
use crate::par;
use crate::poincare::{find_fixed_points, omega_limit, FixedPointSet, Numerics, Stability};

const FOLD_RESOLUTION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BifurcationType {
    Backward,
    Transcritical,
    None,
}

/// Outcome of [`classify_bifurcation`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BifurcationClass {
    pub kind: BifurcationType,
    /// `P''(0)` fell inside the dead-band.
    pub boundary: bool,
    pub critical_g0: Option<f64>,
    pub p2_origin: Option<f64>,
}

/// Sign of `P''(0)` at the release amplitude where the origin changes stability.
pub fn classify_bifurcation(m_template: &ModelSpec, deadband: f64) -> Result<BifurcationClass> {
    let none = BifurcationClass {
        kind: BifurcationType::None,
        boundary: false,
        critical_g0: None,
        p2_origin: None,
    };
    if !matches!(m_template.variant(), Variant::Base) {
        return Ok(none);
    }
    let Some(g_crit) = g0_thresholds(m_template)?.g_lower else {
        return Ok(none);
    };
    let p2 = p2_zero_closed_form(&m_template.with_g0(g_crit)?)?;
    let (kind, boundary) = if p2 > deadband {
        (BifurcationType::Backward, false)
    } else {
        (BifurcationType::Transcritical, p2.abs() <= deadband)
    };
    Ok(BifurcationClass {
        kind,
        boundary,
        critical_g0: Some(g_crit),
        p2_origin: Some(p2),
    })
}

/// Fixed points at one grid value of `g0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub g0: f64,
    pub fixed_points: FixedPointSet,
    pub case: Option<RegimeCase>,
    /// Branch id of every entry of `fixed_points.points`; the origin is branch 0.
    pub branch_ids: Vec<usize>,
    /// Set when the classification disagreed with the fixed-point structure.
    pub flag: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BifurcationDiagram {
    pub parameter_name: String,
    pub grid: Vec<f64>,
    pub points: Vec<SweepPoint>,
    pub critical_g0: Option<f64>,
    pub bifurcation_type: BifurcationType,
    pub boundary: bool,
    pub p2_origin: Option<f64>,
    /// Largest `g0` with two positive fixed points, for backward diagrams.
    pub fold_g0: Option<f64>,
}

impl BifurcationDiagram {
    /// Long-format CSV `g0,w_star,multiplier,stability,branch_id`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("g0,w_star,multiplier,stability,branch_id\n");
        for p in &self.points {
            for (fp, id) in p.fixed_points.points.iter().zip(&p.branch_ids) {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    crate::fmt_num(p.g0),
                    crate::fmt_num(fp.w_star),
                    crate::fmt_num(fp.multiplier),
                    fp.stability.as_str(),
                    id
                ));
            }
        }
        out
    }

    pub fn max_positive_count(&self) -> usize {
        self.points
            .iter()
            .map(|p| p.fixed_points.positive_count())
            .max()
            .unwrap_or(0)
    }
}

fn solve_point(m_template: &ModelSpec, g0: f64, num: &Numerics) -> Result<SweepPoint> {
    let m = m_template.with_g0(g0)?;
    let (fixed_points, case, flag) = match classify_regime(&m, num) {
        Ok(RegimeReport {
            fixed_points, case, ..
        }) => (fixed_points, Some(case), None),
        Err(Error::Inconsistent(msg)) => (find_fixed_points(&m, num)?, None, Some(msg)),
        Err(e) => return Err(e),
    };
    Ok(SweepPoint {
        g0,
        fixed_points,
        case,
        branch_ids: Vec::new(),
        flag,
    })
}

fn solve_all(m_template: &ModelSpec, grid: &[f64], num: &Numerics) -> Result<Vec<SweepPoint>> {
    par::map(grid, |&g| solve_point(m_template, g, num))
        .into_iter()
        .collect()
}

fn compatible(a: Stability, b: Stability) -> bool {
    a == b || a == Stability::Degenerate || b == Stability::Degenerate
}

/// Nearest-neighbour continuation: each positive fixed point joins the closest
/// live branch with a compatible stability tag (ties go to the smaller `w`).
fn assign_branches(points: &mut [SweepPoint]) {
    let mut live: Vec<(usize, f64, Stability)> = Vec::new();
    let mut next_id = 1;
    for p in points.iter_mut() {
        let mut ids = vec![0];
        let mut taken = vec![false; live.len()];
        let mut next_live = Vec::new();
        for fp in p.fixed_points.positive() {
            let best = live
                .iter()
                .enumerate()
                .filter(|(i, b)| !taken[*i] && compatible(b.2, fp.stability))
                .min_by(|x, y| {
                    let dx = (x.1 .1 - fp.w_star).abs();
                    let dy = (y.1 .1 - fp.w_star).abs();
                    dx.total_cmp(&dy).then(x.1 .1.total_cmp(&y.1 .1))
                })
                .map(|(i, _)| i);
            let id = match best {
                Some(i) => {
                    taken[i] = true;
                    live[i].0
                }
                None => {
                    next_id += 1;
                    next_id - 1
                }
            };
            ids.push(id);
            next_live.push((id, fp.w_star, fp.stability));
        }
        live = next_live;
        p.branch_ids = ids;
    }
}

/// Indices of grid cells worth refining: those containing the critical value
/// or a change in the number of positive fixed points, with one neighbour each side.
fn cells_to_refine(points: &[SweepPoint], critical: Option<f64>) -> Vec<usize> {
    let n = points.len();
    let mut mark = vec![false; n.saturating_sub(1)];
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (&points[i], &points[i + 1]);
        let hit_crit = critical.is_some_and(|c| c >= a.g0 && c <= b.g0);
        let count_change = a.fixed_points.positive_count() != b.fixed_points.positive_count();
        if hit_crit || count_change {
            mark[i.saturating_sub(1)..=(i + 1).min(n - 2)].fill(true);
        }
    }
    mark.iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect()
}

/// Bisection on "two positive fixed points" between `lo` (two) and `hi` (fewer).
fn locate_fold(m_template: &ModelSpec, mut lo: f64, mut hi: f64, num: &Numerics) -> Result<f64> {
    while hi - lo > FOLD_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        let fps = find_fixed_points(&m_template.with_g0(mid)?, num)?;
        if fps.positive_count() >= 2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fixed points over a uniform `g0` grid, refined threefold around the
/// critical value and wherever the fixed-point count changes.
pub fn sweep_g0(
    m_template: &ModelSpec,
    g0_min: f64,
    g0_max: f64,
    n_points: usize,
    num: &Numerics,
) -> Result<BifurcationDiagram> {
    if !(g0_min >= 0.0 && g0_max > g0_min) || n_points < 2 {
        return Err(Error::InvalidModel(format!(
            "sweep needs 0 <= g0_min < g0_max and at least 2 points (got [{g0_min}, {g0_max}], {n_points})"
        )));
    }
    let class = classify_bifurcation(m_template, num.p2_deadband)?;
    let step = (g0_max - g0_min) / (n_points - 1) as f64;
    let coarse: Vec<f64> = (0..n_points)
        .map(|i| {
            if i + 1 == n_points {
                g0_max
            } else {
                g0_min + step * i as f64
            }
        })
        .collect();
    let mut points = solve_all(m_template, &coarse, num)?;

    if n_points > 2 {
        let extra: Vec<f64> = cells_to_refine(&points, class.critical_g0)
            .into_iter()
            .flat_map(|i| {
                let (a, b) = (points[i].g0, points[i + 1].g0);
                [a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0]
            })
            .collect();
        points.extend(solve_all(m_template, &extra, num)?);
        points.sort_by(|x, y| x.g0.total_cmp(&y.g0));
    }

    let mut fold_g0 = None;
    if class.kind == BifurcationType::Backward {
        let crit = class.critical_g0.unwrap_or(g0_min);
        let last_pair = points.windows(2).rposition(|w| {
            w[0].g0 >= crit
                && w[0].fixed_points.positive_count() >= 2
                && w[1].fixed_points.positive_count() < 2
        });
        if let Some(i) = last_pair {
            fold_g0 = Some(locate_fold(
                m_template,
                points[i].g0,
                points[i + 1].g0,
                num,
            )?);
        }
    }

    assign_branches(&mut points);
    Ok(BifurcationDiagram {
        parameter_name: "g0".into(),
        grid: points.iter().map(|p| p.g0).collect(),
        points,
        critical_g0: class.critical_g0,
        bifurcation_type: class.kind,
        boundary: class.boundary,
        p2_origin: class.p2_origin,
        fold_g0,
    })
}

/// Forward limit from one initial density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitRecord {
    pub w0: f64,
    /// The limit, or the last iterate when the horizon ran out.
    pub limit: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideResult {
    pub regime: RegimeReport,
    pub limits: Vec<LimitRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragedComparison {
    pub seasonal: SideResult,
    pub averaged: SideResult,
}

fn run_side(m: &ModelSpec, w0s: &[f64], horizon: usize, num: &Numerics) -> Result<SideResult> {
    let regime = classify_regime(m, num)?;
    let limits = par::map(w0s, |&w0| {
        match omega_limit(m, w0, horizon, num.omega_tol, num.tolerances()) {
            Ok(limit) => Ok(LimitRecord {
                w0,
                limit,
                converged: true,
            }),
            Err(Error::NotConverged { last, .. }) => Ok(LimitRecord {
                w0,
                limit: last,
                converged: false,
            }),
            Err(e) => Err(e),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(SideResult { regime, limits })
}

/// Regimes and forward limits of `m` and of its averaged counterpart.
pub fn compare_averaged(
    m: &ModelSpec,
    w0s: &[f64],
    horizon_periods: usize,
    num: &Numerics,
) -> Result<AveragedComparison> {
    Ok(AveragedComparison {
        seasonal: run_side(m, w0s, horizon_periods, num)?,
        averaged: run_side(&m.averaged(), w0s, horizon_periods, num)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recipes;
    use approx::assert_relative_eq;

    fn quick() -> Numerics {
        Numerics {
            scan_points: 400,
            ..Numerics::default()
        }
    }

    #[test]
    fn classify_types() {
        let a = classify_bifurcation(&recipes::fig2a(0.0), 1e-6).unwrap();
        assert_eq!(a.kind, BifurcationType::Backward);
        assert_relative_eq!(a.critical_g0.unwrap(), 5.0 / 6.0, max_relative = 1e-12);
        let b = classify_bifurcation(&recipes::fig2b(0.0), 1e-6).unwrap();
        assert_eq!((b.kind, b.boundary), (BifurcationType::Transcritical, true));
        let c = classify_bifurcation(&recipes::fig2c(0.0), 1e-6).unwrap();
        assert_eq!(
            (c.kind, c.boundary),
            (BifurcationType::Transcritical, false)
        );
        assert_relative_eq!(c.p2_origin.unwrap(), -0.3056, epsilon = 5e-4);
    }

    #[test]
    fn endpoint_grid() {
        let m = recipes::fig2a(0.0);
        let d = sweep_g0(&m, 0.0, 6.0, 2, &quick()).unwrap();
        assert_eq!(d.points.len(), 2);
        assert_eq!(d.points[0].fixed_points.positive_count(), 1);
        assert_eq!(d.points[1].fixed_points.positive_count(), 0);
    }

    #[test]
    fn branches_are_labelled() {
        let m = recipes::fig2a(0.0);
        let d = sweep_g0(&m, 0.7, 1.0, 7, &quick()).unwrap();
        assert!(d.points.iter().all(|p| p.branch_ids[0] == 0));
        assert!(d.fold_g0.is_some());
        let csv = d.to_csv();
        assert!(csv.starts_with("g0,w_star,multiplier,stability,branch_id\n"));
    }

    #[test]
    fn constant_model_averages_to_itself() {
        let m = recipes::section3();
        let c = compare_averaged(&m, &[0.01, 1.0], 5000, &quick()).unwrap();
        assert_eq!(c.seasonal.regime.case, c.averaged.regime.case);
        for (s, a) in c.seasonal.limits.iter().zip(&c.averaged.limits) {
            assert_eq!(s.limit, a.limit);
        }
    }
}
