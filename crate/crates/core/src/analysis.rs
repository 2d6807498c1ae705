//! Stability integrals, origin and regime classification, the closed form of
//! `P''(0)`, persistence checks, basin bounds and release thresholds.
//!
//! All integrals are taken over one coefficient period `[0, n0 T]`; the release
//! windows `W` are the `n0` intervals `[iT, iT + T_bar)` and `O` is the rest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Tolerances;
use crate::model::{ModelSpec, SeasonalFunction, Variant};
use crate::poincare::{
    find_fixed_points, poincare_eval, poincare_map, FixedPointSet, Numerics, Stability,
};
use crate::quadrature;

/// Variant-specific origin integrals.
///
/// `i1` is the integral deciding the origin (or, for the Allee variant, the
/// single integral `I` of its dichotomy, in which case `i2` is `None`).
/// `origin_exponent` is always `int F_w(t, 0) dt`, i.e. `ln P'(0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityIntegrals {
    pub variant: String,
    pub i1: f64,
    pub i2: Option<f64>,
    pub origin_exponent: f64,
}

fn over_windows(m: &ModelSpec, f: &SeasonalFunction) -> f64 {
    m.schedule().windows().map(|(s, e)| f.integral(s, e)).sum()
}

fn over_period(m: &ModelSpec, f: &SeasonalFunction) -> f64 {
    f.integral(0.0, m.full_period())
}

pub fn compute_integrals(m: &ModelSpec) -> StabilityIntegrals {
    let a_all = over_period(m, m.a());
    let a_on = over_windows(m, m.a());
    let a_off = a_all - a_on;
    let mu = over_period(m, m.mu());
    let xi_on = over_windows(m, m.xi());
    let g0 = m.schedule().g0;
    let active = m.release_active();
    let (i1, i2) = match m.variant() {
        Variant::Base => {
            let i2 = -g0 * xi_on - mu + a_all;
            let i1 = if active { -g0 * xi_on - mu + a_off } else { i2 };
            (i1, Some(i2))
        }
        Variant::CompetitionSurvival { .. } => {
            let i2 = a_all - mu;
            let i1 = if active { a_off - mu } else { i2 };
            (i1, Some(i2))
        }
        Variant::ImperfectCi { s_h } => {
            if active {
                let on = 0.5 * a_on * (1.0 - s_h) - g0 * xi_on;
                (on + 0.5 * a_off - mu, Some(on + 0.5 * a_all - mu))
            } else {
                let i = 0.5 * a_all - mu;
                (i, Some(i))
            }
        }
        Variant::SaturatedRelease { b } => {
            let extra = a_on / (b + 1.0);
            (a_off + extra - mu, Some(a_all + extra - mu))
        }
        Variant::Allee { alpha } => (a_on / (alpha + 1.0) + a_off - mu, None),
    };
    let origin_exponent = match m.variant() {
        Variant::Allee { .. } => -mu,
        _ => i1,
    };
    StabilityIntegrals {
        variant: m.variant().name().to_string(),
        i1,
        i2,
        origin_exponent,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OriginStability {
    Unstable,
    Stable,
    Critical,
}

/// Sign of `ln P'(0)` with a dead-band of half-width `eps_crit`.
pub fn origin_stability(m: &ModelSpec, eps_crit: f64) -> OriginStability {
    let x = compute_integrals(m).origin_exponent;
    if x > eps_crit {
        OriginStability::Unstable
    } else if x < -eps_crit {
        OriginStability::Stable
    } else {
        OriginStability::Critical
    }
}

/// `P''(0)` of the base model by quadrature:
///
/// ```text
/// P''(0) = P'(0) * int_0^{n0 T} F_ww(t, 0) exp(int_0^t F_w(s, 0) ds) dt
/// ```
///
/// with `F_w(t, 0) = -mu - xi g0`, `F_ww(t, 0) = 2 (a/g0 - xi)` on windows and
/// `F_w(t, 0) = a - mu`, `F_ww(t, 0) = -2 xi` off them. The inner integrals are exact.
pub fn p2_zero_closed_form(m: &ModelSpec) -> Result<f64> {
    if !matches!(m.variant(), Variant::Base) {
        return Err(Error::UnsupportedVariant(m.variant().name().into()));
    }
    let g0 = m.schedule().g0;
    if !(g0 > 0.0) {
        return Err(Error::InvalidModel(
            "closed form of P''(0) needs g0 > 0".into(),
        ));
    }
    let (a, mu, xi) = (m.a(), m.mu(), m.xi());
    let mesh = m.mesh_points(0.0, m.full_period());
    let mut exponent = 0.0;
    let mut total = 0.0;
    for seg in mesh.windows(2) {
        let (s0, s1) = (seg[0].0, seg[1].0);
        if s1 <= s0 {
            continue;
        }
        let mid = 0.5 * (s0 + s1);
        let on = m.schedule().in_window(mid);
        let rate_integral = |t: f64| -> f64 {
            if on {
                -mu.integral(s0, t) - g0 * xi.integral(s0, t)
            } else {
                a.integral(s0, t) - mu.integral(s0, t)
            }
        };
        let curvature = |t: f64| -> f64 {
            let x = xi.eval_frozen(t, mid);
            if on {
                2.0 * (a.eval_frozen(t, mid) / g0 - x)
            } else {
                -2.0 * x
            }
        };
        let base = exponent;
        let (v, _) = quadrature::integrate(
            |t| curvature(t) * (base + rate_integral(t)).exp(),
            s0,
            s1,
            1e-13,
        );
        total += v;
        exponent += rate_integral(s1);
    }
    Ok(exponent.exp() * total)
}

/// Sample times of one smooth piece: the midpoint when every coefficient is
/// piecewise constant, otherwise a fine grid including both (one-sided) ends.
fn piece_samples(m: &ModelSpec, s0: f64, s1: f64) -> Vec<f64> {
    if m.all_piecewise_constant() {
        vec![0.5 * (s0 + s1)]
    } else {
        const N: usize = 400;
        (0..=N)
            .map(|i| s0 + (s1 - s0) * i as f64 / N as f64)
            .collect()
    }
}

/// Minimum of `value(t, piece_t)` over the pieces selected by `keep(piece_t)`.
fn piecewise_min(
    m: &ModelSpec,
    keep: impl Fn(f64) -> bool,
    value: impl Fn(f64, f64) -> f64,
) -> f64 {
    let mesh = m.mesh_points(0.0, m.full_period());
    let mut min = f64::INFINITY;
    for seg in mesh.windows(2) {
        let (s0, s1) = (seg[0].0, seg[1].0);
        if s1 <= s0 {
            continue;
        }
        let mid = 0.5 * (s0 + s1);
        if !keep(mid) {
            continue;
        }
        for t in piece_samples(m, s0, s1) {
            min = min.min(value(t, mid));
        }
    }
    min
}

/// Whether `F(t, K) > 0` for every `t` of one period.
pub fn check_persistence_condition(m: &ModelSpec, k: f64) -> bool {
    if !(k > 0.0) {
        return false;
    }
    piecewise_min(m, |_| true, |t, mid| m.local(t, mid).rhs(k)) > 0.0
}

/// An interval `(0, bound)` of initial densities that go extinct, when the
/// variant's hypotheses hold.
pub fn basin_bound(m: &ModelSpec) -> Option<f64> {
    let ints = compute_integrals(m);
    let sched = m.schedule();
    let g0 = sched.g0;
    let on_window = |mid: f64| sched.in_window(mid);
    let frozen = |f: &SeasonalFunction, t: f64, mid: f64| f.eval_frozen(t, mid);
    // window growth rate r(t) and the numerator factor
    let (i1, i2, factor): (f64, f64, f64) = match m.variant() {
        Variant::Base | Variant::CompetitionSurvival { .. } => (ints.i1, ints.i2?, g0),
        Variant::ImperfectCi { .. } => (ints.i1, ints.i2?, 2.0 * g0),
        Variant::SaturatedRelease { b } => (ints.i1, ints.i2?, 1.0 + b),
        Variant::Allee { .. } => (ints.origin_exponent, ints.i1, 1.0),
    };
    if !(i1 < 0.0 && i2 > 0.0 && factor > 0.0) {
        return None;
    }
    let rate = |t: f64, mid: f64| -> f64 {
        let a = frozen(m.a(), t, mid);
        let mu = frozen(m.mu(), t, mid);
        match m.variant() {
            Variant::Base | Variant::CompetitionSurvival { .. } => a - mu,
            Variant::ImperfectCi { s_h } => {
                a * (1.0 - 0.5 * s_h) - mu - frozen(m.xi(), t, mid) * g0
            }
            Variant::SaturatedRelease { b } => a + a / (b + 1.0) - mu,
            Variant::Allee { alpha } => a / (alpha + 1.0) - mu,
        }
    };
    if !(piecewise_min(m, on_window, rate) > 0.0) {
        return None;
    }
    let window_integral: f64 = match m.variant() {
        Variant::Base | Variant::CompetitionSurvival { .. } => {
            over_windows(m, m.a()) - over_windows(m, m.mu())
        }
        Variant::ImperfectCi { s_h } => {
            (1.0 - 0.5 * s_h) * over_windows(m, m.a())
                - over_windows(m, m.mu())
                - g0 * over_windows(m, m.xi())
        }
        Variant::SaturatedRelease { b } => {
            (1.0 + 1.0 / (b + 1.0)) * over_windows(m, m.a()) - over_windows(m, m.mu())
        }
        Variant::Allee { alpha } => {
            over_windows(m, m.a()) / (alpha + 1.0) - over_windows(m, m.mu())
        }
    };
    Some(-i1 * factor / (i2 * window_integral.exp()))
}

/// Release amplitudes at which the origin integral (`g_lower`) and the logistic
/// majorant integral (`g_upper`) change sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub g_lower: Option<f64>,
    pub g_upper: Option<f64>,
}

pub fn g0_thresholds(m: &ModelSpec) -> Result<Thresholds> {
    if !matches!(m.variant(), Variant::Base) {
        return Err(Error::UnsupportedVariant(m.variant().name().into()));
    }
    let a_all = over_period(m, m.a());
    let a_off = a_all - over_windows(m, m.a());
    let mu = over_period(m, m.mu());
    let xi_on = over_windows(m, m.xi());
    let ratio = |num: f64| (num > 0.0).then(|| num / xi_on);
    Ok(Thresholds {
        g_lower: ratio(a_off - mu),
        g_upper: ratio(a_all - mu),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeCase {
    GlobalPersistence,
    GlobalExtinction,
    BiStability,
    SemiStable,
    ExtinctionByI2,
    CriticalPersistence,
    CriticalExtinction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub integrals: StabilityIntegrals,
    pub origin: OriginStability,
    pub case: RegimeCase,
    pub fixed_points: FixedPointSet,
    pub basin_bound: Option<f64>,
    pub thresholds: Option<Thresholds>,
    /// `P''(0)`, reported when the origin is critical.
    pub p2_origin: Option<f64>,
    pub theorem_basis: Vec<String>,
}

fn variant_theorem(m: &ModelSpec) -> Option<u8> {
    match m.variant() {
        Variant::Base => None,
        Variant::CompetitionSurvival { .. } => Some(1),
        Variant::ImperfectCi { .. } => Some(2),
        Variant::SaturatedRelease { .. } => Some(3),
        Variant::Allee { .. } => Some(4),
    }
}

fn inconsistent(case: &str, fps: &FixedPointSet) -> Error {
    Error::Inconsistent(format!(
        "{case} predicted but the fixed points are {:?}",
        fps.points
            .iter()
            .map(|p| (p.w_star, p.stability.as_str()))
            .collect::<Vec<_>>()
    ))
}

/// `P''(0)`: the closed form for the base model, the Lloyd value otherwise.
fn second_derivative_at_origin(m: &ModelSpec, tol: Tolerances) -> Result<f64> {
    match p2_zero_closed_form(m) {
        Ok(v) => Ok(v),
        Err(Error::UnsupportedVariant(_)) | Err(Error::InvalidModel(_)) => {
            Ok(poincare_eval(m, 0.0, tol)?.d2p)
        }
        Err(e) => Err(e),
    }
}

/// Structure predicted for an origin that is a local attractor, dispatched on
/// the number of positive fixed points.
fn dispatch_on_count(
    m: &ModelSpec,
    fps: &FixedPointSet,
    tol: Tolerances,
    tol_mult: f64,
    tags: &mut Vec<String>,
    tag_prefix: &str,
) -> Result<RegimeCase> {
    let pos = fps.positive();
    match pos.len() {
        0 => {
            tags.push(format!("{tag_prefix}.i"));
            Ok(RegimeCase::GlobalExtinction)
        }
        1 => {
            let w = pos[0].w_star;
            if pos[0].stability != Stability::Degenerate
                && (pos[0].multiplier - 1.0).abs() > 1e3 * tol_mult
            {
                return Err(inconsistent("a single tangential fixed point", fps));
            }
            // attracts from above, repels towards the origin from below
            let below = 0.95 * w;
            let above = 1.05 * w;
            let pb = poincare_map(m, below, tol)?;
            let pa = poincare_map(m, above, tol)?;
            if !(pb < below && pa < above && pa > w) {
                return Err(inconsistent("a semi-stable fixed point", fps));
            }
            tags.push(format!("{tag_prefix}.ii"));
            Ok(RegimeCase::SemiStable)
        }
        2 => {
            if pos[0].stability == Stability::Stable || pos[1].stability == Stability::Unstable {
                return Err(inconsistent("an unstable/stable pair", fps));
            }
            tags.push(format!("{tag_prefix}.iii"));
            Ok(RegimeCase::BiStability)
        }
        _ => Err(inconsistent("at most two positive fixed points", fps)),
    }
}

/// Classify the long-term dynamics from the origin integrals and the fixed-point set.
pub fn classify_regime(m: &ModelSpec, num: &Numerics) -> Result<RegimeReport> {
    let tol = num.tolerances();
    let integrals = compute_integrals(m);
    let mut fps = find_fixed_points(m, num)?;
    let origin = origin_stability(m, num.eps_crit);
    let thresholds = g0_thresholds(m).ok();
    let mut tags: Vec<String> = Vec::new();
    let mut p2_origin = None;
    let thm = variant_theorem(m);
    let tag = |local: &str, sub: &str| match thm {
        Some(k) => format!("Thm4.{k}.{sub}"),
        None => local.to_string(),
    };

    let case = if let Variant::Allee { .. } = m.variant() {
        let i = integrals.i1;
        if i <= 0.0 {
            if fps.positive_count() != 0 {
                return Err(inconsistent("extinction (I <= 0)", &fps));
            }
            tags.push("Thm4.4.i".into());
            RegimeCase::ExtinctionByI2
        } else {
            tags.push("Thm4.4.ii".into());
            dispatch_on_count(m, &fps, tol, num.tol_mult, &mut tags, "Thm3.3")?
        }
    } else {
        let i1 = integrals.i1;
        let i2 = integrals.i2.unwrap_or(i1);
        match origin {
            OriginStability::Unstable => {
                let pos = fps.positive();
                if pos.len() != 1 || pos[0].stability == Stability::Unstable {
                    return Err(inconsistent(
                        "a unique attracting positive fixed point",
                        &fps,
                    ));
                }
                tags.push("Prop3.1.i".into());
                tags.push(tag("Thm3.2", "i"));
                RegimeCase::GlobalPersistence
            }
            OriginStability::Critical => {
                let d2 = second_derivative_at_origin(m, tol)?;
                p2_origin = Some(d2);
                // roots on the scale of the dead-band belong to the bifurcating branch
                let scale = 100.0 * num.eps_crit * (1.0 + 2.0 / d2.abs().max(1e-300)).min(1e6);
                fps.points.retain(|p| p.w_star == 0.0 || p.w_star > scale);
                fps.delta = fps.points.last().map(|p| p.w_star).unwrap_or(0.0);
                if d2 > num.p2_deadband {
                    if fps.positive_count() != 1 {
                        return Err(inconsistent("a unique positive attractor", &fps));
                    }
                    tags.push("Prop3.5.i".into());
                    RegimeCase::CriticalPersistence
                } else {
                    if fps.positive_count() != 0 {
                        return Err(inconsistent("extinction at a critical origin", &fps));
                    }
                    tags.push("Prop3.5.ii".into());
                    RegimeCase::CriticalExtinction
                }
            }
            OriginStability::Stable => {
                tags.push("Prop3.1.ii".into());
                if i2 <= 0.0 {
                    if fps.positive_count() != 0 {
                        return Err(inconsistent("extinction (I2 <= 0)", &fps));
                    }
                    tags.push(tag("Lemma3.6", "ii"));
                    RegimeCase::ExtinctionByI2
                } else {
                    if thm.is_some() {
                        tags.push(tag("", "iii"));
                    }
                    let case = dispatch_on_count(m, &fps, tol, num.tol_mult, &mut tags, "Thm3.3")?;
                    if case == RegimeCase::BiStability {
                        tags.push("Cor3.4".into());
                    }
                    case
                }
            }
        }
    };

    let basin = basin_bound(m);
    if basin.is_some() {
        tags.push(match thm {
            Some(4) => "Thm4.4.ii".into(),
            Some(k) => format!("Thm4.{k}.iii"),
            None => "Prop3.8".into(),
        });
    }
    tags.dedup();
    Ok(RegimeReport {
        integrals,
        origin,
        case,
        fixed_points: fps,
        basin_bound: basin,
        thresholds,
        p2_origin,
        theorem_basis: tags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::ultimate_bound;
    use crate::model::ReleaseSchedule;
    use approx::assert_relative_eq;

    fn section3(g0: f64) -> ModelSpec {
        ModelSpec::base_constant(2.0, 1.0, 0.5, g0, 0.75, 1.0).unwrap()
    }

    fn fig2a(g0: f64) -> ModelSpec {
        ModelSpec::new(
            Variant::Base,
            SeasonalFunction::half_period(4.0, 1.0),
            SeasonalFunction::constant(1.0),
            SeasonalFunction::half_period(1.0, 0.2),
            ReleaseSchedule::new(g0, 7.0, 14.0, 1).unwrap(),
        )
        .unwrap()
    }

    fn fig2_const(g0: f64, t_bar: f64) -> ModelSpec {
        ModelSpec::base_constant(4.0, 1.0, 1.0, g0, t_bar, 14.0).unwrap()
    }

    #[test]
    fn section3_integrals() {
        let s = compute_integrals(&section3(0.1));
        assert!((s.i1 - -0.5375).abs() < 1e-12);
        assert!((s.i2.unwrap() - 0.9625).abs() < 1e-12);
        assert_eq!(s.origin_exponent, s.i1);
    }

    #[test]
    fn fig2a_integral_is_linear_in_g0() {
        for g0 in [0.1, 0.5, 5.0 / 6.0, 1.3] {
            assert_relative_eq!(
                compute_integrals(&fig2a(g0)).i1,
                3.5 - 4.2 * g0,
                epsilon = 1e-12
            );
        }
        for g0 in [0.5, 2.0, 3.0] {
            assert_relative_eq!(
                compute_integrals(&fig2_const(g0, 7.0)).i1,
                14.0 - 7.0 * g0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn origin_tags() {
        assert_eq!(
            origin_stability(&section3(0.1), 1e-8),
            OriginStability::Stable
        );
        assert_eq!(
            origin_stability(&fig2a(0.5), 1e-8),
            OriginStability::Unstable
        );
        assert_relative_eq!(compute_integrals(&fig2a(0.5)).i1, 1.4, epsilon = 1e-12);
        assert_eq!(
            origin_stability(&fig2_const(2.0, 7.0), 1e-8),
            OriginStability::Critical
        );
    }

    #[test]
    fn p2_closed_form_values() {
        let b = p2_zero_closed_form(&fig2_const(2.0, 7.0)).unwrap();
        assert!(b.abs() < 1e-10, "{b}");
        let c = p2_zero_closed_form(&fig2_const(16.0 / 6.5, 6.5)).unwrap();
        assert_relative_eq!(c, -0.305_555_555_5, epsilon = 1e-8);
        let a = p2_zero_closed_form(&fig2a(5.0 / 6.0)).unwrap();
        // piecewise-exponential sum evaluated by hand
        assert_relative_eq!(a, 2.668_237_674_631_32, max_relative = 1e-10);
    }

    #[test]
    fn p2_closed_form_matches_lloyd_off_critical() {
        for m in [section3(0.1), fig2a(0.6), fig2_const(1.2, 7.0)] {
            let closed = p2_zero_closed_form(&m).unwrap();
            let lloyd = poincare_eval(&m, 0.0, Tolerances::default()).unwrap().d2p;
            assert_relative_eq!(closed, lloyd, max_relative = 1e-6);
        }
    }

    #[test]
    fn p2_rejects_variants() {
        let m = ModelSpec::new(
            Variant::ImperfectCi { s_h: 0.5 },
            SeasonalFunction::constant(2.0),
            SeasonalFunction::constant(1.0),
            SeasonalFunction::constant(0.5),
            ReleaseSchedule::new(0.1, 0.75, 1.0, 1).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            p2_zero_closed_form(&m),
            Err(Error::UnsupportedVariant(_))
        ));
    }

    #[test]
    fn persistence_condition() {
        assert!(check_persistence_condition(&section3(0.1), 1.0));
        assert!(!check_persistence_condition(&section3(2.0), 1.0));
        let m = section3(0.1);
        assert!(!check_persistence_condition(&m, 1.01 * ultimate_bound(&m)));
    }

    #[test]
    fn basin_bounds() {
        assert_relative_eq!(
            basin_bound(&section3(0.1)).unwrap(),
            0.026_380,
            epsilon = 1e-5
        );
        let exact = 0.5375 * 0.1 / (0.9625 * 0.75f64.exp());
        assert_relative_eq!(
            basin_bound(&section3(0.1)).unwrap(),
            exact,
            max_relative = 1e-12
        );
        let heavy = ModelSpec::base_constant(2.0, 3.0, 0.5, 0.1, 0.75, 1.0).unwrap();
        assert_eq!(basin_bound(&heavy), None);
        assert_eq!(basin_bound(&fig2a(0.5)), None);
    }

    #[test]
    fn thresholds() {
        let t = g0_thresholds(&fig2a(0.3)).unwrap();
        assert_relative_eq!(t.g_lower.unwrap(), 3.5 / 4.2, max_relative = 1e-12);
        assert_relative_eq!(t.g_upper.unwrap(), 5.0, max_relative = 1e-12);
        let t = g0_thresholds(&fig2_const(1.0, 7.0)).unwrap();
        assert_relative_eq!(t.g_lower.unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(t.g_upper.unwrap(), 6.0, max_relative = 1e-12);
        let doomed = ModelSpec::base_constant(1.0, 2.0, 1.0, 0.5, 0.5, 1.0).unwrap();
        let t = g0_thresholds(&doomed).unwrap();
        assert_eq!((t.g_lower, t.g_upper), (None, None));
    }

    #[test]
    fn regimes() {
        let n = Numerics::default();
        assert_eq!(
            classify_regime(&fig2a(0.5), &n).unwrap().case,
            RegimeCase::GlobalPersistence
        );
        assert_eq!(
            classify_regime(&fig2a(0.9), &n).unwrap().case,
            RegimeCase::BiStability
        );
        let r = classify_regime(&section3(0.1), &n).unwrap();
        assert_eq!(r.case, RegimeCase::BiStability);
        assert_relative_eq!(r.basin_bound.unwrap(), 0.02638, epsilon = 1e-5);
        assert!(r.theorem_basis.contains(&"Thm3.3.iii".to_string()));
        assert_eq!(
            classify_regime(&fig2a(6.0), &n).unwrap().case,
            RegimeCase::ExtinctionByI2
        );
        assert_eq!(
            classify_regime(&fig2a(1.0), &n).unwrap().case,
            RegimeCase::GlobalExtinction
        );
    }

    #[test]
    fn critical_regimes() {
        let n = Numerics::default();
        let r = classify_regime(&fig2a(5.0 / 6.0), &n).unwrap();
        assert_eq!(r.origin, OriginStability::Critical);
        assert_eq!(r.case, RegimeCase::CriticalPersistence);
        let r = classify_regime(&fig2_const(16.0 / 6.5, 6.5), &n).unwrap();
        assert_eq!(r.case, RegimeCase::CriticalExtinction);
    }
}
