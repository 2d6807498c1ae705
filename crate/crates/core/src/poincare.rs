//! The period map `P(w0) = w(n0 T; w0)`, its inverse and derivatives, fixed-point
//! enumeration and forward iteration to the omega-limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{advance, advance_with_lloyd, ultimate_bound, Tolerances};
use crate::model::ModelSpec;
use crate::par;

/// Numerical settings shared by the fixed-point search and the classifiers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub rtol: f64,
    pub atol: f64,
    /// Dead-band on the origin integral.
    pub eps_crit: f64,
    /// Grid size of the fixed-point scan.
    pub scan_points: usize,
    /// Relative tolerance of the scan itself; brackets and roots are
    /// confirmed at `rtol`.
    pub scan_rtol: f64,
    /// Multipliers within this of 1 are tagged degenerate.
    pub tol_mult: f64,
    /// Root width, relative to the search cap.
    pub root_rel: f64,
    /// Tangency threshold on `|P(w) - w|`, relative to the search cap.
    pub touch_rel: f64,
    /// Convergence threshold of forward iteration.
    pub omega_tol: f64,
    pub max_periods: usize,
    /// Dead-band on `P''(0)` at a critical origin.
    pub p2_deadband: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            rtol: 1e-10,
            atol: 1e-12,
            eps_crit: 1e-8,
            scan_points: 2000,
            scan_rtol: 1e-7,
            tol_mult: 1e-6,
            root_rel: 1e-10,
            touch_rel: 1e-8,
            omega_tol: 1e-10,
            max_periods: 20_000,
            p2_deadband: 1e-6,
        }
    }
}

impl Numerics {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rtol: self.rtol,
            atol: self.atol,
        }
    }

    /// Tolerances of the coarse scan, never tighter than [`Self::tolerances`].
    pub fn scan_tolerances(&self) -> Tolerances {
        let rtol = self.scan_rtol.max(self.rtol);
        Tolerances {
            rtol,
            atol: self.atol * rtol / self.rtol,
        }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.rtol = tol.rtol;
        self.atol = tol.atol;
        self
    }
}

/// `P` and its first three derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoincareEvaluation {
    pub w0: f64,
    pub p: f64,
    pub dp: f64,
    pub d2p: f64,
    pub d3p: f64,
}

/// `P(w0)` with derivatives from the Lloyd accumulators.
pub fn poincare_eval(m: &ModelSpec, w0: f64, tol: Tolerances) -> Result<PoincareEvaluation> {
    let (p, acc) = advance_with_lloyd(m, w0, 0.0, m.full_period(), tol)?;
    let (dp, d2p, d3p) = acc.map_derivatives();
    Ok(PoincareEvaluation {
        w0,
        p,
        dp,
        d2p,
        d3p,
    })
}

/// `P(w0)` alone.
pub fn poincare_map(m: &ModelSpec, w0: f64, tol: Tolerances) -> Result<f64> {
    advance(m, w0, 0.0, m.full_period(), tol)
}

fn out_of_range(w0: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::BackwardBlowup { .. } => Error::OutOfRange { w0 },
        other => other,
    }
}

/// `P^{-1}(w0)`, the backward solution over one period.
pub fn poincare_inverse(m: &ModelSpec, w0: f64, tol: Tolerances) -> Result<f64> {
    advance(m, w0, m.full_period(), 0.0, tol).map_err(out_of_range(w0))
}

/// `P^{-1}` and its first three derivatives, from the Lloyd accumulators of the
/// time-reversed equation `y' = -F(-t, y)` (integrating `F` backward over one period).
pub fn inverse_derivatives(m: &ModelSpec, w0: f64, tol: Tolerances) -> Result<PoincareEvaluation> {
    let (q, acc) =
        advance_with_lloyd(m, w0, m.full_period(), 0.0, tol).map_err(out_of_range(w0))?;
    let (dq, d2q, d3q) = acc.map_derivatives();
    Ok(PoincareEvaluation {
        w0,
        p: q,
        dp: dq,
        d2p: d2q,
        d3p: d3q,
    })
}

/// Third derivative of `P^{-1}` at `w0`.
pub fn inverse_third_derivative(m: &ModelSpec, w0: f64, tol: Tolerances) -> Result<f64> {
    Ok(inverse_derivatives(m, w0, tol)?.d3p)
}

/// Derivatives of `P^{-1}` at `P(x)` from those of `P` at `x`, by differentiating
/// `P(P^{-1}(w)) = w` three times.
pub fn inverse_derivatives_from_forward(e: &PoincareEvaluation) -> (f64, f64, f64) {
    let d1 = e.dp;
    let q1 = 1.0 / d1;
    let q2 = -e.d2p / d1.powi(3);
    let q3 = -e.d3p / d1.powi(4) + 3.0 * e.d2p * e.d2p / d1.powi(5);
    (q1, q2, q3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Degenerate,
}

impl Stability {
    pub fn from_multiplier(multiplier: f64, tol_mult: f64) -> Self {
        if multiplier < 1.0 - tol_mult {
            Stability::Stable
        } else if multiplier > 1.0 + tol_mult {
            Stability::Unstable
        } else {
            Stability::Degenerate
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub w_star: f64,
    pub multiplier: f64,
    pub stability: Stability,
}

/// All fixed points of `P` in `[0, search_cap]`, sorted, origin first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointSet {
    pub points: Vec<FixedPoint>,
    /// Largest fixed point.
    pub delta: f64,
    pub search_cap: f64,
}

impl FixedPointSet {
    pub fn origin(&self) -> &FixedPoint {
        &self.points[0]
    }

    pub fn positive(&self) -> &[FixedPoint] {
        &self.points[1..]
    }

    pub fn positive_count(&self) -> usize {
        self.points.len() - 1
    }

    /// CSV with columns `w_star,multiplier,stability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w_star,multiplier,stability\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                crate::fmt_num(p.w_star),
                crate::fmt_num(p.multiplier),
                p.stability.as_str()
            ));
        }
        out
    }
}

/// `ln(P(w)/w)`; its zeros in `(0, inf)` are the positive fixed points and its
/// value at 0 is `ln P'(0)`, so roots close to the origin still bracket.
struct LogRatio<'a> {
    m: &'a ModelSpec,
    tol: Tolerances,
}

impl LogRatio<'_> {
    fn at(&self, w: f64) -> Result<f64> {
        if w == 0.0 {
            let (_, acc) = advance_with_lloyd(self.m, 0.0, 0.0, self.m.full_period(), self.tol)?;
            return Ok(acc.a1);
        }
        let p = poincare_map(self.m, w, self.tol)?;
        Ok(p.ln() - w.ln())
    }
}

fn bisect(f: &LogRatio, mut lo: f64, mut hi: f64, mut f_lo: f64, width: f64) -> Result<f64> {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f.at(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the extremum of `sign * f` on `[lo, hi]`; returns `(w, f(w))`.
fn golden_max(f: &LogRatio, mut lo: f64, mut hi: f64, sign: f64, width: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = sign * f.at(x1)?;
    let mut f2 = sign * f.at(x2)?;
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = sign * f.at(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = sign * f.at(x2)?;
        }
    }
    Ok(if f1 >= f2 {
        (x1, sign * f1)
    } else {
        (x2, sign * f2)
    })
}

/// Roots hidden in `[lo, hi]` where `f` has the same sign at both ends: the
/// extremum of `f` toward zero either crosses (a root pair) or touches (a
/// degenerate root).
fn hidden_roots(
    f: &LogRatio,
    lo: f64,
    hi: f64,
    f_lo: f64,
    width: f64,
    touch: f64,
    roots: &mut Vec<(f64, bool)>,
) -> Result<()> {
    let sign = if f_lo < 0.0 { 1.0 } else { -1.0 };
    let (w_ext, q_ext) = golden_max(f, lo, hi, sign, width)?;
    if sign_of(q_ext) != sign_of(f_lo) && q_ext != 0.0 {
        roots.push((bisect(f, lo, w_ext, f_lo, width)?, false));
        roots.push((bisect(f, w_ext, hi, q_ext, width)?, false));
    } else if (w_ext * q_ext.exp_m1()).abs() < touch {
        roots.push((w_ext, true));
    }
    Ok(())
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Every fixed point of `P` in `[0, 1.5 Gamma]`.
///
/// A uniform scan of `ln(P(w)/w)` brackets the transversal roots, which are then
/// bisected. Local extrema of the scan that come close to zero are refined by
/// golden-section search: a refined extremum that crosses zero yields a root
/// pair hidden inside one cell, and one that only touches (`|P(w) - w|` below
/// the tangency threshold) is reported as a degenerate root.
pub fn find_fixed_points(m: &ModelSpec, num: &Numerics) -> Result<FixedPointSet> {
    let tol = num.tolerances();
    let f = LogRatio { m, tol };
    let mut cap = 1.5 * ultimate_bound(m);
    for _ in 0..3 {
        if f.at(cap)? < 0.0 {
            break;
        }
        cap *= 2.0;
    }
    let n = num.scan_points.max(4);
    let grid: Vec<f64> = (0..=n).map(|i| cap * i as f64 / n as f64).collect();
    let coarse = LogRatio {
        m,
        tol: num.scan_tolerances(),
    };
    let mut values: Vec<f64> = par::map(&grid[1..], |&w| coarse.at(w))
        .into_iter()
        .collect::<Result<_>>()?;
    values.insert(0, f.at(0.0)?);

    let width = num.root_rel * cap;
    let touch = num.touch_rel * cap;
    let mut roots: Vec<(f64, bool)> = Vec::new();
    let tight = |i: usize| if i == 0 { Ok(values[0]) } else { f.at(grid[i]) };

    for i in 0..n {
        let (s0, s1) = (sign_of(values[i]), sign_of(values[i + 1]));
        if s0 == 0 && i > 0 {
            roots.push((grid[i], false));
        } else if s0 != 0 && s1 != 0 && s0 != s1 {
            // confirm the coarse sign change before bisecting
            let (f_lo, f_hi) = (tight(i)?, tight(i + 1)?);
            if sign_of(f_lo) * sign_of(f_hi) < 0 {
                roots.push((bisect(&f, grid[i], grid[i + 1], f_lo, width)?, false));
            } else if f_lo != 0.0 {
                hidden_roots(&f, grid[i], grid[i + 1], f_lo, width, touch, &mut roots)?;
            }
        }
    }

    for i in 1..n {
        let (l, c, r) = (values[i - 1], values[i], values[i + 1]);
        let is_max = c >= l && c >= r && c < 0.0 && l < 0.0 && r < 0.0;
        let is_min = c <= l && c <= r && c > 0.0 && l > 0.0 && r > 0.0;
        if !(is_max || is_min) {
            continue;
        }
        let spread = (c - l).abs().max((c - r).abs());
        if !c.is_finite() || c.abs() > 2.0 * spread {
            continue;
        }
        let f_lo = tight(i - 1)?;
        if sign_of(f_lo) == sign_of(c) {
            hidden_roots(&f, grid[i - 1], grid[i + 1], f_lo, width, touch, &mut roots)?;
        }
    }

    roots.retain(|r| r.0 > width);
    roots.sort_by(|x, y| x.0.total_cmp(&y.0));
    roots.dedup_by(|next, prev| {
        if next.0 - prev.0 <= 2.0 * width {
            prev.1 |= next.1;
            true
        } else {
            false
        }
    });

    let origin_mult = values[0].exp();
    let mut points = vec![FixedPoint {
        w_star: 0.0,
        multiplier: origin_mult,
        stability: Stability::from_multiplier(origin_mult, num.tol_mult),
    }];
    let evals: Vec<Result<PoincareEvaluation>> =
        par::map(&roots, |&(w, _)| poincare_eval(m, w, tol));
    for (&(w, tangent), e) in roots.iter().zip(evals) {
        let e = e?;
        let stability = if tangent {
            Stability::Degenerate
        } else {
            Stability::from_multiplier(e.dp, num.tol_mult)
        };
        points.push(FixedPoint {
            w_star: w,
            multiplier: e.dp,
            stability,
        });
    }
    if points.len() > 3 {
        return Err(Error::SuspectCount {
            count: points.len(),
            roots: points.iter().map(|p| p.w_star).collect(),
        });
    }
    let delta = points.last().map(|p| p.w_star).unwrap_or(0.0);
    Ok(FixedPointSet {
        points,
        delta,
        search_cap: cap,
    })
}

/// Iterate `P` from `w0` until successive iterates differ by less than `tol`.
///
/// An orbit that is still shrinking geometrically when its steps fall below
/// `tol` is converging to the origin and is reported as 0. A small step that
/// is followed by a larger one means the orbit is leaving a repelling point,
/// and iteration continues.
pub fn omega_limit(
    m: &ModelSpec,
    w0: f64,
    max_periods: usize,
    tol: f64,
    int_tol: Tolerances,
) -> Result<f64> {
    let mut w = w0;
    for _ in 0..max_periods {
        if w == 0.0 {
            return Ok(0.0);
        }
        let next = poincare_map(m, w, int_tol)?;
        let step = (next - w).abs();
        if step < tol {
            // still contracting by a fixed factor: heading for the origin
            if next < w * (1.0 - 1e-3) {
                return Ok(0.0);
            }
            // a small step next to a repelling point grows again
            if step <= 1e-2 * tol || (poincare_map(m, next, int_tol)? - next).abs() <= step {
                return Ok(next);
            }
        }
        w = next;
    }
    Err(Error::NotConverged {
        last: w,
        iterations: max_periods,
    })
}
