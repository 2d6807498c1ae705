//! Model family: seasonal coefficients, the release schedule, and closed-form
//! evaluation of the right-hand side `F(t, w)` with its first three `w`-partials.
//!
//! Every variant has the form `w' = F(t, w)` with `F(t, 0) = 0`. The release
//! input `g(t)` is piecewise constant, so `F` is only piecewise continuous in `t`;
//! callers that integrate across a discontinuity use [`ModelSpec::local`] with a
//! reference time inside the smooth piece to freeze the discrete choices.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PERIOD_DIVISIBILITY_TOL: f64 = 1e-12;

/// A strictly positive periodic coefficient (a rate per day).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeasonalFunction {
    Constant {
        value: f64,
    },
    /// Right-open segments `[breakpoints[i], breakpoints[i+1])` repeated with `base_period`.
    PiecewiseConstant {
        base_period: f64,
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `mean + amplitude * cos(2 pi t / base_period + phase)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        base_period: f64,
        phase: f64,
    },
}

impl SeasonalFunction {
    pub fn constant(value: f64) -> Self {
        SeasonalFunction::Constant { value }
    }

    pub fn piecewise(base_period: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let f = SeasonalFunction::PiecewiseConstant {
            base_period,
            breakpoints,
            values,
        };
        f.validate_positive()?;
        Ok(f)
    }

    /// Two equal halves per unit period: `first` on `[n, n + 1/2)`, `second` on `[n + 1/2, n + 1)`.
    pub fn half_period(first: f64, second: f64) -> Self {
        SeasonalFunction::PiecewiseConstant {
            base_period: 1.0,
            breakpoints: vec![0.0, 0.5],
            values: vec![first, second],
        }
    }

    pub fn cosine(mean: f64, amplitude: f64, base_period: f64, phase: f64) -> Result<Self> {
        let f = SeasonalFunction::Cosine {
            mean,
            amplitude,
            base_period,
            phase,
        };
        f.validate_positive()?;
        Ok(f)
    }

    /// Shape checks plus strict positivity over one period.
    pub fn validate_positive(&self) -> Result<()> {
        self.validate_shape()?;
        let (lo, _) = self.period_bounds();
        if !(lo > 0.0) {
            return Err(Error::InvalidModel(format!(
                "seasonal function must be strictly positive, minimum is {lo}"
            )));
        }
        Ok(())
    }

    fn validate_shape(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        match self {
            SeasonalFunction::Constant { value } => {
                if !value.is_finite() {
                    return bad(format!("constant value {value} is not finite"));
                }
            }
            SeasonalFunction::PiecewiseConstant {
                base_period,
                breakpoints,
                values,
            } => {
                if !(base_period.is_finite() && *base_period > 0.0) {
                    return bad(format!("base_period {base_period} must be positive"));
                }
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return bad(format!(
                        "piecewise function needs one value per breakpoint ({} breakpoints, {} values)",
                        breakpoints.len(),
                        values.len()
                    ));
                }
                if breakpoints[0] != 0.0 {
                    return bad(format!(
                        "first breakpoint must be 0, got {}",
                        breakpoints[0]
                    ));
                }
                if breakpoints.windows(2).any(|p| !(p[1] > p[0])) {
                    return bad("breakpoints must be strictly increasing".into());
                }
                if *breakpoints.last().unwrap() >= *base_period {
                    return bad("breakpoints must lie in [0, base_period)".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("piecewise values must be finite".into());
                }
            }
            SeasonalFunction::Cosine {
                mean,
                amplitude,
                base_period,
                phase,
            } => {
                if !(base_period.is_finite() && *base_period > 0.0) {
                    return bad(format!("base_period {base_period} must be positive"));
                }
                if !(mean.is_finite() && amplitude.is_finite() && phase.is_finite()) {
                    return bad("cosine parameters must be finite".into());
                }
            }
        }
        Ok(())
    }

    pub fn base_period(&self) -> Option<f64> {
        match self {
            SeasonalFunction::Constant { .. } => None,
            SeasonalFunction::PiecewiseConstant { base_period, .. }
            | SeasonalFunction::Cosine { base_period, .. } => Some(*base_period),
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        !matches!(self, SeasonalFunction::Cosine { .. })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_frozen(t, t)
    }

    /// Value at `t`, with the constant piece selected at `piece_t`.
    pub(crate) fn eval_frozen(&self, t: f64, piece_t: f64) -> f64 {
        match self {
            SeasonalFunction::Constant { value } => *value,
            SeasonalFunction::PiecewiseConstant {
                base_period,
                breakpoints,
                values,
            } => {
                let phase = piece_t.rem_euclid(*base_period);
                let idx = breakpoints.partition_point(|&b| b <= phase);
                values[idx.saturating_sub(1)]
            }
            SeasonalFunction::Cosine {
                mean,
                amplitude,
                base_period,
                phase,
            } => mean + amplitude * (2.0 * PI * t / base_period + phase).cos(),
        }
    }

    /// Mean over one base period.
    pub fn mean(&self) -> f64 {
        match self {
            SeasonalFunction::Constant { value } => *value,
            SeasonalFunction::PiecewiseConstant { base_period, .. } => {
                self.integral(0.0, *base_period) / base_period
            }
            SeasonalFunction::Cosine { mean, .. } => *mean,
        }
    }

    /// Exact integral over `[t0, t1]` (signed if `t1 < t0`).
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        match self {
            SeasonalFunction::Constant { value } => value * (t1 - t0),
            SeasonalFunction::PiecewiseConstant { .. } => {
                self.piecewise_primitive(t1) - self.piecewise_primitive(t0)
            }
            SeasonalFunction::Cosine {
                mean,
                amplitude,
                base_period,
                phase,
            } => {
                let omega = 2.0 * PI / base_period;
                mean * (t1 - t0)
                    + amplitude / omega * ((omega * t1 + phase).sin() - (omega * t0 + phase).sin())
            }
        }
    }

    fn piecewise_primitive(&self, t: f64) -> f64 {
        let SeasonalFunction::PiecewiseConstant {
            base_period,
            breakpoints,
            values,
        } = self
        else {
            unreachable!()
        };
        let partial = |tau: f64| -> f64 {
            let mut acc = 0.0;
            for (i, (&b, &v)) in breakpoints.iter().zip(values).enumerate() {
                let end = breakpoints.get(i + 1).copied().unwrap_or(*base_period);
                if tau <= b {
                    break;
                }
                acc += v * (tau.min(end) - b);
            }
            acc
        };
        let cycles = (t / base_period).floor();
        let tau = t - cycles * base_period;
        cycles * partial(*base_period) + partial(tau.clamp(0.0, *base_period))
    }

    /// Jump locations of a piecewise-constant profile inside `[t0, t1]`.
    pub fn discontinuities(&self, t0: f64, t1: f64) -> Vec<f64> {
        let SeasonalFunction::PiecewiseConstant {
            base_period,
            breakpoints,
            values,
        } = self
        else {
            return Vec::new();
        };
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        let mut out = Vec::new();
        let first = (lo / base_period).floor() as i64 - 1;
        let last = (hi / base_period).ceil() as i64 + 1;
        for k in first..=last {
            let origin = k as f64 * base_period;
            for (i, &b) in breakpoints.iter().enumerate() {
                let prev = if i == 0 {
                    values[values.len() - 1]
                } else {
                    values[i - 1]
                };
                if prev == values[i] {
                    continue;
                }
                let s = origin + b;
                if s >= lo && s <= hi {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Infimum and supremum over `[t0, t1]`.
    pub fn bounds_on(&self, t0: f64, t1: f64) -> (f64, f64) {
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        match self {
            SeasonalFunction::Constant { value } => (*value, *value),
            SeasonalFunction::PiecewiseConstant {
                base_period,
                values,
                ..
            } => {
                if hi - lo >= *base_period {
                    return self.period_bounds();
                }
                let mut cuts = vec![lo];
                cuts.extend(self.discontinuities(lo, hi));
                cuts.push(hi);
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for c in cuts.windows(2) {
                    if c[1] <= c[0] && cuts.len() > 2 {
                        continue;
                    }
                    let v = self.eval(0.5 * (c[0] + c[1]));
                    min = min.min(v);
                    max = max.max(v);
                }
                if !min.is_finite() {
                    let v = values[0];
                    return (v, v);
                }
                (min, max)
            }
            SeasonalFunction::Cosine {
                mean,
                amplitude,
                base_period,
                phase,
            } => {
                let omega = 2.0 * PI / base_period;
                let th0 = omega * lo + phase;
                let th1 = omega * hi + phase;
                let c0 = th0.cos();
                let c1 = th1.cos();
                let contains = |offset: f64| {
                    // is there k with 2k pi + offset in [th0, th1]?
                    let k = ((th0 - offset) / (2.0 * PI)).ceil();
                    2.0 * PI * k + offset <= th1
                };
                let cmax = if contains(0.0) { 1.0 } else { c0.max(c1) };
                let cmin = if contains(PI) { -1.0 } else { c0.min(c1) };
                let a = *amplitude;
                let (v1, v2) = (mean + a * cmin, mean + a * cmax);
                (v1.min(v2), v1.max(v2))
            }
        }
    }

    /// Infimum and supremum over one full period.
    pub fn period_bounds(&self) -> (f64, f64) {
        match self {
            SeasonalFunction::Constant { value } => (*value, *value),
            SeasonalFunction::PiecewiseConstant { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
            SeasonalFunction::Cosine {
                mean, amplitude, ..
            } => (mean - amplitude.abs(), mean + amplitude.abs()),
        }
    }

    pub fn averaged(&self) -> SeasonalFunction {
        SeasonalFunction::Constant { value: self.mean() }
    }
}

/// Piecewise-constant sterile release: `g0` on `[iT, iT + T_bar)`, zero on `[iT + T_bar, (i+1)T)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReleaseSchedule {
    pub g0: f64,
    pub t_bar: f64,
    pub period: f64,
    #[serde(default = "one")]
    pub n0: u32,
}

fn one() -> u32 {
    1
}

impl ReleaseSchedule {
    pub fn new(g0: f64, t_bar: f64, period: f64, n0: u32) -> Result<Self> {
        let s = ReleaseSchedule {
            g0,
            t_bar,
            period,
            n0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidModel(format!(
                "release period T = {} must be positive",
                self.period
            )));
        }
        if !(self.t_bar > 0.0 && self.t_bar < self.period) {
            return Err(Error::InvalidModel(format!(
                "release window T_bar = {} must satisfy 0 < T_bar < T = {}",
                self.t_bar, self.period
            )));
        }
        if !(self.g0.is_finite() && self.g0 >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "release amplitude g0 = {} must be >= 0",
                self.g0
            )));
        }
        if self.n0 == 0 {
            return Err(Error::InvalidModel("n0 must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether `t` falls in a release window (right-open convention at switch instants).
    pub fn in_window(&self, t: f64) -> bool {
        t.rem_euclid(self.period) < self.t_bar
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.in_window(t) {
            self.g0
        } else {
            0.0
        }
    }

    /// The coefficient period `n0 * T` over which the Poincare map is taken.
    pub fn full_period(&self) -> f64 {
        self.n0 as f64 * self.period
    }

    /// All switch instants `iT` and `iT + T_bar` inside `[t0, t1]`.
    pub fn switch_times(&self, t0: f64, t1: f64) -> Vec<f64> {
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        let first = (lo / self.period).floor() as i64 - 1;
        let last = (hi / self.period).ceil() as i64 + 1;
        let mut out = Vec::new();
        for i in first..=last {
            let start = i as f64 * self.period;
            for s in [start, start + self.t_bar] {
                if s >= lo && s <= hi {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Release windows `[iT, iT + T_bar)` inside one coefficient period `[0, n0 T)`.
    pub fn windows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n0).map(move |i| {
            let s = i as f64 * self.period;
            (s, s + self.t_bar)
        })
    }
}

/// Model variant together with the extras it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    /// `F = w (a w/(w+g) - mu - xi (w+g))`.
    Base,
    /// Newborn survival `1 - eta w^2/(w+g)`; `xi` is unused.
    CompetitionSurvival { eta: SeasonalFunction },
    /// Imperfect cytoplasmic incompatibility with intensity `s_h` in `[0, 1]`.
    ImperfectCi { s_h: f64 },
    /// Saturating release `g = b w/(1+w)` during windows; `g0` is unused.
    SaturatedRelease { b: f64 },
    /// Mating Allee effect; effective `g` is `1/(1+alpha)` on windows and 1 off; `g0` is unused.
    Allee { alpha: f64 },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::CompetitionSurvival { .. } => "competition_survival",
            Variant::ImperfectCi { .. } => "imperfect_ci",
            Variant::SaturatedRelease { .. } => "saturated_release",
            Variant::Allee { .. } => "allee",
        }
    }
}

/// A validated model: variant, coefficients and release schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec")]
pub struct ModelSpec {
    variant: Variant,
    a: SeasonalFunction,
    mu: SeasonalFunction,
    xi: SeasonalFunction,
    schedule: ReleaseSchedule,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelSpec {
    variant: Variant,
    a: SeasonalFunction,
    mu: SeasonalFunction,
    xi: SeasonalFunction,
    schedule: ReleaseSchedule,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(r: RawModelSpec) -> Result<Self> {
        ModelSpec::new(r.variant, r.a, r.mu, r.xi, r.schedule)
    }
}

/// Coefficients frozen at one instant of a smooth piece.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Local {
    a: f64,
    mu: f64,
    xi: f64,
    g: f64,
    law: Law,
}

#[derive(Clone, Copy, Debug)]
enum Law {
    Base,
    Competition { eta: f64 },
    ImperfectCi { s_h: f64 },
    SaturatedOn { b: f64 },
    Logistic,
    Allee,
}

/// `w^2/(w+g)` and its first three derivatives; reduces to `w` when `g = 0`.
fn ratio_sq(w: f64, g: f64) -> [f64; 4] {
    if g == 0.0 {
        return [w, 1.0, 0.0, 0.0];
    }
    let d = w + g;
    let g2 = g * g;
    [
        w * w / d,
        1.0 - g2 / (d * d),
        2.0 * g2 / (d * d * d),
        -6.0 * g2 / (d * d * d * d),
    ]
}

impl Local {
    /// `[F, F_w, F_ww, F_www]` at density `w`.
    pub(crate) fn derivs(&self, w: f64) -> [f64; 4] {
        let Local { a, mu, xi, g, law } = *self;
        match law {
            Law::Base => {
                let r = ratio_sq(w, g);
                [
                    a * r[0] - mu * w - xi * w * w - xi * g * w,
                    a * r[1] - mu - 2.0 * xi * w - xi * g,
                    a * r[2] - 2.0 * xi,
                    a * r[3],
                ]
            }
            Law::Competition { eta } => {
                let r = ratio_sq(w, g);
                let k = a * eta;
                [
                    a * r[0] - k * r[0] * r[0] - mu * w,
                    a * r[1] - 2.0 * k * r[0] * r[1] - mu,
                    a * r[2] - 2.0 * k * (r[1] * r[1] + r[0] * r[2]),
                    a * r[3] - 2.0 * k * (3.0 * r[1] * r[2] + r[0] * r[3]),
                ]
            }
            Law::ImperfectCi { s_h } => {
                let gg = 2.0 * g;
                let r = ratio_sq(w, gg);
                // q = g w / (w + 2g)
                let q = if g == 0.0 {
                    [0.0; 4]
                } else {
                    let d = w + gg;
                    let c = g * gg;
                    [
                        g * w / d,
                        c / (d * d),
                        -2.0 * c / (d * d * d),
                        6.0 * c / (d * d * d * d),
                    ]
                };
                let h = 0.5 * a;
                let m = a * (1.0 - s_h);
                [
                    h * r[0] + m * q[0] - mu * w - xi * w * w - xi * g * w,
                    h * r[1] + m * q[1] - mu - 2.0 * xi * w - xi * g,
                    h * r[2] + m * q[2] - 2.0 * xi,
                    h * r[3] + m * q[3],
                ]
            }
            Law::SaturatedOn { b } => {
                // w (w+1)/(w+1+b) = w - b + b c/(w+c), c = 1 + b
                let c = 1.0 + b;
                let d = w + c;
                let bc = b * c;
                let s = [
                    w * (w + 1.0) / d,
                    1.0 - bc / (d * d),
                    2.0 * bc / (d * d * d),
                    -6.0 * bc / (d * d * d * d),
                ];
                [
                    a * s[0] - mu * w - xi * w * w,
                    a * s[1] - mu - 2.0 * xi * w,
                    a * s[2] - 2.0 * xi,
                    a * s[3],
                ]
            }
            Law::Logistic => [w * (a - mu - xi * w), a - mu - 2.0 * xi * w, -2.0 * xi, 0.0],
            Law::Allee => {
                let r = ratio_sq(w, g);
                [
                    a * r[0] - xi * w * w - mu * w,
                    a * r[1] - 2.0 * xi * w - mu,
                    a * r[2] - 2.0 * xi,
                    a * r[3],
                ]
            }
        }
    }

    pub(crate) fn rhs(&self, w: f64) -> f64 {
        self.derivs(w)[0]
    }
}

impl ModelSpec {
    pub fn new(
        variant: Variant,
        a: SeasonalFunction,
        mu: SeasonalFunction,
        xi: SeasonalFunction,
        schedule: ReleaseSchedule,
    ) -> Result<Self> {
        let m = ModelSpec {
            variant,
            a,
            mu,
            xi,
            schedule,
        };
        m.validate()?;
        Ok(m)
    }

    /// Base model with constant coefficients and one release period per coefficient period.
    pub fn base_constant(
        a: f64,
        mu: f64,
        xi: f64,
        g0: f64,
        t_bar: f64,
        period: f64,
    ) -> Result<Self> {
        ModelSpec::new(
            Variant::Base,
            SeasonalFunction::constant(a),
            SeasonalFunction::constant(mu),
            SeasonalFunction::constant(xi),
            ReleaseSchedule::new(g0, t_bar, period, 1)?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        let label = |name: &str, e: Error| match e {
            Error::InvalidModel(msg) => Error::InvalidModel(format!("{name}: {msg}")),
            other => other,
        };
        self.a.validate_positive().map_err(|e| label("a", e))?;
        self.mu.validate_positive().map_err(|e| label("mu", e))?;
        self.xi.validate_positive().map_err(|e| label("xi", e))?;
        let full = self.schedule.full_period();
        let mut functions = vec![("a", &self.a), ("mu", &self.mu), ("xi", &self.xi)];
        match &self.variant {
            Variant::Base => {}
            Variant::CompetitionSurvival { eta } => {
                eta.validate_positive().map_err(|e| label("eta", e))?;
                functions.push(("eta", eta));
            }
            Variant::ImperfectCi { s_h } => {
                if !(0.0..=1.0).contains(s_h) {
                    return Err(Error::InvalidModel(format!(
                        "s_h = {s_h} must lie in [0, 1]"
                    )));
                }
            }
            Variant::SaturatedRelease { b } => {
                if !(b.is_finite() && *b > 0.0) {
                    return Err(Error::InvalidModel(format!("b = {b} must be positive")));
                }
            }
            Variant::Allee { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "alpha = {alpha} must be positive"
                    )));
                }
            }
        }
        for (name, f) in functions {
            if let Some(p) = f.base_period() {
                let ratio = full / p;
                if (ratio - ratio.round()).abs() > PERIOD_DIVISIBILITY_TOL * ratio.max(1.0)
                    || ratio.round() < 1.0
                {
                    return Err(Error::InvalidModel(format!(
                        "{name}: base_period {p} does not divide the coefficient period n0*T = {full}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }
    pub fn a(&self) -> &SeasonalFunction {
        &self.a
    }
    pub fn mu(&self) -> &SeasonalFunction {
        &self.mu
    }
    pub fn xi(&self) -> &SeasonalFunction {
        &self.xi
    }
    pub fn schedule(&self) -> &ReleaseSchedule {
        &self.schedule
    }

    /// Coefficient period `n0 * T`.
    pub fn full_period(&self) -> f64 {
        self.schedule.full_period()
    }

    /// Same model with a different release amplitude.
    pub fn with_g0(&self, g0: f64) -> Result<Self> {
        let mut m = self.clone();
        m.schedule.g0 = g0;
        m.validate()?;
        Ok(m)
    }

    /// Whether the release windows actually change the dynamics.
    pub fn release_active(&self) -> bool {
        match self.variant {
            Variant::SaturatedRelease { .. } | Variant::Allee { .. } => true,
            _ => self.schedule.g0 > 0.0,
        }
    }

    /// Every seasonal function of the model, extras included.
    pub(crate) fn seasonal_functions(&self) -> Vec<&SeasonalFunction> {
        let mut v = vec![&self.a, &self.mu, &self.xi];
        if let Variant::CompetitionSurvival { eta } = &self.variant {
            v.push(eta);
        }
        v
    }

    pub(crate) fn all_piecewise_constant(&self) -> bool {
        self.seasonal_functions()
            .iter()
            .all(|f| f.is_piecewise_constant())
    }

    /// Sorted instants in `[t0, t1]` where the right-hand side may jump: release
    /// switches and coefficient breakpoints. Each entry carries whether it is a release switch.
    pub fn mesh_points(&self, t0: f64, t1: f64) -> Vec<(f64, bool)> {
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        let mut pts: Vec<(f64, bool)> = self
            .schedule
            .switch_times(lo, hi)
            .into_iter()
            .map(|s| (s, true))
            .collect();
        for f in self.seasonal_functions() {
            pts.extend(f.discontinuities(lo, hi).into_iter().map(|s| (s, false)));
        }
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let merge_tol = 1e-12 * hi.abs().max(lo.abs()).max(1.0);
        let mut merged: Vec<(f64, bool)> = Vec::with_capacity(pts.len());
        for (s, is_switch) in pts {
            match merged.last_mut() {
                Some(last) if (s - last.0).abs() <= merge_tol => {
                    if is_switch && !last.1 {
                        *last = (s, true);
                    }
                }
                _ => merged.push((s, is_switch)),
            }
        }
        merged
    }

    /// Coefficients at `t` with discontinuous pieces chosen at `piece_t`.
    pub(crate) fn local(&self, t: f64, piece_t: f64) -> Local {
        let a = self.a.eval_frozen(t, piece_t);
        let mu = self.mu.eval_frozen(t, piece_t);
        let xi = self.xi.eval_frozen(t, piece_t);
        let on = self.schedule.in_window(piece_t);
        let g = if on { self.schedule.g0 } else { 0.0 };
        match &self.variant {
            Variant::Base => Local {
                a,
                mu,
                xi,
                g,
                law: Law::Base,
            },
            Variant::CompetitionSurvival { eta } => Local {
                a,
                mu,
                xi,
                g,
                law: Law::Competition {
                    eta: eta.eval_frozen(t, piece_t),
                },
            },
            Variant::ImperfectCi { s_h } => Local {
                a,
                mu,
                xi,
                g,
                law: Law::ImperfectCi { s_h: *s_h },
            },
            Variant::SaturatedRelease { b } => Local {
                a,
                mu,
                xi,
                g: 0.0,
                law: if on {
                    Law::SaturatedOn { b: *b }
                } else {
                    Law::Logistic
                },
            },
            Variant::Allee { alpha } => {
                let (a_eff, g_eff) = if on {
                    (a / (1.0 + alpha), 1.0 / (1.0 + alpha))
                } else {
                    (a, 1.0)
                };
                Local {
                    a: a_eff,
                    mu,
                    xi,
                    g: g_eff,
                    law: Law::Allee,
                }
            }
        }
    }

    /// `F(t, w)`.
    pub fn eval_rhs(&self, t: f64, w: f64) -> Result<f64> {
        if w < 0.0 {
            return Err(Error::NegativeDensity(w));
        }
        Ok(self.local(t, t).rhs(w))
    }

    /// `d^order F / dw^order` at `(t, w)` for `order` in 1..=3.
    pub fn eval_df(&self, t: f64, w: f64, order: u8) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidOrder(order));
        }
        if w < 0.0 {
            return Err(Error::NegativeDensity(w));
        }
        Ok(self.local(t, t).derivs(w)[order as usize])
    }

    /// All four of `F, F_w, F_ww, F_www` at `(t, w)` (no sign check).
    pub fn eval_all(&self, t: f64, w: f64) -> [f64; 4] {
        self.local(t, t).derivs(w)
    }

    /// Replace every seasonal coefficient by its mean over one base period.
    pub fn averaged(&self) -> ModelSpec {
        let variant = match &self.variant {
            Variant::CompetitionSurvival { eta } => Variant::CompetitionSurvival {
                eta: eta.averaged(),
            },
            other => other.clone(),
        };
        ModelSpec {
            variant,
            a: self.a.averaged(),
            mu: self.mu.averaged(),
            xi: self.xi.averaged(),
            schedule: self.schedule.clone(),
        }
    }
}
