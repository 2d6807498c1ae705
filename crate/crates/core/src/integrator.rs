//! Switch-aware Dormand-Prince 5(4) integration.
//!
//! The span is cut at every release switch and every coefficient jump; each
//! smooth piece is integrated with its discrete choices frozen at the piece
//! midpoint, so no step ever straddles a discontinuity. The Lloyd variant carries
//! three quadrature states alongside `w`:
//!
//! ```text
//! L'  = F_w(t, w)
//! A2' = F_ww(t, w) * exp(L)
//! A3' = F_www(t, w) * exp(2 L)
//! ```
//!
//! from which `P' = exp(L)`, `P'' = P' A2` and `P''' = P' (3/2 (P''/P')^2 + A3)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Local, ModelSpec, Variant};

/// Relative and absolute error tolerances of the adaptive integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub rtol: f64,
    pub atol: f64,
}

/// Solution samples of one integration run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub t0: f64,
    /// `(t, w)` pairs, strictly monotone in `t` in the direction of integration.
    pub samples: Vec<(f64, f64)>,
    /// Release switch instants that were hit as mesh points.
    pub switch_times_hit: Vec<f64>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.samples.last().map(|s| s.0).unwrap_or(self.t0)
    }

    pub fn final_value(&self) -> f64 {
        self.samples.last().map(|s| s.1).unwrap_or(0.0)
    }

    /// Last sample at or before time `t` (forward runs).
    pub fn value_at_or_before(&self, t: f64) -> Option<f64> {
        let idx = self.samples.partition_point(|s| s.0 <= t);
        idx.checked_sub(1).map(|i| self.samples[i].1)
    }

    /// CSV with columns `t,w,switch`; switch instants are flagged with 1.
    pub fn to_csv(&self) -> String {
        let switches: std::collections::HashSet<u64> =
            self.switch_times_hit.iter().map(|s| s.to_bits()).collect();
        let mut out = String::from("t,w,switch\n");
        for &(t, w) in &self.samples {
            let flag = switches.contains(&t.to_bits());
            out.push_str(&format!(
                "{},{},{}\n",
                crate::fmt_num(t),
                crate::fmt_num(w),
                u8::from(flag)
            ));
        }
        out
    }
}

/// Integrals accumulated along `w(t; w0)`; all zero at the initial time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LloydAccumulators {
    /// `int F_w dt`
    pub a1: f64,
    /// `int F_ww exp(int F_w) dt`
    pub a2: f64,
    /// `int F_www exp(2 int F_w) dt`
    pub a3: f64,
}

impl LloydAccumulators {
    /// `(P', P'', P''')` of the period map the accumulators were integrated over.
    pub fn map_derivatives(&self) -> (f64, f64, f64) {
        let d1 = self.a1.exp();
        let d2 = d1 * self.a2;
        let d3 = d1 * (1.5 * self.a2 * self.a2 + self.a3);
        (d1, d2, d3)
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 1.0 / 5.0;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b - b* (error estimate weights), last entry multiplies k7.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 20_000_000;
const MAX_CONSECUTIVE_REJECTS: usize = 200;
const BLOWUP_FACTOR: f64 = 1e6;
const MIN_STEP_FRACTION: f64 = 1e-14;
/// Share of the requested tolerance granted to each local step, so that the
/// error accumulated over a period stays within a few multiples of `rtol`.
const LOCAL_FRACTION: f64 = 0.1;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(&[f64; N], f64)]) -> [f64; N] {
    let mut out = *y;
    for (k, c) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

struct Stepper<'m, const N: usize, R> {
    model: &'m ModelSpec,
    tol: Tolerances,
    rhs: R,
    /// Backward runs abort once `w` exceeds this.
    blowup_guard: Option<f64>,
    stats: IntegratorStats,
    /// Coefficients of the current piece when none of them depends on time.
    frozen: Option<Local>,
}

struct StepOutcome<const N: usize> {
    y: [f64; N],
    k_last: [f64; N],
    err: f64,
}

impl<'m, const N: usize, R: Fn(&Local, &[f64; N]) -> [f64; N]> Stepper<'m, N, R> {
    /// Error scale of component `i` at magnitude `mag`. Below unit density the
    /// absolute part shrinks with the density itself: within one period the
    /// state can fall by many decades during a release window and must keep
    /// its relative accuracy there.
    fn scale(&self, i: usize, mag: f64) -> f64 {
        let s = if i == 0 {
            self.tol.rtol * mag + self.tol.atol * mag.min(1.0)
        } else {
            self.tol.rtol * mag + self.tol.atol
        };
        LOCAL_FRACTION * s
    }

    fn eval(&self, t: f64, piece_t: f64, y: &[f64; N]) -> [f64; N] {
        match &self.frozen {
            Some(local) => (self.rhs)(local, y),
            None => (self.rhs)(&self.model.local(t, piece_t), y),
        }
    }

    fn step(&self, t: f64, piece_t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> StepOutcome<N> {
        let k2 = self.eval(t + C[1] * h, piece_t, &axpy(y, h, &[(k1, A21)]));
        let k3 = self.eval(
            t + C[2] * h,
            piece_t,
            &axpy(y, h, &[(k1, A3[0]), (&k2, A3[1])]),
        );
        let k4 = self.eval(
            t + C[3] * h,
            piece_t,
            &axpy(y, h, &[(k1, A4[0]), (&k2, A4[1]), (&k3, A4[2])]),
        );
        let k5 = self.eval(
            t + C[4] * h,
            piece_t,
            &axpy(
                y,
                h,
                &[(k1, A5[0]), (&k2, A5[1]), (&k3, A5[2]), (&k4, A5[3])],
            ),
        );
        let k6 = self.eval(
            t + C[5] * h,
            piece_t,
            &axpy(
                y,
                h,
                &[
                    (k1, A6[0]),
                    (&k2, A6[1]),
                    (&k3, A6[2]),
                    (&k4, A6[3]),
                    (&k5, A6[4]),
                ],
            ),
        );
        let y_new = axpy(
            y,
            h,
            &[
                (k1, B[0]),
                (&k3, B[2]),
                (&k4, B[3]),
                (&k5, B[4]),
                (&k6, B[5]),
            ],
        );
        let k7 = self.eval(t + h, piece_t, &y_new);
        let mut acc = 0.0;
        for i in 0..N {
            let e = h
                * (E[0] * k1[i]
                    + E[2] * k3[i]
                    + E[3] * k4[i]
                    + E[4] * k5[i]
                    + E[5] * k6[i]
                    + E[6] * k7[i]);
            if e != 0.0 {
                acc += (e / self.scale(i, y[i].abs().max(y_new[i].abs()))).powi(2);
            }
        }
        StepOutcome {
            y: y_new,
            k_last: k7,
            err: (acc / N as f64).sqrt(),
        }
    }

    fn initial_step(&self, t: f64, piece_t: f64, y: &[f64; N], k1: &[f64; N], span: f64) -> f64 {
        let dir = span.signum();
        let sc: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(i, v)| self.scale(i, v.abs()).max(f64::MIN_POSITIVE))
            .collect();
        let norm = |v: &[f64; N]| -> f64 {
            (v.iter().zip(&sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / N as f64).sqrt()
        };
        let d0 = norm(y);
        let d1 = norm(k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span.abs());
        let y1 = axpy(y, dir * h0, &[(k1, 1.0)]);
        let k2 = self.eval(t + dir * h0, piece_t, &y1);
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = k2[i] - k1[i];
        }
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(span.abs())
    }

    /// Integrate one smooth piece `[t0, t1]`; `h` carries the step-size guess across pieces.
    fn piece(
        &mut self,
        y0: [f64; N],
        t0: f64,
        t1: f64,
        h: &mut f64,
        total_span: f64,
        sink: &mut dyn FnMut(f64, &[f64; N]),
    ) -> Result<[f64; N]> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let piece_t = 0.5 * (t0 + t1);
        self.frozen = self
            .model
            .all_piecewise_constant()
            .then(|| self.model.local(piece_t, piece_t));
        let backward = dir < 0.0;
        let min_step = MIN_STEP_FRACTION * total_span.abs();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = self.eval(t, piece_t, &y);
        if *h <= 0.0 || !h.is_finite() {
            *h = self.initial_step(t, piece_t, &y, &k1, span);
        }
        let mut rejects = 0usize;
        loop {
            let remaining = t1 - t;
            if remaining * dir <= 0.0 {
                break;
            }
            let mut step = (*h).min(remaining.abs());
            // land exactly on the piece end instead of leaving a sliver
            if remaining.abs() - step < 1e-3 * step {
                step = remaining.abs();
            }
            let last = step == remaining.abs();
            let hs = dir * step;
            let out = self.step(t, piece_t, &y, &k1, hs);
            let mut err = out.err;
            let mut y_new = out.y;
            let finite = y_new.iter().all(|v| v.is_finite());
            if !finite {
                err = f64::INFINITY;
            }
            if y_new[0] < 0.0 {
                if y_new[0] > -self.tol.atol {
                    y_new[0] = 0.0;
                } else {
                    err = err.max(1e3);
                }
            }
            if backward {
                if let Some(guard) = self.blowup_guard {
                    if finite && y_new[0] > guard {
                        return Err(Error::BackwardBlowup { t: t + hs });
                    }
                }
            }
            if err <= 1.0 {
                self.stats.steps += 1;
                if self.stats.steps > MAX_STEPS {
                    return Err(Error::ToleranceFailure {
                        t,
                        reason: "maximum number of steps exceeded".into(),
                    });
                }
                rejects = 0;
                t = if last { t1 } else { t + hs };
                y = y_new;
                k1 = out.k_last;
                sink(t, &y);
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a clipped final step says nothing about the next piece
                if !last || step >= *h {
                    *h = step * fac;
                }
            } else {
                self.stats.rejected += 1;
                rejects += 1;
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.25
                };
                *h = step * fac;
                if *h < min_step || rejects > MAX_CONSECUTIVE_REJECTS {
                    return Err(if backward {
                        Error::BackwardBlowup { t }
                    } else {
                        Error::ToleranceFailure {
                            t,
                            reason: format!(
                                "step size collapsed to {:e} after {rejects} rejections",
                                *h
                            ),
                        }
                    });
                }
            }
        }
        Ok(y)
    }

    fn run(
        &mut self,
        y0: [f64; N],
        t0: f64,
        t1: f64,
        sink: &mut dyn FnMut(f64, &[f64; N]),
        on_switch: &mut dyn FnMut(f64),
    ) -> Result<[f64; N]> {
        let mut cuts: Vec<(f64, bool)> = self
            .model
            .mesh_points(t0, t1)
            .into_iter()
            .filter(|&(s, _)| s > t0.min(t1) && s < t0.max(t1))
            .collect();
        if t1 < t0 {
            cuts.reverse();
        }
        let total = t1 - t0;
        let mut h = 0.0;
        let mut y = y0;
        let mut start = t0;
        for (s, is_switch) in cuts.into_iter().chain(std::iter::once((t1, false))) {
            y = self.piece(y, start, s, &mut h, total, sink)?;
            if is_switch {
                on_switch(s);
            }
            start = s;
        }
        Ok(y)
    }
}

fn w_only(local: &Local, y: &[f64; 1]) -> [f64; 1] {
    [local.rhs(y[0])]
}

fn with_lloyd(local: &Local, y: &[f64; 4]) -> [f64; 4] {
    let d = local.derivs(y[0]);
    let e = y[1].exp();
    [d[0], d[1], d[2] * e, d[3] * e * e]
}

fn check_initial(w0: f64) -> Result<()> {
    if w0 < 0.0 {
        return Err(Error::NegativeDensity(w0));
    }
    if !w0.is_finite() {
        return Err(Error::ToleranceFailure {
            t: 0.0,
            reason: format!("non-finite initial value {w0}"),
        });
    }
    Ok(())
}

fn guard_for(m: &ModelSpec, t0: f64, t1: f64, w0: f64) -> Option<f64> {
    (t1 < t0).then(|| BLOWUP_FACTOR * ultimate_bound(m).max(w0))
}

/// Solve `w' = F(t, w)` from `(t0, w0)` to `t1`; `t1 < t0` integrates backward.
pub fn integrate(m: &ModelSpec, w0: f64, t0: f64, t1: f64, tol: Tolerances) -> Result<Trajectory> {
    check_initial(w0)?;
    let mut samples = vec![(t0, w0)];
    let mut switches = Vec::new();
    let mut st = Stepper {
        model: m,
        frozen: None,
        tol,
        rhs: w_only,
        blowup_guard: guard_for(m, t0, t1, w0),
        stats: IntegratorStats {
            rtol: tol.rtol,
            atol: tol.atol,
            ..Default::default()
        },
    };
    st.run(
        [w0],
        t0,
        t1,
        &mut |t, y| samples.push((t, y[0])),
        &mut |s| switches.push(s),
    )?;
    Ok(Trajectory {
        t0,
        samples,
        switch_times_hit: switches,
        stats: st.stats,
    })
}

/// `w(t1)` only, without keeping samples.
pub fn advance(m: &ModelSpec, w0: f64, t0: f64, t1: f64, tol: Tolerances) -> Result<f64> {
    check_initial(w0)?;
    let mut st = Stepper {
        model: m,
        frozen: None,
        tol,
        rhs: w_only,
        blowup_guard: guard_for(m, t0, t1, w0),
        stats: IntegratorStats::default(),
    };
    Ok(st.run([w0], t0, t1, &mut |_, _| {}, &mut |_| {})?[0])
}

/// `w(t1)` with the Lloyd accumulators integrated over `[t0, t1]` (either direction).
pub fn advance_with_lloyd(
    m: &ModelSpec,
    w0: f64,
    t0: f64,
    t1: f64,
    tol: Tolerances,
) -> Result<(f64, LloydAccumulators)> {
    check_initial(w0)?;
    let mut st = Stepper {
        model: m,
        frozen: None,
        tol,
        rhs: with_lloyd,
        blowup_guard: guard_for(m, t0, t1, w0),
        stats: IntegratorStats::default(),
    };
    let y = st.run([w0, 0.0, 0.0, 0.0], t0, t1, &mut |_, _| {}, &mut |_| {})?;
    Ok((
        y[0],
        LloydAccumulators {
            a1: y[1],
            a2: y[2],
            a3: y[3],
        },
    ))
}

/// One full coefficient period `[0, n0 T]` with the Lloyd accumulators.
pub fn integrate_with_lloyd(
    m: &ModelSpec,
    w0: f64,
    tol: Tolerances,
) -> Result<(Trajectory, LloydAccumulators)> {
    check_initial(w0)?;
    let t1 = m.full_period();
    let mut samples = vec![(0.0, w0)];
    let mut switches = Vec::new();
    let mut st = Stepper {
        model: m,
        frozen: None,
        tol,
        rhs: with_lloyd,
        blowup_guard: None,
        stats: IntegratorStats {
            rtol: tol.rtol,
            atol: tol.atol,
            ..Default::default()
        },
    };
    let y = st.run(
        [w0, 0.0, 0.0, 0.0],
        0.0,
        t1,
        &mut |t, y| samples.push((t, y[0])),
        &mut |s| switches.push(s),
    )?;
    Ok((
        Trajectory {
            t0: 0.0,
            samples,
            switch_times_hit: switches,
            stats: st.stats,
        },
        LloydAccumulators {
            a1: y[1],
            a2: y[2],
            a3: y[3],
        },
    ))
}

/// Non-adaptive integration with the fifth-order Dormand-Prince weights and
/// `steps_per_unit` steps per unit time (at least four per smooth piece).
///
/// The result is a smooth function of `w0`, which makes it a good input for
/// finite-difference checks.
pub fn advance_fixed_step(m: &ModelSpec, w0: f64, t0: f64, t1: f64, steps_per_unit: f64) -> f64 {
    let mut cuts: Vec<f64> = m
        .mesh_points(t0, t1)
        .into_iter()
        .map(|p| p.0)
        .filter(|&s| s > t0.min(t1) && s < t0.max(t1))
        .collect();
    if t1 < t0 {
        cuts.reverse();
    }
    cuts.push(t1);
    let st = Stepper {
        model: m,
        frozen: None,
        tol: Tolerances::default(),
        rhs: w_only,
        blowup_guard: None,
        stats: IntegratorStats::default(),
    };
    let mut y = [w0];
    let mut start = t0;
    for end in cuts {
        let n = ((end - start).abs() * steps_per_unit).ceil().max(4.0) as usize;
        let h = (end - start) / n as f64;
        let piece_t = 0.5 * (start + end);
        for i in 0..n {
            let t = start + i as f64 * h;
            let k1 = st.eval(t, piece_t, &y);
            y = st.step(t, piece_t, &y, &k1, h).y;
        }
        start = end;
    }
    y[0]
}

/// A level `Gamma` with `F(t, w) < 0` for every `w > Gamma` and every `t`.
pub fn ultimate_bound(m: &ModelSpec) -> f64 {
    let full = m.full_period();
    let mesh = m.mesh_points(0.0, full);
    let mut bound: f64 = 0.0;
    for seg in mesh.windows(2) {
        let (s0, s1) = (seg[0].0, seg[1].0);
        if s1 <= s0 {
            continue;
        }
        let mid = 0.5 * (s0 + s1);
        let on = m.schedule().in_window(mid);
        let (_, a_sup) = m.a().bounds_on(s0, s1);
        let (xi_inf, _) = m.xi().bounds_on(s0, s1);
        let level = match m.variant() {
            Variant::CompetitionSurvival { eta } => {
                // past the root of eta w^2/(w+g) = 1 the newborn term is negative
                let (eta_inf, _) = eta.bounds_on(s0, s1);
                let g = if on { m.schedule().g0 } else { 0.0 };
                let inv = 1.0 / eta_inf;
                0.5 * (inv + (inv * inv + 4.0 * g * inv).sqrt())
            }
            _ => a_sup / xi_inf,
        };
        bound = bound.max(level);
    }
    bound
}
