//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use mosq_core::integrator::advance_fixed_step;
use mosq_core::{ModelSpec, ReleaseSchedule, SeasonalFunction, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Period map through the fixed-step integrator, which is smooth in `w0`.
pub fn smooth_map(m: &ModelSpec, w0: f64) -> f64 {
    advance_fixed_step(m, w0, 0.0, m.full_period(), 400.0)
}

/// Richardson-extrapolated central differences of orders 1 to 3 of `f` at `x`.
/// Each order is evaluated on the step ladder `x * STEPS` and the estimate that
/// agrees best with its coarser neighbour is kept, together with its step.
pub fn best_differences(f: impl Fn(f64) -> f64, x: f64) -> [(f64, f64); 3] {
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

/// Solution of the majorant `w' = w (a(t) - xi(t) w)` at each requested time,
/// through the linear equation for `u = 1/w`: `u' = -a u + xi`. Classical RK4
/// with coefficients sampled strictly inside each interval of `times`, which
/// must contain every coefficient jump.
pub fn logistic_majorant(m: &ModelSpec, w0: f64, times: &[f64]) -> Vec<f64> {
    let mut u = 1.0 / w0;
    let mut out = vec![w0];
    for pair in times.windows(2) {
        let (t0, t1) = (pair[0], pair[1]);
        let n = ((t1 - t0) / 1e-3).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        let eps = 1e-9 * (t1 - t0);
        let rate = |t: f64, u: f64| {
            let s = t.clamp(t0 + eps, t1 - eps);
            -m.a().eval(s) * u + m.xi().eval(s)
        };
        for i in 0..n {
            let t = t0 + i as f64 * h;
            let k1 = rate(t, u);
            let k2 = rate(t + 0.5 * h, u + 0.5 * h * k1);
            let k3 = rate(t + 0.5 * h, u + 0.5 * h * k2);
            let k4 = rate(t + h, u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.push(1.0 / u);
    }
    out
}

/// Base models with a positive origin-threshold numerator: birth rate and
/// competition alternate between two values, mortality is constant.
pub fn random_base_families(seed: u64, n: usize) -> Vec<ModelSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let period = rng.gen_range(1.0..10.0);
        let t_bar = rng.gen_range(0.2..0.6) * period;
        let cut = rng.gen_range(0.3..0.7) * period;
        let a = SeasonalFunction::piecewise(
            period,
            vec![0.0, cut],
            vec![rng.gen_range(1.5..5.0), rng.gen_range(1.5..5.0)],
        )
        .unwrap();
        let xi = SeasonalFunction::piecewise(
            period,
            vec![0.0, cut],
            vec![rng.gen_range(0.3..1.5), rng.gen_range(0.3..1.5)],
        )
        .unwrap();
        let mu = SeasonalFunction::constant(rng.gen_range(0.2..1.0));
        let off_birth = a.integral(t_bar, period);
        if off_birth <= mu.integral(0.0, period) {
            continue;
        }
        let schedule = ReleaseSchedule::new(0.0, t_bar, period, 1).unwrap();
        out.push(ModelSpec::new(Variant::Base, a, mu, xi, schedule).unwrap());
    }
    out
}
