//! Ready-made model configurations and a seeded random battery.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ModelSpec, ReleaseSchedule, SeasonalFunction, Variant};

/// `a = 2, mu = 1, xi = 0.5`, `T = 1`, `T_bar = 0.75`, `g0 = 0.1`.
pub fn section3() -> ModelSpec {
    ModelSpec::base_constant(2.0, 1.0, 0.5, 0.1, 0.75, 1.0).unwrap()
}

/// Daily alternating birth rate `a = {4, 1}` and competition `xi = {1, 0.2}`,
/// `mu = 1`, releases during the first week of each fortnight.
pub fn fig2a(g0: f64) -> ModelSpec {
    ModelSpec::new(
        Variant::Base,
        SeasonalFunction::half_period(4.0, 1.0),
        SeasonalFunction::constant(1.0),
        SeasonalFunction::half_period(1.0, 0.2),
        ReleaseSchedule::new(g0, 7.0, 14.0, 1).unwrap(),
    )
    .unwrap()
}

/// Constant `a = 4, mu = 1, xi = 1`, `T = 14`, `T_bar = 7`.
pub fn fig2b(g0: f64) -> ModelSpec {
    ModelSpec::base_constant(4.0, 1.0, 1.0, g0, 7.0, 14.0).unwrap()
}

/// As [`fig2b`] with `T_bar = 6.5`.
pub fn fig2c(g0: f64) -> ModelSpec {
    ModelSpec::base_constant(4.0, 1.0, 1.0, g0, 6.5, 14.0).unwrap()
}

/// Competition-survival model with `a = {4, 1}` on half periods of length 5,
/// `eta = a/4`, `mu = 2`, `T = 10`, `T_bar = 7`, `g0 = 0.03`.
pub fn fig5() -> ModelSpec {
    let a = SeasonalFunction::piecewise(10.0, vec![0.0, 5.0], vec![4.0, 1.0]).unwrap();
    let eta = SeasonalFunction::piecewise(10.0, vec![0.0, 5.0], vec![1.0, 0.25]).unwrap();
    ModelSpec::new(
        Variant::CompetitionSurvival { eta },
        a,
        SeasonalFunction::constant(2.0),
        SeasonalFunction::constant(1.0),
        ReleaseSchedule::new(0.03, 7.0, 10.0, 1).unwrap(),
    )
    .unwrap()
}

fn coefficient(rng: &mut ChaCha8Rng, lo: f64, hi: f64, full: f64, period: f64) -> SeasonalFunction {
    let base = if rng.gen_bool(0.5) { period } else { full };
    match rng.gen_range(0..3) {
        0 => SeasonalFunction::constant(rng.gen_range(lo..hi)),
        1 => {
            let cut = rng.gen_range(0.2..0.8) * base;
            SeasonalFunction::piecewise(
                base,
                vec![0.0, cut],
                vec![rng.gen_range(lo..hi), rng.gen_range(lo..hi)],
            )
            .unwrap()
        }
        _ => {
            let mean = rng.gen_range(lo..hi);
            let amp = rng.gen_range(0.0..0.6) * (mean - 0.5 * lo);
            SeasonalFunction::cosine(mean, amp, base, rng.gen_range(0.0..std::f64::consts::TAU))
                .unwrap()
        }
    }
}

/// `n` random valid models cycling through the five variants.
pub fn random_battery(seed: u64, n: usize) -> Vec<ModelSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let period = rng.gen_range(1.0..10.0);
            let t_bar = rng.gen_range(0.2..0.8) * period;
            let n0 = if rng.gen_bool(0.2) { 2 } else { 1 };
            let full = n0 as f64 * period;
            let g0 = if rng.gen_bool(0.1) {
                0.0
            } else {
                rng.gen_range(0.02..2.0)
            };
            let a = coefficient(&mut rng, 1.0, 4.0, full, period);
            let mu = coefficient(&mut rng, 0.2, 1.5, full, period);
            let xi = coefficient(&mut rng, 0.2, 1.5, full, period);
            let variant = match i % 5 {
                0 => Variant::Base,
                1 => Variant::CompetitionSurvival {
                    eta: coefficient(&mut rng, 0.1, 1.0, full, period),
                },
                2 => Variant::ImperfectCi {
                    s_h: rng.gen_range(0.0..=1.0),
                },
                3 => Variant::SaturatedRelease {
                    b: rng.gen_range(0.2..5.0),
                },
                _ => Variant::Allee {
                    alpha: rng.gen_range(0.1..3.0),
                },
            };
            let schedule = ReleaseSchedule::new(g0, t_bar, period, n0).unwrap();
            ModelSpec::new(variant, a, mu, xi, schedule).unwrap()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_is_reproducible_and_covers_variants() {
        let x = random_battery(7, 25);
        assert_eq!(x, random_battery(7, 25));
        let names: std::collections::BTreeSet<_> = x.iter().map(|m| m.variant().name()).collect();
        assert_eq!(names.len(), 5);
    }
}
