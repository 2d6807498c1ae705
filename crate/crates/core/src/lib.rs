//! Seasonal sterile-release mosquito suppression models.
//!
//! The crate integrates scalar periodic switching equations `w' = F(t, w)`,
//! evaluates their period (Poincare) map together with its first three
//! derivatives, enumerates and classifies the periodic solutions, and sweeps the
//! release amplitude `g0` to build bifurcation diagrams.
//!
//! Grid scans and batteries run on rayon when the `parallel` feature is on
//! (the default); without it every batch falls back to a sequential loop.

// `!(x > 0.0)` guards reject NaN together with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bifurcation;
pub mod error;
pub mod integrator;
pub mod model;
pub mod par;
pub mod poincare;
pub mod quadrature;
pub mod recipes;

pub use analysis::{
    basin_bound, check_persistence_condition, classify_regime, compute_integrals, g0_thresholds,
    origin_stability, p2_zero_closed_form, OriginStability, RegimeCase, RegimeReport,
    StabilityIntegrals, Thresholds,
};
pub use bifurcation::{
    classify_bifurcation, compare_averaged, sweep_g0, AveragedComparison, BifurcationDiagram,
    BifurcationType,
};
pub use error::{Error, Result};
pub use integrator::{
    integrate, integrate_with_lloyd, ultimate_bound, LloydAccumulators, Tolerances, Trajectory,
};
pub use model::{ModelSpec, ReleaseSchedule, SeasonalFunction, Variant};
pub use poincare::{
    find_fixed_points, inverse_third_derivative, omega_limit, poincare_eval, poincare_inverse,
    FixedPoint, FixedPointSet, Numerics, PoincareEvaluation, Stability,
};

/// Locale-free number formatting with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}
