//! Numerical model of reordering-resilient Swift.
//!
//! Holes no longer trigger decreases, so each congested-path packet causes a
//! delay-driven decrease of `md(W) = min(beta (T_l - target(W)) / T_l, mm)`,
//! and the target itself depends on the window through flow scaling. The
//! sawtooth area constraint `W^2 md (1 - md/2) / ai = 1/q` couples the two;
//! it is solved by damped fixed-point iteration on W.

use serde::{Deserialize, Serialize};

use super::{ModelError, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub damping: f64,
    /// Stop once successive iterates differ by less than this fraction of W...
    pub step_tol: f64,
    /// ...and the area constraint holds to this relative residual.
    pub residual_tol: f64,
    pub max_iterations: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { damping: 0.5, step_tol: 1e-6, residual_tol: 1e-12, max_iterations: 10_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RrSwiftSolution {
    /// Bytes per second.
    pub rate: f64,
    pub w_star: f64,
    /// Seconds.
    pub target_star: f64,
    pub md_star: f64,
    pub iterations: u32,
    /// `|q W^2 md (1 - md/2) / ai - 1|` at the solution.
    pub residual: f64,
}

fn md_at(p: &ModelParams, w: f64) -> Result<f64, ModelError> {
    let t_long = p.t_long.as_secs_f64();
    let target = p.target_secs(w);
    if t_long <= target {
        return Err(ModelError::Domain(format!(
            "model needs T_l > target; T_l={t_long:e}s target={target:e}s at W={w}"
        )));
    }
    Ok((p.beta * (t_long - target) / t_long).min(p.max_mdf))
}

fn area_residual(p: &ModelParams, w: f64, md: f64) -> f64 {
    (p.q * w * w * md * (1.0 - md / 2.0) / p.ai - 1.0).abs()
}

pub fn rr_swift_throughput_numeric(p: &ModelParams, solver: &SolverConfig) -> Result<RrSwiftSolution, ModelError> {
    p.check()?;
    if !(p.beta > 0.0 && p.beta <= 1.0) {
        return Err(ModelError::Domain(format!("beta must lie in (0, 1], got {}", p.beta)));
    }
    let implied_w = |md: f64| (p.ai / (p.q * md * (1.0 - md / 2.0))).sqrt();
    // Start from the window Swift would reach with the capped decrease.
    let mut w = implied_w(p.max_mdf);
    for iteration in 1..=solver.max_iterations {
        let md = md_at(p, w)?;
        let next = w + solver.damping * (implied_w(md) - w);
        let step = (next - w).abs();
        w = next;
        let md_new = md_at(p, w)?;
        if step < solver.step_tol * w && area_residual(p, w, md_new) < solver.residual_tol {
            return Ok(RrSwiftSolution {
                rate: p.ai * p.mss_bytes as f64 / (p.q * w * md_new * p.t_short.as_secs_f64()),
                w_star: w,
                target_star: p.target_secs(w),
                md_star: md_new,
                iterations: iteration,
                residual: area_residual(p, w, md_new),
            });
        }
    }
    Err(ModelError::NoConvergence { iterations: solver.max_iterations, last_w: w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::swift_throughput;
    use crate::sim::SimTime;

    #[test]
    fn degenerate_case_collapses_to_swift() {
        let p = ModelParams {
            fs_range: SimTime::ZERO,
            t_long: SimTime::from_us(1_000),
            ..ModelParams::curve_defaults(1.0 / 64.0)
        };
        let sol = rr_swift_throughput_numeric(&p, &SolverConfig::default()).unwrap();
        let swift = swift_throughput(&p).unwrap();
        assert!((sol.rate / swift - 1.0).abs() < 1e-9);
        assert_eq!(sol.md_star, p.max_mdf);
    }

    #[test]
    fn converged_solutions_satisfy_area_constraint() {
        for n in [4.0, 9.0, 25.0, 100.0, 250.0, 1000.0, 1e4] {
            let p = ModelParams::curve_defaults(1.0 / n);
            let sol = rr_swift_throughput_numeric(&p, &SolverConfig::default()).unwrap();
            assert!(sol.residual < 1e-9, "n={n} residual={}", sol.residual);
            assert!(sol.md_star > 0.0 && sol.md_star <= p.max_mdf);
        }
    }

    #[test]
    fn beats_swift_at_curve_parameters() {
        let p = ModelParams::curve_defaults(1.0 / 250.0);
        let sol = rr_swift_throughput_numeric(&p, &SolverConfig::default()).unwrap();
        assert!(sol.rate > swift_throughput(&p).unwrap());
    }

    #[test]
    fn target_above_long_rtt_is_a_domain_error() {
        let p = ModelParams { target_base: SimTime::from_us(40), ..ModelParams::curve_defaults(0.01) };
        assert!(matches!(
            rr_swift_throughput_numeric(&p, &SolverConfig::default()),
            Err(ModelError::Domain(_))
        ));
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let p = ModelParams::curve_defaults(0.01);
        let tight = SolverConfig { max_iterations: 1, residual_tol: 0.0, ..Default::default() };
        match rr_swift_throughput_numeric(&p, &tight) {
            Err(ModelError::NoConvergence { iterations: 1, last_w }) => assert!(last_w > 0.0),
            other => panic!("{other:?}"),
        }
    }
}
