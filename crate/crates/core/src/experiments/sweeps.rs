//! Refinement sweeps for the interpolated bubble and for the discrete constant.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::records::{fit_rate, RateFit, SweepRecord};
use crate::error::Result;
use crate::gagliardo::{assemble, QuadSpec};
use crate::mesh::build_mesh;
use crate::params::{concentration_exponent, ProblemParams};
use crate::solver::{balanced_bubble, deficit, fit_manifold, quadrature_slack, solve, SolveOptions};

/// A level whose pipeline returned an error.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFailure {
    pub level: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub dim: usize,
    pub s: f64,
    /// The sharp rate exponent the fit is compared against.
    pub alpha: f64,
    pub records: Vec<SweepRecord>,
    /// `None` with fewer than three successful levels.
    pub fit: Option<RateFit>,
    pub failures: Vec<LevelFailure>,
}

impl SweepReport {
    fn finish(dim: usize, s: f64, alpha: f64, records: Vec<SweepRecord>, failures: Vec<LevelFailure>) -> Self {
        let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.h, r.value)).collect();
        let fit = fit_rate(&pts).ok();
        Self { dim, s, alpha, records, fit, failures }
    }

    /// slope/α, if a fit exists.
    pub fn slope_ratio(&self) -> Option<f64> {
        self.fit.map(|f| f.slope / self.alpha)
    }
}

fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::Error::InvalidParams(format!("levels must be strictly increasing and nonempty, got {levels:?}")));
    }
    Ok(())
}

/// Deficit of I_hΨ at the balanced concentration, per level, and its rate.
pub fn upper_bound_sweep(dim: usize, s: f64, levels: &[usize]) -> Result<SweepReport> {
    let params = ProblemParams::new(dim, s)?;
    check_levels(levels)?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &level in levels {
        let start = Instant::now();
        let run = || -> Result<SweepRecord> {
            let mesh = Arc::new(build_mesh(dim, level)?);
            let form = assemble(&mesh, s, &QuadSpec::for_dim(dim))?;
            let (u, c_h) = balanced_bubble(&mesh, s)?;
            let value = deficit(&form, &u)?;
            let slack = quadrature_slack(&form, &u)?;
            Ok(SweepRecord { level, h: mesh.h, c_h, value, slack, wall_time: start.elapsed().as_secs_f64() })
        };
        match run() {
            Ok(r) => records.push(r),
            Err(e) => failures.push(LevelFailure { level, message: e.to_string() }),
        }
    }
    Ok(SweepReport::finish(dim, s, params.alpha, records, failures))
}

/// Per-level solver and manifold-fit diagnostics of a discrete-constant sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantDiagnostics {
    pub level: usize,
    pub s_h: f64,
    /// Deficit of the starting guess I_hΨ.
    pub initial_deficit: f64,
    pub iterations: usize,
    pub converged: bool,
    pub euler_lagrange_residual: f64,
    /// Concentration of the best-fitting bubble.
    pub c_fit: f64,
    pub distance_sq: f64,
    /// (S_h − S)·‖u‖²_{L^{2*}} / distance², with ‖u‖ = 1.
    pub stability_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ConstantSweepReport {
    pub sweep: SweepReport,
    pub diagnostics: Vec<ConstantDiagnostics>,
    /// log c_fit against log h.
    pub concentration_fit: Option<RateFit>,
    pub expected_concentration_slope: f64,
}

/// Minimizes the discrete quotient at each level (starting from I_hΨ) and
/// records S_h − S_{N,s}; also fits the minimizer to the bubble manifold.
pub fn discrete_constant_sweep(dim: usize, s: f64, levels: &[usize]) -> Result<ConstantSweepReport> {
    let params = ProblemParams::new(dim, s)?;
    check_levels(levels)?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut diagnostics = Vec::new();
    for &level in levels {
        let start = Instant::now();
        let run = || -> Result<(SweepRecord, ConstantDiagnostics)> {
            let mesh = Arc::new(build_mesh(dim, level)?);
            let form = assemble(&mesh, s, &QuadSpec::for_dim(dim))?;
            let (init, c_h) = balanced_bubble(&mesh, s)?;
            let initial_deficit = deficit(&form, &init)?;
            let report = solve(&form, &init, &SolveOptions::default())?;
            let gap = report.s_h - params.sobolev_constant;
            let slack = quadrature_slack(&form, &report.minimizer)?;
            let lambda0 = crate::bubble::normalize_lambda(c_h, dim, s)?;
            let fit = fit_manifold(&form, &report.minimizer, (lambda0, c_h, vec![0.0; dim]))?;
            let record = SweepRecord { level, h: mesh.h, c_h, value: gap, slack, wall_time: start.elapsed().as_secs_f64() };
            let diag = ConstantDiagnostics {
                level,
                s_h: report.s_h,
                initial_deficit,
                iterations: report.iterations,
                converged: report.converged,
                euler_lagrange_residual: report.euler_lagrange_residual,
                c_fit: fit.c,
                distance_sq: fit.discrete_distance_sq,
                stability_ratio: gap / fit.discrete_distance_sq,
            };
            Ok((record, diag))
        };
        match run() {
            Ok((r, d)) => {
                records.push(r);
                diagnostics.push(d);
            }
            Err(e) => failures.push(LevelFailure { level, message: e.to_string() }),
        }
    }
    let pts: Vec<(f64, f64)> = diagnostics.iter().zip(&records).map(|(d, r)| (r.h, d.c_fit)).collect();
    Ok(ConstantSweepReport {
        sweep: SweepReport::finish(dim, s, params.alpha, records, failures),
        diagnostics,
        concentration_fit: fit_rate(&pts).ok(),
        expected_concentration_slope: concentration_exponent(dim, s),
    })
}
