//! Low-complexity solver: the power reaches its upper bound when every group
//! maps the normalized incident channel onto the co-phased normalized
//! reflected channel, `Y_g a_g = b_g` in normalized units. The components are
//! fitted to this condition by ADMM on a constrained least-squares problem.

use crate::architecture::{ArchitectureSpec, MappingMatrices};
use crate::channel::SisoChannels;
use crate::error::{Error, Result};
use crate::hardware::{scattering_of_components, Hardware};
use crate::linalg::{c, CMat, CVec, Complex64};
use crate::network::ScatteringMatrix;

use super::admm::{check_problem, initial_components};
use super::{received_power_and_rate, Init, SolveTrace, Termination, TraceRow};
use serde::{Deserialize, Serialize};

/// Group channels with a smaller norm are left at their initial components.
const DEGENERATE_NORM: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowComplexityConfig {
    /// Smallest penalty used in any group.
    pub rho: f64,
    /// Group penalty as a multiple of the largest eigenvalue of `2 A_g^H A_g`.
    pub rho_scale: f64,
    pub max_iter: usize,
    /// Relative change of the least-squares residual that ends the loop.
    pub tol: f64,
}

impl Default for LowComplexityConfig {
    fn default() -> Self {
        Self { rho: 1.0, rho_scale: 2.0, max_iter: 500, tol: 1e-4 }
    }
}

/// Per-group least-squares data `A_g = (a_g^T (x) I) B P` and `b_g`.
#[derive(Debug, Clone)]
pub struct LowComplexityProblem {
    pub a_vecs: Vec<CVec>,
    pub b_vecs: Vec<CVec>,
    pub a_mats: Vec<CMat>,
    /// Groups whose channels could be normalized.
    pub active: Vec<bool>,
}

impl LowComplexityProblem {
    pub fn new(ch: &SisoChannels, spec: &ArchitectureSpec, maps: &MappingMatrices) -> Result<Self> {
        let n = spec.mbar;
        let phase = if ch.h_rt.norm() > 0.0 { ch.h_rt / ch.h_rt.norm() } else { c(1.0, 0.0) };
        let mut out = Self { a_vecs: vec![], b_vecs: vec![], a_mats: vec![], active: vec![] };
        for g in 0..spec.groups() {
            let ri = ch.h_ri.rows(g * n, n).into_owned();
            let it = ch.h_it.rows(g * n, n).into_owned();
            let (nri, nit) = (ri.norm(), it.norm());
            let active = nri >= DEGENERATE_NORM && nit >= DEGENERATE_NORM;
            let (a, b) = if active {
                let hr = ri * (phase / nri);
                let ht = it / c(nit, 0.0);
                (&hr + &ht, ht - hr)
            } else {
                (CVec::zeros(n), CVec::zeros(n))
            };
            let mut am = CMat::zeros(n, maps.u);
            let mut e = vec![c(0.0, 0.0); maps.u];
            for k in 0..maps.u {
                e[k] = c(1.0, 0.0);
                am.set_column(k, &(maps.block(&e)? * &a));
                e[k] = c(0.0, 0.0);
            }
            out.a_vecs.push(a);
            out.b_vecs.push(b);
            out.a_mats.push(am);
            out.active.push(active);
        }
        Ok(out)
    }

    /// `|A ybar - b|` over the active groups.
    pub fn residual(&self, ybar: &[Complex64]) -> f64 {
        let u = self.a_mats.first().map_or(0, |a| a.ncols());
        let mut s = 0.0;
        for (g, (a, b)) in self.a_mats.iter().zip(&self.b_vecs).enumerate() {
            if self.active[g] {
                let y = CVec::from_column_slice(&ybar[g * u..(g + 1) * u]);
                s += (a * y - b).norm_squared();
            }
        }
        s.sqrt()
    }
}

pub(crate) struct LowComplexityRun {
    pub residuals: Vec<f64>,
    pub powers: Vec<f64>,
    pub converged: bool,
}

/// Runs the least-squares ADMM and returns the feasible components in
/// normalized units.
pub(crate) fn low_complexity_components(
    ch: &SisoChannels,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    cfg: &LowComplexityConfig,
    init: &Init,
) -> Result<(Vec<Complex64>, LowComplexityRun)> {
    if !(cfg.rho > 0.0 && cfg.rho_scale >= 0.0 && cfg.tol > 0.0 && cfg.max_iter > 0) {
        return Err(Error::InvalidParameter(format!("invalid low-complexity settings {cfg:?}")));
    }
    check_problem(ch, spec)?;
    let maps = MappingMatrices::new(spec);
    let set = hw.normalized_set();
    let lp = LowComplexityProblem::new(ch, spec, &maps)?;
    let start = match init {
        Init::LowComplexity => Init::ArcMidpoint,
        other => other.clone(),
    };
    let mut z = initial_components(ch, spec, hw, &start)?;
    let mut ybar = z.clone();
    let mut u = vec![c(0.0, 0.0); z.len()];
    let nu = maps.u;

    let mut normal = Vec::new();
    for (g, a) in lp.a_mats.iter().enumerate() {
        if !lp.active[g] {
            normal.push(None);
            continue;
        }
        let mut m = a.adjoint() * a * c(2.0, 0.0);
        let rho = cfg.rho.max(cfg.rho_scale * m.clone().symmetric_eigenvalues().max());
        for i in 0..nu {
            m[(i, i)] += rho;
        }
        let ch = m
            .cholesky()
            .ok_or_else(|| Error::SingularSubproblem("least-squares normal matrix".into()))?;
        let atb = a.adjoint() * &lp.b_vecs[g] * c(2.0, 0.0);
        normal.push(Some((ch, atb, rho)));
    }

    let mut run = LowComplexityRun { residuals: vec![], powers: vec![], converged: false };
    for _ in 0..cfg.max_iter {
        for (g, fac) in normal.iter().enumerate() {
            let Some((chol, atb, rho)) = fac else { continue };
            let r = g * nu..(g + 1) * nu;
            let mut rhs = atb.clone();
            for (i, k) in r.clone().enumerate() {
                z[k] = set.project(ybar[k] - u[k]);
                rhs[i] += (z[k] + u[k]) * *rho;
            }
            let y = chol.solve(&rhs);
            for (i, k) in r.enumerate() {
                ybar[k] = y[i];
                u[k] += z[k] - ybar[k];
            }
        }
        let res = lp.residual(&ybar);
        let power = scattering_of_components(&z, spec, &maps)
            .and_then(|p| received_power_and_rate(ch, &p, 1.0, 1.0))
            .map(|(p, _)| p)
            .unwrap_or(f64::NAN);
        run.powers.push(power);
        let prev = run.residuals.last().copied();
        run.residuals.push(res);
        if let Some(prev) = prev {
            if (res - prev).abs() < cfg.tol * prev || res < 1e-14 {
                run.converged = true;
                break;
            }
        }
    }
    Ok((z, run))
}

/// Fits the components to the upper-bound condition and returns the
/// scattering matrix of the feasible components.
pub fn low_complexity_solve(
    ch: &SisoChannels,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    cfg: &LowComplexityConfig,
    init: &Init,
) -> Result<(ScatteringMatrix, SolveTrace)> {
    let maps = MappingMatrices::new(spec);
    let start = initial_components(ch, spec, hw, &match init {
        Init::LowComplexity => Init::ArcMidpoint,
        other => other.clone(),
    })?;
    let p0 = received_power_and_rate(ch, &scattering_of_components(&start, spec, &maps)?, 1.0, 1.0)?.0;
    let (z, run) = low_complexity_components(ch, spec, hw, cfg, init)?;
    let phi = scattering_of_components(&z, spec, &maps)?;
    let final_power = received_power_and_rate(ch, &phi, 1.0, 1.0)?.0;
    let rows = run
        .residuals
        .iter()
        .zip(&run.powers)
        .enumerate()
        .map(|(i, (&r, &p))| TraceRow {
            outer_iter: 1,
            inner_iter: i + 1,
            objective_watts: p,
            primal_res_phic: r,
            primal_res_zy: 0.0,
        })
        .collect();
    let trace = SolveTrace {
        objective_per_outer: vec![p0, final_power],
        rows,
        inner_iterations: vec![run.residuals.len()],
        ls_residual: run.residuals,
        termination: if run.converged { Termination::Converged } else { Termination::MaxIterations },
        final_phi: phi.clone(),
    };
    Ok((phi, trace))
}
