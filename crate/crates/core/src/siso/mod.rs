//! Single-user received-power maximization.

mod admm;
mod lowcomplexity;
mod maps;
mod multistart;
mod quadratic;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::architecture::ArchitectureSpec;
use crate::channel::SisoChannels;
use crate::error::{Error, Result};
use crate::linalg::{dot_h, Complex64};
use crate::network::ScatteringMatrix;

pub use admm::{
    admm_inner_iteration, mm_admm_solve, phibar_update, primal_dual_update, AdmmState, InnerResiduals,
};
pub(crate) use admm::phibar_terms;
pub use lowcomplexity::{low_complexity_solve, LowComplexityConfig, LowComplexityProblem};
pub use maps::{build_c_map, build_d_map, YbarOperator};
pub use multistart::{mm_admm_multistart, multistart_points, MultiStartConfig};
pub use quadratic::{build_quadratic_terms, mm_surrogate};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MmAdmmConfig {
    pub rho1: f64,
    pub rho2: f64,
    /// Relative change of the received power that ends the outer loop.
    pub outer_tol: f64,
    /// Primal residual norm that ends the inner loop.
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for MmAdmmConfig {
    fn default() -> Self {
        Self { rho1: 5.0, rho2: 10.0, outer_tol: 1e-4, inner_tol: 1e-6, max_outer: 30, max_inner: 500 }
    }
}

impl MmAdmmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rho1 > 0.0
            && self.rho2 > 0.0
            && self.outer_tol > 0.0
            && self.inner_tol > 0.0
            && self.max_outer > 0
            && self.max_inner > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid ADMM settings {self:?}")))
        }
    }
}

/// Starting point of the iterative solvers.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Every component at the middle of its feasible set.
    ArcMidpoint,
    /// The output of the low-complexity solver.
    #[default]
    LowComplexity,
    /// Stacked components in siemens, one group after another.
    Components(Vec<Complex64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The relative-change criterion was met.
    Converged,
    /// The iteration cap was reached first.
    MaxIterations,
    /// A step did not improve the objective and was discarded.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub outer_iter: usize,
    pub inner_iter: usize,
    pub objective_watts: f64,
    pub primal_res_phic: f64,
    pub primal_res_zy: f64,
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    /// Received power at the initial point and after every accepted outer step.
    pub objective_per_outer: Vec<f64>,
    /// One row per inner iteration.
    pub rows: Vec<TraceRow>,
    /// Inner iterations spent in each outer iteration.
    pub inner_iterations: Vec<usize>,
    /// Least-squares residual per iteration (low-complexity solver only).
    pub ls_residual: Vec<f64>,
    pub termination: Termination,
    pub final_phi: ScatteringMatrix,
}

impl SolveTrace {
    pub fn outer_iterations(&self) -> usize {
        self.objective_per_outer.len().saturating_sub(1)
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.inner_iterations.iter().sum()
    }

    pub fn primal_res_phic(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.primal_res_phic).collect()
    }

    pub fn primal_res_zy(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.primal_res_zy).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "outer_iter,inner_iter,objective_watts,primal_res_phic,primal_res_zy")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.outer_iter, r.inner_iter, r.objective_watts, r.primal_res_phic, r.primal_res_zy
            )?;
        }
        Ok(())
    }
}

/// Cascaded channel `h_RT + h_RI^H Phi h_IT`.
pub fn effective_channel(ch: &SisoChannels, phi: &ScatteringMatrix) -> Result<Complex64> {
    if phi.dim() != ch.m() {
        return Err(Error::ShapeMismatch(format!(
            "scattering matrix of size {} for {} elements",
            phi.dim(),
            ch.m()
        )));
    }
    let n = phi.block_size();
    let mut h = ch.h_rt;
    for g in 0..phi.groups() {
        let s = g * n;
        let blk = phi.entries().view((s, s), (n, n));
        let v = blk * ch.h_it.rows(s, n);
        h += dot_h(&ch.h_ri.as_slice()[s..s + n], v.as_slice());
    }
    Ok(h)
}

/// Received power `|h|^2` (watts per watt of transmit power) and the rate in
/// bits for transmit power `p_tx` and noise power `sigma2`, both in watts.
pub fn received_power_and_rate(
    ch: &SisoChannels,
    phi: &ScatteringMatrix,
    p_tx: f64,
    sigma2: f64,
) -> Result<(f64, f64)> {
    let power = effective_channel(ch, phi)?.norm_sqr();
    Ok((power, (1.0 + p_tx * power / sigma2).log2()))
}

/// `(sum_g |h_RI,g| |h_IT,g| + |h_RT|)^2`.
pub fn siso_upper_bound(ch: &SisoChannels, spec: &ArchitectureSpec) -> f64 {
    let n = spec.mbar;
    let s: f64 = (0..spec.groups())
        .map(|g| ch.h_ri.rows(g * n, n).norm() * ch.h_it.rows(g * n, n).norm())
        .sum();
    (s + ch.h_rt.norm()).powi(2)
}
