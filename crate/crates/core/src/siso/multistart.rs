//! MM-ADMM from several starting points, keeping the best final power.
//!
//! On the short feasible arcs of practical varactors the received power often
//! peaks with components at the ends of their arcs, so every end combination
//! is a local maximum candidate. Small problems try all of them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::architecture::ArchitectureSpec;
use crate::channel::{rng_for, SisoChannels};
use crate::circuit::FeasibleSet;
use crate::error::{Error, Result};
use crate::hardware::Hardware;
use crate::linalg::c;
use crate::network::ScatteringMatrix;

use super::{mm_admm_solve, received_power_and_rate, Init, MmAdmmConfig, SolveTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiStartConfig {
    /// Every arc-end combination is tried when the total number of components
    /// is at most this.
    pub max_enumerated_components: usize,
    /// Random arc-end combinations tried for larger problems.
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for MultiStartConfig {
    fn default() -> Self {
        Self { max_enumerated_components: 6, random_starts: 8, seed: 0 }
    }
}

/// Starting points: the low-complexity solution, the arc midpoint and
/// arc-end combinations (random lossless points for the lossless model).
pub fn multistart_points(spec: &ArchitectureSpec, hw: &Hardware, cfg: &MultiStartConfig) -> Vec<Init> {
    let n = spec.groups() * spec.u();
    let mut out = vec![Init::LowComplexity, Init::ArcMidpoint];
    let mut rng = rng_for(cfg.seed);
    match &hw.set {
        FeasibleSet::Arc(arc) => {
            let (lo, hi) = arc.offset_range();
            let ends = [arc.point_at_offset(lo), arc.point_at_offset(hi)];
            if n <= cfg.max_enumerated_components {
                for mask in 0..1usize << n {
                    out.push(Init::Components((0..n).map(|k| ends[mask >> k & 1]).collect()));
                }
            } else {
                out.push(Init::Components(vec![ends[0]; n]));
                out.push(Init::Components(vec![ends[1]; n]));
                for _ in 0..cfg.random_starts {
                    out.push(Init::Components((0..n).map(|_| ends[rng.random_range(0..2)]).collect()));
                }
            }
        }
        FeasibleSet::ImaginaryAxis => {
            let y0 = hw.y0.value();
            for _ in 0..cfg.random_starts {
                out.push(Init::Components((0..n).map(|_| c(0.0, y0 * rng.random_range(-2.0..2.0))).collect()));
            }
        }
    }
    out
}

/// Runs MM-ADMM from every point of [`multistart_points`] and returns the
/// solution with the largest received power (the earliest on ties).
pub fn mm_admm_multistart(
    ch: &SisoChannels,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    cfg: &MmAdmmConfig,
    ms: &MultiStartConfig,
) -> Result<(ScatteringMatrix, SolveTrace)> {
    let mut best: Option<(f64, ScatteringMatrix, SolveTrace)> = None;
    for init in multistart_points(spec, hw, ms) {
        let (phi, trace) = mm_admm_solve(ch, spec, hw, cfg, &init)?;
        let p = received_power_and_rate(ch, &phi, 1.0, 1.0)?.0;
        if best.as_ref().is_none_or(|(b, _, _)| p > *b) {
            best = Some((p, phi, trace));
        }
    }
    best.map(|(_, phi, trace)| (phi, trace))
        .ok_or_else(|| Error::InvalidParameter("no starting points".into()))
}
