//! MM-ADMM: repeated linearization of the received power, each surrogate
//! maximized by an ADMM loop over the scattering entries, the admittance
//! components and a feasible copy of the components.
//!
//! All admittances inside the solver are normalized by `y0`.

use crate::architecture::{ArchitectureSpec, MappingMatrices};
use crate::channel::SisoChannels;
use crate::circuit::FeasibleSet;
use crate::error::{Error, Result};
use crate::hardware::{scattering_of_components, Hardware};
use crate::linalg::{c, dot_h, norm_sq, symmetrize, CMat, Complex64};
use crate::network::ScatteringMatrix;

use super::lowcomplexity::{low_complexity_components, LowComplexityConfig};
use super::maps::YbarOperator;
use super::quadratic::surrogate_from_channel;
use super::{received_power_and_rate, Init, MmAdmmConfig, SolveTrace, Termination, TraceRow};

/// Iterates of the ADMM loop, stacked group after group.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    /// Upper-triangular scattering entries, `M̄(M̄+1)/2` per group.
    pub phibar: Vec<Complex64>,
    /// Admittance components, `U` per group.
    pub ybar: Vec<Complex64>,
    /// Feasible copy of the components.
    pub z: Vec<Complex64>,
    /// Scaled multipliers of the network equation, `M̄²` per group.
    pub lambda1: Vec<Complex64>,
    /// Scaled multipliers of `z = ybar`.
    pub lambda2: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerResiduals {
    /// `|C phibar - c|` over all groups.
    pub phic: f64,
    /// `|z - ybar|` over all groups.
    pub zy: f64,
}

impl InnerResiduals {
    pub fn max(&self) -> f64 {
        self.phic.max(self.zy)
    }
}

impl AdmmState {
    /// State whose components all equal `z`, with the scattering entries they
    /// realize and zero multipliers.
    pub fn from_components(z: Vec<Complex64>, spec: &ArchitectureSpec, maps: &MappingMatrices) -> Result<Self> {
        let group_maps = MappingMatrices::new(&spec.as_group());
        let phi = scattering_of_components(&z, spec, maps)?;
        let phibar = (0..spec.groups()).flat_map(|g| group_maps.pack(&phi.block(g))).collect();
        let n = spec.mbar;
        Ok(Self {
            phibar,
            ybar: z.clone(),
            lambda1: vec![c(0.0, 0.0); spec.groups() * n * n],
            lambda2: vec![c(0.0, 0.0); z.len()],
            z,
        })
    }

    /// Scattering matrix assembled from `phibar`.
    pub fn scattering(&self, group_maps: &MappingMatrices) -> Result<ScatteringMatrix> {
        let blocks = self
            .phibar
            .chunks_exact(group_maps.u)
            .map(|v| group_maps.unpack(v))
            .collect::<Result<Vec<_>>>()?;
        ScatteringMatrix::from_blocks(&blocks)
    }

    fn is_finite(&self) -> bool {
        [&self.phibar, &self.ybar, &self.z, &self.lambda1, &self.lambda2]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Solves `scale P^T (I (x) K) P x = r` over packed symmetric matrices, with
/// `K` Hermitian positive semidefinite. Writing `K = V L V^H` and
/// `X = V S V^T` decouples the equation into `(l_i + l_j) S_ij = (V^H R conj(V))_ij`.
pub(crate) fn solve_packed_gram(
    k: &CMat,
    r: &[Complex64],
    scale: f64,
    group_maps: &MappingMatrices,
) -> Result<Vec<Complex64>> {
    let n = k.nrows();
    let eps = 1e-12 * k.trace().re.max(0.0) / n as f64;
    let mut kr = k.clone();
    for i in 0..n {
        kr[(i, i)] += eps;
    }
    let eig = kr.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut rhs = CMat::zeros(n, n);
    for (&(p, q), &v) in group_maps.positions().iter().zip(r) {
        if p == q {
            rhs[(p, p)] = v * (2.0 / scale);
        } else {
            rhs[(p, q)] = v / scale;
            rhs[(q, p)] = v / scale;
        }
    }
    let v = &eig.eigenvectors;
    let mut t = v.adjoint() * rhs * v.conjugate();
    for j in 0..n {
        for i in 0..n {
            let den = eig.eigenvalues[i] + eig.eigenvalues[j];
            if !(den > 1e-13 * lmax) {
                return Err(Error::SingularSubproblem("scattering update".into()));
            }
            t[(i, j)] /= den;
        }
    }
    let mut x = v * t * v.transpose();
    symmetrize(&mut x);
    let out = group_maps.pack(&x);
    if out.iter().all(|z| z.is_finite()) {
        Ok(out)
    } else {
        Err(Error::SingularSubproblem("scattering update".into()))
    }
}

/// Right-hand side `rho1 C^H (c - lambda1)` of a group's scattering update
/// and the Gram factor `(I + Y)^H (I + Y)`.
pub(crate) fn phibar_terms(
    ybar_g: &[Complex64],
    lambda1_g: &[Complex64],
    maps: &MappingMatrices,
    group_maps: &MappingMatrices,
    rho1: f64,
) -> Result<(Vec<Complex64>, CMat)> {
    let n = maps.mbar();
    let eye = CMat::identity(n, n);
    let y = maps.block(ybar_g)?;
    let a = &eye + &y;
    let target = &eye - &y - CMat::from_column_slice(n, n, lambda1_g);
    let rhs = group_maps.pack_adjoint(&(a.adjoint() * target)).into_iter().map(|v| v * rho1).collect();
    Ok((rhs, a.adjoint() * a))
}

/// Scattering update `phibar = (rho1 C^H C)^{-1} (fbar + rho1 C^H (c - lambda1))`
/// for every group.
pub fn phibar_update(
    state: &mut AdmmState,
    fbar: &[Complex64],
    maps: &MappingMatrices,
    group_maps: &MappingMatrices,
    rho1: f64,
) -> Result<()> {
    let n = maps.mbar();
    let groups = state.ybar.len() / maps.u;
    for g in 0..groups {
        let ys = &state.ybar[g * maps.u..(g + 1) * maps.u];
        let ls = &state.lambda1[g * n * n..(g + 1) * n * n];
        let (mut rhs, k) = phibar_terms(ys, ls, maps, group_maps, rho1)?;
        for (r, f) in rhs.iter_mut().zip(&fbar[g * group_maps.u..(g + 1) * group_maps.u]) {
            *r += f;
        }
        let x = solve_packed_gram(&k, &rhs, rho1, group_maps)?;
        state.phibar[g * group_maps.u..(g + 1) * group_maps.u].copy_from_slice(&x);
    }
    Ok(())
}

/// Admittance update, projection onto the feasible set and both multiplier
/// updates, for every group.
pub fn primal_dual_update(
    state: &mut AdmmState,
    maps: &MappingMatrices,
    group_maps: &MappingMatrices,
    set: &FeasibleSet,
    rho1: f64,
    rho2: f64,
) -> Result<InnerResiduals> {
    let n = maps.mbar();
    let u = maps.u;
    let eye = CMat::identity(n, n);
    let groups = state.ybar.len() / u;
    let (mut r1, mut r2) = (0.0, 0.0);
    for g in 0..groups {
        let phi = group_maps.unpack(&state.phibar[g * group_maps.u..(g + 1) * group_maps.u])?;
        let op = YbarOperator::new(maps, &phi, rho1, rho2);
        let lam1 = CMat::from_column_slice(n, n, &state.lambda1[g * n * n..(g + 1) * n * n]);
        let d = &eye - &phi;
        let mut rhs = op.adjoint(&(&d - lam1));
        let ys = g * u..(g + 1) * u;
        for ((r, z), l) in rhs.iter_mut().zip(&state.z[ys.clone()]).zip(&state.lambda2[ys.clone()]) {
            *r = *r * rho1 + (z + l) * rho2;
        }
        let y = op.solve(&rhs, &state.ybar[ys.clone()])?;
        for i in 0..u {
            let k = g * u + i;
            state.ybar[k] = y[i];
            state.z[k] = set.project(y[i] - state.lambda2[k]);
            let diff = state.z[k] - y[i];
            state.lambda2[k] += diff;
            r2 += diff.norm_sqr();
        }
        let res = op.forward(&y)? - d;
        for (l, v) in state.lambda1[g * n * n..(g + 1) * n * n].iter_mut().zip(res.iter()) {
            *l += v;
        }
        r1 += norm_sq(res.as_slice());
    }
    Ok(InnerResiduals { phic: r1.sqrt(), zy: r2.sqrt() })
}

/// One full cycle of the scattering, admittance, projection and multiplier
/// updates.
pub fn admm_inner_iteration(
    state: &mut AdmmState,
    fbar: &[Complex64],
    maps: &MappingMatrices,
    group_maps: &MappingMatrices,
    set: &FeasibleSet,
    cfg: &MmAdmmConfig,
) -> Result<InnerResiduals> {
    phibar_update(state, fbar, maps, group_maps, cfg.rho1)?;
    let res = primal_dual_update(state, maps, group_maps, set, cfg.rho1, cfg.rho2)?;
    if state.is_finite() && res.max().is_finite() {
        Ok(res)
    } else {
        Err(Error::SingularSubproblem("non-finite ADMM iterate".into()))
    }
}

/// Received power of the block-diagonal matrix packed in `phibar`.
fn packed_power(ch: &SisoChannels, phibar: &[Complex64], group_maps: &MappingMatrices) -> Result<f64> {
    let n = group_maps.mbar();
    let mut h = ch.h_rt;
    for (g, v) in phibar.chunks_exact(group_maps.u).enumerate() {
        let blk = group_maps.unpack(v)?;
        let t = blk * ch.h_it.rows(g * n, n);
        h += dot_h(&ch.h_ri.as_slice()[g * n..(g + 1) * n], t.as_slice());
    }
    Ok(h.norm_sqr())
}

pub(crate) fn initial_components(
    ch: &SisoChannels,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    init: &Init,
) -> Result<Vec<Complex64>> {
    let set = hw.normalized_set();
    let len = spec.groups() * spec.u();
    match init {
        Init::ArcMidpoint => Ok(vec![set.midpoint(); len]),
        Init::LowComplexity => {
            let (z, _) = low_complexity_components(ch, spec, hw, &LowComplexityConfig::default(), &Init::ArcMidpoint)?;
            Ok(z)
        }
        Init::Components(v) => {
            if v.len() != len {
                return Err(Error::ShapeMismatch(format!(
                    "initial point has {} components, expected {len}",
                    v.len()
                )));
            }
            Ok(v.iter().map(|&y| set.project(y / hw.y0.value())).collect())
        }
    }
}

pub(crate) fn check_problem(ch: &SisoChannels, spec: &ArchitectureSpec) -> Result<()> {
    spec.validate()?;
    ch.validate()?;
    if ch.m() != spec.m {
        return Err(Error::ShapeMismatch(format!(
            "channels for {} elements but architecture has {}",
            ch.m(),
            spec.m
        )));
    }
    Ok(())
}

/// Maximizes the received power over feasible block-diagonal scattering
/// matrices. Every outer step is accepted only if the scattering matrix
/// realized by the feasible components improves the power. Otherwise the
/// previous iterate is returned, as converged if the loss is within
/// `outer_tol` and with [`Termination::Stalled`] if not.
pub fn mm_admm_solve(
    ch: &SisoChannels,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    cfg: &MmAdmmConfig,
    init: &Init,
) -> Result<(ScatteringMatrix, SolveTrace)> {
    cfg.validate()?;
    check_problem(ch, spec)?;
    let maps = MappingMatrices::new(spec);
    let group_maps = MappingMatrices::new(&spec.as_group());
    let set = hw.normalized_set();
    let z0 = initial_components(ch, spec, hw, init)?;
    let mut state = AdmmState::from_components(z0, spec, &maps)?;
    let mut phi = scattering_of_components(&state.z, spec, &maps)?;
    let mut current = received_power_and_rate(ch, &phi, 1.0, 1.0)?.0;
    let mut objective = vec![current];
    let mut rows = Vec::new();
    let mut inner_iterations = Vec::new();
    let mut termination = Termination::MaxIterations;

    for outer in 1..=cfg.max_outer {
        let mut fbar = surrogate_from_channel(ch, &phi, &group_maps)?;
        let norm = norm_sq(&fbar).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            termination = Termination::Converged;
            break;
        }
        fbar.iter_mut().for_each(|f| *f /= norm);

        let mut failed = false;
        let mut count = 0;
        for inner in 1..=cfg.max_inner {
            match admm_inner_iteration(&mut state, &fbar, &maps, &group_maps, &set, cfg) {
                Ok(res) => {
                    count = inner;
                    rows.push(TraceRow {
                        outer_iter: outer,
                        inner_iter: inner,
                        objective_watts: packed_power(ch, &state.phibar, &group_maps)?,
                        primal_res_phic: res.phic,
                        primal_res_zy: res.zy,
                    });
                    if res.max() < cfg.inner_tol {
                        break;
                    }
                }
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        inner_iterations.push(count);

        let candidate = if failed {
            None
        } else {
            scattering_of_components(&state.z, spec, &maps).ok()
        };
        let evaluated = candidate.and_then(|p| {
            let power = received_power_and_rate(ch, &p, 1.0, 1.0).ok()?.0;
            Some((p, power))
        });
        let (p, power) = match evaluated {
            Some((p, power)) if power >= current => (p, power),
            // A step that loses less than the tolerance leaves the power
            // unchanged to within the stopping rule.
            Some((_, power)) if current - power <= cfg.outer_tol * current => {
                termination = Termination::Converged;
                break;
            }
            _ => {
                termination = Termination::Stalled;
                break;
            }
        };
        phi = p;
        objective.push(power);
        let done = (power - current).abs() <= cfg.outer_tol * current;
        current = power;
        if done {
            termination = Termination::Converged;
            break;
        }
    }

    let trace = SolveTrace {
        objective_per_outer: objective,
        rows,
        inner_iterations,
        ls_residual: Vec::new(),
        termination,
        final_phi: phi.clone(),
    };
    Ok((phi, trace))
}
