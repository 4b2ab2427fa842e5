//! Multi-user MISO sum-rate maximization.
//!
//! The sum rate is replaced by its quadratic-transform surrogate
//! `f2(W, Phi, nu, tau)`, which is maximized block by block: the auxiliaries
//! in closed form, the precoder by a Lagrange multiplier search and the
//! scattering matrix by the same ADMM loop as the single-user solver, with a
//! quadratic instead of a linear objective. Surrogate algebra uses natural
//! logarithms; reported rates are in bits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::architecture::{ArchitectureSpec, MappingMatrices};
use crate::channel::MuMisoChannels;
use crate::error::{Error, Result};
use crate::hardware::{scattering_of_components, Hardware};
use crate::linalg::{c, symmetrize_hermitian, CMat, CVec, Complex64};
use crate::network::ScatteringMatrix;
use crate::siso::{phibar_terms, primal_dual_update, AdmmState, InnerResiduals, MmAdmmConfig, Termination};

/// Precoder `W = [w_1, ..., w_K]`; `|W|_F^2` is the transmit power in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub w: CMat,
    /// Multiplier of the power constraint that produced `w`.
    pub lambda: f64,
}

impl Precoder {
    pub fn power(&self) -> f64 {
        self.w.norm_squared()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpAuxiliaries {
    pub nu: Vec<f64>,
    pub tau: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcdConfig {
    /// Relative sum-rate change that ends the iterations.
    pub bcd_tol: f64,
    pub max_bcd: usize,
    pub phi_admm: MmAdmmConfig,
    /// Relative accuracy of the transmit power found by bisection.
    pub bisection_tol: f64,
    /// Allowed doublings of the multiplier bracket.
    pub max_bisection: usize,
}

impl Default for BcdConfig {
    fn default() -> Self {
        Self {
            bcd_tol: 1e-4,
            max_bcd: 30,
            phi_admm: MmAdmmConfig { rho1: 1.0, rho2: 1.0, ..MmAdmmConfig::default() },
            bisection_tol: 1e-8,
            max_bisection: 100,
        }
    }
}

impl BcdConfig {
    pub fn validate(&self) -> Result<()> {
        self.phi_admm.validate()?;
        if self.bcd_tol > 0.0 && self.bisection_tol > 0.0 && self.max_bcd > 0 && self.max_bisection > 0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid BCD settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcdRow {
    pub bcd_iter: usize,
    pub sum_rate_bits: f64,
    pub power_used_watts: f64,
    pub phi_admm_iters: usize,
}

#[derive(Debug, Clone)]
pub struct BcdTrace {
    /// Row 0 is the starting point.
    pub rows: Vec<BcdRow>,
    pub termination: Termination,
    /// Whether the scattering step of each iteration was kept.
    pub phi_accepted: Vec<bool>,
}

impl BcdTrace {
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn sum_rates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sum_rate_bits).collect()
    }

    pub fn final_rate(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.sum_rate_bits)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bcd_iter,sum_rate_bits,power_used_watts,phi_admm_iters")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.bcd_iter, r.sum_rate_bits, r.power_used_watts, r.phi_admm_iters)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BcdSolution {
    pub precoder: Precoder,
    pub phi: ScatteringMatrix,
    /// Free components in siemens.
    pub components: Vec<Complex64>,
    pub trace: BcdTrace,
}

fn check_channels(ch: &MuMisoChannels, phi: &ScatteringMatrix) -> Result<()> {
    ch.validate()?;
    if phi.dim() != ch.m() {
        return Err(Error::ShapeMismatch(format!(
            "scattering matrix of size {} for {} elements",
            phi.dim(),
            ch.m()
        )));
    }
    Ok(())
}

/// `h_k = h_RT,k + H_IT^H Phi^H h_RI,k`, so that `h_k^H w = h_RT,k^H w + h_RI,k^H Phi H_IT w`.
pub fn effective_channels(phi: &ScatteringMatrix, ch: &MuMisoChannels) -> Result<Vec<CVec>> {
    check_channels(ch, phi)?;
    let hit_h = ch.h_it.adjoint();
    let phi_h = phi.entries().adjoint();
    Ok(ch.h_rt.iter().zip(&ch.h_ri).map(|(rt, ri)| rt + &hit_h * (&phi_h * ri)).collect())
}

/// `G[(k, p)] = h_k^H w_p`.
fn cross_gains(h: &[CVec], w: &CMat) -> CMat {
    CMat::from_fn(h.len(), w.ncols(), |k, p| h[k].dotc(&w.column(p)))
}

fn check_shapes(h: &[CVec], w: &CMat, sigma2: &[f64]) -> Result<()> {
    let ok = h.len() == w.ncols() && sigma2.len() == h.len() && h.iter().all(|x| x.len() == w.nrows());
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeMismatch("effective channels, precoder and noise powers disagree".into()))
    }
}

/// Per-user SINR and the sum rate in bits.
pub fn sinr_and_sum_rate(h: &[CVec], w: &CMat, sigma2: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_shapes(h, w, sigma2)?;
    let g = cross_gains(h, w);
    let gamma: Vec<f64> = (0..h.len())
        .map(|k| {
            let total: f64 = g.row(k).iter().map(|x| x.norm_sqr()).sum();
            let s = g[(k, k)].norm_sqr();
            s / (total - s + sigma2[k])
        })
        .collect();
    let rate = gamma.iter().map(|x| x.ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
    Ok((gamma, rate))
}

/// `nu_k = gamma_k` and `tau_k = sqrt(1 + nu_k) h_k^H w_k / (sum_p |h_k^H w_p|^2 + sigma_k^2)`.
pub fn update_nu_tau(h: &[CVec], w: &CMat, sigma2: &[f64]) -> Result<FpAuxiliaries> {
    let (nu, _) = sinr_and_sum_rate(h, w, sigma2)?;
    let g = cross_gains(h, w);
    let tau = (0..h.len())
        .map(|k| {
            let total: f64 = g.row(k).iter().map(|x| x.norm_sqr()).sum::<f64>() + sigma2[k];
            g[(k, k)] * ((1.0 + nu[k]).sqrt() / total)
        })
        .collect();
    Ok(FpAuxiliaries { nu, tau })
}

/// Surrogate `sum_k ln(1+nu_k) - nu_k + 2 sqrt(1+nu_k) Re{tau_k^* h_k^H w_k}
/// - |tau_k|^2 (sum_p |h_k^H w_p|^2 + sigma_k^2)`, in nats.
pub fn fp_objective(h: &[CVec], w: &CMat, aux: &FpAuxiliaries, sigma2: &[f64]) -> Result<f64> {
    check_shapes(h, w, sigma2)?;
    if aux.nu.len() != h.len() || aux.tau.len() != h.len() {
        return Err(Error::ShapeMismatch("auxiliaries do not match the number of users".into()));
    }
    let g = cross_gains(h, w);
    Ok((0..h.len())
        .map(|k| {
            let (nu, tau) = (aux.nu[k], aux.tau[k]);
            let total: f64 = g.row(k).iter().map(|x| x.norm_sqr()).sum::<f64>() + sigma2[k];
            nu.ln_1p() - nu + 2.0 * (1.0 + nu).sqrt() * (tau.conj() * g[(k, k)]).re - tau.norm_sqr() * total
        })
        .sum())
}

/// `A = sum_p |tau_p|^2 h_p h_p^H` and the right-hand sides `b_k = sqrt(1+nu_k) tau_k h_k`.
fn precoder_terms(h: &[CVec], aux: &FpAuxiliaries) -> (CMat, CMat) {
    let n = h.first().map_or(0, |x| x.len());
    let mut a = CMat::zeros(n, n);
    let mut b = CMat::zeros(n, h.len());
    for (k, hk) in h.iter().enumerate() {
        a += hk * hk.adjoint() * c(aux.tau[k].norm_sqr(), 0.0);
        b.set_column(k, &(hk * (aux.tau[k] * (1.0 + aux.nu[k]).sqrt())));
    }
    (a, b)
}

/// Largest relative residual `|(A + lambda I) w_k - b_k| / |b_k|` of the
/// precoder stationarity conditions.
pub fn precoder_kkt_residual(h: &[CVec], aux: &FpAuxiliaries, pre: &Precoder) -> f64 {
    let (a, b) = precoder_terms(h, aux);
    let n = a.nrows();
    let r = (a + CMat::identity(n, n) * c(pre.lambda, 0.0)) * &pre.w - &b;
    (0..b.ncols())
        .map(|k| {
            let bn = b.column(k).norm();
            let rn = r.column(k).norm();
            if bn > 0.0 { rn / bn } else { rn }
        })
        .fold(0.0, f64::max)
}

/// `w_k = (A + lambda I)^{-1} b_k`. The unconstrained solution (`lambda = 0`)
/// uses the pseudo-inverse of `A`; when it exceeds the budget `p`, `lambda` is
/// found by bisection so that `p (1 - tol) <= |W|_F^2 <= p`.
pub fn update_precoder(h: &[CVec], aux: &FpAuxiliaries, p: f64, cfg: &BcdConfig) -> Result<Precoder> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("transmit power {p}")));
    }
    let (a, b) = precoder_terms(h, aux);
    let eig = a.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-12 * lmax;
    let lam: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let u = &eig.eigenvectors;
    let beta = u.adjoint() * &b;
    let scale = |mu: f64| -> Vec<f64> {
        lam.iter()
            .map(|&l| {
                let d = l + mu;
                if mu == 0.0 && l <= floor { 0.0 } else { 1.0 / d }
            })
            .collect()
    };
    let power = |mu: f64| -> f64 {
        let s = scale(mu);
        beta.row_iter().zip(&s).map(|(row, si)| si * si * row.norm_squared()).sum()
    };
    let build = |mu: f64| -> Precoder {
        let s = scale(mu);
        let mut t = beta.clone();
        for (i, si) in s.iter().enumerate() {
            t.row_mut(i).scale_mut(*si);
        }
        Precoder { w: u * t, lambda: mu }
    };

    if power(0.0) <= p {
        return Ok(build(0.0));
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while power(hi) >= p {
        doublings += 1;
        if doublings > cfg.max_bisection {
            return Err(Error::BisectionFailure { doublings: cfg.max_bisection });
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        if p - power(hi) <= cfg.bisection_tol * p || hi - lo <= f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if power(mid) >= p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(build(hi))
}

/// Precoder `sqrt(P/K) h_k / |h_k|`; users with a zero channel get nothing.
pub fn matched_filter(h: &[CVec], p: f64) -> Precoder {
    let n = h.first().map_or(0, |x| x.len());
    let amp = (p / h.len().max(1) as f64).sqrt();
    let mut w = CMat::zeros(n, h.len());
    for (k, hk) in h.iter().enumerate() {
        let nrm = hk.norm();
        if nrm > 0.0 {
            w.set_column(k, &(hk * c(amp / nrm, 0.0)));
        }
    }
    Precoder { w, lambda: 0.0 }
}

/// `Q` and `q` such that the scattering-dependent part of `-f2` equals
/// `phibar^H Q phibar - 2 Re{q^H phibar}`, with `phibar` the stacked upper
/// triangles of the diagonal blocks (unnormalized scattering entries).
pub fn build_q_q(ch: &MuMisoChannels, w: &CMat, aux: &FpAuxiliaries, spec: &ArchitectureSpec) -> Result<(CMat, CVec)> {
    ch.validate()?;
    let k_users = ch.users();
    if ch.m() != spec.m || w.nrows() != ch.antennas() || w.ncols() != k_users {
        return Err(Error::ShapeMismatch("channels, architecture and precoder disagree".into()));
    }
    if aux.nu.len() != k_users || aux.tau.len() != k_users {
        return Err(Error::ShapeMismatch("auxiliaries do not match the number of users".into()));
    }
    let group_maps = MappingMatrices::new(&spec.as_group());
    let (n, ug, groups) = (spec.mbar, group_maps.u, spec.groups());
    let dim = groups * ug;
    let v: Vec<CVec> = (0..k_users).map(|p| &ch.h_it * w.column(p)).collect();
    let mut qm = CMat::zeros(dim, dim);
    let mut qv = CVec::zeros(dim);
    for k in 0..k_users {
        let t2 = aux.tau[k].norm_sqr();
        for p in 0..k_users {
            let mut a = CVec::zeros(dim);
            for g in 0..groups {
                let hr = ch.h_ri[k].rows(g * n, n);
                let vp = v[p].rows(g * n, n);
                let blk = group_maps.pack_adjoint(&(hr * vp.adjoint()));
                a.rows_mut(g * ug, ug).copy_from_slice(&blk);
            }
            let c_kp = ch.h_rt[k].dotc(&w.column(p));
            qm += &a * a.adjoint() * c(t2, 0.0);
            qv -= &a * (c_kp * t2);
            if p == k {
                qv += &a * (aux.tau[k] * (1.0 + aux.nu[k]).sqrt());
            }
        }
    }
    symmetrize_hermitian(&mut qm);
    Ok((qm, qv))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiAdmmReport {
    pub iterations: usize,
    pub residuals: InnerResiduals,
    pub converged: bool,
}

/// Scattering update `(2Q + rho1 C^H C) phibar = 2q + rho1 C^H (c - lambda1)`,
/// solved jointly because `Q` couples the groups.
pub fn phibar_update_quadratic(
    state: &mut AdmmState,
    q_mat: &CMat,
    q_vec: &CVec,
    maps: &MappingMatrices,
    group_maps: &MappingMatrices,
    rho1: f64,
) -> Result<()> {
    let n = maps.mbar();
    let ug = group_maps.u;
    let groups = state.ybar.len() / maps.u;
    let dim = groups * ug;
    if q_mat.nrows() != dim || q_mat.ncols() != dim || q_vec.len() != dim {
        return Err(Error::ShapeMismatch(format!("quadratic terms of size {} for {dim} entries", q_vec.len())));
    }
    let mut h = q_mat * c(2.0, 0.0);
    let mut rhs = q_vec * c(2.0, 0.0);
    for g in 0..groups {
        let ys = &state.ybar[g * maps.u..(g + 1) * maps.u];
        let ls = &state.lambda1[g * n * n..(g + 1) * n * n];
        let (r, k) = phibar_terms(ys, ls, maps, group_maps, rho1)?;
        for (i, x) in r.into_iter().enumerate() {
            rhs[g * ug + i] += x;
        }
        for j in 0..ug {
            let mut e = vec![c(0.0, 0.0); ug];
            e[j] = c(rho1, 0.0);
            let col = group_maps.pack_adjoint(&(&k * group_maps.unpack(&e)?));
            for (i, x) in col.into_iter().enumerate() {
                h[(g * ug + i, g * ug + j)] += x;
            }
        }
    }
    symmetrize_hermitian(&mut h);
    let x = h
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .filter(|x| x.iter().all(|z| z.is_finite()))
        .ok_or_else(|| Error::SingularSubproblem("quadratic scattering update".into()))?;
    state.phibar.copy_from_slice(x.as_slice());
    Ok(())
}

/// Runs the ADMM loop on `min phibar^H Q phibar - 2 Re{q^H phibar}` over
/// feasible scattering matrices, continuing from `state`.
pub fn update_phi_admm(
    q_mat: &CMat,
    q_vec: &CVec,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    cfg: &MmAdmmConfig,
    state: &mut AdmmState,
) -> Result<PhiAdmmReport> {
    update_phi_admm_observed(q_mat, q_vec, spec, hw, cfg, state, |_| Ok(()))
}

/// [`update_phi_admm`] calling `observe` after every iteration.
pub fn update_phi_admm_observed(
    q_mat: &CMat,
    q_vec: &CVec,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    cfg: &MmAdmmConfig,
    state: &mut AdmmState,
    mut observe: impl FnMut(&AdmmState) -> Result<()>,
) -> Result<PhiAdmmReport> {
    cfg.validate()?;
    let maps = MappingMatrices::new(spec);
    let group_maps = MappingMatrices::new(&spec.as_group());
    let set = hw.normalized_set();
    let mut report = PhiAdmmReport {
        iterations: 0,
        residuals: InnerResiduals { phic: f64::INFINITY, zy: f64::INFINITY },
        converged: false,
    };
    for it in 1..=cfg.max_inner {
        phibar_update_quadratic(state, q_mat, q_vec, &maps, &group_maps, cfg.rho1)?;
        let res = primal_dual_update(state, &maps, &group_maps, &set, cfg.rho1, cfg.rho2)?;
        if !res.max().is_finite() {
            return Err(Error::SingularSubproblem("non-finite ADMM iterate".into()));
        }
        report.iterations = it;
        report.residuals = res;
        observe(state)?;
        if res.max() < cfg.inner_tol {
            report.converged = true;
            break;
        }
    }
    Ok(report)
}

fn pack_phi(phi: &ScatteringMatrix, group_maps: &MappingMatrices) -> CVec {
    let v: Vec<Complex64> = (0..phi.groups()).flat_map(|g| group_maps.pack(&phi.block(g))).collect();
    CVec::from_vec(v)
}

/// Alternates the auxiliaries and the precoder at a fixed scattering matrix
/// until the sum rate settles.
pub fn optimize_precoder(ch: &MuMisoChannels, phi: &ScatteringMatrix, p: f64, cfg: &BcdConfig) -> Result<(Precoder, f64)> {
    cfg.validate()?;
    let h = effective_channels(phi, ch)?;
    let mut pre = matched_filter(&h, p);
    let mut rate = sinr_and_sum_rate(&h, &pre.w, &ch.sigma2)?.1;
    for _ in 0..cfg.max_bcd.max(200) {
        let aux = update_nu_tau(&h, &pre.w, &ch.sigma2)?;
        pre = update_precoder(&h, &aux, p, cfg)?;
        let next = sinr_and_sum_rate(&h, &pre.w, &ch.sigma2)?.1;
        let done = (next - rate).abs() <= 1e-9 * rate.abs().max(1e-300);
        rate = next;
        if done {
            break;
        }
    }
    Ok((pre, rate))
}

/// Sum-rate maximization from the arc midpoint with matched-filter precoding.
pub fn bcd_solve(
    ch: &MuMisoChannels,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    cfg: &BcdConfig,
    p: f64,
) -> Result<BcdSolution> {
    let z0 = vec![hw.normalized_set().midpoint(); spec.groups() * spec.u()];
    bcd_from_normalized(ch, spec, hw, cfg, p, z0)
}

/// Like [`bcd_solve`], starting from given components in siemens.
pub fn bcd_solve_from(
    ch: &MuMisoChannels,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    cfg: &BcdConfig,
    p: f64,
    components: &[Complex64],
) -> Result<BcdSolution> {
    if components.len() != spec.groups() * spec.u() {
        return Err(Error::ShapeMismatch(format!(
            "initial point has {} components, expected {}",
            components.len(),
            spec.groups() * spec.u()
        )));
    }
    let set = hw.normalized_set();
    let z0 = components.iter().map(|&y| set.project(y / hw.y0.value())).collect();
    bcd_from_normalized(ch, spec, hw, cfg, p, z0)
}

/// One cycle updates the auxiliaries, the precoder and then the scattering
/// matrix. The scattering subproblem is scaled to a unit gradient at the
/// current point. Among the feasible ADMM iterates the one with the largest
/// `f2` is kept, and only if it does not lower `f2`, which makes the sum rate
/// non-decreasing. When no iterate qualifies the ADMM state restarts from the
/// kept components.
fn bcd_from_normalized(
    ch: &MuMisoChannels,
    spec: &ArchitectureSpec,
    hw: &Hardware,
    cfg: &BcdConfig,
    p: f64,
    z0: Vec<Complex64>,
) -> Result<BcdSolution> {
    cfg.validate()?;
    spec.validate()?;
    ch.validate()?;
    if ch.m() != spec.m {
        return Err(Error::ShapeMismatch(format!(
            "channels for {} elements but architecture has {}",
            ch.m(),
            spec.m
        )));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("transmit power {p}")));
    }
    let maps = MappingMatrices::new(spec);
    let group_maps = MappingMatrices::new(&spec.as_group());
    let mut kept = z0.clone();
    let mut state = AdmmState::from_components(z0, spec, &maps)?;
    let mut phi = scattering_of_components(&kept, spec, &maps)?;
    let mut h = effective_channels(&phi, ch)?;
    let mut pre = matched_filter(&h, p);
    let mut rate = sinr_and_sum_rate(&h, &pre.w, &ch.sigma2)?.1;
    let mut rows = vec![BcdRow { bcd_iter: 0, sum_rate_bits: rate, power_used_watts: pre.power(), phi_admm_iters: 0 }];
    let mut phi_accepted = Vec::new();
    let mut termination = Termination::MaxIterations;

    for it in 1..=cfg.max_bcd {
        let aux = update_nu_tau(&h, &pre.w, &ch.sigma2)?;
        pre = update_precoder(&h, &aux, p, cfg)?;
        let f_old = fp_objective(&h, &pre.w, &aux, &ch.sigma2)?;

        let (mut qm, mut qv) = build_q_q(ch, &pre.w, &aux, spec)?;
        let grad = (&qm * pack_phi(&phi, &group_maps) - &qv) * c(2.0, 0.0);
        let gnorm = grad.norm();
        let mut admm_iters = 0;
        let mut accepted = false;
        if gnorm > 0.0 && gnorm.is_finite() {
            qm.scale_mut(1.0 / gnorm);
            qv.scale_mut(1.0 / gnorm);
            let mut best: Option<(f64, Vec<Complex64>, ScatteringMatrix, Vec<CVec>)> = None;
            let mut judge = |st: &AdmmState| -> Result<()> {
                let cand = scattering_of_components(&st.z, spec, &maps)?;
                let hc = effective_channels(&cand, ch)?;
                let f_new = fp_objective(&hc, &pre.w, &aux, &ch.sigma2)?;
                if f_new >= f_old && best.as_ref().is_none_or(|b| f_new > b.0) {
                    best = Some((f_new, st.z.clone(), cand, hc));
                }
                Ok(())
            };
            if let Ok(r) = update_phi_admm_observed(&qm, &qv, spec, hw, &cfg.phi_admm, &mut state, &mut judge) {
                admm_iters = r.iterations;
            }
            if let Some((_, z, cand, hc)) = best {
                phi = cand;
                h = hc;
                kept = z;
                accepted = true;
            } else {
                state = AdmmState::from_components(kept.clone(), spec, &maps)?;
            }
        }
        phi_accepted.push(accepted);

        let next = sinr_and_sum_rate(&h, &pre.w, &ch.sigma2)?.1;
        rows.push(BcdRow { bcd_iter: it, sum_rate_bits: next, power_used_watts: pre.power(), phi_admm_iters: admm_iters });
        let done = (next - rate).abs() <= cfg.bcd_tol * rate.abs();
        rate = next;
        if done {
            termination = Termination::Converged;
            break;
        }
    }

    let components = kept.iter().map(|z| z * hw.y0.value()).collect();
    Ok(BcdSolution { precoder: pre, phi, components, trace: BcdTrace { rows, termination, phi_accepted } })
}

/// Sum rate in bits of a given scattering matrix and precoder.
pub fn sum_rate_bits(ch: &MuMisoChannels, phi: &ScatteringMatrix, w: &CMat) -> Result<f64> {
    let h = effective_channels(phi, ch)?;
    Ok(sinr_and_sum_rate(&h, w, &ch.sigma2)?.1)
}

#[cfg(test)]
mod tests;
