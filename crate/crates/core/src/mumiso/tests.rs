use super::*;
use crate::architecture::Topology;
use crate::channel::{generate_mumiso, ChannelConfig, SisoChannels};
use crate::circuit::{CircuitParams, FeasibleSet};
use crate::hardware::feasibility_residual;
use crate::network::CharacteristicAdmittance;
use crate::siso::{build_c_map, mm_admm_solve, phibar_update, received_power_and_rate, Init};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hw(r: f64) -> Hardware {
    Hardware::from_circuit(&CircuitParams::default().with_r(r), CharacteristicAdmittance::default()).unwrap()
}

fn cvec(rng: &mut impl Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn cmat(rng: &mut impl Rng, r: usize, k: usize) -> CMat {
    CMat::from_fn(r, k, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Unit-scale channels, so that tolerances are easy to read.
fn toy_channels(rng: &mut impl Rng, m: usize, n: usize, k: usize) -> MuMisoChannels {
    MuMisoChannels {
        h_rt: (0..k).map(|_| cvec(rng, n)).collect(),
        h_ri: (0..k).map(|_| cvec(rng, m)).collect(),
        h_it: cmat(rng, m, n),
        sigma2: (0..k).map(|_| rng.random_range(0.1..1.0)).collect(),
    }
}

fn random_feasible_phi(rng: &mut impl Rng, spec: &ArchitectureSpec, hw: &Hardware) -> (Vec<Complex64>, ScatteringMatrix) {
    let n = spec.groups() * spec.u();
    let z: Vec<Complex64> = match hw.normalized_set() {
        FeasibleSet::Arc(arc) => {
            let (lo, hi) = arc.offset_range();
            (0..n).map(|_| arc.point_at_offset(rng.random_range(lo..=hi))).collect()
        }
        FeasibleSet::ImaginaryAxis => (0..n).map(|_| c(0.0, rng.random_range(-3.0..3.0))).collect(),
    };
    let phi = scattering_of_components(&z, spec, &MappingMatrices::new(spec)).unwrap();
    (z, phi)
}

/// Random symmetric block-diagonal matrix with the block layout of `spec`.
fn random_symmetric_phi(rng: &mut impl Rng, spec: &ArchitectureSpec) -> ScatteringMatrix {
    let gm = MappingMatrices::new(&spec.as_group());
    let blocks: Vec<CMat> = (0..spec.groups())
        .map(|_| {
            let v: Vec<Complex64> = cvec(rng, gm.u).iter().cloned().collect();
            gm.unpack(&v).unwrap()
        })
        .collect();
    ScatteringMatrix::from_blocks(&blocks).unwrap()
}

/// `h_k^H w_p` from explicit sums.
fn direct_gain(ch: &MuMisoChannels, phi: &CMat, k: usize, w: &CVec) -> Complex64 {
    let (m, n) = (ch.m(), ch.antennas());
    let mut s = c(0.0, 0.0);
    for a in 0..n {
        s += ch.h_rt[k][a].conj() * w[a];
    }
    for i in 0..m {
        for j in 0..m {
            for a in 0..n {
                s += ch.h_ri[k][i].conj() * phi[(i, j)] * ch.h_it[(j, a)] * w[a];
            }
        }
    }
    s
}

fn direct_sum_rate(ch: &MuMisoChannels, phi: &CMat, w: &CMat) -> f64 {
    let k_users = ch.users();
    let mut rate = 0.0;
    for k in 0..k_users {
        let gains: Vec<f64> =
            (0..k_users).map(|p| direct_gain(ch, phi, k, &w.column(p).into_owned()).norm_sqr()).collect();
        let interference: f64 = gains.iter().enumerate().filter(|(p, _)| *p != k).map(|(_, g)| g).sum();
        rate += (1.0 + gains[k] / (interference + ch.sigma2[k])).log2();
    }
    rate
}

fn packed(phi: &ScatteringMatrix, spec: &ArchitectureSpec) -> CVec {
    pack_phi(phi, &MappingMatrices::new(&spec.as_group()))
}

fn quad(qm: &CMat, qv: &CVec, x: &CVec) -> f64 {
    (x.adjoint() * qm * x)[(0, 0)].re - 2.0 * qv.dotc(x).re
}

#[test]
fn zero_scattering_leaves_direct_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ch = toy_channels(&mut rng, 4, 3, 2);
    let phi = ScatteringMatrix::new(CMat::zeros(4, 4), 2).unwrap();
    let h = effective_channels(&phi, &ch).unwrap();
    for k in 0..2 {
        assert_eq!(h[k], ch.h_rt[k]);
    }
}

#[test]
fn effective_channels_match_explicit_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ch = toy_channels(&mut rng, 6, 3, 2);
    let spec = ArchitectureSpec::group(6, 3).unwrap();
    let phi = random_symmetric_phi(&mut rng, &spec);
    let h = effective_channels(&phi, &ch).unwrap();
    for k in 0..2 {
        for a in 0..3 {
            let mut e = CVec::zeros(3);
            e[a] = c(1.0, 0.0);
            let want = direct_gain(&ch, phi.entries(), k, &e);
            assert!((h[k][a].conj() - want).norm() < 1e-13 * want.norm().max(1.0));
        }
    }
}

#[test]
fn single_element_single_antenna_is_a_scalar_reflection() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ch = toy_channels(&mut rng, 1, 1, 1);
    let s = c(0.3, -0.4);
    let phi = ScatteringMatrix::new(CMat::from_element(1, 1, s), 1).unwrap();
    let h = effective_channels(&phi, &ch).unwrap();
    let want = ch.h_rt[0][0].conj() + ch.h_ri[0][0].conj() * s * ch.h_it[(0, 0)];
    assert!((h[0][0].conj() - want).norm() < 1e-15);
}

#[test]
fn sinr_and_rate_match_explicit_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ch = toy_channels(&mut rng, 4, 2, 2);
    let spec = ArchitectureSpec::group(4, 2).unwrap();
    let phi = random_symmetric_phi(&mut rng, &spec);
    let w = cmat(&mut rng, 2, 2);
    let h = effective_channels(&phi, &ch).unwrap();
    let (_, rate) = sinr_and_sum_rate(&h, &w, &ch.sigma2).unwrap();
    let want = direct_sum_rate(&ch, phi.entries(), &w);
    assert!((rate - want).abs() <= 1e-12 * want);

    let (g, r) = sinr_and_sum_rate(&h, &CMat::zeros(2, 2), &ch.sigma2).unwrap();
    assert_eq!(r, 0.0);
    assert!(g.iter().all(|&x| x == 0.0));

    let h1 = vec![h[0].clone()];
    let w1 = w.columns(0, 1).into_owned();
    let (g1, _) = sinr_and_sum_rate(&h1, &w1, &[0.5]).unwrap();
    assert!((g1[0] - h[0].dotc(&w.column(0)).norm_sqr() / 0.5).abs() < 1e-14);
}

#[test]
fn auxiliaries_by_hand() {
    let h = vec![CVec::from_element(1, c(1.0, 0.0))];
    let w = CMat::from_element(1, 1, c(1.0, 0.0));
    let aux = update_nu_tau(&h, &w, &[1.0]).unwrap();
    assert!((aux.nu[0] - 1.0).abs() < 1e-15);
    assert!((aux.tau[0] - c(2f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);

    let aux = update_nu_tau(&h, &CMat::zeros(1, 1), &[1.0]).unwrap();
    assert_eq!(aux.nu[0], 0.0);
    assert_eq!(aux.tau[0], c(0.0, 0.0));
}

#[test]
fn surrogate_touches_the_sum_rate_after_the_auxiliary_update() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let k = rng.random_range(1..4);
        let n = rng.random_range(1..4);
        let h: Vec<CVec> = (0..k).map(|_| cvec(&mut rng, n)).collect();
        let w = cmat(&mut rng, n, k);
        let s2: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..2.0)).collect();
        let aux = update_nu_tau(&h, &w, &s2).unwrap();
        let (_, bits) = sinr_and_sum_rate(&h, &w, &s2).unwrap();
        let f2 = fp_objective(&h, &w, &aux, &s2).unwrap();
        assert!((f2 - bits * std::f64::consts::LN_2).abs() < 1e-10);
    }
}

#[test]
fn surrogate_never_exceeds_the_sum_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let h: Vec<CVec> = (0..2).map(|_| cvec(&mut rng, 2)).collect();
        let w = cmat(&mut rng, 2, 2);
        let s2 = [0.3, 0.7];
        let aux = FpAuxiliaries {
            nu: (0..2).map(|_| rng.random_range(0.0..3.0)).collect(),
            tau: cvec(&mut rng, 2).iter().cloned().collect(),
        };
        let (_, bits) = sinr_and_sum_rate(&h, &w, &s2).unwrap();
        assert!(fp_objective(&h, &w, &aux, &s2).unwrap() <= bits * std::f64::consts::LN_2 + 1e-12);
    }
}

#[test]
fn single_user_precoder_is_a_matched_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = vec![cvec(&mut rng, 4)];
    let w0 = cmat(&mut rng, 4, 1);
    let aux = update_nu_tau(&h, &w0, &[0.1]).unwrap();
    let pre = update_precoder(&h, &aux, 1e12, &BcdConfig::default()).unwrap();
    assert_eq!(pre.lambda, 0.0);
    let w = pre.w.column(0);
    let cos = h[0].dotc(&w).norm() / (h[0].norm() * w.norm());
    assert!((cos - 1.0).abs() < 1e-12);

    let tiny = update_precoder(&h, &aux, 1e-20, &BcdConfig::default()).unwrap();
    assert!(tiny.power() <= 1e-20);
    assert!(tiny.lambda > 1e3);
}

#[test]
fn precoder_satisfies_kkt_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = BcdConfig::default();
    for _ in 0..100 {
        let h: Vec<CVec> = (0..2).map(|_| cvec(&mut rng, 2)).collect();
        let s2 = [rng.random_range(0.01..1.0), rng.random_range(0.01..1.0)];
        let w0 = cmat(&mut rng, 2, 2);
        let p = rng.random_range(0.01..10.0);
        let aux = update_nu_tau(&h, &w0, &s2).unwrap();
        let pre = update_precoder(&h, &aux, p, &cfg).unwrap();
        assert!(pre.power() <= p * (1.0 + 1e-9));
        assert!(precoder_kkt_residual(&h, &aux, &pre) < 1e-8);
        if pre.lambda > 0.0 {
            assert!(p - pre.power() <= cfg.bisection_tol * p);
        }
        let scaled = w0.clone() * c((p / w0.norm_squared()).sqrt(), 0.0);
        let before = fp_objective(&h, &scaled, &aux, &s2).unwrap();
        assert!(fp_objective(&h, &pre.w, &aux, &s2).unwrap() >= before - 1e-12);
    }
}

#[test]
fn bisection_reports_a_missing_bracket() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = vec![cvec(&mut rng, 2)];
    let aux = update_nu_tau(&h, &cmat(&mut rng, 2, 1), &[1e-3]).unwrap();
    let cfg = BcdConfig { max_bisection: 2, ..BcdConfig::default() };
    assert!(matches!(update_precoder(&h, &aux, 1e-30, &cfg), Err(Error::BisectionFailure { .. })));
}

#[test]
fn zero_precoder_gives_zero_quadratic_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let ch = toy_channels(&mut rng, 4, 2, 2);
    let spec = ArchitectureSpec::group(4, 2).unwrap();
    let aux = FpAuxiliaries { nu: vec![0.5, 1.0], tau: vec![c(0.3, 0.1), c(-0.2, 0.4)] };
    let (qm, qv) = build_q_q(&ch, &CMat::zeros(2, 2), &aux, &spec).unwrap();
    assert_eq!(qm.norm(), 0.0);
    assert_eq!(qv.norm(), 0.0);
}

/// `f2(Phi_a) - f2(Phi_b)` must equal `quad(Phi_b) - quad(Phi_a)`.
fn check_quadratic_terms(ch: &MuMisoChannels, spec: &ArchitectureSpec, rng: &mut impl Rng, trials: usize) {
    let w = cmat(rng, ch.antennas(), ch.users());
    let h0 = effective_channels(&random_symmetric_phi(rng, spec), ch).unwrap();
    let aux = update_nu_tau(&h0, &w, &ch.sigma2).unwrap();
    let (qm, qv) = build_q_q(ch, &w, &aux, spec).unwrap();
    let eval = |phi: &ScatteringMatrix| {
        let f2 = fp_objective(&effective_channels(phi, ch).unwrap(), &w, &aux, &ch.sigma2).unwrap();
        (f2, quad(&qm, &qv, &packed(phi, spec)))
    };
    let (f_ref, q_ref) = eval(&random_symmetric_phi(rng, spec));
    for _ in 0..trials {
        let (f, q) = eval(&random_symmetric_phi(rng, spec));
        let scale = f.abs().max(f_ref.abs()).max(1.0);
        assert!(((f - f_ref) + (q - q_ref)).abs() < 1e-10 * scale, "{f} {f_ref} {q} {q_ref}");
    }
    assert!((&qm - qm.adjoint()).norm() == 0.0);
    let lmin = qm.clone().symmetric_eigenvalues().min();
    assert!(lmin >= -1e-12 * qm.norm().max(1.0));
}

#[test]
fn quadratic_terms_reproduce_the_surrogate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ch = toy_channels(&mut rng, 2, 1, 1);
    check_quadratic_terms(&ch, &ArchitectureSpec::group(2, 1).unwrap(), &mut rng, 50);
    for (m, mbar, n, k) in [(4, 2, 2, 2), (6, 3, 3, 2), (4, 4, 2, 3)] {
        let ch = toy_channels(&mut rng, m, n, k);
        check_quadratic_terms(&ch, &ArchitectureSpec::group(m, mbar).unwrap(), &mut rng, 20);
    }
}

#[test]
fn zero_curvature_scattering_update_is_the_single_user_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for topology in [Topology::Group, Topology::ForestTridiagonal, Topology::ForestArrowhead] {
        let spec = ArchitectureSpec::new(6, 3, topology).unwrap();
        let maps = MappingMatrices::new(&spec);
        let gm = MappingMatrices::new(&spec.as_group());
        let (z, _) = random_feasible_phi(&mut rng, &spec, &hw(1.0));
        let mut a = AdmmState::from_components(z, &spec, &maps).unwrap();
        a.lambda1 = cvec(&mut rng, a.lambda1.len()).iter().cloned().collect();
        let mut b = a.clone();
        let dim = spec.groups() * gm.u;
        let qv = cvec(&mut rng, dim);
        phibar_update_quadratic(&mut a, &CMat::zeros(dim, dim), &qv, &maps, &gm, 2.0).unwrap();
        let fbar: Vec<Complex64> = qv.iter().map(|x| x * 2.0).collect();
        phibar_update(&mut b, &fbar, &maps, &gm, 2.0).unwrap();
        let diff: f64 = a.phibar.iter().zip(&b.phibar).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let nrm: f64 = b.phibar.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-10 * nrm);
    }
}

#[test]
fn quadratic_scattering_update_is_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let spec = ArchitectureSpec::group(4, 2).unwrap();
    let maps = MappingMatrices::new(&spec);
    let gm = MappingMatrices::new(&spec.as_group());
    let ch = toy_channels(&mut rng, 4, 2, 2);
    let w = cmat(&mut rng, 2, 2);
    let h = effective_channels(&random_symmetric_phi(&mut rng, &spec), &ch).unwrap();
    let aux = update_nu_tau(&h, &w, &ch.sigma2).unwrap();
    let (qm, qv) = build_q_q(&ch, &w, &aux, &spec).unwrap();
    let (z, _) = random_feasible_phi(&mut rng, &spec, &hw(2.0));
    let mut st = AdmmState::from_components(z, &spec, &maps).unwrap();
    st.lambda1 = cvec(&mut rng, st.lambda1.len()).iter().cloned().collect();
    let rho1 = 1.5;
    phibar_update_quadratic(&mut st, &qm, &qv, &maps, &gm, rho1).unwrap();

    // Gradient of the augmented Lagrangian with dense C maps.
    let x = CVec::from_column_slice(&st.phibar);
    let mut grad = (&qm * &x - &qv) * c(2.0, 0.0);
    let n = spec.mbar;
    for g in 0..spec.groups() {
        let (cm, cv) = build_c_map(&st.ybar[g * maps.u..(g + 1) * maps.u], &maps, &gm, 1.0).unwrap();
        let lam = CVec::from_column_slice(&st.lambda1[g * n * n..(g + 1) * n * n]);
        let xg = x.rows(g * gm.u, gm.u);
        let r = cm.adjoint() * (&cm * xg - cv + lam) * c(rho1, 0.0);
        let mut seg = grad.rows_mut(g * gm.u, gm.u);
        seg += r;
    }
    assert!(grad.norm() < 1e-9 * (1.0 + qv.norm()), "{}", grad.norm());
}

#[test]
fn scalar_subproblem_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let spec = ArchitectureSpec::group(1, 1).unwrap();
    let maps = MappingMatrices::new(&spec);
    let hwr = hw(1.0);
    let FeasibleSet::Arc(arc) = hwr.normalized_set() else { unreachable!() };
    let (lo, hi) = arc.offset_range();
    let cfg = MmAdmmConfig { inner_tol: 1e-10, max_inner: 20000, ..BcdConfig::default().phi_admm };
    for _ in 0..10 {
        let ch = toy_channels(&mut rng, 1, 1, 1);
        let w = cmat(&mut rng, 1, 1);
        let h = effective_channels(&random_symmetric_phi(&mut rng, &spec), &ch).unwrap();
        let aux = update_nu_tau(&h, &w, &ch.sigma2).unwrap();
        let (qm, qv) = build_q_q(&ch, &w, &aux, &spec).unwrap();
        let obj = |z: Complex64| {
            let phi = scattering_of_components(&[z], &spec, &maps).unwrap();
            quad(&qm, &qv, &packed(&phi, &spec))
        };
        let n = 4000;
        let vals: Vec<f64> = (0..=n).map(|i| obj(arc.point_at_offset(lo + (hi - lo) * i as f64 / n as f64))).collect();
        let (ib, best) = vals.iter().cloned().enumerate().fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a });
        let step = [ib.saturating_sub(1), (ib + 1).min(n)].iter().map(|&j| (vals[j] - best).abs()).fold(0.0, f64::max);

        // The arc ends can be local minima, so start from both ends as well.
        let found = [arc.midpoint(), arc.point_at_offset(lo), arc.point_at_offset(hi)]
            .into_iter()
            .map(|z0| {
                let mut st = AdmmState::from_components(vec![z0], &spec, &maps).unwrap();
                update_phi_admm(&qm, &qv, &spec, &hwr, &cfg, &mut st).unwrap();
                assert!(arc.contains(st.z[0], 1e-9, 1e-9));
                obj(st.z[0])
            })
            .fold(f64::INFINITY, f64::min);
        assert!(found <= best + step + 1e-12, "{found} {best} {step}");
    }
}

#[test]
fn single_user_direction_agrees_with_single_user_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let spec = ArchitectureSpec::group(4, 2).unwrap();
    let gm = MappingMatrices::new(&spec.as_group());
    for _ in 0..10 {
        let ch = toy_channels(&mut rng, 4, 1, 1);
        let (_, phi) = random_feasible_phi(&mut rng, &spec, &hw(1.0));
        let h = effective_channels(&phi, &ch).unwrap();
        let w = CMat::from_element(1, 1, c(0.6, -0.8));
        let aux = update_nu_tau(&h, &w, &ch.sigma2).unwrap();
        let (qm, qv) = build_q_q(&ch, &w, &aux, &spec).unwrap();
        let ascent = &qv - &qm * packed(&phi, &spec);

        let siso = SisoChannels {
            h_rt: ch.h_rt[0][0].conj(),
            h_ri: ch.h_ri[0].clone(),
            h_it: ch.h_it.column(0).into_owned(),
        };
        let hs = crate::siso::effective_channel(&siso, &phi).unwrap();
        let mut fbar = Vec::new();
        for g in 0..spec.groups() {
            let blk = siso.h_ri.rows(2 * g, 2) * siso.h_it.rows(2 * g, 2).adjoint() * hs;
            fbar.extend(gm.pack_adjoint(&blk));
        }
        let fbar = CVec::from_vec(fbar);
        let inner = fbar.dotc(&ascent);
        assert!(inner.re > 0.0);
        assert!((inner.norm() / (fbar.norm() * ascent.norm()) - 1.0).abs() < 1e-9);
        assert!(inner.im.abs() < 1e-9 * inner.norm());
    }
}

#[test]
fn fixed_scattering_single_antenna_allocates_full_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let ch = toy_channels(&mut rng, 2, 1, 1);
    let spec = ArchitectureSpec::group(2, 1).unwrap();
    let (_, phi) = random_feasible_phi(&mut rng, &spec, &hw(1.0));
    let h = effective_channels(&phi, &ch).unwrap();
    let p = 2.5;
    let (pre, rate) = optimize_precoder(&ch, &phi, p, &BcdConfig::default()).unwrap();
    let want = (1.0 + p * h[0].norm_squared() / ch.sigma2[0]).log2();
    assert!((rate - want).abs() < 1e-9 * want);
    assert!((pre.power() - p).abs() <= 1e-8 * p);
}

fn default_instance(seed: u64, m: usize) -> MuMisoChannels {
    generate_mumiso(&ChannelConfig::default(), m, 2, 2, seed).unwrap()
}

#[test]
fn bcd_is_monotone_feasible_and_beats_random_scattering() {
    let hwr = hw(1.0);
    let spec = ArchitectureSpec::group(4, 2).unwrap();
    let cfg = BcdConfig::default();
    let p = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for seed in 0..20 {
        let ch = default_instance(seed, 4);
        let sol = bcd_solve(&ch, &spec, &hwr, &cfg, p).unwrap();
        let rates = sol.trace.sum_rates();
        assert!(rates.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{rates:?}");
        assert!(sol.precoder.power() <= p * (1.0 + 1e-9));
        let (radial, angular) = feasibility_residual(&sol.phi, &spec, &hwr).unwrap();
        assert!(radial < 1e-6 && angular < 1e-9);
        let rate = sum_rate_bits(&ch, &sol.phi, &sol.precoder.w).unwrap();
        assert!((rate - sol.trace.final_rate()).abs() < 1e-12);
        assert!((direct_sum_rate(&ch, sol.phi.entries(), &sol.precoder.w) - rate).abs() < 1e-9 * rate);

        let (_, phi) = random_feasible_phi(&mut rng, &spec, &hwr);
        let (_, baseline) = optimize_precoder(&ch, &phi, p, &cfg).unwrap();
        assert!(rate >= baseline - 1e-6, "seed {seed}: {rate} < {baseline}");
    }
}

#[test]
fn bcd_components_reproduce_the_scattering_matrix() {
    let hwr = hw(2.0);
    let spec = ArchitectureSpec::new(4, 4, Topology::ForestTridiagonal).unwrap();
    let ch = default_instance(3, 4);
    let sol = bcd_solve(&ch, &spec, &hwr, &BcdConfig::default(), 0.1).unwrap();
    let z: Vec<Complex64> = sol.components.iter().map(|y| y / hwr.y0.value()).collect();
    let phi = scattering_of_components(&z, &spec, &MappingMatrices::new(&spec)).unwrap();
    assert!((phi.entries() - sol.phi.entries()).norm() < 1e-12);

    let again = bcd_solve_from(&ch, &spec, &hwr, &BcdConfig::default(), 0.1, &sol.components).unwrap();
    assert!(again.trace.final_rate() >= sol.trace.final_rate() - 1e-9);
}

#[test]
fn single_user_bcd_is_close_to_single_user_solver() {
    // With one user and one antenna the sum rate is monotone in the received
    // power, so both solvers chase the same scattering matrix.
    let hwr = hw(1.0);
    let spec = ArchitectureSpec::group(4, 2).unwrap();
    for seed in 0..5 {
        let mu = generate_mumiso(&ChannelConfig::default(), 4, 1, 1, seed).unwrap();
        let siso = SisoChannels { h_rt: mu.h_rt[0][0].conj(), h_ri: mu.h_ri[0].clone(), h_it: mu.h_it.column(0).into_owned() };
        let sol = bcd_solve(&mu, &spec, &hwr, &BcdConfig::default(), 0.1).unwrap();
        let (phi, _) = mm_admm_solve(&siso, &spec, &hwr, &MmAdmmConfig::default(), &Init::ArcMidpoint).unwrap();
        let p_bcd = received_power_and_rate(&siso, &sol.phi, 1.0, 1.0).unwrap().0;
        let p_mm = received_power_and_rate(&siso, &phi, 1.0, 1.0).unwrap().0;
        assert!(p_bcd >= 0.95 * p_mm, "{p_bcd} {p_mm}");
    }
}

#[test]
fn trace_csv_has_header_and_one_row_per_iteration() {
    let ch = default_instance(1, 4);
    let sol = bcd_solve(&ch, &ArchitectureSpec::group(4, 1).unwrap(), &hw(1.0), &BcdConfig::default(), 0.1).unwrap();
    let mut buf = Vec::new();
    sol.trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bcd_iter,sum_rate_bits,power_used_watts,phi_admm_iters"));
    assert_eq!(lines.count(), sol.trace.iterations() + 1);
}

#[test]
fn invalid_inputs_are_rejected() {
    let ch = default_instance(1, 4);
    let spec = ArchitectureSpec::group(4, 2).unwrap();
    let cfg = BcdConfig { bcd_tol: 0.0, ..BcdConfig::default() };
    assert!(bcd_solve(&ch, &spec, &hw(1.0), &cfg, 0.1).is_err());
    assert!(bcd_solve(&ch, &spec, &hw(1.0), &BcdConfig::default(), -1.0).is_err());
    assert!(bcd_solve(&ch, &ArchitectureSpec::group(8, 2).unwrap(), &hw(1.0), &BcdConfig::default(), 0.1).is_err());
    let phi = ScatteringMatrix::new(CMat::zeros(2, 2), 1).unwrap();
    assert!(matches!(effective_channels(&phi, &ch), Err(Error::ShapeMismatch(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn returned_precoder_respects_the_budget(seed in 0u64..10_000, p in 1e-6f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..4);
        let n = rng.random_range(1..4);
        let h: Vec<CVec> = (0..k).map(|_| cvec(&mut rng, n)).collect();
        let s2: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let aux = update_nu_tau(&h, &cmat(&mut rng, n, k), &s2).unwrap();
        let pre = update_precoder(&h, &aux, p, &BcdConfig::default()).unwrap();
        prop_assert!(pre.power() <= p * (1.0 + 1e-9));
        prop_assert!(aux.nu.iter().all(|&v| v >= 0.0));
    }
}
