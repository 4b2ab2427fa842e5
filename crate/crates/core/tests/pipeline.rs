//! End-to-end runs through the public API: channels, solvers, component
//! recovery and the experiment harness.

use bdris::architecture::{ArchitectureSpec, MappingMatrices, Topology};
use bdris::channel::{dbm_to_watts, generate_mumiso, generate_siso, ChannelConfig};
use bdris::circuit::{admittance_of_capacitance, CircuitParams};
use bdris::hardware::{component_report, feasibility_residual, scattering_of_components, Hardware};
use bdris::harness::{aggregate, run_experiment, Algorithm, ExperimentConfig};
use bdris::mumiso::{bcd_solve, sum_rate_bits, BcdConfig};
use bdris::network::CharacteristicAdmittance;
use bdris::siso::{
    low_complexity_solve, mm_admm_solve, received_power_and_rate, siso_upper_bound, Init, LowComplexityConfig,
    MmAdmmConfig,
};

fn hardware(r: f64) -> (CircuitParams, Hardware) {
    let p = CircuitParams::default().with_r(r);
    (p, Hardware::from_circuit(&p, CharacteristicAdmittance::default()).unwrap())
}

#[test]
fn solved_surfaces_are_realizable_by_varactor_settings() {
    let ch = generate_siso(&ChannelConfig::default(), 8, 21).unwrap();
    let (circuit, hw) = hardware(2.0);
    let y0 = hw.y0.value();
    for topo in [Topology::Group, Topology::ForestTridiagonal, Topology::ForestArrowhead] {
        let spec = ArchitectureSpec::new(8, 4, topo).unwrap();
        let (phi, _) = mm_admm_solve(&ch, &spec, &hw, &MmAdmmConfig::default(), &Init::default()).unwrap();
        let (radial, angular) = feasibility_residual(&phi, &spec, &hw).unwrap();
        assert!(radial < 1e-9 && angular < 1e-9, "{topo:?}: {radial} {angular}");

        // Rebuild the surface from the recovered capacitances alone.
        let report = component_report(&phi, &spec, &hw).unwrap();
        let rebuilt: Vec<_> = report
            .iter()
            .map(|c| {
                let cap = c.capacitance.unwrap();
                assert!(cap >= circuit.c_min && cap <= circuit.c_max);
                admittance_of_capacitance(&circuit, cap).unwrap() / y0
            })
            .collect();
        let again = scattering_of_components(&rebuilt, &spec, &MappingMatrices::new(&spec)).unwrap();
        let err = (again.entries() - phi.entries()).norm() / phi.entries().norm();
        assert!(err < 1e-7, "{topo:?}: {err}");
    }
}

#[test]
fn refinement_never_loses_power_and_respects_the_bound() {
    let cfg = ChannelConfig::default();
    let (_, hw) = hardware(1.0);
    for seed in 0..5 {
        let ch = generate_siso(&cfg, 8, seed).unwrap();
        for mbar in [1, 2, 8] {
            let spec = ArchitectureSpec::group(8, mbar).unwrap();
            let ub = siso_upper_bound(&ch, &spec);
            let (lc, _) =
                low_complexity_solve(&ch, &spec, &hw, &LowComplexityConfig::default(), &Init::ArcMidpoint).unwrap();
            let p_lc = received_power_and_rate(&ch, &lc, 1.0, 1.0).unwrap().0;
            let (mm, _) = mm_admm_solve(&ch, &spec, &hw, &MmAdmmConfig::default(), &Init::LowComplexity).unwrap();
            let p_mm = received_power_and_rate(&ch, &mm, 1.0, 1.0).unwrap().0;
            assert!(p_mm >= p_lc * (1.0 - 1e-12), "seed {seed} mbar {mbar}");
            assert!(p_mm <= ub * (1.0 + 1e-9));
        }
    }
}

#[test]
fn multi_user_solution_is_consistent() {
    let ch = generate_mumiso(&ChannelConfig::default(), 4, 2, 2, 5).unwrap();
    let (_, hw) = hardware(1.0);
    let spec = ArchitectureSpec::group(4, 2).unwrap();
    let p = dbm_to_watts(20.0);
    let sol = bcd_solve(&ch, &spec, &hw, &BcdConfig::default(), p).unwrap();
    assert!(sol.precoder.power() <= p * (1.0 + 1e-12));
    let rate = sum_rate_bits(&ch, &sol.phi, &sol.precoder.w).unwrap();
    assert!((rate - sol.trace.final_rate()).abs() < 1e-9);
    let (radial, angular) = feasibility_residual(&sol.phi, &spec, &hw).unwrap();
    assert!(radial < 1e-9 && angular < 1e-9);
}

#[test]
fn harness_sweep_matches_direct_solves() {
    let cfg = ExperimentConfig {
        m: 4,
        mbar: vec![1, 4],
        r_ohm: vec![1.0],
        algorithms: vec![Algorithm::MmAdmm, Algorithm::LowComplexity],
        n_realizations: 3,
        base_seed: 11,
        ..ExperimentConfig::default()
    };
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.rows.len(), 4);
    assert_eq!(aggregate(&cfg, &res.realizations).unwrap().len(), 4);

    let (_, hw) = hardware(1.0);
    let sigma2 = cfg.channel.noise_watts();
    let p = dbm_to_watts(cfg.p_dbm[0]);
    for row in res.rows.iter().filter(|r| r.point.algorithm == Algorithm::MmAdmm) {
        let spec = ArchitectureSpec::group(4, row.point.mbar).unwrap();
        let rates: Vec<f64> = (0..3)
            .map(|i| {
                let ch = generate_siso(&cfg.channel, 4, 11 + i).unwrap();
                let (phi, _) = mm_admm_solve(&ch, &spec, &hw, &cfg.mm_admm, &cfg.mm_admm_init).unwrap();
                received_power_and_rate(&ch, &phi, p, sigma2).unwrap().1
            })
            .collect();
        let mean = rates.iter().sum::<f64>() / 3.0;
        assert!((row.mean_rate - mean).abs() < 1e-12);
    }
}
