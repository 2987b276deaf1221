//! Free-fermion results against dense many-body diagonalization and
//! integration.

mod common;

use sqa_core::annealing::Schedule;
use sqa_core::fermion::{
    build_bdg_matrix, coherent_qa_evolve, equilibrium_eps_c, BdgState, QaOptions,
};
use sqa_core::instances::{generate_instance, Distribution, Instance};

fn level_set_from_modes(modes: &[f64], e0: f64) -> Vec<f64> {
    let n = modes.len();
    let mut levels: Vec<f64> = (0..1usize << n)
        .map(|mask| e0 + (0..n).filter(|k| mask >> k & 1 == 1).map(|k| modes[k]).sum::<f64>())
        .collect();
    levels.sort_by(f64::total_cmp);
    levels
}

#[test]
fn many_body_spectrum_matches_dense_diagonalization() {
    let cases: Vec<(Instance, f64)> = vec![
        (generate_instance(2, Distribution::Ordered(1.0), 0).unwrap(), 0.0),
        (generate_instance(5, Distribution::Uniform01, 3).unwrap(), 0.4),
        (generate_instance(6, Distribution::Uniform01, 8).unwrap(), 1.3),
    ];
    for (inst, gamma) in cases {
        let m = build_bdg_matrix(&inst, gamma).unwrap();
        let spec = m.spectrum();
        let positive: Vec<f64> = spec[inst.len()..].to_vec();
        let levels = level_set_from_modes(&positive, m.ground_energy());
        let dense = common::dense_spectrum(inst.couplings(), gamma);
        for (a, b) in levels.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10, "L={} gamma={gamma}: {a} vs {b}", inst.len());
        }
    }
}

#[test]
fn ordered_eight_site_ground_energy() {
    let inst = generate_instance(8, Distribution::Ordered(1.0), 0).unwrap();
    let e = build_bdg_matrix(&inst, 1.0).unwrap().ground_energy();
    let dense = common::dense_spectrum(inst.couplings(), 1.0)[0];
    assert!((e - dense).abs() < 1e-10, "{e} vs {dense}");
}

#[test]
fn thermal_bond_energy_matches_dense_trace() {
    let inst = generate_instance(8, Distribution::Uniform01, 21).unwrap();
    let got = equilibrium_eps_c(&inst, 0.5, 0.1).unwrap();
    let want = common::dense_eps_c(inst.couplings(), 0.5, 0.1);
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    for gamma in [0.0, 0.3, 2.0] {
        let got = equilibrium_eps_c(&inst, gamma, 0.0).unwrap();
        let want = common::dense_eps_c(inst.couplings(), gamma, 0.0);
        assert!((got - want).abs() < 1e-10, "T=0 gamma={gamma}: {got} vs {want}");
    }
}

#[test]
fn coherent_ramp_matches_dense_schrodinger() {
    let inst = generate_instance(6, Distribution::Uniform01, 4).unwrap();
    let tau = 4.0;
    let schedule = Schedule::linear(2.5, tau).unwrap();
    let recs = coherent_qa_evolve(&inst, &schedule, &QaOptions { dt: Some(1e-3), records: 40 }).unwrap();
    let dense = common::dense_schrodinger_ramp(inst.couplings(), 2.5, tau, 1e-3, 40);
    assert_eq!(recs.len(), dense.len());
    for (r, (t, e)) in recs.iter().zip(&dense) {
        assert!((r.t - t).abs() < 1e-12);
        assert!((r.eps_avg - e).abs() < 1e-6, "t={t}: {} vs {e}", r.eps_avg);
    }
}

#[test]
fn ground_state_frame_is_orthonormal() {
    let inst = generate_instance(30, Distribution::Uniform01, 2).unwrap();
    let s = BdgState::ground_state(&inst, 2.5).unwrap();
    assert!(s.orthonormality_defect() < 1e-12);
}
