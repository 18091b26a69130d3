//! Full-Hamiltonian dynamics approaches the effective description as `U/J`
//! grows. At N = 7 the band (5, 2) has `M - P = 3`, so the
//! second-order denominators are small and convergence is slow.

use std::f64::consts::PI;

use plaquette::basis::{Occupation, StateVector};
use plaquette::oracles::{imbalance_fock, imbalance_noon, AnalyticParams};
use plaquette::protocols::{
    prepare_noon_input, run_identification, HamiltonianMode, Interferometer, ProtocolConfig,
};

fn full(m: usize, p: usize, u_over_j: f64) -> Interferometer {
    Interferometer::new(&ProtocolConfig {
        m,
        p,
        u_over_j,
        mode: HamiltonianMode::Full,
        ..ProtocolConfig::default()
    })
    .unwrap()
}

fn worst_deviation(u_over_j: f64) -> f64 {
    let (m, p) = (5, 2);
    let e = full(m, p, u_over_j);
    let t_m = e.band().t_m();
    let times: Vec<f64> = (0..120).map(|k| 1.5 * t_m * k as f64 / 119.0).collect();
    let psi = StateVector::basis_state(e.basis(), Occupation::new(m, p, 0, 0)).unwrap();
    let series = e.imbalance_series(&psi, &times).unwrap();
    let a = AnalyticParams::from_band(e.band(), 0.0);
    series
        .iter()
        .map(|(t, v)| (v - imbalance_fock(&a, t) / m as f64).abs())
        .fold(0.0, f64::max)
}

#[test]
fn deviation_shrinks_with_interaction() {
    let devs: Vec<f64> = [6.0, 12.0, 24.0]
        .iter()
        .map(|&u| worst_deviation(u))
        .collect();
    assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
    assert!(devs[2] < 0.15, "{devs:?}");
}

#[test]
fn noon_inversion_under_full_dynamics() {
    // N = 25 is too slow for a regular test; N = 7 at strong coupling shows
    // the same parity-dependent inversion.
    let (m, p) = (5, 2);
    let e = full(m, p, 80.0);
    let t_m = e.band().t_m();
    for phi in [0.0, PI] {
        let psi = prepare_noon_input(e.basis(), m, p, phi).unwrap();
        let s = e.imbalance_series(&psi, &[0.0, t_m]).unwrap();
        let a = AnalyticParams::from_band(e.band(), phi);
        let expect = imbalance_noon(&a, t_m) / m as f64;
        assert!((expect.abs() - 1.0).abs() < 1e-9);
        assert!(
            (s.values()[1] - expect).abs() < 0.1,
            "phi = {phi}: {} vs {expect}",
            s.values()[1]
        );
    }
}

#[test]
fn identification_improves_with_interaction() {
    for phi in [0.0, PI] {
        let success: Vec<f64> = [20.0, 40.0, 80.0]
            .iter()
            .map(|&u| {
                let mut e = full(5, 2, u);
                e.set_phases(phi, 0.0);
                run_identification(&e)
                    .unwrap()
                    .identification
                    .unwrap()
                    .success_probability
            })
            .collect();
        assert!(success.windows(2).all(|w| w[0] < w[1]), "{success:?}");
        assert!(success[2] > 0.97, "{success:?}");
    }
}
