//! Closed-form results for the resonant-tunneling regime.
//!
//! These are cheap evaluators in their own right and serve as the reference
//! values that the exact numerics are checked against. Phases that are
//! integer multiples of `pi/2` (everything at `t_m` for integer `N`) are
//! reduced exactly modulo 4 instead of going through `sin`/`cos`.

use std::sync::Arc;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::basis::{FockBasis, Occupation, Site, StateVector};
use crate::error::{Error, Result};
use crate::info::DensityMatrix;
use crate::operators::BandParams;

/// Band labels, tunneling frequency and NOON phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticParams {
    pub m: usize,
    pub p: usize,
    pub omega: f64,
    pub phi: f64,
}

impl AnalyticParams {
    pub fn from_band(bp: &BandParams, phi: f64) -> Self {
        Self {
            m: bp.m(),
            p: bp.p(),
            omega: bp.omega(),
            phi,
        }
    }
}

/// `<N1 - N3>(t)` for the initial Fock state `|M, P, 0, 0>`:
/// `M cos((M+1) Omega t) cos^P(Omega t)`.
pub fn imbalance_fock(p: &AnalyticParams, t: f64) -> f64 {
    let wt = p.omega * t;
    let m = p.m as f64;
    m * ((m + 1.0) * wt).cos() * wt.cos().powi(p.p as i32)
}

/// `<N1 - N3>(t)` for `(|M,P,0,0> + e^{i phi} |M,0,0,P>)/sqrt(2)`.
pub fn imbalance_noon(p: &AnalyticParams, t: f64) -> f64 {
    let wt = p.omega * t;
    let m = p.m as f64;
    let fast = (m + 1.0) * wt;
    let interference = m
        * p.phi.cos()
        * (fast + std::f64::consts::PI * p.p as f64 / 2.0).cos()
        * wt.sin().powi(p.p as i32);
    imbalance_fock(p, t) + interference
}

/// Exact `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn binomial_f64(n: usize, k: usize) -> f64 {
    binomial(n, k).to_f64().expect("binomial fits in f64 range")
}

/// Bernstein basis polynomial `b_{M,r}(x) = C(M,r) x^r (1-x)^{M-r}`.
pub fn bernstein(m: usize, r: usize, x: f64) -> Result<f64> {
    if r > m {
        return Err(Error::InvalidArgument(format!(
            "Bernstein index r = {r} exceeds M = {m}"
        )));
    }
    Ok(binomial_f64(m, r) * x.powi(r as i32) * (1.0 - x).powi((m - r) as i32))
}

/// `sin^2(k pi / 4)` for integer `k`, exactly.
fn sin_sq_quarter_turns(k: usize) -> f64 {
    match k % 4 {
        0 => 0.0,
        2 => 1.0,
        _ => 0.5,
    }
}

/// `(-i)^k`, i.e. `exp(-i k pi / 2)`.
fn minus_i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `(-1)^k`.
pub fn parity_sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn require_n_ge_m(m: usize, n: usize) -> Result<()> {
    if n < m {
        return Err(Error::InvalidArgument(format!(
            "need N >= M, got N = {n}, M = {m}"
        )));
    }
    Ok(())
}

/// Site-3 outcome probabilities at `t_m`, `r = 0..=M`:
/// `P(r) = b_{M,r}(sin^2((N-1) pi/4))/2 + b_{M,r}(sin^2((N+1) pi/4))/2`.
pub fn measurement_distribution(m: usize, n: usize) -> Result<Vec<f64>> {
    require_n_ge_m(m, n)?;
    let x_minus = sin_sq_quarter_turns(n + 3); // (N - 1) mod 4 without underflow
    let x_plus = sin_sq_quarter_turns(n + 1);
    (0..=m)
        .map(|r| Ok(0.5 * bernstein(m, r, x_minus)? + 0.5 * bernstein(m, r, x_plus)?))
        .collect()
}

/// Linear entropy of site 3 at `t_m`: `1/2` for odd `N`,
/// `1 - C(2M, M) / 2^{2M}` for even `N`.
pub fn linear_entropy_site3(m: usize, n: usize) -> Result<f64> {
    require_n_ge_m(m, n)?;
    if n % 2 == 1 {
        return Ok(0.5);
    }
    // Single rounding of the exact integer, then an exact power-of-two scale.
    let central = binomial(2 * m, m).to_f64().expect("finite");
    Ok(1.0 - central * 2f64.powi(-2 * m as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCurve {
    pub varphi: Vec<f64>,
    pub imbalance: Vec<f64>,
    pub spread: Vec<f64>,
    /// `None` at grid points where `|d<N1 - N3>/d varphi|` falls below
    /// [`SINGULAR_SLOPE`].
    pub delta_phi: Vec<Option<f64>>,
    /// `1/P`.
    pub heisenberg_limit: f64,
    /// `1/sqrt(P)`.
    pub shot_noise_limit: f64,
}

/// Slope below which the error-propagation quotient is not evaluated.
pub const SINGULAR_SLOPE: f64 = 1e-8;

/// Imbalance `(-1)^{(N+1)/2} M cos(P varphi)` at `t_m` for the phase-encoded
/// NOON input, with `Delta varphi = M |sin(P varphi)| / |d<N1 - N3>/d varphi|`.
pub fn phase_estimation_curve(
    params: &AnalyticParams,
    n: usize,
    grid: &[f64],
) -> Result<PhaseCurve> {
    if n % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "phase estimation needs odd N, got {n}"
        )));
    }
    if params.p == 0 {
        return Err(Error::InvalidArgument(
            "phase estimation needs P >= 1".into(),
        ));
    }
    let sign = parity_sign((n + 1) / 2);
    let m = params.m as f64;
    let pf = params.p as f64;
    let mut curve = PhaseCurve {
        varphi: grid.to_vec(),
        imbalance: Vec::with_capacity(grid.len()),
        spread: Vec::with_capacity(grid.len()),
        delta_phi: Vec::with_capacity(grid.len()),
        heisenberg_limit: 1.0 / pf,
        shot_noise_limit: 1.0 / pf.sqrt(),
    };
    for &v in grid {
        curve.imbalance.push(sign * m * (pf * v).cos());
        let spread = m * (pf * v).sin().abs();
        curve.spread.push(spread);
        let slope = (sign * m * pf * (pf * v).sin()).abs();
        curve
            .delta_phi
            .push((slope >= SINGULAR_SLOPE).then(|| spread / slope));
    }
    Ok(curve)
}

/// Two-mode state `|chi(r)>` on sites (1, 3) with total `M`, from the
/// expansion of `(a1^+ + a3^+)^{M-r} (a1^+ - a3^+)^r |0>`. Entry `j` is the
/// amplitude of `|M-j, j>`.
pub fn chi_state(m: usize, r: usize) -> Vec<f64> {
    // Polynomial coefficients in x = a1^+, y = a3^+, indexed by the power of y.
    let mut poly: Vec<i128> = vec![1];
    let factors = std::iter::repeat(1i128)
        .take(m - r)
        .chain(std::iter::repeat(-1i128).take(r));
    for sign in factors {
        let mut next = vec![0i128; poly.len() + 1];
        for (j, c) in poly.iter().enumerate() {
            next[j] += c;
            next[j + 1] += sign * c;
        }
        poly = next;
    }
    let factorial = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    let prefactor = 1.0 / (2f64.powi(m as i32) * factorial(m - r) * factorial(r)).sqrt();
    let mut amps: Vec<f64> = poly
        .iter()
        .enumerate()
        .map(|(j, &c)| prefactor * c as f64 * (factorial(m - j) * factorial(j)).sqrt())
        .collect();
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    amps
}

/// `rho_{1,3}(t_m) = (|Psi+><Psi+| + |Psi-><Psi-|)/2` with
/// `|Psi+-> = 2^{-M/2} sum_r sqrt(C(M,r)) exp(-i (N+-1) r pi/2) |chi(r)>`.
pub fn reduced_rho13_analytic(m: usize, n: usize) -> Result<DensityMatrix> {
    require_n_ge_m(m, n)?;
    let chis: Vec<Vec<f64>> = (0..=m).map(|r| chi_state(m, r)).collect();
    let psi = |shift: usize| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); m + 1];
        for (r, chi) in chis.iter().enumerate() {
            let w = (binomial_f64(m, r) / 2f64.powi(m as i32)).sqrt();
            let phase = minus_i_pow(shift * r);
            for (j, c) in chi.iter().enumerate() {
                v[j] += w * phase * c;
            }
        }
        v
    };
    // exp(-i (N-1) r pi/2) = (-i)^{(N+3) r} keeps the exponent non-negative.
    let plus = psi(n + 1);
    let minus = psi(n + 3);
    let labels = (0..=m).map(|j| vec![m - j, j]).collect();
    DensityMatrix::mixture(
        vec![Site::ONE, Site::THREE],
        labels,
        &[(0.5, plus), (0.5, minus)],
    )
}

/// The pre-measurement state at `t_m` for the input `|M, P, 0, 0>` and odd `N`:
/// `[(-1)^{(N+1)/2} |M,P,0,0> + |M,0,0,P> + |0,P,M,0> + (-1)^{(N-1)/2} |0,0,M,P>] / 2`.
pub fn production_state(basis: &Arc<FockBasis>, m: usize, p: usize) -> Result<StateVector> {
    let n = basis.total();
    if m + p != n || n % 2 == 0 || p == 0 {
        return Err(Error::InvalidArgument(format!(
            "production state needs odd N = M + P with P >= 1, got M = {m}, P = {p}, N = {n}"
        )));
    }
    let terms = [
        (parity_sign((n + 1) / 2), Occupation::new(m, p, 0, 0)),
        (1.0, Occupation::new(m, 0, 0, p)),
        (1.0, Occupation::new(0, p, m, 0)),
        (parity_sign((n - 1) / 2), Occupation::new(0, 0, m, p)),
    ];
    let states = terms
        .iter()
        .map(|(_, o)| StateVector::basis_state(basis, *o))
        .collect::<Result<Vec<_>>>()?;
    let combo: Vec<(Complex64, &StateVector)> = terms
        .iter()
        .zip(&states)
        .map(|((c, _), s)| (Complex64::new(0.5 * c, 0.0), s))
        .collect();
    StateVector::linear_combination(&combo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::info::linear_entropy;
    use std::f64::consts::PI;

    fn params(m: usize, p: usize, phi: f64) -> AnalyticParams {
        AnalyticParams {
            m,
            p,
            omega: 1.0 / 768.0,
            phi,
        }
    }

    #[test]
    fn imbalance_at_origin() {
        assert_eq!(imbalance_fock(&params(15, 10, 0.0), 0.0), 15.0);
        assert_eq!(imbalance_noon(&params(15, 10, 0.7), 0.0), 15.0);
    }

    #[test]
    fn pure_harmonic_without_p() {
        let a = params(15, 0, 0.0);
        for t in [1.0, 50.0, 333.3] {
            let expect = 15.0 * (16.0 * a.omega * t).cos();
            assert!((imbalance_fock(&a, t) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn inversion_at_measurement_time() {
        // N = 25: (-1)^13 = -1.
        let tm = 384.0 * PI;
        assert!((imbalance_noon(&params(15, 10, 0.0), tm) + 15.0).abs() < 1e-9);
        assert!((imbalance_noon(&params(15, 10, PI), tm) - 15.0).abs() < 1e-9);
        // N = 7: (-1)^4 = +1.
        let a = AnalyticParams {
            m: 5,
            p: 2,
            omega: 0.01,
            phi: 0.0,
        };
        assert!((imbalance_noon(&a, PI / 0.02) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn bernstein_edges_and_partition() {
        for r in 0..=6 {
            assert_eq!(
                bernstein(6, r, 0.0).unwrap(),
                if r == 0 { 1.0 } else { 0.0 }
            );
            assert_eq!(
                bernstein(6, r, 1.0).unwrap(),
                if r == 6 { 1.0 } else { 0.0 }
            );
        }
        let s: f64 = (0..=15).map(|r| bernstein(15, r, 0.3).unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(bernstein(3, 4, 0.5).is_err());
    }

    #[test]
    fn distribution_parity_cases() {
        let odd = measurement_distribution(15, 25).unwrap();
        assert_eq!(odd[0], 0.5);
        assert_eq!(odd[15], 0.5);
        assert!(odd[1..15].iter().all(|&p| p == 0.0));
        let even = measurement_distribution(4, 6).unwrap();
        let expect = [1.0, 4.0, 6.0, 4.0, 1.0].map(|x| x / 16.0);
        for (a, b) in even.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(measurement_distribution(5, 3).is_err());
    }

    #[test]
    fn distributions_are_probability_vectors() {
        for m in 0..=20 {
            for n in m..=40 {
                let d = measurement_distribution(m, n).unwrap();
                assert!(d.iter().all(|&p| p >= 0.0));
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let support = d.iter().filter(|&&p| p > 0.0).count();
                if m >= 1 {
                    let expect = if n % 2 == 1 { 2 } else { m + 1 };
                    assert_eq!(support, expect, "M = {m} N = {n}");
                }
            }
        }
    }

    #[test]
    fn site3_entropy_values() {
        assert_eq!(linear_entropy_site3(15, 25).unwrap(), 0.5);
        assert_eq!(linear_entropy_site3(1, 2).unwrap(), 0.5);
        // C(8,4)/2^8 = 70/256
        assert_eq!(linear_entropy_site3(4, 6).unwrap(), 1.0 - 70.0 / 256.0);
        // C(30,15) = 155117520
        let e = linear_entropy_site3(15, 20).unwrap();
        assert!((e - (1.0 - 155_117_520.0 / 1_073_741_824.0)).abs() < 1e-15);
        assert!((e - 0.8555).abs() < 5e-5);
    }

    #[test]
    fn exact_binomials() {
        assert_eq!(binomial(30, 15), BigUint::from(155_117_520u64));
        assert_eq!(binomial(60, 30), BigUint::from(118_264_581_564_861_424u64));
        assert_eq!(binomial(3, 5), BigUint::from(0u32));
    }

    #[test]
    fn phase_curve_heisenberg() {
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 * PI / 500.0).collect();
        let c = phase_estimation_curve(&params(15, 10, 0.0), 25, &grid).unwrap();
        assert_eq!(c.imbalance[0], -15.0);
        assert!(c.delta_phi[0].is_none());
        for d in c.delta_phi.iter().flatten() {
            assert!((d - 0.1).abs() < 1e-12);
        }
        assert!((c.shot_noise_limit - 1.0 / 10f64.sqrt()).abs() < 1e-15);
        assert!(phase_estimation_curve(&params(15, 10, 0.0), 24, &grid).is_err());
    }

    #[test]
    fn chi_states_are_orthonormal() {
        let m = 6;
        let chis: Vec<Vec<f64>> = (0..=m).map(|r| chi_state(m, r)).collect();
        for a in 0..=m {
            for b in 0..=m {
                let dot: f64 = chis[a].iter().zip(&chis[b]).map(|(x, y)| x * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_rho13_properties() {
        for (m, n) in [(5, 7), (4, 6), (15, 25), (6, 10)] {
            let rho = reduced_rho13_analytic(m, n).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!((linear_entropy(&rho).unwrap() - 0.5).abs() < 1e-12);
            let diag = rho.diagonal();
            let dist = measurement_distribution(m, n).unwrap();
            for (a, b) in diag.iter().zip(&dist) {
                assert!((a - b).abs() < 1e-12, "M = {m} N = {n}");
            }
        }
    }

    #[test]
    fn production_state_shape() {
        let b = enumerate_basis(7);
        let s = production_state(&b, 5, 2).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.amplitude(&Occupation::new(5, 2, 0, 0)).unwrap().re, 0.5);
        assert_eq!(s.amplitude(&Occupation::new(0, 0, 5, 2)).unwrap().re, -0.5);
        assert!(production_state(&enumerate_basis(8), 6, 2).is_err());
    }
}
