use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{FockBasis, Occupation, Site, StateVector};
use crate::error::{Error, Result};

/// Outcomes with probability at or below this cannot be collapsed onto.
pub const COLLAPSE_THRESHOLD: f64 = 1e-14;
pub const DISTRIBUTION_TOL: f64 = 1e-12;

/// Exact number statistics at one site, indexed by outcome `r = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementDistribution {
    site: Site,
    probs: Vec<f64>,
}

impl MeasurementDistribution {
    pub fn new(site: Site, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "negative or NaN entry {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::InvalidDistribution(format!("sums to {total}")));
        }
        Ok(Self { site, probs })
    }

    pub fn site(&self) -> Site {
        self.site
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, r: usize) -> f64 {
        self.probs.get(r).copied().unwrap_or(0.0)
    }

    /// Number of outcomes with probability above `tol`.
    pub fn support_size(&self, tol: f64) -> usize {
        self.probs.iter().filter(|p| **p > tol).count()
    }
}

/// `P(r) = sum |c|^2` over basis states with `n_site = r`.
pub fn measure_distribution(psi: &StateVector, site: Site) -> Result<MeasurementDistribution> {
    let mut probs = vec![0.0; psi.basis().total() + 1];
    for (occ, amp) in psi.basis().states().iter().zip(psi.amplitudes()) {
        probs[occ.at(site)] += amp.norm_sqr();
    }
    MeasurementDistribution::new(site, probs)
}

#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub site: Site,
    pub outcome: usize,
    pub probability: f64,
    pub post_state: StateVector,
}

/// Projects onto `n_site = r` and renormalizes by `1/sqrt(P(r))`.
pub fn collapse(psi: &StateVector, site: Site, r: usize) -> Result<MeasurementRecord> {
    let mut probability = 0.0;
    let amps: Vec<Complex64> = psi
        .basis()
        .states()
        .iter()
        .zip(psi.amplitudes())
        .map(|(occ, amp)| {
            if occ.at(site) == r {
                probability += amp.norm_sqr();
                *amp
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    if probability <= COLLAPSE_THRESHOLD {
        return Err(Error::ZeroProbabilityOutcome {
            site: site.number(),
            outcome: r,
            probability,
        });
    }
    let post_state = StateVector::normalized(psi.basis(), amps)?;
    Ok(MeasurementRecord {
        site,
        outcome: r,
        probability,
        post_state,
    })
}

/// Inverse-CDF draw from a uniform variate in `[0, 1)`.
fn invert_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (r, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return r;
        }
    }
    // Rounding left the CDF just short of 1.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// One outcome from a ChaCha8 generator seeded with `seed`.
pub fn sample_outcome(dist: &MeasurementDistribution, seed: u64) -> usize {
    sample_outcomes(dist, seed, 1)[0]
}

/// `count` independent outcomes from one seeded stream.
pub fn sample_outcomes(dist: &MeasurementDistribution, seed: u64, count: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| invert_cdf(&dist.probs, rng.gen::<f64>()))
        .collect()
}

/// `|Phi(r, phi)> = (|M-r, P, r, 0> + e^{i phi} |M-r, 0, r, P>) / sqrt(2)`: site 1
/// and 3 hold `M - r` and `r`, and sites 2, 4 hold a `P`-particle NOON state.
pub fn noon_reference(
    basis: &std::sync::Arc<FockBasis>,
    m: usize,
    p: usize,
    r: usize,
    phi: f64,
) -> Result<StateVector> {
    if p == 0 || r > m || m + p != basis.total() {
        return Err(Error::InvalidArgument(format!(
            "no NOON reference for M = {m}, P = {p}, r = {r} at N = {}",
            basis.total()
        )));
    }
    let a = StateVector::basis_state(basis, Occupation::new(m - r, p, r, 0))?;
    let b = StateVector::basis_state(basis, Occupation::new(m - r, 0, r, p))?;
    StateVector::linear_combination(&[
        (Complex64::new(FRAC_1_SQRT_2, 0.0), &a),
        (Complex64::from_polar(FRAC_1_SQRT_2, phi), &b),
    ])
}

/// `F(r, phi) = |<Phi(r, phi)|Theta(r)>|` for a site-3 measurement record.
pub fn outcome_fidelity(record: &MeasurementRecord, m: usize, p: usize, phi: f64) -> Result<f64> {
    Ok(outcome_overlap(record, m, p, phi)?.norm())
}

/// The raw overlap `<Phi(r, phi)|Theta(r)>` behind [`outcome_fidelity`].
pub fn outcome_overlap(
    record: &MeasurementRecord,
    m: usize,
    p: usize,
    phi: f64,
) -> Result<Complex64> {
    if record.site != Site::THREE {
        return Err(Error::InvalidArgument(format!(
            "outcome fidelity is defined for site-3 records, got site {}",
            record.site
        )));
    }
    let reference = noon_reference(record.post_state.basis(), m, p, record.outcome, phi)?;
    reference.inner(&record.post_state)
}
