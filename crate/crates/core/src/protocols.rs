//! Interferometric protocols on the plaquette: NOON-state identification,
//! NOON-state production by a number measurement, and phase estimation, plus
//! the product-form check behind non-destructive identification.
//!
//! Every protocol evolves to `t_m = pi / (2 Omega)` under one of three
//! Hamiltonians. The effective forms conserve `N1 + N3` and `N2 + N4`, so
//! their dynamics runs inside the `(M, P)` band and is embedded back into the
//! Fock basis for measurement.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_basis, FockBasis, Occupation, Site, StateVector};
use crate::dynamics::{check_increasing, Propagator, TimeSeries};
use crate::error::{Error, Result};
use crate::info::{
    collapse, linear_entropy, measure_distribution, noon_reference, outcome_overlap, partial_trace,
    sample_outcomes, MeasurementDistribution,
};
use crate::operators::{
    build_band_effective, build_hamiltonian, BandOperator, BandParams, CouplingSet, EffectiveForm,
    HermitianOperator,
};
use crate::oracles::{self, parity_sign, AnalyticParams};

/// Tolerance of checks against effective-theory predictions when the
/// effective Hamiltonian itself is simulated.
pub const EFFECTIVE_TOL: f64 = 1e-9;
/// Allowed deviation of full-Hamiltonian runs from the effective prediction.
pub const FULL_TOL: f64 = 0.02;
/// Input weight outside the band that the band engines tolerate.
const BAND_LEAK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianMode {
    /// The plaquette Hamiltonian on the full Fock space.
    Full,
    /// `(N+1) Omega (Q1 + Q2) - 2 Omega Q1 Q2` on the band.
    Effective,
    /// The explicit second-order tunneling operator on the band.
    SecondOrder,
}

impl HamiltonianMode {
    pub fn tolerance(self) -> f64 {
        match self {
            HamiltonianMode::Full => FULL_TOL,
            _ => EFFECTIVE_TOL,
        }
    }
}

impl fmt::Display for HamiltonianMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HamiltonianMode::Full => "full",
            HamiltonianMode::Effective => "effective",
            HamiltonianMode::SecondOrder => "second-order",
        })
    }
}

impl FromStr for HamiltonianMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "effective" => Ok(Self::Effective),
            "second-order" => Ok(Self::SecondOrder),
            other => Err(Error::InvalidArgument(format!(
                "unknown Hamiltonian mode '{other}' (expected full, effective or second-order)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub m: usize,
    pub p: usize,
    pub u_over_j: f64,
    pub mode: HamiltonianMode,
    /// NOON phase of the identification input.
    pub phi: f64,
    /// Phase imprinted on site 4 for estimation.
    pub varphi: f64,
    /// Replaces `t_m` (in units of `1/J`) when set.
    pub time_override: Option<f64>,
    /// Lets production run at even `N`, where the report is flagged as
    /// outside the protocol's validity.
    pub allow_even_n: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            m: 15,
            p: 10,
            u_over_j: 8.0,
            mode: HamiltonianMode::Full,
            phi: 0.0,
            varphi: 0.0,
            time_override: None,
            allow_even_n: false,
        }
    }
}

impl ProtocolConfig {
    pub fn total(&self) -> usize {
        self.m + self.p
    }

    pub fn couplings(&self) -> Result<CouplingSet> {
        if !(self.u_over_j.is_finite() && self.u_over_j > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "U/J must be positive and finite, got {}",
                self.u_over_j
            )));
        }
        CouplingSet::from_u_over_j(self.u_over_j)
    }

    pub fn band(&self) -> Result<BandParams> {
        BandParams::new(self.m, self.p, &self.couplings()?)
    }

    fn require_protocol_band(&self) -> Result<()> {
        if self.p == 0 || self.m <= self.p {
            return Err(Error::Protocol(format!(
                "protocols need M > P >= 1, got M = {}, P = {}",
                self.m, self.p
            )));
        }
        Ok(())
    }

    fn require_odd(&self, what: &str) -> Result<()> {
        if self.total() % 2 == 0 {
            return Err(Error::Protocol(format!(
                "{what} needs odd N = M + P (got {}): at even N both qudit-A branches \
                 spread binomially over all outcomes",
                self.total()
            )));
        }
        Ok(())
    }

    fn require_binary_phi(&self) -> Result<()> {
        if phase_label_of(self.phi).is_none() {
            return Err(Error::Protocol(format!(
                "identification distinguishes phi = 0 from phi = pi, got phi = {}",
                self.phi
            )));
        }
        Ok(())
    }
}

/// `0` for symmetric and `pi` for antisymmetric NOON states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoonPhase {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "pi")]
    Pi,
}

impl NoonPhase {
    pub fn value(self) -> f64 {
        match self {
            NoonPhase::Zero => 0.0,
            NoonPhase::Pi => PI,
        }
    }

    fn flip(self) -> Self {
        match self {
            NoonPhase::Zero => NoonPhase::Pi,
            NoonPhase::Pi => NoonPhase::Zero,
        }
    }
}

impl fmt::Display for NoonPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoonPhase::Zero => "0",
            NoonPhase::Pi => "pi",
        })
    }
}

fn phase_label_of(phi: f64) -> Option<NoonPhase> {
    let wrapped = phi.rem_euclid(2.0 * PI);
    if wrapped.abs() < 1e-12 || (wrapped - 2.0 * PI).abs() < 1e-12 {
        Some(NoonPhase::Zero)
    } else if (wrapped - PI).abs() < 1e-12 {
        Some(NoonPhase::Pi)
    } else {
        None
    }
}

/// Qudit-B phase expected after the site-3 outcome `r`, for odd `N`.
///
/// Outcome `M` leaves a symmetric NOON state when `(N+1)/2` is odd and an
/// antisymmetric one otherwise; outcome `0` leaves the other. Intermediate
/// outcomes, which only occur through corrections to the effective
/// dynamics, take the label of the nearer of `0` and `M`, with the midpoint
/// going to `M`.
pub fn phase_label(n: usize, m: usize, r: usize) -> NoonPhase {
    let at_m = if ((n + 1) / 2) % 2 == 1 {
        NoonPhase::Zero
    } else {
        NoonPhase::Pi
    };
    if 2 * r >= m {
        at_m
    } else {
        at_m.flip()
    }
}

/// Site-3 outcome that identifies the NOON phase `phi` for odd `N`:
/// `<N1 - N3>(t_m) = (-1)^{(N+1)/2} M cos(phi)`, so `M` when that is `-M`.
pub fn identification_outcome(n: usize, m: usize, phi: NoonPhase) -> usize {
    let sign = parity_sign((n + 1) / 2) * if phi == NoonPhase::Zero { 1.0 } else { -1.0 };
    if sign < 0.0 {
        m
    } else {
        0
    }
}

/// `(|M,P,0,0> + e^{i phi} |M,0,0,P>) / sqrt(2)`.
pub fn prepare_noon_input(
    basis: &Arc<FockBasis>,
    m: usize,
    p: usize,
    phi: f64,
) -> Result<StateVector> {
    noon_reference(basis, m, p, 0, phi)
}

/// Multiplies every amplitude by `exp(i varphi n_site)`; `site` is 1-based.
pub fn encode_phase(psi: &StateVector, site: usize, varphi: f64) -> Result<StateVector> {
    let s = Site::new(site)?;
    Ok(psi.with_diagonal_phase(|occ| varphi * occ.at(s) as f64))
}

/// `K(m, phi) = (-1)^{m/2} + e^{i phi}` for even `m`.
pub fn k_coefficient(m: usize, phi: f64) -> Complex64 {
    Complex64::new(parity_sign(m / 2), 0.0) + Complex64::from_polar(1.0, phi)
}

enum Engine {
    Full(HermitianOperator),
    Band { op: BandOperator, index: Vec<usize> },
}

/// A Hamiltonian for one `(M, P)` configuration together with its cached
/// eigendecomposition. Build once and reuse across protocol phases.
pub struct Interferometer {
    config: ProtocolConfig,
    basis: Arc<FockBasis>,
    band: BandParams,
    engine: Engine,
}

impl fmt::Debug for Interferometer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Interferometer")
            .field("config", &self.config)
            .field("dim", &self.basis.len())
            .finish()
    }
}

impl Interferometer {
    /// Builds and diagonalizes the Hamiltonian selected by `config.mode`.
    pub fn new(config: &ProtocolConfig) -> Result<Self> {
        let c = config.couplings()?;
        let band = BandParams::new(config.m, config.p, &c)?;
        let basis = enumerate_basis(config.total());
        let engine = match config.mode {
            HamiltonianMode::Full => Engine::Full(build_hamiltonian(&basis, &c)?),
            mode => {
                let form = if mode == HamiltonianMode::Effective {
                    EffectiveForm::ConservedCharges
                } else {
                    EffectiveForm::SecondOrder
                };
                let op = build_band_effective(&band, &c, form)?;
                let index = op
                    .states()
                    .iter()
                    .map(|s| basis.index_of(s))
                    .collect::<Result<Vec<_>>>()?;
                Engine::Band { op, index }
            }
        };
        let this = Self {
            config: *config,
            basis,
            band,
            engine,
        };
        match &this.engine {
            Engine::Full(h) => h.eigen()?,
            Engine::Band { op, .. } => op.eigen()?,
        };
        Ok(this)
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    /// Changes the input phases without touching the Hamiltonian or its
    /// eigendecomposition.
    pub fn set_phases(&mut self, phi: f64, varphi: f64) {
        self.config.phi = phi;
        self.config.varphi = varphi;
    }

    pub fn set_allow_even_n(&mut self, allow: bool) {
        self.config.allow_even_n = allow;
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn band(&self) -> &BandParams {
        &self.band
    }

    /// The full Hamiltonian, when this engine simulates it.
    pub fn hamiltonian(&self) -> Option<&HermitianOperator> {
        match &self.engine {
            Engine::Full(h) => Some(h),
            Engine::Band { .. } => None,
        }
    }

    /// Evaluation time: the override if set, `t_m` otherwise.
    pub fn time(&self) -> f64 {
        self.config.time_override.unwrap_or(self.band.t_m())
    }

    pub fn trajectory<'a>(&'a self, psi0: &'a StateVector) -> Result<Trajectory<'a>> {
        self.basis.check_same(psi0.basis())?;
        Ok(match &self.engine {
            Engine::Full(h) => Trajectory::Full(Propagator::new(h, psi0)?),
            Engine::Band { op, index } => {
                let inside: Vec<Complex64> = index.iter().map(|&i| psi0.amplitudes()[i]).collect();
                let weight: f64 = inside.iter().map(|a| a.norm_sqr()).sum();
                if (1.0 - weight).abs() > BAND_LEAK_TOL {
                    return Err(Error::Protocol(format!(
                        "input has weight {:.3e} outside the ({}, {}) band, which the {} \
                         Hamiltonian does not describe",
                        1.0 - weight,
                        op.m(),
                        op.p(),
                        self.config.mode
                    )));
                }
                let eigen = op.eigen()?;
                Trajectory::Band {
                    basis: &self.basis,
                    index,
                    values: eigen.values(),
                    eigen,
                    coeffs: eigen.to_eigenbasis(&inside),
                }
            }
        })
    }

    pub fn evolve(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        self.trajectory(psi0)?.at(t)
    }

    /// `<N1 - N3>(t) / M` along `times`.
    pub fn imbalance_series(&self, psi0: &StateVector, times: &[f64]) -> Result<TimeSeries> {
        check_increasing(times)?;
        let traj = self.trajectory(psi0)?;
        let m = self.config.m as f64;
        let values = times
            .par_iter()
            .map(|&t| Ok(imbalance_moments(&traj.at(t)?).0 / m))
            .collect::<Result<Vec<_>>>()?;
        TimeSeries::new(times.to_vec(), values)
    }
}

/// An initial state expanded in the eigenbasis of an [`Interferometer`].
pub enum Trajectory<'a> {
    Full(Propagator<'a>),
    Band {
        basis: &'a Arc<FockBasis>,
        index: &'a [usize],
        values: &'a [f64],
        eigen: &'a crate::linalg::Eigen,
        coeffs: Vec<Complex64>,
    },
}

impl Trajectory<'_> {
    pub fn at(&self, t: f64) -> Result<StateVector> {
        match self {
            Trajectory::Full(p) => Ok(p.at(t)),
            Trajectory::Band {
                basis,
                index,
                values,
                eigen,
                coeffs,
            } => {
                let phased: Vec<Complex64> = coeffs
                    .iter()
                    .zip(values.iter())
                    .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
                    .collect();
                let inside = eigen.from_eigenbasis(&phased);
                let mut amps = vec![Complex64::new(0.0, 0.0); basis.len()];
                for (&i, a) in index.iter().zip(inside) {
                    amps[i] = a;
                }
                StateVector::normalized(basis, amps)
            }
        }
    }
}

/// `(<N1 - N3>, Delta(N1 - N3))`, read off the Fock amplitudes.
pub fn imbalance_moments(psi: &StateVector) -> (f64, f64) {
    let (mut first, mut second) = (0.0, 0.0);
    for (occ, a) in psi.basis().states().iter().zip(psi.amplitudes()) {
        let x = occ.0[0] as f64 - occ.0[2] as f64;
        let w = a.norm_sqr();
        first += w * x;
        second += w * x * x;
    }
    (first, (second - first * first).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Identification,
    Production,
    PhaseEstimation,
    NonDestructive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `|measured - expected| <= tolerance`.
    Close,
    /// `measured <= tolerance`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub comparison: Comparison,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn close(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            comparison: Comparison::Close,
            measured,
            expected,
            tolerance,
            passed: (measured - expected).abs() <= tolerance,
        }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            comparison: Comparison::AtMost,
            measured,
            expected: 0.0,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeRow {
    pub r: usize,
    pub probability: f64,
    /// Absent when the outcome has (numerically) zero probability.
    pub phase: Option<NoonPhase>,
    pub fidelity: Option<f64>,
    /// `<Phi(r, phase)|Theta(r)>`, printed so phase conventions can be audited.
    pub overlap_re: Option<f64>,
    pub overlap_im: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationSummary {
    pub expected_outcome: usize,
    /// `P(r*)`.
    pub outcome_probability: f64,
    /// `|<Phi(r*, phi)|Theta(r*)>|`.
    pub post_fidelity: f64,
    /// `|<Phi(r*, phi)|psi(t)>|^2 = P(r*) F^2`: the outcome occurs and leaves
    /// the input NOON state behind.
    pub success_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationRow {
    pub varphi: f64,
    pub imbalance: f64,
    pub analytic: f64,
    pub spread: f64,
    pub slope: f64,
    /// `Delta(N1 - N3) / |d<N1 - N3>/d varphi|`, absent at singular points.
    pub delta_phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationTable {
    pub rows: Vec<EstimationRow>,
    pub heisenberg_limit: f64,
    pub shot_noise_limit: f64,
    /// Step of the central-difference stencil.
    pub step: f64,
    pub singular: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonDestructiveSummary {
    pub k_plus_re: f64,
    pub k_plus_im: f64,
    pub k_minus_re: f64,
    pub k_minus_im: f64,
    /// `|<product form|Lambda(t)>|`.
    pub product_form_fidelity: f64,
    pub inter_qudit_entropy: f64,
    pub outcome: usize,
    pub outcome_probability: f64,
    pub post_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledOutcomes {
    pub seed: u64,
    pub shots: usize,
    pub outcomes: Vec<usize>,
    /// Counts indexed by outcome.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolReport {
    pub protocol: Protocol,
    pub config: ProtocolConfig,
    pub n: usize,
    pub omega: f64,
    pub t_m: f64,
    /// Time actually used; differs from `t_m` only under an override.
    pub time: f64,
    pub within_validity: bool,
    /// Site-3 outcome probabilities, `r = 0..=N`, at `time`.
    pub distribution: Vec<f64>,
    pub outcomes: Vec<OutcomeRow>,
    pub post_state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identification: Option<IdentificationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimation: Option<EstimationTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nondestructive: Option<NonDestructiveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampledOutcomes>,
    pub checks: Vec<Check>,
}

impl ProtocolReport {
    fn new(protocol: Protocol, engine: &Interferometer) -> Self {
        Self {
            protocol,
            config: engine.config,
            n: engine.config.total(),
            omega: engine.band.omega(),
            t_m: engine.band.t_m(),
            time: engine.time(),
            within_validity: engine.config.total() % 2 == 1,
            distribution: Vec::new(),
            outcomes: Vec::new(),
            post_state: None,
            identification: None,
            estimation: None,
            nondestructive: None,
            samples: None,
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Draws `shots` site-3 outcomes from the exact distribution.
    pub fn attach_samples(&mut self, seed: u64, shots: usize) -> Result<()> {
        if self.distribution.is_empty() {
            return Err(Error::Protocol(
                "report carries no outcome distribution".into(),
            ));
        }
        let dist = MeasurementDistribution::new(Site::THREE, self.distribution.clone())?;
        let outcomes = sample_outcomes(&dist, seed, shots);
        let mut counts = vec![0; self.distribution.len()];
        outcomes.iter().for_each(|&r| counts[r] += 1);
        self.samples = Some(SampledOutcomes {
            seed,
            shots,
            outcomes,
            counts,
        });
        Ok(())
    }
}

fn describe(psi: &StateVector, cutoff: f64) -> String {
    let mut terms: Vec<(f64, String)> = psi
        .basis()
        .states()
        .iter()
        .zip(psi.amplitudes())
        .filter(|(_, a)| a.norm_sqr() > cutoff)
        .map(|(o, a)| (a.norm_sqr(), format!("({:+.6}{:+.6}i){}", a.re, a.im, o)))
        .collect();
    terms.sort_by(|a, b| b.0.total_cmp(&a.0));
    let kept: Vec<String> = terms.into_iter().take(8).map(|(_, s)| s).collect();
    if kept.is_empty() {
        "0".into()
    } else {
        kept.join(" + ")
    }
}

fn distribution_at(psi: &StateVector) -> Result<Vec<f64>> {
    Ok(measure_distribution(psi, Site::THREE)?.probs().to_vec())
}

/// Identifies the NOON phase `phi in {0, pi}` loaded into sites 2 and 4.
pub fn run_identification(engine: &Interferometer) -> Result<ProtocolReport> {
    let cfg = engine.config;
    cfg.require_protocol_band()?;
    cfg.require_odd("identification")?;
    cfg.require_binary_phi()?;
    let phi = phase_label_of(cfg.phi).expect("validated");
    let (n, m, p) = (cfg.total(), cfg.m, cfg.p);

    let psi0 = prepare_noon_input(&engine.basis, m, p, phi.value())?;
    let psi = engine.evolve(&psi0, engine.time())?;
    let mut report = ProtocolReport::new(Protocol::Identification, engine);
    report.distribution = distribution_at(&psi)?;

    let r_star = identification_outcome(n, m, phi);
    let outcome_probability = report.distribution[r_star];
    let reference = noon_reference(&engine.basis, m, p, r_star, phi.value())?;
    let success_probability = reference.fidelity(&psi)?;
    let post_fidelity = match collapse(&psi, Site::THREE, r_star) {
        Ok(rec) => {
            report.post_state = Some(describe(&rec.post_state, 1e-6));
            outcome_overlap(&rec, m, p, phi.value())?.norm()
        }
        Err(Error::ZeroProbabilityOutcome { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let tol = cfg.mode.tolerance();
    report.checks = vec![
        Check::close("success_probability", success_probability, 1.0, tol),
        Check::close("post_measurement_fidelity", post_fidelity, 1.0, tol),
    ];
    report.identification = Some(IdentificationSummary {
        expected_outcome: r_star,
        outcome_probability,
        post_fidelity,
        success_probability,
    });
    Ok(report)
}

/// Measures site 3 after evolving `|M, P, 0, 0>` and tabulates every outcome
/// `r = 0..=M` with the fidelity of the post-measurement state to its NOON
/// reference.
pub fn run_production(engine: &Interferometer) -> Result<ProtocolReport> {
    let cfg = engine.config;
    cfg.require_protocol_band()?;
    if !cfg.allow_even_n {
        cfg.require_odd("production")?;
    }
    let (n, m, p) = (cfg.total(), cfg.m, cfg.p);
    let psi0 = StateVector::basis_state(&engine.basis, Occupation::new(m, p, 0, 0))?;
    let psi = engine.evolve(&psi0, engine.time())?;
    let mut report = ProtocolReport::new(Protocol::Production, engine);
    report.distribution = distribution_at(&psi)?;
    report.post_state = Some(describe(&psi, 1e-6));

    let odd = n % 2 == 1;
    report.outcomes = (0..=m)
        .into_par_iter()
        .map(|r| {
            let probability = report.distribution[r];
            let phase = phase_label(n, m, r);
            match collapse(&psi, Site::THREE, r) {
                Ok(rec) => {
                    let ov = outcome_overlap(&rec, m, p, phase.value())?;
                    Ok(OutcomeRow {
                        r,
                        probability,
                        phase: odd.then_some(phase),
                        fidelity: Some(ov.norm()),
                        overlap_re: Some(ov.re),
                        overlap_im: Some(ov.im),
                    })
                }
                Err(Error::ZeroProbabilityOutcome { .. }) => Ok(OutcomeRow {
                    r,
                    probability,
                    phase: odd.then_some(phase),
                    fidelity: None,
                    overlap_re: None,
                    overlap_im: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let tol = cfg.mode.tolerance();
    let expected = oracles::measurement_distribution(m, n)?;
    let worst = expected
        .iter()
        .enumerate()
        .map(|(r, e)| (report.distribution[r] - e).abs())
        .fold(0.0, f64::max);
    let leakage: f64 = report.distribution[m + 1..].iter().sum();
    report
        .checks
        .push(Check::at_most("distribution_deviation", worst, tol));
    report
        .checks
        .push(Check::at_most("weight_beyond_m", leakage, tol));
    if odd {
        let target = oracles::production_state(&engine.basis, m, p)?;
        report.checks.push(Check::close(
            "pre_measurement_fidelity",
            target.inner(&psi)?.norm(),
            1.0,
            tol,
        ));
        for r in [0, m] {
            if let Some(f) = report.outcomes[r].fidelity {
                report
                    .checks
                    .push(Check::close(format!("fidelity_r{r}"), f, 1.0, tol));
            }
        }
    }
    Ok(report)
}

/// Step of the five-point derivative stencil in units of `1/P`.
pub const STENCIL_STEP: f64 = 1e-3;

/// Encodes each `varphi` on site 4 of the symmetric NOON input and reads the
/// imbalance, its spread and the error-propagation phase uncertainty at the
/// evaluation time.
pub fn run_phase_estimation(engine: &Interferometer, grid: &[f64]) -> Result<ProtocolReport> {
    let cfg = engine.config;
    cfg.require_protocol_band()?;
    cfg.require_odd("phase estimation")?;
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "phase grid must be non-empty and finite".into(),
        ));
    }
    let (n, m, p) = (cfg.total(), cfg.m, cfg.p);
    let t = engine.time();
    let input = prepare_noon_input(&engine.basis, m, p, 0.0)?;
    let imbalance_at = |v: f64| -> Result<(f64, f64)> {
        let psi = encode_phase(&input, 4, v)?;
        Ok(imbalance_moments(&engine.evolve(&psi, t)?))
    };
    let h = STENCIL_STEP / p as f64;
    let analytic = AnalyticParams {
        m,
        p,
        omega: engine.band.omega(),
        phi: 0.0,
    };
    let curve = oracles::phase_estimation_curve(&analytic, n, grid)?;

    let rows = grid
        .par_iter()
        .zip(curve.imbalance.par_iter())
        .map(|(&v, &expect)| {
            let (imbalance, spread) = imbalance_at(v)?;
            let f = |k: f64| imbalance_at(v + k * h).map(|x| x.0);
            let slope = (-f(2.0)? + 8.0 * f(1.0)? - 8.0 * f(-1.0)? + f(-2.0)?) / (12.0 * h);
            Ok(EstimationRow {
                varphi: v,
                imbalance,
                analytic: expect,
                spread,
                slope,
                delta_phi: (slope.abs() >= oracles::SINGULAR_SLOPE).then(|| spread / slope.abs()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ProtocolReport::new(Protocol::PhaseEstimation, engine);
    let first = encode_phase(&input, 4, grid[0])?;
    report.distribution = distribution_at(&engine.evolve(&first, t)?)?;

    let tol = cfg.mode.tolerance();
    let worst_imbalance = rows
        .iter()
        .map(|r| (r.imbalance - r.analytic).abs())
        .fold(0.0, f64::max);
    report.checks.push(Check::at_most(
        "imbalance_vs_analytic",
        worst_imbalance,
        tol * m as f64,
    ));
    let heisenberg = 1.0 / p as f64;
    let worst_dphi = rows
        .iter()
        .filter_map(|r| r.delta_phi)
        .map(|d| (d - heisenberg).abs())
        .fold(0.0, f64::max);
    let dphi_tol = if cfg.mode == HamiltonianMode::Full {
        FULL_TOL * heisenberg
    } else {
        1e-6
    };
    report.checks.push(Check::at_most(
        "delta_phi_vs_heisenberg",
        worst_dphi,
        dphi_tol,
    ));

    report.estimation = Some(EstimationTable {
        singular: rows
            .iter()
            .filter(|r| r.delta_phi.is_none())
            .map(|r| r.varphi)
            .collect(),
        rows,
        heisenberg_limit: curve.heisenberg_limit,
        shot_noise_limit: curve.shot_noise_limit,
        step: h,
    });
    Ok(report)
}

/// Checks that the evolved NOON input factorizes between the qudits at the
/// evaluation time, so a site-3 measurement leaves qudit B intact.
pub fn verify_nondestructive(engine: &Interferometer) -> Result<ProtocolReport> {
    let cfg = engine.config;
    cfg.require_protocol_band()?;
    cfg.require_odd("non-destructive identification")?;
    cfg.require_binary_phi()?;
    let phi = phase_label_of(cfg.phi).expect("validated");
    let (n, m, p) = (cfg.total(), cfg.m, cfg.p);

    let psi0 = prepare_noon_input(&engine.basis, m, p, phi.value())?;
    let lambda = engine.evolve(&psi0, engine.time())?;

    let k_plus = k_coefficient(n + 1, phi.value());
    let k_minus = k_coefficient(n - 1, phi.value());
    let sign = if phi == NoonPhase::Zero { 1.0 } else { -1.0 };
    let scale = 1.0 / (2.0 * 2f64.sqrt());
    let terms = [
        (k_plus * scale, Occupation::new(m, p, 0, 0)),
        (k_plus * scale * sign, Occupation::new(m, 0, 0, p)),
        (k_minus * scale, Occupation::new(0, 0, m, p)),
        (k_minus * scale * sign, Occupation::new(0, p, m, 0)),
    ];
    let mut amps = vec![Complex64::new(0.0, 0.0); engine.basis.len()];
    for (c, occ) in terms {
        amps[engine.basis.index_of(&occ)?] += c;
    }
    let product_form = StateVector::normalized(&engine.basis, amps)?;
    let product_form_fidelity = product_form.inner(&lambda)?.norm();

    let rho_a = partial_trace(&lambda, &[Site::ONE, Site::THREE])?;
    let entropy = linear_entropy(&rho_a)?;
    let mut report = ProtocolReport::new(Protocol::NonDestructive, engine);
    report.distribution = distribution_at(&lambda)?;
    let outcome = identification_outcome(n, m, phi);
    let outcome_probability = report.distribution[outcome];
    let post_fidelity = match collapse(&lambda, Site::THREE, outcome) {
        Ok(rec) => {
            report.post_state = Some(describe(&rec.post_state, 1e-6));
            outcome_overlap(&rec, m, p, phi.value())?.norm()
        }
        Err(Error::ZeroProbabilityOutcome { .. }) => 0.0,
        Err(e) => return Err(e),
    };

    let tol = cfg.mode.tolerance();
    let vanishing = k_plus.norm().min(k_minus.norm());
    let surviving = k_plus.norm().max(k_minus.norm());
    report.checks = vec![
        Check::at_most("smaller_k_coefficient", vanishing, 1e-12),
        Check::close("larger_k_coefficient", surviving, 2.0, 1e-12),
        Check::close("product_form_fidelity", product_form_fidelity, 1.0, tol),
        Check::at_most("inter_qudit_linear_entropy", entropy, tol),
        Check::close("outcome_probability", outcome_probability, 1.0, tol),
        Check::close("post_measurement_fidelity", post_fidelity, 1.0, tol),
    ];
    report.nondestructive = Some(NonDestructiveSummary {
        k_plus_re: k_plus.re,
        k_plus_im: k_plus.im,
        k_minus_re: k_minus.re,
        k_minus_im: k_minus.im,
        product_form_fidelity,
        inter_qudit_entropy: entropy,
        outcome,
        outcome_probability,
        post_fidelity,
    });
    Ok(report)
}

/// Convenience wrappers that build a fresh [`Interferometer`] per call.
pub fn identify(cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    run_identification(&Interferometer::new(cfg)?)
}

pub fn produce(cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    run_production(&Interferometer::new(cfg)?)
}

pub fn estimate(cfg: &ProtocolConfig, grid: &[f64]) -> Result<ProtocolReport> {
    run_phase_estimation(&Interferometer::new(cfg)?, grid)
}
