//! Exact unitary evolution by spectral decomposition,
//! `psi(t) = V exp(-i lambda t) V^dagger psi(0)` with `hbar = 1`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::StateVector;
use crate::error::{Error, Result};
use crate::linalg::Eigen;
use crate::operators::{build_imbalance, HermitianOperator};

/// Largest imaginary part tolerated in an expectation value.
pub const EXPECTATION_IM_TOL: f64 = 1e-10;

/// Initial state expanded in the eigenbasis of a Hamiltonian, ready to be
/// evaluated at any time.
#[derive(Debug)]
pub struct Propagator<'a> {
    psi0: &'a StateVector,
    eigen: &'a Eigen,
    coeffs: Vec<Complex64>,
}

impl<'a> Propagator<'a> {
    pub fn new(h: &'a HermitianOperator, psi0: &'a StateVector) -> Result<Self> {
        h.check_basis(psi0.basis())?;
        let eigen = h.eigen()?;
        let coeffs = eigen.to_eigenbasis(psi0.amplitudes());
        Ok(Self {
            psi0,
            eigen,
            coeffs,
        })
    }

    pub fn at(&self, t: f64) -> StateVector {
        if t == 0.0 {
            return self.psi0.clone();
        }
        let phased: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(self.eigen.values())
            .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
            .collect();
        StateVector::from_unitary_image(self.psi0.basis(), self.eigen.from_eigenbasis(&phased))
    }
}

pub fn evolve(h: &HermitianOperator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    Ok(Propagator::new(h, psi0)?.at(t))
}

/// `Re <psi|op|psi>`, failing if the imaginary part exceeds
/// [`EXPECTATION_IM_TOL`].
pub fn expectation(op: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    op.check_basis(psi.basis())?;
    let z = op.matrix().quadratic_form(psi.amplitudes());
    if z.im.abs() > EXPECTATION_IM_TOL {
        return Err(Error::NonRealExpectation { residue: z.im });
    }
    Ok(z.re)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        check_increasing(&times)?;
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }
}

pub(crate) fn check_increasing(times: &[f64]) -> Result<()> {
    if times.windows(2).all(|w| w[0] < w[1]) && times.iter().all(|t| t.is_finite()) {
        Ok(())
    } else {
        Err(Error::UnsortedTimes)
    }
}

/// Expectation of `op` along the trajectory, evaluated in parallel.
pub fn expectation_series(
    h: &HermitianOperator,
    op: &HermitianOperator,
    psi0: &StateVector,
    times: &[f64],
) -> Result<TimeSeries> {
    check_increasing(times)?;
    op.check_basis(psi0.basis())?;
    let prop = Propagator::new(h, psi0)?;
    let values = times
        .par_iter()
        .map(|&t| expectation(op, &prop.at(t)))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(times.to_vec(), values)
}

/// Fractional imbalance `<N1 - N3>(t) / M`.
pub fn imbalance_series(
    h: &HermitianOperator,
    psi0: &StateVector,
    times: &[f64],
    m: usize,
) -> Result<TimeSeries> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "fractional imbalance needs M > 0".into(),
        ));
    }
    let imb = build_imbalance(psi0.basis())?;
    let series = expectation_series(h, &imb, psi0, times)?;
    let scaled = series.values.iter().map(|v| v / m as f64).collect();
    TimeSeries::new(series.times, scaled)
}
