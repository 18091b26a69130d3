//! Fixed-N Fock space of the four plaquette sites.
//!
//! States are ordered lexicographically decreasing on `(n1, n2, n3, n4)`, so
//! the first state is `|N,0,0,0>` and the last is `|0,0,0,N>`. The ordering
//! fixes matrix layouts and therefore every golden output downstream.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on `| ||psi|| - 1 |` accepted by state constructors.
pub const NORM_TOL: f64 = 1e-12;

/// One of the four plaquette sites, numbered 1 to 4 around the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Site(u8);

impl Site {
    pub const ONE: Site = Site(1);
    pub const TWO: Site = Site(2);
    pub const THREE: Site = Site(3);
    pub const FOUR: Site = Site(4);
    pub const ALL: [Site; 4] = [Site::ONE, Site::TWO, Site::THREE, Site::FOUR];

    pub fn new(number: usize) -> Result<Self> {
        match number {
            1..=4 => Ok(Site(number as u8)),
            _ => Err(Error::InvalidSite(number)),
        }
    }

    /// 1-based site label.
    pub fn number(self) -> usize {
        self.0 as usize
    }

    /// 0-based position in an [`Occupation`].
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Particle numbers `(n1, n2, n3, n4)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Occupation(pub [usize; 4]);

impl Occupation {
    pub const fn new(n1: usize, n2: usize, n3: usize, n4: usize) -> Self {
        Occupation([n1, n2, n3, n4])
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn at(&self, site: Site) -> usize {
        self.0[site.index()]
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "|{a},{b},{c},{d}>")
    }
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    total: usize,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl FockBasis {
    pub fn new(total: usize) -> Self {
        let mut states = Vec::with_capacity(dimension(total));
        for n1 in (0..=total).rev() {
            for n2 in (0..=total - n1).rev() {
                for n3 in (0..=total - n1 - n2).rev() {
                    states.push(Occupation::new(n1, n2, n3, total - n1 - n2 - n3));
                }
            }
        }
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Self {
            total,
            states,
            index,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, i: usize) -> Occupation {
        self.states[i]
    }

    pub fn index_of(&self, occ: &Occupation) -> Result<usize> {
        self.index
            .get(occ)
            .copied()
            .ok_or(Error::OccupationNotInBasis {
                occ: *occ,
                total: self.total,
            })
    }

    pub fn contains(&self, occ: &Occupation) -> bool {
        self.index.contains_key(occ)
    }

    pub(crate) fn check_same(&self, other: &FockBasis) -> Result<()> {
        if self.total == other.total {
            Ok(())
        } else {
            Err(Error::BasisMismatch {
                left: self.total,
                right: other.total,
            })
        }
    }
}

/// Shared handle to the `N`-particle basis.
pub fn enumerate_basis(total: usize) -> Arc<FockBasis> {
    Arc::new(FockBasis::new(total))
}

/// `C(N+3, 3)`.
pub fn dimension(total: usize) -> usize {
    (total + 1) * (total + 2) * (total + 3) / 6
}

/// Normalized amplitude vector over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|occ>`.
    pub fn basis_state(basis: &Arc<FockBasis>, occ: Occupation) -> Result<Self> {
        let i = basis.index_of(&occ)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Ok(Self {
            basis: Arc::clone(basis),
            amplitudes,
        })
    }

    /// Wraps amplitudes that are already normalized to within [`NORM_TOL`].
    pub fn from_amplitudes(basis: &Arc<FockBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: amplitudes.len(),
            });
        }
        let norm = l2_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            basis: Arc::clone(basis),
            amplitudes,
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(basis: &Arc<FockBasis>, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: amplitudes.len(),
            });
        }
        let norm = l2_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(Self {
            basis: Arc::clone(basis),
            amplitudes,
        })
    }

    /// Normalized `sum_k c_k |psi_k>`.
    pub fn linear_combination(terms: &[(Complex64, &StateVector)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::ZeroVector)?;
        let basis = Arc::clone(&first.basis);
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.len()];
        for (c, psi) in terms {
            basis.check_same(&psi.basis)?;
            for (a, z) in amps.iter_mut().zip(&psi.amplitudes) {
                *a += c * z;
            }
        }
        Self::normalized(&basis, amps)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, occ: &Occupation) -> Result<Complex64> {
        Ok(self.amplitudes[self.basis.index_of(occ)?])
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.basis.check_same(&other.basis)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Multiplies every amplitude by `exp(i * phase(occupation))`.
    pub fn with_diagonal_phase(&self, phase: impl Fn(&Occupation) -> f64) -> StateVector {
        let amplitudes = self
            .amplitudes
            .iter()
            .zip(self.basis.states())
            .map(|(z, occ)| z * Complex64::from_polar(1.0, phase(occ)))
            .collect();
        StateVector {
            basis: Arc::clone(&self.basis),
            amplitudes,
        }
    }

    /// Internal constructor for unitary images of a normalized state.
    pub(crate) fn from_unitary_image(basis: &Arc<FockBasis>, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), basis.len());
        StateVector {
            basis: Arc::clone(basis),
            amplitudes,
        }
    }
}

fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
