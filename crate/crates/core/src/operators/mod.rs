//! Hamiltonian, conserved charges and the resonant-tunneling effective
//! Hamiltonian on the fixed-N Fock space.
//!
//! The plaquette Hamiltonian is
//!
//! ```text
//! H = U0/2 sum_i N_i (N_i - 1) + sum_{i != j} U_ij/2 N_i N_j
//!     - J/2 [ (a1^+ + a3^+)(a2 + a4) + h.c. ]
//! ```
//!
//! It is integrable when `U13 = U24 = U0` and `U12 = U14 = U23 = U34`, in
//! which case `Q1 = (N1 + N3 - a1^+ a3 - a3^+ a1)/2` and the analogous `Q2` on
//! sites 2 and 4 commute with it and with each other.

mod couplings;
mod effective;
pub mod ladder;

use std::sync::Arc;

use ndarray::Array2;

use crate::basis::{FockBasis, Site};
use crate::error::{Error, Result};
use crate::linalg::{Eigen, HermitianMatrix};

pub use couplings::{BandParams, CouplingSet};
pub use effective::{
    band_states, build_band_effective, build_effective_hamiltonian, effective_spectrum,
    restrict_to_band, BandOperator, EffectiveForm, EffectiveLevel,
};
use ladder::Expr;

/// Dense Hermitian operator on a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    basis: Arc<FockBasis>,
    matrix: HermitianMatrix,
}

impl HermitianOperator {
    pub fn from_matrix(basis: &Arc<FockBasis>, matrix: HermitianMatrix) -> Result<Self> {
        if matrix.dim() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: matrix.dim(),
            });
        }
        Ok(Self {
            basis: Arc::clone(basis),
            matrix,
        })
    }

    /// Matrix of a ladder-operator polynomial. The polynomial must conserve
    /// total particle number.
    pub fn from_expr(basis: &Arc<FockBasis>, expr: &Expr) -> Result<Self> {
        let n = basis.len();
        let mut m = Array2::<f64>::zeros((n, n));
        for (col, occ) in basis.states().iter().enumerate() {
            for (target, c) in expr.act(occ) {
                let row = basis.index_of(&target)?;
                m[[row, col]] += c;
            }
        }
        Self::from_matrix(basis, HermitianMatrix::from_real(m)?)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn eigen(&self) -> Result<&Eigen> {
        self.matrix.eigen()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix.eigenvalues()
    }

    pub(crate) fn check_basis(&self, basis: &FockBasis) -> Result<()> {
        self.basis.check_same(basis)
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_basis(&other.basis)?;
        Ok(Self {
            basis: Arc::clone(&self.basis),
            matrix: self.matrix.scaled_add(alpha, &other.matrix, beta)?,
        })
    }
}

fn on_site_interaction(c: &CouplingSet, n: &[usize; 4]) -> f64 {
    let mut e = 0.0;
    for i in 0..4 {
        let ni = n[i] as f64;
        e += 0.5 * c.u0() * ni * (ni - 1.0);
        for j in 0..4 {
            if i != j {
                e += 0.5 * c.u_matrix()[i][j] * ni * n[j] as f64;
            }
        }
    }
    e
}

/// `-J/2 [ (a1^+ + a3^+)(a2 + a4) + (a2^+ + a4^+)(a1 + a3) ]`.
pub fn hopping_expr(j: f64) -> Expr {
    let mut e = Expr::zero();
    for a in [Site::ONE, Site::THREE] {
        for b in [Site::TWO, Site::FOUR] {
            e = e + Expr::hop(a, b) + Expr::hop(b, a);
        }
    }
    e.scale(-0.5 * j)
}

pub fn build_hamiltonian(basis: &Arc<FockBasis>, c: &CouplingSet) -> Result<HermitianOperator> {
    let n = basis.len();
    let hop = hopping_expr(c.j());
    let mut m = Array2::<f64>::zeros((n, n));
    for (col, occ) in basis.states().iter().enumerate() {
        m[[col, col]] += on_site_interaction(c, &occ.0);
        if c.j() != 0.0 {
            for (target, amp) in hop.act(occ) {
                m[[basis.index_of(&target)?, col]] += amp;
            }
        }
    }
    HermitianOperator::from_matrix(basis, HermitianMatrix::from_real(m)?)
}

pub(crate) fn q_expr(a: Site, b: Site) -> Expr {
    (Expr::number(a) + Expr::number(b) - Expr::hop(a, b) - Expr::hop(b, a)).scale(0.5)
}

/// `Q1 = (N1 + N3 - a1^+ a3 - a3^+ a1) / 2`.
pub fn build_q1(basis: &Arc<FockBasis>) -> Result<HermitianOperator> {
    HermitianOperator::from_expr(basis, &q_expr(Site::ONE, Site::THREE))
}

/// `Q2 = (N2 + N4 - a2^+ a4 - a4^+ a2) / 2`.
pub fn build_q2(basis: &Arc<FockBasis>) -> Result<HermitianOperator> {
    HermitianOperator::from_expr(basis, &q_expr(Site::TWO, Site::FOUR))
}

/// `N_site`, diagonal in the Fock basis. `site` is 1-based.
pub fn build_number_op(basis: &Arc<FockBasis>, site: usize) -> Result<HermitianOperator> {
    let s = Site::new(site)?;
    diagonal_operator(basis, |occ| occ[s.index()] as f64)
}

/// `N1 + N2 + N3 + N4`.
pub fn build_total_number(basis: &Arc<FockBasis>) -> Result<HermitianOperator> {
    diagonal_operator(basis, |occ| occ.iter().sum::<usize>() as f64)
}

/// `N1 - N3`.
pub fn build_imbalance(basis: &Arc<FockBasis>) -> Result<HermitianOperator> {
    diagonal_operator(basis, |occ| occ[0] as f64 - occ[2] as f64)
}

pub fn diagonal_operator(
    basis: &Arc<FockBasis>,
    f: impl Fn(&[usize; 4]) -> f64,
) -> Result<HermitianOperator> {
    let diag: Vec<f64> = basis.states().iter().map(|o| f(&o.0)).collect();
    let m = Array2::from_diag(&ndarray::Array1::from(diag));
    HermitianOperator::from_matrix(basis, HermitianMatrix::from_real(m)?)
}

/// `|| A B - B A ||_F`.
pub fn commutator_frobenius(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    a.check_basis(&b.basis)?;
    a.matrix.commutator_frobenius(&b.matrix)
}
