//! Resonant-tunneling effective Hamiltonian for a band `(M, P)`.
//!
//! Two independent builders are provided. [`EffectiveForm::ConservedCharges`]
//! is the compact form `(N+1) Omega (Q1 + Q2) - 2 Omega Q1 Q2`;
//! [`EffectiveForm::SecondOrder`] assembles the six-line second-order
//! tunneling expression term by term. On the band subspace the two differ by
//! a multiple of the identity.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;

use serde::Serialize;

use super::ladder::{annihilate as a, create as ad, Expr};
use super::{q_expr, BandParams, CouplingSet, HermitianOperator};
use crate::basis::{FockBasis, Occupation, Site};
use crate::error::{Error, Result};
use crate::linalg::{Eigen, HermitianMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EffectiveForm {
    /// `(N+1) Omega (Q1 + Q2) - 2 Omega Q1 Q2`.
    ConservedCharges,
    /// Explicit second-order tunneling operator with `1/(M-P +- 1)` weights.
    SecondOrder,
}

pub fn build_effective_hamiltonian(
    basis: &Arc<FockBasis>,
    bp: &BandParams,
    c: &CouplingSet,
    form: EffectiveForm,
) -> Result<HermitianOperator> {
    c.require_integrable()?;
    // Re-derive so that band and couplings cannot disagree.
    let bp_check = BandParams::new(bp.m(), bp.p(), c)?;
    if bp.total() != basis.total() {
        return Err(Error::InvalidBand {
            m: bp.m(),
            p: bp.p(),
            reason: format!(
                "M + P must equal the basis particle number {}",
                basis.total()
            ),
        });
    }
    let expr = match form {
        EffectiveForm::ConservedCharges => charges_form(basis.total(), bp_check.omega()),
        EffectiveForm::SecondOrder => second_order_form(bp_check, c.j()),
    };
    HermitianOperator::from_expr(basis, &expr)
}

fn charges_form(total: usize, omega: f64) -> Expr {
    let q1 = q_expr(Site::ONE, Site::THREE);
    let q2 = q_expr(Site::TWO, Site::FOUR);
    let linear = (q1.clone() + q2.clone()).scale((total as f64 + 1.0) * omega);
    linear + (q1 * q2).scale(-2.0 * omega)
}

fn second_order_form(bp: BandParams, j: f64) -> Expr {
    let (s1, s2, s3, s4) = (Site::ONE, Site::TWO, Site::THREE, Site::FOUR);
    let d = bp.m() as f64 - bp.p() as f64;
    let g = j * j / (16.0 * bp.derived_u());
    let plus = g / (d + 1.0);
    let minus = g / (d - 1.0);
    let m = |ops: Vec<_>| Expr::monomial(1.0, ops);

    let line1 = (m(vec![a(s1), ad(s3)]) + m(vec![a(s3), ad(s1)]))
        * (m(vec![ad(s2), a(s2)]) + m(vec![ad(s4), a(s4)]));
    let line2 = (m(vec![a(s1), ad(s1)]) + m(vec![a(s3), ad(s3)]))
        * (m(vec![ad(s2), a(s4)]) + m(vec![ad(s4), a(s2)]));
    let line3 = (m(vec![a(s2), ad(s2)]) + m(vec![a(s4), ad(s4)]))
        * (m(vec![ad(s1), a(s3)]) + m(vec![ad(s3), a(s1)]));
    let line4 = (m(vec![a(s2), ad(s4)]) + m(vec![a(s4), ad(s2)]))
        * (m(vec![ad(s1), a(s1)]) + m(vec![ad(s3), a(s3)]));
    let exchange = m(vec![ad(s1), a(s2), a(s3), ad(s4)])
        + m(vec![ad(s1), ad(s2), a(s3), a(s4)])
        + m(vec![a(s1), ad(s2), ad(s3), a(s4)])
        + m(vec![a(s1), a(s2), ad(s3), ad(s4)]);

    line1.scale(plus)
        + line2.scale(plus)
        + line3.scale(-minus)
        + line4.scale(-minus)
        + exchange.scale(plus - minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveLevel {
    pub q1: usize,
    pub q2: usize,
    pub energy: f64,
}

/// `E(q1, q2) = (N+1) Omega (q1 + q2) - 2 Omega q1 q2` for `q1 <= M`,
/// `q2 <= P`, ordered by `(q1, q2)`.
pub fn effective_spectrum(bp: &BandParams) -> Vec<EffectiveLevel> {
    let n1 = bp.total() as f64 + 1.0;
    let w = bp.omega();
    let mut out = Vec::with_capacity((bp.m() + 1) * (bp.p() + 1));
    for q1 in 0..=bp.m() {
        for q2 in 0..=bp.p() {
            let (x, y) = (q1 as f64, q2 as f64);
            out.push(EffectiveLevel {
                q1,
                q2,
                energy: n1 * w * (x + y) - 2.0 * w * x * y,
            });
        }
    }
    out
}

/// Operator restricted to `span{ |M-l, P-k, l, k> }`, the two-qudit space of
/// a band. States are ordered by `(l, k)` lexicographically.
#[derive(Debug, Clone)]
pub struct BandOperator {
    m: usize,
    p: usize,
    states: Vec<Occupation>,
    matrix: HermitianMatrix,
}

impl BandOperator {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
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

    /// `self - other`, both on the same band.
    pub fn difference(&self, other: &BandOperator) -> Result<BandOperator> {
        if (self.m, self.p) != (other.m, other.p) {
            return Err(Error::InvalidArgument(format!(
                "band ({}, {}) vs ({}, {})",
                self.m, self.p, other.m, other.p
            )));
        }
        Ok(BandOperator {
            m: self.m,
            p: self.p,
            states: self.states.clone(),
            matrix: self.matrix.scaled_add(1.0, &other.matrix, -1.0)?,
        })
    }
}

/// Band states `|M-l, P-k, l, k>` in `(l, k)` order.
pub fn band_states(m: usize, p: usize) -> Vec<Occupation> {
    let mut out = Vec::with_capacity((m + 1) * (p + 1));
    for l in 0..=m {
        for k in 0..=p {
            out.push(Occupation::new(m - l, p - k, l, k));
        }
    }
    out
}

/// Effective Hamiltonian assembled directly on the band states, without the
/// full Fock basis. Fails if the operator does not preserve the band.
pub fn build_band_effective(
    bp: &BandParams,
    c: &CouplingSet,
    form: EffectiveForm,
) -> Result<BandOperator> {
    c.require_integrable()?;
    let bp = BandParams::new(bp.m(), bp.p(), c)?;
    let expr = match form {
        EffectiveForm::ConservedCharges => charges_form(bp.total(), bp.omega()),
        EffectiveForm::SecondOrder => second_order_form(bp, c.j()),
    };
    let states = band_states(bp.m(), bp.p());
    let index: HashMap<Occupation, usize> =
        states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let d = states.len();
    let mut m = Array2::<f64>::zeros((d, d));
    for (col, occ) in states.iter().enumerate() {
        for (target, amp) in expr.act(occ) {
            let row = *index.get(&target).ok_or_else(|| Error::InvalidBand {
                m: bp.m(),
                p: bp.p(),
                reason: format!("effective operator maps {occ} outside the band to {target}"),
            })?;
            m[[row, col]] += amp;
        }
    }
    Ok(BandOperator {
        m: bp.m(),
        p: bp.p(),
        states,
        matrix: HermitianMatrix::from_real(m)?,
    })
}

pub fn restrict_to_band(op: &HermitianOperator, m: usize, p: usize) -> Result<BandOperator> {
    let total = op.basis().total();
    if m + p != total {
        return Err(Error::InvalidBand {
            m,
            p,
            reason: format!("M + P must equal the basis particle number {total}"),
        });
    }
    let states = band_states(m, p);
    let indices = states
        .iter()
        .map(|s| op.basis().index_of(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(BandOperator {
        m,
        p,
        states,
        matrix: op.matrix().submatrix(&indices)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::operators::{build_hamiltonian, diagonal_operator};

    fn setup(n: usize, m: usize, p: usize) -> (Arc<FockBasis>, BandParams, CouplingSet) {
        let c = CouplingSet::from_u_over_j(8.0).unwrap();
        (enumerate_basis(n), BandParams::new(m, p, &c).unwrap(), c)
    }

    fn spread(vals: &[f64]) -> f64 {
        vals.iter().cloned().fold(f64::MIN, f64::max)
            - vals.iter().cloned().fold(f64::MAX, f64::min)
    }

    #[test]
    fn zero_omega_gives_zero_matrix() {
        let c = CouplingSet::from_u_over_j(8.0)
            .unwrap()
            .with_j(0.0)
            .unwrap();
        let bp = BandParams::new(5, 2, &c).unwrap();
        assert_eq!(bp.omega(), 0.0);
        let h = build_effective_hamiltonian(
            &enumerate_basis(7),
            &bp,
            &c,
            EffectiveForm::ConservedCharges,
        )
        .unwrap();
        assert_eq!(h.matrix().frobenius_norm(), 0.0);
    }

    #[test]
    fn spectrum_count_and_origin() {
        let (_, bp, _) = setup(7, 5, 2);
        let levels = effective_spectrum(&bp);
        assert_eq!(levels.len(), 18);
        assert_eq!(levels[0].energy, 0.0);
    }

    #[test]
    fn forms_agree_up_to_constant_on_band() {
        let (b, bp, c) = setup(7, 5, 2);
        let charges =
            build_effective_hamiltonian(&b, &bp, &c, EffectiveForm::ConservedCharges).unwrap();
        let second = build_effective_hamiltonian(&b, &bp, &c, EffectiveForm::SecondOrder).unwrap();
        let diff = restrict_to_band(&second, 5, 2)
            .unwrap()
            .difference(&restrict_to_band(&charges, 5, 2).unwrap())
            .unwrap();
        let vals = diff.eigen().unwrap().values().to_vec();
        let scale = restrict_to_band(&charges, 5, 2)
            .unwrap()
            .matrix()
            .frobenius_norm();
        assert!(spread(&vals) < 1e-9 * scale, "spread {}", spread(&vals));
    }

    #[test]
    fn restricted_spectrum_matches_closed_form() {
        let (b, bp, c) = setup(7, 5, 2);
        let second = build_effective_hamiltonian(&b, &bp, &c, EffectiveForm::SecondOrder).unwrap();
        let band = restrict_to_band(&second, 5, 2).unwrap();
        let numeric = band.eigen().unwrap().values().to_vec();
        let mut closed: Vec<f64> = effective_spectrum(&bp).iter().map(|l| l.energy).collect();
        closed.sort_by(f64::total_cmp);
        let shift = numeric[0] - closed[0];
        for (x, y) in numeric.iter().zip(&closed) {
            assert!((x - shift - y).abs() < 1e-9 * bp.omega().abs(), "{x} {y}");
        }
    }

    #[test]
    fn restriction_basics() {
        let b = enumerate_basis(7);
        let id = diagonal_operator(&b, |_| 1.0).unwrap();
        let r = restrict_to_band(&id, 4, 3).unwrap();
        assert_eq!(r.dim(), 20);
        assert!(
            r.matrix()
                .scaled_add(1.0, &HermitianMatrix::identity(20), -1.0)
                .unwrap()
                .frobenius_norm()
                == 0.0
        );
        let n13 = diagonal_operator(&b, |o| (o[0] + o[2]) as f64).unwrap();
        let r = restrict_to_band(&n13, 4, 3).unwrap();
        for i in 0..20 {
            assert_eq!(r.matrix().get(i, i).re, 4.0);
        }
        assert!(matches!(
            restrict_to_band(&id, 4, 4),
            Err(Error::InvalidBand { .. })
        ));
    }

    #[test]
    fn hamiltonian_at_j_zero_is_flat_on_band() {
        let b = enumerate_basis(7);
        let c = CouplingSet::integrable(0.5, 4.5, 0.0).unwrap();
        let h = build_hamiltonian(&b, &c).unwrap();
        let band = restrict_to_band(&h, 5, 2).unwrap();
        let e0 = band.matrix().get(0, 0).re;
        for i in 0..band.dim() {
            for j in 0..band.dim() {
                let expect = if i == j { e0 } else { 0.0 };
                assert!((band.matrix().get(i, j).re - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn direct_band_build_matches_restriction() {
        let (b, bp, c) = setup(7, 5, 2);
        for form in [EffectiveForm::ConservedCharges, EffectiveForm::SecondOrder] {
            let full = restrict_to_band(
                &build_effective_hamiltonian(&b, &bp, &c, form).unwrap(),
                5,
                2,
            )
            .unwrap();
            let direct = build_band_effective(&bp, &c, form).unwrap();
            assert_eq!(direct.states(), full.states());
            assert!(direct.difference(&full).unwrap().matrix().frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_mismatched_total() {
        let (_, bp, c) = setup(7, 5, 2);
        let b8 = enumerate_basis(8);
        assert!(build_effective_hamiltonian(&b8, &bp, &c, EffectiveForm::SecondOrder).is_err());
    }
}
