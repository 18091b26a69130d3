//! Polynomials in bosonic creation and annihilation operators.
//!
//! A [`Monomial`] is written left to right as in the usual notation and acts
//! on a ket right to left. Applying one to a Fock state either annihilates it
//! or yields a single Fock state with a real coefficient, so every operator
//! built here has a real matrix.

use std::ops::{Add, Mul, Neg, Sub};

use crate::basis::{Occupation, Site};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create(Site),
    Annihilate(Site),
}

pub fn create(site: Site) -> Ladder {
    Ladder::Create(site)
}

pub fn annihilate(site: Site) -> Ladder {
    Ladder::Annihilate(site)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub ops: Vec<Ladder>,
}

impl Monomial {
    /// Image of `|occ>`, or `None` when an annihilator hits an empty mode.
    pub fn apply(&self, occ: &Occupation) -> Option<(f64, Occupation)> {
        let mut n = occ.0;
        // Product of the integer factors under one square root, so that
        // number operators come out exact.
        let mut weight: u128 = 1;
        for op in self.ops.iter().rev() {
            match *op {
                Ladder::Create(s) => {
                    let k = s.index();
                    n[k] += 1;
                    weight *= n[k] as u128;
                }
                Ladder::Annihilate(s) => {
                    let k = s.index();
                    if n[k] == 0 {
                        return None;
                    }
                    weight *= n[k] as u128;
                    n[k] -= 1;
                }
            }
        }
        Some((self.coeff * (weight as f64).sqrt(), Occupation(n)))
    }
}

/// Linear combination of monomials.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expr {
    terms: Vec<Monomial>,
}

impl Expr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::monomial(1.0, vec![])
    }

    pub fn monomial(coeff: f64, ops: Vec<Ladder>) -> Self {
        Self {
            terms: vec![Monomial { coeff, ops }],
        }
    }

    /// `N_site = a_site^dagger a_site`.
    pub fn number(site: Site) -> Self {
        Self::monomial(1.0, vec![create(site), annihilate(site)])
    }

    /// `a_to^dagger a_from`.
    pub fn hop(to: Site, from: Site) -> Self {
        Self::monomial(1.0, vec![create(to), annihilate(from)])
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn scale(mut self, factor: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.coeff *= factor);
        self
    }

    /// Sparse image of `|occ>`; repeated targets are not merged.
    pub fn act(&self, occ: &Occupation) -> impl Iterator<Item = (Occupation, f64)> + '_ {
        let occ = *occ;
        self.terms
            .iter()
            .filter_map(move |t| t.apply(&occ).map(|(c, o)| (o, c)))
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(mut self, rhs: Expr) -> Expr {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-1.0)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for l in &self.terms {
            for r in &rhs.terms {
                let mut ops = l.ops.clone();
                ops.extend_from_slice(&r.ops);
                terms.push(Monomial {
                    coeff: l.coeff * r.coeff,
                    ops,
                });
            }
        }
        Expr { terms }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn creation_and_annihilation_amplitudes() {
        let occ = Occupation::new(2, 0, 3, 0);
        let up = Expr::monomial(1.0, vec![create(Site::ONE)]);
        let (o, c) = up.act(&occ).next().unwrap();
        assert_eq!(o, Occupation::new(3, 0, 3, 0));
        assert!((c - 3f64.sqrt()).abs() < 1e-15);

        let down = Expr::monomial(1.0, vec![annihilate(Site::TWO)]);
        assert_eq!(down.act(&occ).count(), 0);
    }

    #[test]
    fn hop_matrix_element() {
        // a1^dagger a3 |2,0,3,0> = sqrt(3) sqrt(3) |3,0,2,0>
        let (o, c) = Expr::hop(Site::ONE, Site::THREE)
            .act(&Occupation::new(2, 0, 3, 0))
            .next()
            .unwrap();
        assert_eq!(o, Occupation::new(3, 0, 2, 0));
        assert!((c - 3.0).abs() < 1e-15);
    }

    #[test]
    fn anti_normal_order_counts_plus_one() {
        // a a^dagger = N + 1
        let aad = Expr::monomial(1.0, vec![annihilate(Site::FOUR), create(Site::FOUR)]);
        let (o, c) = aad.act(&Occupation::new(0, 0, 0, 4)).next().unwrap();
        assert_eq!(o, Occupation::new(0, 0, 0, 4));
        assert!((c - 5.0).abs() < 1e-14);
    }

    #[test]
    fn products_distribute() {
        let e = (Expr::number(Site::ONE) + Expr::number(Site::THREE)) * Expr::number(Site::TWO);
        assert_eq!(e.terms().len(), 2);
        let total: f64 = e.act(&Occupation::new(1, 2, 3, 0)).map(|(_, c)| c).sum();
        assert!((total - 8.0).abs() < 1e-13);
    }
}
