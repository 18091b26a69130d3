use std::f64::consts::PI;

use serde::Serialize;

use crate::basis::Site;
use crate::error::{Error, Result};

/// Interaction and tunneling parameters of the plaquette Hamiltonian.
///
/// `u` holds the inter-site couplings `U_ij` with 0-based indices; it is
/// symmetric with a zero diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingSet {
    u0: f64,
    u: [[f64; 4]; 4],
    j: f64,
}

impl CouplingSet {
    pub fn new(u0: f64, u: [[f64; 4]; 4], j: f64) -> Result<Self> {
        if !u0.is_finite() || !j.is_finite() || u.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCouplings("non-finite coupling".into()));
        }
        for i in 0..4 {
            if u[i][i] != 0.0 {
                return Err(Error::InvalidCouplings(format!(
                    "diagonal U_{0}{0} = {1} must be zero",
                    i + 1,
                    u[i][i]
                )));
            }
            for k in 0..i {
                if u[i][k] != u[k][i] {
                    return Err(Error::InvalidCouplings(format!(
                        "U_{}{} != U_{}{}",
                        i + 1,
                        k + 1,
                        k + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { u0, u, j })
    }

    /// Integrable couplings: `U13 = U24 = U0`, nearest neighbours all `U12`.
    pub fn integrable(u0: f64, u12: f64, j: f64) -> Result<Self> {
        let mut u = [[0.0; 4]; 4];
        for (a, b) in [(0, 1), (0, 3), (1, 2), (2, 3)] {
            u[a][b] = u12;
            u[b][a] = u12;
        }
        for (a, b) in [(0, 2), (1, 3)] {
            u[a][b] = u0;
            u[b][a] = u0;
        }
        Self::new(u0, u, j)
    }

    /// `J = 1`, `U0 = 0` and `U12 = 4 U/J`, so that `U = (U12 - U0)/4` equals
    /// the requested ratio. Only `U` enters the dynamics at fixed `N`.
    pub fn from_u_over_j(u_over_j: f64) -> Result<Self> {
        Self::integrable(0.0, 4.0 * u_over_j, 1.0)
    }

    /// Same as [`from_u_over_j`](Self::from_u_over_j) with an explicit `U0/J`.
    pub fn from_ratios(u_over_j: f64, u0_over_j: f64) -> Result<Self> {
        Self::integrable(u0_over_j, u0_over_j + 4.0 * u_over_j, 1.0)
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn u_matrix(&self) -> &[[f64; 4]; 4] {
        &self.u
    }

    pub fn u_pair(&self, a: Site, b: Site) -> f64 {
        self.u[a.index()][b.index()]
    }

    /// Copy with `U_ab = U_ba = value`.
    pub fn with_pair(&self, a: Site, b: Site, value: f64) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidCouplings("U_ii is fixed at zero".into()));
        }
        let mut u = self.u;
        u[a.index()][b.index()] = value;
        u[b.index()][a.index()] = value;
        Self::new(self.u0, u, self.j)
    }

    pub fn with_j(&self, j: f64) -> Result<Self> {
        Self::new(self.u0, self.u, j)
    }

    pub fn is_integrable(&self) -> bool {
        let u = &self.u;
        u[0][2] == self.u0
            && u[1][3] == self.u0
            && u[0][1] == u[0][3]
            && u[0][1] == u[1][2]
            && u[0][1] == u[2][3]
    }

    pub(crate) fn require_integrable(&self) -> Result<()> {
        if self.is_integrable() {
            Ok(())
        } else {
            Err(Error::NotIntegrable)
        }
    }

    /// Nearest-neighbour coupling `U12` (meaningful under integrability).
    pub fn u12(&self) -> f64 {
        self.u[0][1]
    }

    /// `U = (U12 - U0) / 4`.
    pub fn derived_u(&self) -> f64 {
        (self.u12() - self.u0) / 4.0
    }
}

/// Band labels `(M, P)` with the resonant-tunneling frequency and protocol
/// time derived from the couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandParams {
    m: usize,
    p: usize,
    derived_u: f64,
    omega: f64,
    t_m: f64,
}

impl BandParams {
    /// Requires integrable couplings, `M > P`, `M - P >= 2` and `U != 0`.
    pub fn new(m: usize, p: usize, c: &CouplingSet) -> Result<Self> {
        c.require_integrable()?;
        let invalid = |reason: &str| Error::InvalidBand {
            m,
            p,
            reason: reason.to_string(),
        };
        if m <= p {
            return Err(invalid("M must exceed P"));
        }
        if m - p < 2 {
            return Err(invalid(
                "|M - P| = 1 makes the second-order denominators singular",
            ));
        }
        let derived_u = c.derived_u();
        if derived_u == 0.0 {
            return Err(invalid("U = (U12 - U0)/4 vanishes"));
        }
        let d = (m - p) as f64;
        let omega = c.j() * c.j() / (4.0 * derived_u * (d * d - 1.0));
        let t_m = PI / (2.0 * omega);
        Ok(Self {
            m,
            p,
            derived_u,
            omega,
            t_m,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn total(&self) -> usize {
        self.m + self.p
    }

    pub fn derived_u(&self) -> f64 {
        self.derived_u
    }

    /// `Omega = J^2 / (4 U ((M-P)^2 - 1))`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `t_m = pi / (2 Omega)`; infinite when `J = 0`.
    pub fn t_m(&self) -> f64 {
        self.t_m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let mut u = [[0.0; 4]; 4];
        u[0][1] = 1.0;
        assert!(CouplingSet::new(0.0, u, 1.0).is_err());
        u[1][0] = 1.0;
        assert!(CouplingSet::new(0.0, u, 1.0).is_ok());
        u[2][2] = 1.0;
        assert!(CouplingSet::new(0.0, u, 1.0).is_err());
    }

    #[test]
    fn integrability_predicate() {
        let c = CouplingSet::integrable(0.3, 1.7, 1.0).unwrap();
        assert!(c.is_integrable());
        let broken = c.with_pair(Site::TWO, Site::THREE, 1.8).unwrap();
        assert!(!broken.is_integrable());
        let broken = c.with_pair(Site::TWO, Site::FOUR, 0.0).unwrap();
        assert!(!broken.is_integrable());
    }

    #[test]
    fn operating_point_frequency() {
        let c = CouplingSet::from_u_over_j(8.0).unwrap();
        assert_eq!(c.derived_u(), 8.0);
        let bp = BandParams::new(15, 10, &c).unwrap();
        // Omega/J = 1/(4 * 8 * 24)
        assert!((bp.omega() - 1.0 / 768.0).abs() < 1e-18);
        assert!((bp.t_m() - 384.0 * PI).abs() < 1e-10);
        assert!((bp.t_m() * bp.omega() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn band_validation() {
        let c = CouplingSet::from_u_over_j(8.0).unwrap();
        assert!(BandParams::new(10, 15, &c).is_err());
        assert!(BandParams::new(6, 5, &c).is_err());
        assert!(BandParams::new(5, 5, &c).is_err());
        let flat = CouplingSet::integrable(1.0, 1.0, 1.0).unwrap();
        assert!(BandParams::new(5, 2, &flat).is_err());
        let broken = c.with_pair(Site::ONE, Site::THREE, 2.0).unwrap();
        assert!(matches!(
            BandParams::new(5, 2, &broken),
            Err(Error::NotIntegrable)
        ));
    }
}
