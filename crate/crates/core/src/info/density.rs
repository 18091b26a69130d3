use std::collections::HashMap;

use ndarray::Array2;
use num_complex::Complex64;

use crate::basis::{Site, StateVector};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;

/// Allowed deviation of `tr(rho)` from 1 when constructing a density matrix.
pub const TRACE_TOL: f64 = 1e-12;
/// Looser trace check applied by [`linear_entropy`].
pub const ENTROPY_TRACE_TOL: f64 = 1e-8;
/// Slack on the bounds `0 <= E <= 1 - 1/d`.
pub const ENTROPY_BOUND_TOL: f64 = 1e-10;

/// Reduced density matrix on an ordered subset of sites.
///
/// Rows are labelled by the occupations of the kept modes (in the order of
/// `modes`), covering every total from 0 to N.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    modes: Vec<Site>,
    labels: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(modes: Vec<Site>, labels: Vec<Vec<usize>>, matrix: HermitianMatrix) -> Result<Self> {
        if labels.len() != matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: matrix.dim(),
            });
        }
        if labels.iter().any(|l| l.len() != modes.len()) {
            return Err(Error::InvalidDensityMatrix(
                "label arity differs from mode count".into(),
            ));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace = {tr}")));
        }
        let index: HashMap<_, _> = labels
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        if index.len() != labels.len() {
            return Err(Error::InvalidDensityMatrix("duplicate labels".into()));
        }
        Ok(Self {
            modes,
            labels,
            index,
            matrix,
        })
    }

    /// Mixture `sum_k w_k |v_k><v_k|` with the given weights.
    pub fn mixture(
        modes: Vec<Site>,
        labels: Vec<Vec<usize>>,
        components: &[(f64, Vec<Complex64>)],
    ) -> Result<Self> {
        let d = labels.len();
        let mut m = Array2::<Complex64>::zeros((d, d));
        for (w, v) in components {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            for i in 0..d {
                for j in 0..d {
                    m[[i, j]] += *w * v[i] * v[j].conj();
                }
            }
        }
        Self::new(modes, labels, HermitianMatrix::from_complex(m)?)
    }

    pub fn modes(&self) -> &[Site] {
        &self.modes
    }

    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.matrix.frobenius_norm().powi(2)
    }

    /// `<a|rho|b>`; labels not present in the matrix give zero.
    pub fn entry(&self, a: &[usize], b: &[usize]) -> Complex64 {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.matrix.get(i, j),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix.get(i, i).re).collect()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.matrix.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// Largest elementwise difference, matching rows by label.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        if self.modes != other.modes {
            return Err(Error::InvalidArgument(format!(
                "mode sets differ: {:?} vs {:?}",
                self.modes, other.modes
            )));
        }
        let mut labels: Vec<&Vec<usize>> = self.labels.iter().collect();
        labels.extend(other.labels.iter().filter(|l| !self.index.contains_key(*l)));
        let mut worst: f64 = 0.0;
        for a in &labels {
            for b in &labels {
                worst = worst.max((self.entry(a, b) - other.entry(a, b)).norm());
            }
        }
        Ok(worst)
    }
}

fn validate_subset(keep: &[Site]) -> Result<()> {
    let mut seen = [false; 4];
    for s in keep {
        if seen[s.index()] {
            return Err(Error::InvalidSubset(
                keep.iter().map(|s| s.number()).collect(),
            ));
        }
        seen[s.index()] = true;
    }
    if keep.is_empty() || keep.len() == 4 {
        return Err(Error::InvalidSubset(
            keep.iter().map(|s| s.number()).collect(),
        ));
    }
    Ok(())
}

/// Occupation tuples of `k` modes with totals `0..=n`, grouped by total and
/// lexicographically decreasing within a total.
pub fn mode_labels(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, k: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == k {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for x in (0..=remaining).rev() {
            prefix.push(x);
            fill(prefix, k, remaining - x, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=n {
        fill(&mut Vec::with_capacity(k), k, total, &mut out);
    }
    out
}

/// `rho_keep = tr_env |psi><psi|`.
pub fn partial_trace(psi: &StateVector, keep: &[Site]) -> Result<DensityMatrix> {
    validate_subset(keep)?;
    let env: Vec<Site> = Site::ALL
        .iter()
        .copied()
        .filter(|s| !keep.contains(s))
        .collect();
    let n = psi.basis().total();
    let labels = mode_labels(keep.len(), n);
    let index: HashMap<&Vec<usize>, usize> =
        labels.iter().enumerate().map(|(i, l)| (l, i)).collect();

    // Groups ordered by first appearance in the basis, so the summation
    // order and hence the output bits are reproducible.
    let mut group_of: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut groups: Vec<Vec<(usize, Complex64)>> = Vec::new();
    for (occ, &amp) in psi.basis().states().iter().zip(psi.amplitudes()) {
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        let kept: Vec<usize> = keep.iter().map(|s| occ.at(*s)).collect();
        let rest: Vec<usize> = env.iter().map(|s| occ.at(*s)).collect();
        let g = *group_of.entry(rest).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push((index[&kept], amp));
    }

    let d = labels.len();
    let mut m = Array2::<Complex64>::zeros((d, d));
    for group in &groups {
        for &(i, a) in group {
            for &(j, b) in group {
                m[[i, j]] += a * b.conj();
            }
        }
    }
    DensityMatrix::new(keep.to_vec(), labels, HermitianMatrix::from_complex(m)?)
}

/// `E(rho) = 1 - tr(rho^2)`, checked against `0 <= E <= 1 - 1/d`.
pub fn linear_entropy(rho: &DensityMatrix) -> Result<f64> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > ENTROPY_TRACE_TOL || tr.im.abs() > ENTROPY_TRACE_TOL {
        return Err(Error::InvalidDensityMatrix(format!("trace = {tr}")));
    }
    let value = 1.0 - rho.purity();
    let bound = 1.0 - 1.0 / rho.dim() as f64;
    if value < -ENTROPY_BOUND_TOL || value > bound + ENTROPY_BOUND_TOL {
        return Err(Error::EntropyOutOfBounds { value, bound });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_basis, Occupation};

    #[test]
    fn label_enumeration() {
        let l = mode_labels(2, 2);
        assert_eq!(
            l,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        assert_eq!(mode_labels(1, 5).len(), 6);
        assert_eq!(mode_labels(3, 4).len(), 35);
    }

    #[test]
    fn product_state_is_pure() {
        let b = enumerate_basis(7);
        let psi = StateVector::basis_state(&b, Occupation::new(5, 2, 0, 0)).unwrap();
        let rho = partial_trace(&psi, &[Site::ONE, Site::THREE]).unwrap();
        assert_eq!(rho.entry(&[5, 0], &[5, 0]).re, 1.0);
        assert!(linear_entropy(&rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn bell_like_state_entropy() {
        let b = enumerate_basis(1);
        let a = StateVector::basis_state(&b, Occupation::new(1, 0, 0, 0)).unwrap();
        let c = StateVector::basis_state(&b, Occupation::new(0, 1, 0, 0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::linear_combination(&[
            (Complex64::new(s, 0.0), &a),
            (Complex64::new(0.0, s), &c),
        ])
        .unwrap();
        let rho = partial_trace(&psi, &[Site::ONE]).unwrap();
        assert!((linear_entropy(&rho).unwrap() - 0.5).abs() < 1e-15);
        assert!(rho.min_eigenvalue().unwrap() > -1e-12);
    }

    #[test]
    fn invalid_subsets() {
        let b = enumerate_basis(2);
        let psi = StateVector::basis_state(&b, Occupation::new(2, 0, 0, 0)).unwrap();
        assert!(partial_trace(&psi, &[]).is_err());
        assert!(partial_trace(&psi, &Site::ALL).is_err());
        assert!(partial_trace(&psi, &[Site::ONE, Site::ONE]).is_err());
    }

    #[test]
    fn entropy_rejects_bad_trace() {
        let m = HermitianMatrix::from_real(ndarray::arr2(&[[0.5, 0.0], [0.0, 0.5]])).unwrap();
        let rho = DensityMatrix::new(vec![Site::ONE], vec![vec![0], vec![1]], m).unwrap();
        assert!((linear_entropy(&rho).unwrap() - 0.5).abs() < 1e-15);
        let bad = HermitianMatrix::from_real(ndarray::arr2(&[[0.7, 0.0], [0.0, 0.5]])).unwrap();
        assert!(DensityMatrix::new(vec![Site::ONE], vec![vec![0], vec![1]], bad).is_err());
    }
}
