//! Dense Hermitian matrices with a lazily computed, cached eigendecomposition.
//!
//! Every operator in this crate is Hermitian, and the ones that come out of
//! the Hamiltonian builders are real symmetric. Real matrices are stored and
//! diagonalized as `f64` (LAPACK `dsyevd`), complex ones as `Complex64`
//! (`zheevd`). The eigendecomposition is filled at most once per matrix and can
//! be shared read-only across threads afterwards.

use std::sync::OnceLock;

use ndarray::{Array1, Array2, Axis, ShapeBuilder};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Elementwise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum Dense {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

impl Dense {
    pub fn dim(&self) -> usize {
        match self {
            Dense::Real(m) => m.nrows(),
            Dense::Complex(m) => m.nrows(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match self {
            Dense::Real(m) => Complex64::new(m[[i, j]], 0.0),
            Dense::Complex(m) => m[[i, j]],
        }
    }

    pub fn to_complex(&self) -> Array2<Complex64> {
        match self {
            Dense::Real(m) => m.mapv(|x| Complex64::new(x, 0.0)),
            Dense::Complex(m) => m.clone(),
        }
    }
}

/// Eigenvectors stored as the columns of a unitary (orthogonal when real)
/// matrix.
#[derive(Debug, Clone)]
pub enum EigenVectors {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    values: Vec<f64>,
    vectors: EigenVectors,
}

impl Eigen {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &EigenVectors {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Column `k` as a complex vector.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        match &self.vectors {
            EigenVectors::Real(v) => v
                .column(k)
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
            EigenVectors::Complex(v) => v.column(k).to_vec(),
        }
    }

    /// Coefficients `V^dagger psi`.
    pub fn to_eigenbasis(&self, psi: &[Complex64]) -> Vec<Complex64> {
        match &self.vectors {
            EigenVectors::Real(v) => real_matvec(&v.t(), psi),
            EigenVectors::Complex(v) => {
                let x = Array1::from(psi.to_vec());
                v.t().mapv(|z| z.conj()).dot(&x).to_vec()
            }
        }
    }

    /// State `V c`.
    pub fn from_eigenbasis(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        match &self.vectors {
            EigenVectors::Real(v) => real_matvec(&v.view(), coeffs),
            EigenVectors::Complex(v) => v.dot(&Array1::from(coeffs.to_vec())).to_vec(),
        }
    }
}

/// Real matrix times complex vector, done as one real `n x 2` product.
fn real_matvec(m: &ndarray::ArrayView2<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut rhs = Array2::<f64>::zeros((x.len(), 2));
    for (k, z) in x.iter().enumerate() {
        rhs[[k, 0]] = z.re;
        rhs[[k, 1]] = z.im;
    }
    let out = m.dot(&rhs);
    out.axis_iter(Axis(0))
        .map(|row| Complex64::new(row[0], row[1]))
        .collect()
}

#[derive(Debug)]
pub struct HermitianMatrix {
    data: Dense,
    diagonal: bool,
    eigen: OnceLock<Eigen>,
}

impl Clone for HermitianMatrix {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self {
            data: self.data.clone(),
            diagonal: self.diagonal,
            eigen,
        }
    }
}

impl HermitianMatrix {
    pub fn from_real(m: Array2<f64>) -> Result<Self> {
        Self::new(Dense::Real(m))
    }

    /// Complex input whose imaginary parts all vanish is stored as real.
    pub fn from_complex(m: Array2<Complex64>) -> Result<Self> {
        if m.iter().all(|z| z.im == 0.0) {
            Self::from_real(m.mapv(|z| z.re))
        } else {
            Self::new(Dense::Complex(m))
        }
    }

    fn new(data: Dense) -> Result<Self> {
        let (r, c) = match &data {
            Dense::Real(m) => m.dim(),
            Dense::Complex(m) => m.dim(),
        };
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                got: c,
            });
        }
        let deviation = hermitian_deviation(&data);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let diagonal = match &data {
            Dense::Real(m) => m.indexed_iter().all(|((i, j), &x)| i == j || x == 0.0),
            Dense::Complex(m) => m
                .indexed_iter()
                .all(|((i, j), &x)| i == j || x == Complex64::new(0.0, 0.0)),
        };
        Ok(Self {
            data,
            diagonal,
            eigen: OnceLock::new(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_real(Array2::eye(dim)).expect("identity is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn data(&self) -> &Dense {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data.get(i, j)
    }

    pub fn is_real(&self) -> bool {
        matches!(self.data, Dense::Real(_))
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn to_complex(&self) -> Array2<Complex64> {
        self.data.to_complex()
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.data)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.data {
            Dense::Real(m) => m.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Dense::Complex(m) => m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// `A psi`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        if self.diagonal {
            return psi
                .iter()
                .enumerate()
                .map(|(i, z)| self.get(i, i) * z)
                .collect();
        }
        match &self.data {
            Dense::Real(m) => real_matvec(&m.view(), psi),
            Dense::Complex(m) => m.dot(&Array1::from(psi.to_vec())).to_vec(),
        }
    }

    /// `<psi|A|psi>` without any check on the imaginary part.
    pub fn quadratic_form(&self, psi: &[Complex64]) -> Complex64 {
        if self.diagonal {
            return psi
                .iter()
                .enumerate()
                .map(|(i, z)| self.get(i, i) * z.norm_sqr())
                .sum();
        }
        let a_psi = self.apply(psi);
        psi.iter().zip(&a_psi).map(|(l, r)| l.conj() * r).sum()
    }

    /// `|| A B - B A ||_F`.
    pub fn commutator_frobenius(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let norm = match (&self.data, &other.data) {
            (Dense::Real(a), Dense::Real(b)) => {
                let c = a.dot(b) - b.dot(a);
                c.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
            _ => {
                let (a, b) = (self.to_complex(), other.to_complex());
                let c = a.dot(&b) - b.dot(&a);
                c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            }
        };
        Ok(norm)
    }

    pub fn scaled_add(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        match (&self.data, &other.data) {
            (Dense::Real(a), Dense::Real(b)) => Self::from_real(a * alpha + b * beta),
            _ => Self::from_complex(self.to_complex() * alpha + other.to_complex() * beta),
        }
    }

    /// Principal submatrix on `indices`, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> Result<Self> {
        let n = indices.len();
        match &self.data {
            Dense::Real(m) => Self::from_real(Array2::from_shape_fn((n, n), |(i, j)| {
                m[[indices[i], indices[j]]]
            })),
            Dense::Complex(m) => Self::from_complex(Array2::from_shape_fn((n, n), |(i, j)| {
                m[[indices[i], indices[j]]]
            })),
        }
    }

    /// Cached eigendecomposition; computed on first use.
    pub fn eigen(&self) -> Result<&Eigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let computed = self.compute_eigen()?;
        // Another thread may have won the race; both results are equivalent.
        let _ = self.eigen.set(computed);
        Ok(self.eigen.get().expect("eigen cache filled"))
    }

    pub fn has_cached_eigen(&self) -> bool {
        self.eigen.get().is_some()
    }

    /// Ascending eigenvalues. Skips the eigenvectors when nothing is cached.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if let Some(e) = self.eigen.get() {
            return Ok(e.values.clone());
        }
        if self.diagonal {
            let mut v: Vec<f64> = (0..self.dim()).map(|i| self.get(i, i).re).collect();
            v.sort_by(f64::total_cmp);
            return Ok(v);
        }
        match &self.data {
            Dense::Real(m) => Ok(dsyevd(m, false)?.0),
            Dense::Complex(m) => Ok(zheevd(m, false)?.0),
        }
    }

    /// Frobenius norm of `V diag(lambda) V^dagger - A`.
    pub fn reconstruction_error(&self) -> Result<f64> {
        let eig = self.eigen()?;
        let n = self.dim();
        let mut err = 0.0;
        match eig.vectors() {
            EigenVectors::Real(v) => {
                let mut vl = v.clone();
                for (k, mut col) in vl.axis_iter_mut(Axis(1)).enumerate() {
                    col *= eig.values[k];
                }
                let rec = vl.dot(&v.t());
                for i in 0..n {
                    for j in 0..n {
                        err += (rec[[i, j]] - self.get(i, j)).norm_sqr();
                    }
                }
            }
            EigenVectors::Complex(v) => {
                let mut vl = v.clone();
                for (k, mut col) in vl.axis_iter_mut(Axis(1)).enumerate() {
                    col *= Complex64::new(eig.values[k], 0.0);
                }
                let rec = vl.dot(&v.t().mapv(|z| z.conj()));
                for i in 0..n {
                    for j in 0..n {
                        err += (rec[[i, j]] - self.get(i, j)).norm_sqr();
                    }
                }
            }
        }
        Ok(err.sqrt())
    }

    fn compute_eigen(&self) -> Result<Eigen> {
        let n = self.dim();
        if self.diagonal {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| self.get(a, a).re.total_cmp(&self.get(b, b).re));
            let values = order.iter().map(|&i| self.get(i, i).re).collect();
            let mut v = Array2::<f64>::zeros((n, n));
            for (k, &i) in order.iter().enumerate() {
                v[[i, k]] = 1.0;
            }
            return Ok(Eigen {
                values,
                vectors: EigenVectors::Real(v),
            });
        }
        match &self.data {
            Dense::Real(m) => {
                let (values, v) = dsyevd(m, true)?;
                Ok(Eigen {
                    values,
                    vectors: EigenVectors::Real(v.expect("vectors requested")),
                })
            }
            Dense::Complex(m) => {
                let (values, v) = zheevd(m, true)?;
                Ok(Eigen {
                    values,
                    vectors: EigenVectors::Complex(v.expect("vectors requested")),
                })
            }
        }
    }
}

fn hermitian_deviation(data: &Dense) -> f64 {
    let n = data.dim();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let d = (data.get(i, j) - data.get(j, i).conj()).norm();
            dev = dev.max(d);
        }
    }
    dev
}

fn column_major<T: Clone>(m: &Array2<T>) -> Vec<T> {
    m.t().iter().cloned().collect()
}

fn dsyevd(m: &Array2<f64>, vectors: bool) -> Result<(Vec<f64>, Option<Array2<f64>>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], vectors.then(|| Array2::zeros((0, 0)))));
    }
    let jobz = if vectors { b'V' } else { b'N' };
    let ni = n as i32;
    let mut a = column_major(m);
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut work = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    // SAFETY: buffers are sized per the LAPACK workspace query.
    unsafe {
        lapack::dsyevd(
            jobz, b'L', ni, &mut a, ni, &mut w, &mut work, -1, &mut iwork, -1, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    let lwork = work[0] as usize;
    let liwork = iwork[0] as usize;
    let mut work = vec![0.0; lwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    unsafe {
        lapack::dsyevd(
            jobz,
            b'L',
            ni,
            &mut a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    let v = if vectors {
        Some(Array2::from_shape_vec((n, n).f(), a).expect("n x n buffer"))
    } else {
        None
    };
    Ok((w, v))
}

fn zheevd(m: &Array2<Complex64>, vectors: bool) -> Result<(Vec<f64>, Option<Array2<Complex64>>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], vectors.then(|| Array2::zeros((0, 0)))));
    }
    let jobz = if vectors { b'V' } else { b'N' };
    let ni = n as i32;
    let mut a = column_major(m);
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut work = vec![Complex64::new(0.0, 0.0); 1];
    let mut rwork = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::zheevd(
            jobz, b'L', ni, &mut a, ni, &mut w, &mut work, -1, &mut rwork, -1, &mut iwork, -1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    let lwork = work[0].re as usize;
    let lrwork = rwork[0] as usize;
    let liwork = iwork[0] as usize;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1)];
    let mut rwork = vec![0.0; lrwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    unsafe {
        lapack::zheevd(
            jobz,
            b'L',
            ni,
            &mut a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut rwork,
            lrwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    let v = if vectors {
        Some(Array2::from_shape_vec((n, n).f(), a).expect("n x n buffer"))
    } else {
        None
    };
    Ok((w, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let m = ndarray::arr2(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(
            HermitianMatrix::from_real(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn real_two_by_two_spectrum() {
        let m = ndarray::arr2(&[[0.5, -0.5], [-0.5, 0.5]]);
        let h = HermitianMatrix::from_real(m).unwrap();
        let e = h.eigen().unwrap();
        assert!((e.values()[0]).abs() < 1e-15);
        assert!((e.values()[1] - 1.0).abs() < 1e-15);
        assert!(h.reconstruction_error().unwrap() < 1e-14);
    }

    #[test]
    fn complex_hermitian_round_trip() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let m = ndarray::arr2(&[
            [2.0 * one, i, 0.5 * one],
            [-i, one, 0.3 * i],
            [0.5 * one, -0.3 * i, -one],
        ]);
        let h = HermitianMatrix::from_complex(m).unwrap();
        assert!(!h.is_real());
        assert!(h.reconstruction_error().unwrap() < 1e-13);
        let vals = h.eigen().unwrap().values().to_vec();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let tr: f64 = vals.iter().sum();
        assert!((tr - 2.0).abs() < 1e-13);
        assert_eq!(h.eigenvalues().unwrap(), vals);
    }

    #[test]
    fn eigenbasis_round_trip() {
        let m = ndarray::arr2(&[[1.0, 0.2, 0.0], [0.2, -1.0, 0.7], [0.0, 0.7, 0.3]]);
        let h = HermitianMatrix::from_real(m).unwrap();
        let e = h.eigen().unwrap();
        let psi = vec![
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.3, 0.0),
            Complex64::new(0.0, 0.9),
        ];
        let back = e.from_eigenbasis(&e.to_eigenbasis(&psi));
        for (a, b) in psi.iter().zip(&back) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn diagonal_fast_path_sorts() {
        let m = Array2::from_diag(&ndarray::arr1(&[3.0, -1.0, 2.0]));
        let h = HermitianMatrix::from_real(m).unwrap();
        assert!(h.is_diagonal());
        assert_eq!(h.eigen().unwrap().values(), &[-1.0, 2.0, 3.0]);
        assert!(h.reconstruction_error().unwrap() < 1e-15);
    }
}
