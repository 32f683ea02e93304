//! Dense complex linear-algebra helpers shared by every module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`; eigen-decompositions of
//! Hermitian inputs are always returned in descending eigenvalue order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{QldpError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Rejects matrices carrying NaN or infinite entries.
pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(QldpError::InvalidArgument(
            "matrix has non-finite entries".into(),
        ))
    }
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(QldpError::InvalidArgument(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Largest elementwise modulus of `M - M†`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut err = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.nrows() == m.ncols() && hermiticity_error(m) <= tol
}

/// Largest elementwise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real inner product `Re Tr(A† B)`.
pub fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `(X - X†) / 2`.
pub fn skew(x: &CMatrix) -> CMatrix {
    (x - x.adjoint()) * c(0.5, 0.0)
}

/// `(X + X†) / 2`.
pub fn hermitian_part(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()) * c(0.5, 0.0)
}

/// Hermitian eigen-decomposition with eigenvalues sorted descending and the
/// eigenvector columns permuted to match.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn eigenvalues_desc(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Rank-one projector `|v⟩⟨v|`.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn from_real_diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&x| c(x, 0.0)),
    ))
}

/// `⟨v|M|v⟩`, real part.
pub fn expectation(m: &CMatrix, v: &CVector) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

pub fn random_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Normalised vector drawn uniformly from the unit sphere of `C^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| complex_gaussian(rng));
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Q factor of a QR decomposition with the diagonal of R made real positive.
///
/// For square input of full rank this is the unique unitary closest to the
/// Gram–Schmidt orthonormalisation of the columns.
pub fn qf(m: &CMatrix) -> CMatrix {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..q.ncols().min(r.nrows()) {
        let d = r[(k, k)];
        let mag = d.norm();
        if mag > 0.0 {
            let phase = d / mag;
            for i in 0..q.nrows() {
                q[(i, k)] *= phase;
            }
        }
    }
    q
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fixing).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    qf(&random_ginibre(n, n, rng))
}

/// `‖U†U − I‖_max`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Extends orthonormal columns to a full unitary basis of `C^n` by
/// Gram–Schmidt against the standard basis vectors.
pub fn complete_basis(columns: &CMatrix) -> CMatrix {
    let n = columns.nrows();
    let mut basis: Vec<CVector> = (0..columns.ncols())
        .map(|k| columns.column(k).into_owned())
        .collect();
    let mut e = 0;
    while basis.len() < n && e < n {
        let mut v = CVector::zeros(n);
        v[e] = ONE;
        e += 1;
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / c(norm, 0.0));
        }
    }
    CMatrix::from_columns(&basis)
}

/// Random Hermitian positive semidefinite matrix `G G†` with unit trace.
pub fn random_density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(n, n, rng);
    let m = &g * g.adjoint();
    let tr = trace(&m).re;
    hermitian_part(&(m / c(tr, 0.0)))
}

/// Random Hermitian PSD matrix `G G†` (no normalisation).
pub fn random_psd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(n, n, rng);
    hermitian_part(&(&g * g.adjoint()))
}

/// Random isometry `C^cols → C^rows` (Haar columns).
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let q = qf(&random_ginibre(rows, cols, rng));
    q.columns(0, cols).into_owned()
}
