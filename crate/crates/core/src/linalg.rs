//! Dense complex linear-algebra helpers shared by the other modules.
//!
//! Operators are `DMatrix<Complex64>`. nalgebra stores matrices column-major,
//! so the column-stacking vectorization `vec(X)` is exactly the storage order
//! of `X`: `vec(X)[i + j*d] = X[(i, j)]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn vectorize(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

pub fn devectorize(v: &CVector, d: usize) -> CMatrix {
    assert_eq!(
        v.len(),
        d * d,
        "vector length is not a perfect square of {d}"
    );
    CMatrix::from_column_slice(d, d, v.as_slice())
}

pub fn trace(x: &CMatrix) -> Complex64 {
    x.diagonal().iter().sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn hs_norm(x: &CMatrix) -> f64 {
    x.norm()
}

/// `‖X − X†‖_F`.
pub fn hermiticity_defect(x: &CMatrix) -> f64 {
    (x - x.adjoint()).norm()
}

pub fn is_hermitian(x: &CMatrix, rel_tol: f64) -> bool {
    x.is_square() && hermiticity_defect(x) <= rel_tol * x.norm()
}

/// Eigenvalues (ascending) and matching eigenvectors of a Hermitian matrix.
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (h + h.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(h.nrows(), order.len(), |r, k| {
        eig.eigenvectors[(r, order[k])]
    });
    (values, vectors)
}

/// Eigenvalues (ascending) of a real symmetric matrix.
pub fn eigvalsh_real(m: &RMatrix) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Hermitian matrix with Gaussian entries (GUE-like, unnormalized).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let a = random_complex(rng, d, d);
    (&a + a.adjoint()) * c(0.5)
}

/// Random Hermitian matrix scaled to unit Hilbert-Schmidt norm.
pub fn random_unit_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let h = random_hermitian(rng, d);
    let n = h.norm();
    h / c(n)
}

/// Random density matrix `A A† / Tr[A A†]`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let a = random_complex(rng, d, d);
    let rho = &a * a.adjoint();
    let tr = trace(&rho);
    rho / tr
}

/// Serialized form of a complex matrix: rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexMatrixRepr(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for ComplexMatrixRepr {
    fn from(m: &CMatrix) -> Self {
        ComplexMatrixRepr(
            (0..m.nrows())
                .map(|r| {
                    (0..m.ncols())
                        .map(|k| [m[(r, k)].re, m[(r, k)].im])
                        .collect()
                })
                .collect(),
        )
    }
}

impl TryFrom<ComplexMatrixRepr> for CMatrix {
    type Error = Error;

    fn try_from(repr: ComplexMatrixRepr) -> Result<Self> {
        let rows = repr.0.len();
        let cols = repr.0.first().map_or(0, Vec::len);
        if repr.0.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(
                "ragged complex matrix rows".into(),
            ));
        }
        Ok(CMatrix::from_fn(rows, cols, |r, k| {
            let [re, im] = repr.0[r][k];
            Complex64::new(re, im)
        }))
    }
}

/// Serialized form of a real matrix: nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealMatrixRepr(pub Vec<Vec<f64>>);

impl From<&RMatrix> for RealMatrixRepr {
    fn from(m: &RMatrix) -> Self {
        RealMatrixRepr(
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|k| m[(r, k)]).collect())
                .collect(),
        )
    }
}

impl TryFrom<RealMatrixRepr> for RMatrix {
    type Error = Error;

    fn try_from(repr: RealMatrixRepr) -> Result<Self> {
        let rows = repr.0.len();
        let cols = repr.0.first().map_or(0, Vec::len);
        if repr.0.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged real matrix rows".into()));
        }
        Ok(RMatrix::from_fn(rows, cols, |r, k| repr.0[r][k]))
    }
}

/// serde adapter for `RMatrix` fields.
pub(crate) mod real_matrix_serde {
    use super::{RMatrix, RealMatrixRepr};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &RMatrix, s: S) -> Result<S::Ok, S::Error> {
        RealMatrixRepr::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RMatrix, D::Error> {
        let repr = RealMatrixRepr::deserialize(d)?;
        RMatrix::try_from(repr).map_err(serde::de::Error::custom)
    }
}

/// serde adapter for `Option<RMatrix>` fields.
pub(crate) mod opt_real_matrix_serde {
    use super::{RMatrix, RealMatrixRepr};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<RMatrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(RealMatrixRepr::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<RMatrix>, D::Error> {
        Option::<RealMatrixRepr>::deserialize(d)?
            .map(RMatrix::try_from)
            .transpose()
            .map_err(serde::de::Error::custom)
    }
}
