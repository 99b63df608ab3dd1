//! Offline least-squares readout used to check the online rule.
//!
//! Solves `min_W ‖A·W − Z‖² + λ‖W‖²` for hidden activations `A`
//! (samples × neurons) and targets `Z` (samples × classes). The solve runs in
//! `f64` regardless of the simulation scalar. The result is never programmed
//! onto devices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::learning::{argmax, target};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix row",
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v.to_f64_lossy()),
        )
    }

    fn from_na(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(T::lit(m[(r, c)]));
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

/// ±1 one-hot target rows.
pub fn one_hot_targets<T: Scalar>(labels: &[usize], n_classes: usize) -> Result<Matrix<T>> {
    let mut data = Vec::with_capacity(labels.len() * n_classes);
    for &l in labels {
        if l >= n_classes {
            return Err(Error::OutOfRange {
                context: "class label",
                index: l,
                len: n_classes,
            });
        }
        data.extend((0..n_classes).map(|j| T::lit(f64::from(target(l, j)))));
    }
    Matrix::new(labels.len(), n_classes, data)
}

/// Relative singular-value cutoff below which the unregularised system is
/// treated as singular.
const RANK_TOLERANCE: f64 = 1e-10;

/// Ridge / pseudo-inverse readout weights (neurons × classes).
///
/// With `regularization == 0` the activation matrix must have full column
/// rank; otherwise [`Error::SingularSystem`] asks for a positive ridge term.
pub fn pseudo_inverse_readout<T: Scalar>(
    activations: &Matrix<T>,
    targets: &Matrix<T>,
    regularization: f64,
) -> Result<Matrix<T>> {
    if activations.rows() == 0 {
        return Err(Error::InvalidConfig(
            "regression needs at least one sample".into(),
        ));
    }
    if targets.rows() != activations.rows() {
        return Err(Error::DimensionMismatch {
            context: "regression targets",
            expected: activations.rows(),
            actual: targets.rows(),
        });
    }
    if !(regularization >= 0.0 && regularization.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "regularization must be a finite non-negative number, got {regularization}"
        )));
    }
    let a = activations.to_na();
    let z = targets.to_na();
    let w = if regularization > 0.0 {
        let n = a.ncols();
        let gram = a.transpose() * &a + DMatrix::<f64>::identity(n, n) * regularization;
        let rhs = a.transpose() * &z;
        gram.cholesky().ok_or(Error::SingularSystem)?.solve(&rhs)
    } else {
        if a.nrows() < a.ncols() {
            return Err(Error::SingularSystem);
        }
        let svd = a.svd(true, true);
        let s_max = svd.singular_values.max();
        if s_max == 0.0 || svd.singular_values.min() <= RANK_TOLERANCE * s_max {
            return Err(Error::SingularSystem);
        }
        svd.solve(&z, 0.0).map_err(|_| Error::SingularSystem)?
    };
    Ok(Matrix::from_na(&w))
}

/// Argmax class of `activation · weights`, lowest index on ties.
pub fn predict<T: Scalar>(weights: &Matrix<T>, activation: &[T]) -> Result<usize> {
    if activation.len() != weights.rows() {
        return Err(Error::DimensionMismatch {
            context: "oracle activation",
            expected: weights.rows(),
            actual: activation.len(),
        });
    }
    let mut y = vec![T::zero(); weights.cols()];
    for (a, row) in activation
        .iter()
        .zip(weights.data.chunks_exact(weights.cols()))
    {
        for (o, &w) in y.iter_mut().zip(row) {
            *o += *a * w;
        }
    }
    Ok(argmax(&y))
}
