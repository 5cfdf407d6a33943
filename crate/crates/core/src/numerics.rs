//! Minimal dense linear algebra and activation kernels.
//!
//! Everything is `f64`, row-major, with a deterministic left-to-right
//! summation order so that runs are bit-reproducible given a seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Dense real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows * cols");
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Matrix-vector product. Summation is left-to-right over columns.
    pub fn matvec(&self, v: &Vector) -> Result<Vector> {
        if self.cols != v.dim() {
            return Err(Error::shape(
                "matvec",
                "matrix",
                self.shape_str(),
                "vector",
                format!("{}", v.dim()),
            ));
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v.data.iter()) {
                acc += a * b;
            }
            out[i] = acc;
        }
        Ok(Vector::from(out))
    }

    /// `self^T * v`, without materializing the transpose.
    pub fn matvec_transpose(&self, v: &Vector) -> Result<Vector> {
        if self.rows != v.dim() {
            return Err(Error::shape(
                "matvec_transpose",
                "matrix",
                self.shape_str(),
                "vector",
                format!("{}", v.dim()),
            ));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v.data[i];
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row.iter()) {
                *o += vi * a;
            }
        }
        Ok(Vector::from(out))
    }

    /// Rank-1 update `self += a * b^T`; the gradient accumulation primitive.
    pub fn add_outer(&mut self, a: &Vector, b: &Vector) -> Result<()> {
        if self.rows != a.dim() || self.cols != b.dim() {
            return Err(Error::shape(
                "add_outer",
                "matrix",
                self.shape_str(),
                "outer product",
                format!("{}x{}", a.dim(), b.dim()),
            ));
        }
        for i in 0..self.rows {
            let ai = a.data[i];
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (r, bj) in row.iter_mut().zip(b.data.iter()) {
                *r += ai * bj;
            }
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                "left",
                self.shape_str(),
                "right",
                other.shape_str(),
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += aik * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(
                "matrix add",
                "left",
                self.shape_str(),
                "right",
                other.shape_str(),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(
                "matrix sub",
                "left",
                self.shape_str(),
                "right",
                other.shape_str(),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }

    /// Gauss-Jordan inverse with partial pivoting; intended for the small
    /// covariance blocks of the Kalman oracle.
    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::InvalidArgument(format!(
                "cannot invert non-square matrix {}",
                self.shape_str()
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if a.get(r, col).abs() > a.get(pivot, col).abs() {
                    pivot = r;
                }
            }
            let p = a.get(pivot, col);
            if p.abs() < 1e-300 {
                return Err(Error::InvalidArgument(
                    "singular matrix in inverse".to_string(),
                ));
            }
            if pivot != col {
                for j in 0..n {
                    let (x, y) = (a.get(col, j), a.get(pivot, j));
                    a.set(col, j, y);
                    a.set(pivot, j, x);
                    let (x, y) = (inv.get(col, j), inv.get(pivot, j));
                    inv.set(col, j, y);
                    inv.set(pivot, j, x);
                }
            }
            let p = a.get(col, col);
            for j in 0..n {
                a.set(col, j, a.get(col, j) / p);
                inv.set(col, j, inv.get(col, j) / p);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.set(r, j, a.get(r, j) - f * a.get(col, j));
                    inv.set(r, j, inv.get(r, j) - f * inv.get(col, j));
                }
            }
        }
        Ok(inv)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Lower-triangular Cholesky factor `L` with `L Lᵀ = self`, accepting
    /// positive *semi*-definite input: a pivot within `tol` of zero zeroes its
    /// column instead of failing. Rejects asymmetric or indefinite matrices.
    pub fn cholesky_psd(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::InvalidArgument(format!(
                "cholesky needs a square matrix, got {}",
                self.shape_str()
            )));
        }
        let n = self.rows;
        let scale = self.max_abs().max(1.0);
        let tol = 1e-12 * scale;
        for i in 0..n {
            for j in 0..i {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return Err(Error::InvalidArgument(
                        "cholesky needs a symmetric matrix".to_string(),
                    ));
                }
            }
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if d < -tol {
                return Err(Error::InvalidArgument(
                    "cholesky: matrix is not positive semi-definite".to_string(),
                ));
            }
            let pivot = if d <= tol { 0.0 } else { d.sqrt() };
            l.set(j, j, pivot);
            for i in j + 1..n {
                if pivot == 0.0 {
                    continue;
                }
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / pivot);
            }
        }
        Ok(l)
    }
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector {
            data: vec![0.0; dim],
        }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Vector { data: s.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.zip_with(other, "vector add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.zip_with(other, "vector sub", |a, b| a - b)
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Vector) -> Result<Vector> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    pub fn add_assign(&mut self, other: &Vector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::shape(
                "vector add_assign",
                "left",
                format!("{}", self.dim()),
                "right",
                format!("{}", other.dim()),
            ));
        }
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector {
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector {
            data: self.data.iter().map(|a| f(*a)).collect(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for a in &self.data {
            acc += a * a;
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn zip_with(
        &self,
        other: &Vector,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Vector> {
        if self.dim() != other.dim() {
            return Err(Error::shape(
                op,
                "left",
                format!("{}", self.dim()),
                "right",
                format!("{}", other.dim()),
            ));
        }
        Ok(Vector {
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }
}

impl From<Vec<f64>> for Vector {
    fn from(data: Vec<f64>) -> Self {
        Vector { data }
    }
}

/// Nonlinear activation kinds used by the cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn eval_scalar(self, x: f64) -> f64 {
        match self {
            // Branch on sign so large |x| saturates without overflow.
            Activation::Sigmoid => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed in terms of the activation's *output* value:
    /// `s * (1 - s)` for sigmoid, `1 - t^2` for tanh.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn eval(self, v: &Vector) -> Vector {
        v.map(|x| self.eval_scalar(x))
    }

    pub fn derivative(self, activated: &Vector) -> Vector {
        activated.map(|y| self.derivative_from_output(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_identity() {
        let m = Matrix::identity(2);
        let v = Vector::from_slice(&[3.0, -1.0]);
        assert_eq!(m.matvec(&v).unwrap().data(), &[3.0, -1.0]);
    }

    #[test]
    fn matvec_zero_annihilates() {
        let m = Matrix::zeros(3, 2);
        let v = Vector::from_slice(&[7.0, -2.5]);
        assert_eq!(m.matvec(&v).unwrap().data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn matvec_hand_sum() {
        // Cross-checked by the scalar-loop oracle below.
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let v = Vector::from_slice(&[1.0, 1.0]);
        let got = m.matvec(&v).unwrap();
        assert_eq!(got.data(), &[3.0, 7.0]);

        let mut oracle = vec![0.0; 2];
        for i in 0..2 {
            for j in 0..2 {
                oracle[i] += m.get(i, j) * v.get(j);
            }
        }
        assert_eq!(got.data(), oracle.as_slice());
    }

    #[test]
    fn matvec_shape_error_names_operands() {
        let m = Matrix::zeros(2, 3);
        let v = Vector::zeros(2);
        let err = m.matvec(&v).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("matvec"), "{msg}");
    }

    #[test]
    fn sigmoid_symmetry_and_saturation() {
        assert_eq!(Activation::Sigmoid.eval_scalar(0.0), 0.5);
        let s = Activation::Sigmoid.eval_scalar(-40.0);
        assert!(s >= 0.0 && s <= 1e-17 && s.is_finite());
        // Against a high-precision expansion: sigmoid(-40) = e^-40/(1+e^-40).
        let hp = (-40.0f64).exp() / (1.0 + (-40.0f64).exp());
        assert!((s - hp).abs() < 1e-30);
    }

    #[test]
    fn tanh_odd() {
        assert_eq!(Activation::Tanh.eval_scalar(0.0), 0.0);
        assert!((Activation::Tanh.eval_scalar(1.0) + Activation::Tanh.eval_scalar(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn derivative_trivial_points() {
        assert_eq!(Activation::Sigmoid.derivative_from_output(0.5), 0.25);
        assert_eq!(Activation::Tanh.derivative_from_output(0.0), 1.0);
    }

    #[test]
    fn sigmoid_derivative_at_0_9_output() {
        // 0.9 * (1 - 0.9) = 0.09; cross-checked by finite differences at the
        // preimage x = ln(0.9 / 0.1).
        let d = Activation::Sigmoid.derivative_from_output(0.9);
        assert!((d - 0.09).abs() < 1e-15);
        let x = (0.9f64 / 0.1).ln();
        let h = 1e-6;
        let fd = (Activation::Sigmoid.eval_scalar(x + h) - Activation::Sigmoid.eval_scalar(x - h))
            / (2.0 * h);
        assert!((d - fd).abs() < 1e-9);
    }

    #[test]
    fn sigmoid_derivative_matches_finite_differences_on_grid() {
        let h = 1e-6;
        let mut x = -5.0;
        while x <= 5.0 {
            let s = Activation::Sigmoid.eval_scalar(x);
            let analytic = Activation::Sigmoid.derivative_from_output(s);
            let fd = (Activation::Sigmoid.eval_scalar(x + h)
                - Activation::Sigmoid.eval_scalar(x - h))
                / (2.0 * h);
            assert!((analytic - fd).abs() < 1e-6, "x={x}");
            x += 0.25;
        }
    }

    #[test]
    fn small_inverse_roundtrip() {
        let m = Matrix::from_rows(&[&[4.0, 1.0], &[2.0, 3.0]]);
        let inv = m.inverse().unwrap();
        let prod = m.matmul(&inv).unwrap();
        let eye = Matrix::identity(2);
        assert!(prod.sub(&eye).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn cholesky_known_factor() {
        // [[4,2],[2,5]] = L Lᵀ with L = [[2,0],[1,2]].
        let a = Matrix::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]]);
        let l = a.cholesky_psd().unwrap();
        assert!((l.get(0, 0) - 2.0).abs() < 1e-14);
        assert!((l.get(1, 0) - 1.0).abs() < 1e-14);
        assert!((l.get(1, 1) - 2.0).abs() < 1e-14);
        assert_eq!(l.get(0, 1), 0.0);
    }

    #[test]
    fn cholesky_accepts_semidefinite_and_rejects_indefinite() {
        let zero = Matrix::zeros(3, 3);
        let l = zero.cholesky_psd().unwrap();
        assert_eq!(l.max_abs(), 0.0);

        let indefinite = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(indefinite.cholesky_psd().is_err());

        let asymmetric = Matrix::from_rows(&[&[1.0, 0.5], &[0.0, 1.0]]);
        assert!(asymmetric.cholesky_psd().is_err());
    }
}
