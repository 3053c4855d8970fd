//! Dense row-major matrices.

use crate::bf16::{widen, Bf16};
use crate::error::{Error, Result};

/// Whether an operand is used as stored or transposed.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum Transpose {
    #[default]
    None,
    Transpose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type MatrixF32 = Matrix<f32>;
pub type MatrixF64 = Matrix<f64>;
pub type Bf16Plane = Matrix<Bf16>;

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::default())
    }
}

impl<T: Copy> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} elements, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self` for `Transpose::None`, its transpose otherwise.
    pub fn op(&self, t: Transpose) -> std::borrow::Cow<'_, Self> {
        match t {
            Transpose::None => std::borrow::Cow::Borrowed(self),
            Transpose::Transpose => std::borrow::Cow::Owned(self.transpose()),
        }
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().copied().map(f).collect(),
        }
    }
}

impl<T: Copy + Default> Matrix<T> {
    pub fn identity(n: usize, one: T) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { one } else { T::default() })
    }
}

impl MatrixF32 {
    /// Exact widening to FP64.
    pub fn to_f64(&self) -> MatrixF64 {
        self.map(|x| x as f64)
    }

    /// Bitwise equality (distinguishes -0.0 and compares NaN patterns).
    pub fn bits_eq(&self, other: &MatrixF32) -> bool {
        self.shape() == other.shape()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl MatrixF64 {
    /// Round-to-nearest conversion to FP32.
    pub fn to_f32(&self) -> MatrixF32 {
        self.map(|x| x as f32)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl Bf16Plane {
    pub fn widen(&self) -> MatrixF32 {
        self.map(widen)
    }
}
