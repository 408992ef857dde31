//! Dense row-major matrices sized for this problem class (state dimensions in
//! the tens, Kronecker systems up to ~1700 unknowns). One LU implementation
//! with partial pivoting serves both real and complex solves through
//! [`LinScalar`].

use std::ops::{Add, AddAssign, Div, DivAssign, Index, IndexMut, Mul, MulAssign, Neg, Sub,
               SubAssign};

use num_complex::Complex;
use num_traits::{Float, One, Zero};

use crate::real::Real;

/// Field-like scalar with a real magnitude, enough for pivoted elimination.
pub trait LinScalar:
    Copy
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    type Mag: Real;
    /// Squared magnitude; cheaper than the magnitude for pivot comparisons.
    fn mag2(self) -> Self::Mag;
}

impl LinScalar for f32 {
    type Mag = f32;
    #[inline]
    fn mag2(self) -> f32 {
        self * self
    }
}

impl LinScalar for f64 {
    type Mag = f64;
    #[inline]
    fn mag2(self) -> f64 {
        self * self
    }
}

impl<T: Real> LinScalar for Complex<T> {
    type Mag = T;
    #[inline]
    fn mag2(self) -> T {
        self.norm_sqr()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: LinScalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for j in 0..self.cols {
                    acc += self[(i, j)] * v[j];
                }
                acc
            })
            .collect()
    }

    /// vT M for a row-vector product without materializing the transpose.
    pub fn vecmat(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.rows, v.len(), "vector length differs from row count");
        (0..self.cols)
            .map(|j| {
                let mut acc = S::zero();
                for i in 0..self.rows {
                    acc += v[i] * self[(i, j)];
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
        out
    }

    pub fn scale(&self, s: S) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn frobenius(&self) -> S::Mag {
        self.data
            .iter()
            .fold(S::Mag::zero(), |acc, &x| acc + x.mag2())
            .sqrt()
    }

    pub fn max_abs(&self) -> S::Mag {
        self.data
            .iter()
            .fold(S::Mag::zero(), |acc, &x| acc.max(x.mag2()))
            .sqrt()
    }

    /// Max row sum of magnitudes (the induced infinity norm).
    pub fn inf_norm(&self) -> S::Mag {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)].mag2().sqrt())
                    .fold(S::Mag::zero(), |a, b| a + b)
            })
            .fold(S::Mag::zero(), |a, b| a.max(b))
    }

    /// (self + selfT) / 2; valid for square matrices only.
    pub fn symmetrize(&self) -> Self {
        assert!(self.is_square());
        let half = {
            let two = S::one() + S::one();
            S::one() / two
        };
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)]) * half)
    }

    /// Kronecker product, row-major blocks of `self` scaled entries of `other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.rows, other.cols);
        Self::from_fn(self.rows * p, self.cols * q, |i, j| {
            self[(i / p, j / q)] * other[(i % p, j % q)]
        })
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<S: LinScalar>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn outer<S: LinScalar>(a: &[S], b: &[S]) -> Mat<S> {
    Mat::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
}

/// LU factorization with partial pivoting. Factors are kept so iterative
/// refinement can reuse them.
pub struct Lu<S: LinScalar> {
    lu: Mat<S>,
    perm: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularMatrix;

impl<S: LinScalar> Lu<S> {
    pub fn factor(a: &Mat<S>) -> Result<Self, SingularMatrix> {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = lu.max_abs();
        if n > 0 && scale == S::Mag::zero() {
            return Err(SingularMatrix);
        }
        // Pivots this far below the matrix scale mean a numerically defective
        // system, not a solvable one.
        let floor = scale * S::Mag::epsilon() * crate::real::cast::<S::Mag>(n as f64 * 8.0);
        let floor2 = floor * floor;
        for k in 0..n {
            let mut best = k;
            let mut best_mag = lu[(k, k)].mag2();
            for i in k + 1..n {
                let m = lu[(i, k)].mag2();
                if m > best_mag {
                    best_mag = m;
                    best = i;
                }
            }
            if best_mag <= floor2 {
                return Err(SingularMatrix);
            }
            if best != k {
                perm.swap(k, best);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(best, j)];
                    lu[(best, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == S::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let subtrahend = factor * lu[(k, j)];
                    lu[(i, j)] -= subtrahend;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                let s = self.lu[(i, j)] * x[j];
                x[i] -= s;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let s = self.lu[(i, j)] * x[j];
                x[i] -= s;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// Solve with a fixed number of residual-correction passes against the
    /// original matrix. Two passes recover most of the accuracy lost to
    /// conditioning at these sizes.
    pub fn solve_refined(&self, a: &Mat<S>, b: &[S], passes: usize) -> Vec<S> {
        let mut x = self.solve(b);
        for _ in 0..passes {
            let ax = a.matvec(&x);
            let r: Vec<S> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += *di;
            }
        }
        x
    }
}

/// Cholesky-based positive-definiteness certificate on the symmetric part.
pub fn is_positive_definite<T: Real>(a: &Mat<T>) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.rows();
    if n == 0 {
        return true;
    }
    let sym = a.symmetrize();
    let scale = sym
        .data
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if !scale.is_finite() || scale == T::zero() {
        return false;
    }
    let floor = scale * T::epsilon() * crate::real::cast::<T>(n as f64 * 8.0);
    let mut l = Mat::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = sym[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= floor {
                    return false;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    true
}
