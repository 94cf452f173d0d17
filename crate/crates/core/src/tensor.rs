//! Dense D-way arrays.
//!
//! Values are stored in column-major order on the mode index tuple: the first
//! index varies fastest. Every reshape in this module (tensorize, untensorize,
//! unfold/fold) is defined against that order, so a matrix tensorized with
//! row factors `(I1..Ip)` and column factors `(J1..Jq)` keeps its storage
//! untouched and the row factors vary fastest in the combined tensor.
//!
//! Mode numbers are zero-based throughout the API.

use crate::error::{Error, Result};
use crate::metrics::flops;
use crate::scalar::Scalar;

/// Largest element count a dense tensor may have.
pub const MAX_ELEMENTS: u128 = 1 << 48;

/// Ordered mode sizes of a tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::dim("shape needs at least one mode"));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::dim(format!("mode {pos} has size 0")));
        }
        let count = checked_product(&dims);
        if count > MAX_ELEMENTS {
            return Err(Error::Size {
                what: format!("dense tensor of shape {dims:?}"),
                elements: count,
                cap: MAX_ELEMENTS,
            });
        }
        Ok(Self(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn ndim(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Column-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = Vec::with_capacity(self.0.len());
        let mut acc = 1;
        for &d in &self.0 {
            strides.push(acc);
            acc *= d;
        }
        strides
    }

    pub fn linear_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.0.len());
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &d) in index.iter().zip(&self.0) {
            debug_assert!(i < d);
            lin += i * stride;
            stride *= d;
        }
        lin
    }

    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        self.0
            .iter()
            .map(|&d| {
                let i = lin % d;
                lin /= d;
                i
            })
            .collect()
    }
}

/// Product of `dims` in 128-bit arithmetic, saturating.
pub fn checked_product(dims: &[usize]) -> u128 {
    dims.iter()
        .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128))
        .unwrap_or(u128::MAX)
}

/// Advances a column-major multi-index in place; returns false after the last entry.
pub(crate) fn next_index(index: &mut [usize], dims: &[usize]) -> bool {
    for (i, &d) in index.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return true;
        }
        *i = 0;
    }
    false
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(Error::dim(format!(
                "shape {:?} holds {} values, got {}",
                shape.dims(),
                shape.numel(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_dims(dims: &[usize], data: Vec<T>) -> Result<Self> {
        Self::new(Shape::new(dims.to_vec())?, data)
    }

    pub fn zeros(shape: Shape) -> Self {
        let data = vec![T::zero(); shape.numel()];
        Self { shape, data }
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let dims = shape.dims().to_vec();
        let mut data = Vec::with_capacity(shape.numel());
        let mut index = vec![0; dims.len()];
        loop {
            data.push(f(&index));
            if !next_index(&mut index, &dims) {
                break;
            }
        }
        Self { shape, data }
    }

    /// A 1-way tensor holding `values`.
    pub fn vector(values: Vec<T>) -> Result<Self> {
        Self::new(Shape::new(vec![values.len()])?, values)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn ndim(&self) -> usize {
        self.shape.ndim()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.data[self.shape.linear_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: T) {
        let lin = self.shape.linear_index(index);
        self.data[lin] = value;
    }

    /// Reinterprets the storage with new mode sizes; the linearization is kept.
    pub fn reshape(&self, dims: &[usize]) -> Result<Self> {
        let shape = Shape::new(dims.to_vec())?;
        if shape.numel() != self.len() {
            return Err(Error::dim(format!(
                "cannot reshape {:?} into {:?}",
                self.dims(),
                dims
            )));
        }
        Ok(Self {
            shape,
            data: self.data.clone(),
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| v * alpha).collect(),
        }
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dim(format!(
                "shape mismatch {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Reorders the modes: mode `k` of the result is mode `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let d = self.ndim();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::dim(format!("{perm:?} is not a permutation of {d} modes")));
        }
        let src_strides = self.shape.strides();
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims()[p]).collect();
        let strides: Vec<usize> = perm.iter().map(|&p| src_strides[p]).collect();
        let shape = Shape::new(new_dims.clone())?;
        let mut data = Vec::with_capacity(self.len());
        let mut index = vec![0; d];
        loop {
            let src: usize = index.iter().zip(&strides).map(|(i, s)| i * s).sum();
            data.push(self.data[src]);
            if !next_index(&mut index, &new_dims) {
                break;
            }
        }
        Ok(Self { shape, data })
    }

    /// Mode product `self ×_mode matrix` where `matrix` is `J × I_mode`;
    /// mode `mode` of the result has size `J`.
    pub fn mode_product(&self, matrix: &crate::linalg::Matrix<T>, mode: usize) -> Result<Self> {
        if mode >= self.ndim() {
            return Err(Error::dim(format!("mode {mode} out of range for {} modes", self.ndim())));
        }
        let dims = self.dims();
        if matrix.cols() != dims[mode] {
            return Err(Error::dim(format!(
                "matrix has {} columns, mode {mode} has size {}",
                matrix.cols(),
                dims[mode]
            )));
        }
        let left: usize = dims[..mode].iter().product();
        let right: usize = dims[mode + 1..].iter().product();
        let n = dims[mode];
        let m = matrix.rows();
        let mut new_dims = dims.to_vec();
        new_dims[mode] = m;
        let mut out = vec![T::zero(); left * m * right];
        for b in 0..right {
            for j in 0..m {
                for a in 0..left {
                    let mut acc = T::zero();
                    for i in 0..n {
                        acc += matrix.get(j, i) * self.data[a + left * (i + n * b)];
                    }
                    out[a + left * (j + m * b)] = acc;
                }
            }
        }
        flops::record_dots(left * m * right, n);
        Self::new(Shape::new(new_dims)?, out)
    }

    /// Views a 2-way tensor as a matrix.
    pub fn to_matrix(&self) -> Result<crate::linalg::Matrix<T>> {
        if self.ndim() != 2 {
            return Err(Error::dim(format!("expected 2 modes, got {}", self.ndim())));
        }
        crate::linalg::Matrix::from_col_major(self.dims()[0], self.dims()[1], self.data.clone())
    }
}

impl<T: Scalar> From<crate::linalg::Matrix<T>> for DenseTensor<T> {
    fn from(m: crate::linalg::Matrix<T>) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        Self {
            shape: Shape(vec![rows, cols]),
            data: m.into_values(),
        }
    }
}

/// Reshapes a matrix into a tensor of shape `(row_factors.., col_factors..)`.
///
/// Entry `(i1..ip, j1..jq)` is the matrix entry at row `i1 + I1*i2 + ...` and
/// column `j1 + J1*j2 + ...`.
pub fn tensorize<T: Scalar>(
    matrix: &DenseTensor<T>,
    row_factors: &Shape,
    col_factors: &Shape,
) -> Result<DenseTensor<T>> {
    if matrix.ndim() != 2 {
        return Err(Error::dim(format!("tensorize needs a matrix, got {} modes", matrix.ndim())));
    }
    let (rows, cols) = (matrix.dims()[0], matrix.dims()[1]);
    if row_factors.numel() != rows || col_factors.numel() != cols {
        return Err(Error::dim(format!(
            "factors {:?} x {:?} do not match a {rows} x {cols} matrix",
            row_factors.dims(),
            col_factors.dims()
        )));
    }
    let dims: Vec<usize> = row_factors.dims().iter().chain(col_factors.dims()).copied().collect();
    matrix.reshape(&dims)
}

/// Inverse of [`tensorize`]: the first `row_mode_count` modes become the rows.
pub fn untensorize<T: Scalar>(tensor: &DenseTensor<T>, row_mode_count: usize) -> Result<DenseTensor<T>> {
    let d = tensor.ndim();
    if row_mode_count == 0 || row_mode_count >= d {
        return Err(Error::dim(format!(
            "row mode count {row_mode_count} must lie in 1..{d}"
        )));
    }
    let rows: usize = tensor.dims()[..row_mode_count].iter().product();
    let cols: usize = tensor.dims()[row_mode_count..].iter().product();
    tensor.reshape(&[rows, cols])
}

/// Mode-`mode` matricization: rows indexed by `i_mode`, columns by the
/// remaining indices in column-major order.
pub fn unfold<T: Scalar>(tensor: &DenseTensor<T>, mode: usize) -> Result<DenseTensor<T>> {
    let d = tensor.ndim();
    if mode >= d {
        return Err(Error::dim(format!("mode {mode} out of range for {d} modes")));
    }
    let dims = tensor.dims();
    let left: usize = dims[..mode].iter().product();
    let n = dims[mode];
    let right: usize = dims[mode + 1..].iter().product();
    let cols = left * right;
    let mut out = vec![T::zero(); n * cols];
    let src = tensor.values();
    for b in 0..right {
        for i in 0..n {
            for a in 0..left {
                out[i + n * (a + left * b)] = src[a + left * (i + n * b)];
            }
        }
    }
    DenseTensor::from_dims(&[n, cols], out)
}

/// Inverse of [`unfold`] for a tensor of shape `dims`.
pub fn fold<T: Scalar>(matrix: &DenseTensor<T>, mode: usize, dims: &[usize]) -> Result<DenseTensor<T>> {
    let shape = Shape::new(dims.to_vec())?;
    if mode >= dims.len() {
        return Err(Error::dim(format!("mode {mode} out of range for {} modes", dims.len())));
    }
    let left: usize = dims[..mode].iter().product();
    let n = dims[mode];
    let right: usize = dims[mode + 1..].iter().product();
    if matrix.dims() != [n, left * right] {
        return Err(Error::dim(format!(
            "unfolding of shape {:?} cannot fold into {:?} along mode {mode}",
            matrix.dims(),
            dims
        )));
    }
    let src = matrix.values();
    let mut out = vec![T::zero(); shape.numel()];
    for b in 0..right {
        for i in 0..n {
            for a in 0..left {
                out[a + left * (i + n * b)] = src[i + n * (a + left * b)];
            }
        }
    }
    DenseTensor::new(shape, out)
}

/// Outer product `v1 ∘ v2 ∘ ... ∘ vD`.
///
/// Counted as one multiply per entry of every partial product after the first
/// factor, no additions.
pub fn outer_product<T: Scalar, V: AsRef<[T]>>(factors: &[V]) -> Result<DenseTensor<T>> {
    let data = kronecker(factors)?;
    let dims: Vec<usize> = factors.iter().map(|f| f.as_ref().len()).collect();
    DenseTensor::from_dims(&dims, data)
}

/// Kronecker product with the first factor varying fastest, i.e. the
/// column-major vectorization of [`outer_product`]. In conventional notation
/// this is `vD ⊗ ... ⊗ v1`.
pub fn kronecker<T: Scalar, V: AsRef<[T]>>(factors: &[V]) -> Result<Vec<T>> {
    let Some((first, rest)) = factors.split_first() else {
        return Err(Error::arg("need at least one factor"));
    };
    if factors.iter().any(|f| f.as_ref().is_empty()) {
        return Err(Error::arg("factors must be nonempty"));
    }
    let total = checked_product(&factors.iter().map(|f| f.as_ref().len()).collect::<Vec<_>>());
    if total > MAX_ELEMENTS {
        return Err(Error::Size {
            what: "kronecker product".into(),
            elements: total,
            cap: MAX_ELEMENTS,
        });
    }
    let mut acc: Vec<T> = first.as_ref().to_vec();
    let mut mults = 0u64;
    for f in rest {
        let f = f.as_ref();
        let mut next = Vec::with_capacity(acc.len() * f.len());
        for &b in f {
            next.extend(acc.iter().map(|&a| a * b));
        }
        mults += next.len() as u64;
        acc = next;
    }
    flops::record(mults, 0);
    Ok(acc)
}

/// Frobenius inner product of two equally shaped tensors.
pub fn inner_product<T: Scalar>(a: &DenseTensor<T>, b: &DenseTensor<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!(
            "inner product of shapes {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    flops::record_dot(a.len());
    Ok(a.values().iter().zip(b.values()).map(|(&x, &y)| x * y).sum())
}
