//! Dense rank-4 tensors indexed `[user or location][branch][AP][wavelength]`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Row-major `f64` tensor with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Tensor4 { dims, data: vec![0.0; dims.iter().product()] }
    }

    /// Wraps `data`; returns `None` if its length does not match `dims`.
    pub fn from_vec(dims: [usize; 4], data: Vec<f64>) -> Option<Self> {
        (data.len() == dims.iter().product::<usize>()).then_some(Tensor4 { dims, data })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, i: usize, f: usize, a: usize, w: usize) -> usize {
        debug_assert!(i < self.dims[0] && f < self.dims[1] && a < self.dims[2] && w < self.dims[3]);
        ((i * self.dims[1] + f) * self.dims[2] + a) * self.dims[3] + w
    }

    #[inline]
    pub fn get(&self, i: usize, f: usize, a: usize, w: usize) -> f64 {
        self.data[self.offset(i, f, a, w)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, f: usize, a: usize, w: usize, value: f64) {
        let o = self.offset(i, f, a, w);
        self.data[o] = value;
    }

    pub fn in_bounds(&self, i: usize, f: usize, a: usize, w: usize) -> bool {
        i < self.dims[0] && f < self.dims[1] && a < self.dims[2] && w < self.dims[3]
    }

    /// New tensor made of the listed rows of the first axis, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Option<Tensor4> {
        let row_len = self.dims[1] * self.dims[2] * self.dims[3];
        let mut data = Vec::with_capacity(rows.len() * row_len);
        for &r in rows {
            if r >= self.dims[0] {
                return None;
            }
            data.extend_from_slice(&self.data[r * row_len..(r + 1) * row_len]);
        }
        Some(Tensor4 { dims: [rows.len(), self.dims[1], self.dims[2], self.dims[3]], data })
    }
}

/// Binary assignment tensor `S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignmentTensor {
    dims: [usize; 4],
    bits: Vec<bool>,
}

impl AssignmentTensor {
    pub fn zeros(dims: [usize; 4]) -> Self {
        AssignmentTensor { dims, bits: vec![false; dims.iter().product()] }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn offset(&self, u: usize, f: usize, a: usize, w: usize) -> usize {
        debug_assert!(u < self.dims[0] && f < self.dims[1] && a < self.dims[2] && w < self.dims[3]);
        ((u * self.dims[1] + f) * self.dims[2] + a) * self.dims[3] + w
    }

    /// Inverse of [`offset`](Self::offset).
    pub fn unravel(&self, offset: usize) -> (usize, usize, usize, usize) {
        let [_, nf, na, nw] = self.dims;
        let w = offset % nw;
        let a = (offset / nw) % na;
        let f = (offset / (nw * na)) % nf;
        let u = offset / (nw * na * nf);
        (u, f, a, w)
    }

    #[inline]
    pub fn get(&self, u: usize, f: usize, a: usize, w: usize) -> bool {
        self.bits[self.offset(u, f, a, w)]
    }

    #[inline]
    pub fn set(&mut self, u: usize, f: usize, a: usize, w: usize, on: bool) {
        let o = self.offset(u, f, a, w);
        self.bits[o] = on;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Iterates `(u, f, a, w)` of every set entry in index order.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| self.unravel(i))
    }

    /// Lexicographic order on the flattened `(u, f, a, w)` bit string, with
    /// `0 < 1`. Tensors of different shapes compare by shape first.
    pub fn lex_cmp(&self, other: &AssignmentTensor) -> core::cmp::Ordering {
        self.dims.cmp(&other.dims).then_with(|| self.bits.cmp(&other.bits))
    }
}
