//! Dense four-dimensional tensors with flat storage.
//!
//! All tensors are stored fully covariant; index positions are a naming
//! convention of the caller. Entries are either `f64` (pointwise values) or
//! [`Taylor`] (fields known to some jet order around a point).

use std::ops::{Index, IndexMut};

use crate::taylor::{Taylor, NVARS};

const DIM: usize = NVARS;

/// Serializes as `{rank, data}` with `data` in row-major order.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Tensor<T> {
    rank: usize,
    data: Vec<T>,
}

pub type Field = Tensor<Taylor>;
pub type Values = Tensor<f64>;

/// Visit every index tuple of the given rank in row-major order.
pub fn for_each_index(rank: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; rank];
    let total = DIM.pow(rank as u32);
    for _ in 0..total {
        f(&idx);
        for slot in (0..rank).rev() {
            idx[slot] += 1;
            if idx[slot] < DIM {
                break;
            }
            idx[slot] = 0;
        }
    }
}

fn flat(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * DIM + i)
}

impl<T> Tensor<T> {
    pub fn from_fn(rank: usize, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let mut data = Vec::with_capacity(DIM.pow(rank as u32));
        for_each_index(rank, |idx| data.push(f(idx)));
        Self { rank, data }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        debug_assert_eq!(idx.len(), self.rank);
        &self.data[flat(idx)]
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut T {
        debug_assert_eq!(idx.len(), self.rank);
        &mut self.data[flat(idx)]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor {
            rank: self.rank,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T, const N: usize> Index<[usize; N]> for Tensor<T> {
    type Output = T;
    fn index(&self, idx: [usize; N]) -> &T {
        debug_assert_eq!(N, self.rank);
        &self.data[flat(&idx)]
    }
}

impl<T, const N: usize> IndexMut<[usize; N]> for Tensor<T> {
    fn index_mut(&mut self, idx: [usize; N]) -> &mut T {
        debug_assert_eq!(N, self.rank);
        &mut self.data[flat(&idx)]
    }
}

impl Tensor<f64> {
    pub fn zeros(rank: usize) -> Self {
        Self::from_fn(rank, |_| 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        Self {
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        Self {
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|x| a * x)
    }

    /// Full contraction `g^{a1 b1} ... g^{ak bk} A_{a...} B_{b...}`.
    pub fn inner(&self, other: &Self, ginv: &Values) -> f64 {
        assert_eq!(self.rank, other.rank);
        let raised = raise_all(other, ginv);
        self.data.iter().zip(&raised.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self, ginv: &Values) -> f64 {
        self.inner(self, ginv).max(0.0).sqrt()
    }
}

impl Tensor<Taylor> {
    pub fn zeros(rank: usize, order: usize) -> Self {
        Self::from_fn(rank, |_| Taylor::zero(order))
    }

    /// Lowest jet order among the entries.
    pub fn order(&self) -> usize {
        self.data.iter().map(Taylor::order).min().unwrap_or(0)
    }

    /// Values at the base point.
    pub fn values(&self) -> Values {
        self.map(Taylor::value)
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|t| t.truncate(order))
    }

    /// Coordinate partial derivative, new index first: `(∂T)_{e a...} = ∂_e T_{a...}`.
    pub fn partial(&self) -> Self {
        Self::from_fn(self.rank + 1, |idx| self.get(&idx[1..]).partial(idx[0]))
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|t| t.scale(a))
    }

    pub fn mul_scalar(&self, s: &Taylor) -> Self {
        self.map(|t| t * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        Self {
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        Self {
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Raise every index of a covariant tensor with the inverse metric.
pub fn raise_all(t: &Values, ginv: &Values) -> Values {
    let mut cur = t.clone();
    for slot in 0..t.rank() {
        cur = Values::from_fn(t.rank(), |idx| {
            let mut j = idx.to_vec();
            let mut s = 0.0;
            for k in 0..DIM {
                j[slot] = k;
                s += ginv[[idx[slot], k]] * cur.get(&j);
            }
            s
        });
    }
    cur
}

/// Raise one slot of a Taylor field.
pub fn raise_slot(t: &Field, slot: usize, ginv: &Field) -> Field {
    Field::from_fn(t.rank(), |idx| {
        let mut j = idx.to_vec();
        let mut s = Taylor::zero(t.order().min(ginv.order()));
        for k in 0..DIM {
            j[slot] = k;
            s += &ginv[[idx[slot], k]] * t.get(&j);
        }
        s
    })
}

/// Sign of the permutation `idx` of `0..4`, or 0 if an index repeats.
pub fn levi_civita(idx: &[usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] == idx[j] {
                return 0.0;
            }
            if idx[i] > idx[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Small dense helpers for pointwise 4x4 work.
pub fn mat4_from(t: &Values) -> [[f64; 4]; 4] {
    std::array::from_fn(|a| std::array::from_fn(|b| t[[a, b]]))
}
