//! Row-major index helpers shared by patches, block maps and grids.
//!
//! All multi-dimensional arrays in the crate use the same layout: the last
//! coordinate varies fastest.

use crate::error::{Error, Result};

/// Number of cells in a box, or a size error if the product overflows.
pub fn cell_count(shape: &[usize]) -> Result<usize> {
    shape.iter().try_fold(1usize, |acc, &n| {
        acc.checked_mul(n)
            .ok_or_else(|| Error::Size(format!("box {shape:?} overflows usize")))
    })
}

pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut out = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * shape[i + 1];
    }
    out
}

pub fn linear_index(index: &[usize], shape: &[usize]) -> usize {
    index
        .iter()
        .zip(shape)
        .fold(0usize, |acc, (&i, &n)| acc * n + i)
}

pub fn unravel(mut lin: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize; shape.len()];
    for i in (0..shape.len()).rev() {
        out[i] = lin % shape[i];
        lin /= shape[i];
    }
    out
}

/// Advance `index` to the next position in row-major order. Returns `false`
/// once the whole box has been visited.
pub fn advance(index: &mut [usize], shape: &[usize]) -> bool {
    for i in (0..index.len()).rev() {
        index[i] += 1;
        if index[i] < shape[i] {
            return true;
        }
        index[i] = 0;
    }
    false
}

/// Iterator over every multi-index in a box, row-major.
pub struct BoxIter {
    shape: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl BoxIter {
    pub fn new(shape: &[usize]) -> Self {
        let next = if shape.iter().all(|&n| n > 0) {
            Some(vec![0; shape.len()])
        } else {
            None
        };
        Self {
            shape: shape.to_vec(),
            next,
        }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut following = current.clone();
        if advance(&mut following, &self.shape) {
            self.next = Some(following);
        }
        Some(current)
    }
}

/// All points of the integer box `[lo_i, hi_i]` (inclusive), row-major.
pub fn integer_box<'a>(lo: &'a [i64], hi: &'a [i64]) -> impl Iterator<Item = Vec<i64>> + 'a {
    let shape: Vec<usize> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| if b >= a { (b - a + 1) as usize } else { 0 })
        .collect();
    BoxIter::new(&shape).map(move |idx| {
        idx.iter()
            .zip(lo)
            .map(|(&i, &a)| a + i as i64)
            .collect()
    })
}

/// The `2^d` corner selectors `s ∈ {0,1}^d`, encoded as bit masks with bit `i`
/// standing for axis `i`.
pub fn bits_to_vec(mask: usize, d: usize) -> Vec<u8> {
    (0..d).map(|i| ((mask >> i) & 1) as u8).collect()
}
