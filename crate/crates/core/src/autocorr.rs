//! Exact autocorrelation coefficients of block-substitution fixed points.
//!
//! The coefficient at lag `m` obeys a linear recursion: writing
//! `m = K∘q + r` with `0 ≤ r_i < K_i` (floor division),
//!
//! ```text
//! η(m) = Σ_{s ∈ {0,1}^d} α(r, s) · η(q + s)
//! ```
//!
//! and the descent `m ↦ q + s` always ends in the core box `{-1, 0, 1}^d`.
//! The core values follow from a small exact linear system.

use std::collections::HashMap;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::shape::{self, BoxIter};
use crate::subst::{BlockMap, LatticePatch};

pub type Rational = num_rational::BigRational;

/// Default cap on memoised values and on the cells of a bulk evaluation box.
pub const DEFAULT_MEMO_LIMIT: usize = 1 << 24;

pub(crate) fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// The recursion coefficients `α(r, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTable {
    dims: Vec<usize>,
    // indexed by linear(r) << d | mask(s), bit i of the mask is s_i
    alpha: Vec<Rational>,
}

impl CoeffTable {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    fn slot(&self, r: &[usize], mask: usize) -> usize {
        (shape::linear_index(r, &self.dims) << self.dim()) | mask
    }

    /// `α(r, s)` with `s` given as a bit mask (bit `i` is `s_i`).
    pub fn get(&self, r: &[usize], mask: usize) -> &Rational {
        &self.alpha[self.slot(r, mask)]
    }

    pub fn alpha(&self, r: &[usize], s: &[u8]) -> &Rational {
        let mask = s
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | ((b as usize & 1) << i));
        self.get(r, mask)
    }

    /// Nonzero `(mask, α)` pairs for the block position with linear index `r_lin`.
    fn row(&self, r_lin: usize) -> impl Iterator<Item = (usize, &Rational)> {
        let d = self.dim();
        (0..1usize << d)
            .map(move |mask| (mask, &self.alpha[(r_lin << d) | mask]))
            .filter(|(_, a)| !a.is_zero())
    }

    /// The signed block autocorrelation at lag `o`, `o_i ∈ (-K_i, K_i)`:
    /// the coefficient `α(o mod K, [o < 0])`.
    pub fn offset_coeff(&self, o: &[i64]) -> Rational {
        let mut r = Vec::with_capacity(o.len());
        let mut mask = 0usize;
        for (i, (&oi, &k)) in o.iter().zip(&self.dims).enumerate() {
            let k = k as i64;
            if oi <= -k || oi >= k {
                return Rational::zero();
            }
            if oi < 0 {
                mask |= 1 << i;
            }
            r.push(oi.rem_euclid(k) as usize);
        }
        self.get(&r, mask).clone()
    }

    /// The one-dimensional recursion governing `η` on the coordinate axis
    /// `axis` (all other lag components zero).
    pub fn axis_section(&self, axis: usize) -> Result<CoeffTable> {
        if axis >= self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: axis + 1,
            });
        }
        let k = self.dims[axis];
        let mut alpha = Vec::with_capacity(2 * k);
        let mut r = vec![0usize; self.dim()];
        for ri in 0..k {
            r[axis] = ri;
            alpha.push(self.get(&r, 0).clone());
            alpha.push(self.get(&r, 1 << axis).clone());
        }
        Ok(CoeffTable {
            dims: vec![k],
            alpha,
        })
    }
}

/// Builds `α(r, s) = (1/∏K) Σ_t κ_t κ_{t + r - s∘K}`, where `t_i` runs over
/// `[s_i (K_i - r_i), K_i - 1 - r_i (1 - s_i)]`.
pub fn recursion_coeffs(map: &BlockMap) -> CoeffTable {
    let dims = map.dims().to_vec();
    let d = dims.len();
    let volume = map.volume() as i64;
    let mut alpha = Vec::with_capacity(map.volume() << d);
    for r in BoxIter::new(&dims) {
        for mask in 0..1usize << d {
            let mut lo = Vec::with_capacity(d);
            let mut extent = Vec::with_capacity(d);
            for i in 0..d {
                let (k, ri) = (dims[i], r[i]);
                let (a, b) = if (mask >> i) & 1 == 1 {
                    (k - ri, k - 1)
                } else {
                    (0, k - 1 - ri)
                };
                lo.push(a);
                extent.push(b + 1 - a);
            }
            let mut sum = 0i64;
            if extent.iter().all(|&e| e > 0) {
                for off in BoxIter::new(&extent) {
                    let t: Vec<usize> = off.iter().zip(&lo).map(|(&o, &a)| o + a).collect();
                    let partner: Vec<usize> = (0..d)
                        .map(|i| {
                            let shift = if (mask >> i) & 1 == 1 { dims[i] } else { 0 };
                            t[i] + r[i] - shift
                        })
                        .collect();
                    sum += (map.entry(&t) * map.entry(&partner)) as i64;
                }
            }
            alpha.push(rat(sum, volume));
        }
    }
    CoeffTable { dims, alpha }
}

fn core_index(m: &[i64]) -> Option<usize> {
    m.iter().try_fold(0usize, |acc, &x| {
        (-1..=1).contains(&x).then(|| acc * 3 + (x + 1) as usize)
    })
}

fn split(m: &[i64], dims: &[usize]) -> (Vec<i64>, usize) {
    let mut q = Vec::with_capacity(m.len());
    let mut r_lin = 0usize;
    for (&x, &k) in m.iter().zip(dims) {
        let (qi, ri) = x.div_mod_floor(&(k as i64));
        q.push(qi);
        r_lin = r_lin * k + ri as usize;
    }
    (q, r_lin)
}

fn shifted(q: &[i64], mask: usize) -> Vec<i64> {
    q.iter()
        .enumerate()
        .map(|(i, &x)| x + ((mask >> i) & 1) as i64)
        .collect()
}

/// Solves for `η` on `{-1, 0, 1}^d` with `η(0) = 1`. Values are returned in
/// row-major order of the box.
pub fn solve_core(coeffs: &CoeffTable) -> Result<Vec<Rational>> {
    let d = coeffs.dim();
    let n = 3usize.pow(d as u32);
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(n);
    let mut rhs: Vec<Rational> = Vec::with_capacity(n);
    for idx in BoxIter::new(&vec![3; d]) {
        let m: Vec<i64> = idx.iter().map(|&i| i as i64 - 1).collect();
        let mut row = vec![Rational::zero(); n];
        if m.iter().all(|&x| x == 0) {
            row[core_index(&m).unwrap()] = Rational::one();
            rows.push(row);
            rhs.push(Rational::one());
            continue;
        }
        let (q, r_lin) = split(&m, coeffs.dims());
        row[core_index(&m).unwrap()] += Rational::one();
        for (mask, a) in coeffs.row(r_lin) {
            let target = core_index(&shifted(&q, mask))
                .ok_or_else(|| Error::Invariant("core descent left the core".into()))?;
            row[target] -= a;
        }
        rows.push(row);
        rhs.push(Rational::zero());
    }
    gauss_solve(rows, rhs)
}

fn gauss_solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Result<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(Error::SingularCore)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for j in col..n {
            a[col][j] = &a[col][j] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in col..n {
                let delta = &f * &a[col][j];
                a[r][j] -= delta;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    Ok(b)
}

/// Anything that supplies exact correlation coefficients on `Z^d`.
pub trait Correlation: Sync {
    fn dim(&self) -> usize;

    /// Per-axis refinement factors used to grow averaging windows.
    fn scales(&self) -> Vec<usize>;

    fn value(&self, m: &[i64]) -> Result<Rational>;

    /// Values on the inclusive box `[lo, hi]`, row-major.
    fn values_in_box(&self, lo: &[i64], hi: &[i64]) -> Result<Vec<Rational>> {
        shape::integer_box(lo, hi).map(|m| self.value(&m)).collect()
    }
}

/// Memoised exact autocorrelation of a block map's fixed point.
pub struct EtaTable {
    map: BlockMap,
    coeffs: CoeffTable,
    core: Vec<Rational>,
    memo: RwLock<HashMap<Box<[i64]>, Rational>>,
    memo_limit: usize,
}

impl EtaTable {
    pub fn new(map: &BlockMap) -> Result<Self> {
        Self::with_memo_limit(map, DEFAULT_MEMO_LIMIT)
    }

    pub fn with_memo_limit(map: &BlockMap, memo_limit: usize) -> Result<Self> {
        let coeffs = recursion_coeffs(map);
        Self::from_coeffs(map.clone(), coeffs, memo_limit)
    }

    fn from_coeffs(map: BlockMap, coeffs: CoeffTable, memo_limit: usize) -> Result<Self> {
        let core = solve_core(&coeffs)?;
        Ok(Self {
            map,
            coeffs,
            core,
            memo: RwLock::new(HashMap::new()),
            memo_limit: memo_limit.max(1),
        })
    }

    pub fn map(&self) -> &BlockMap {
        &self.map
    }

    pub fn coeffs(&self) -> &CoeffTable {
        &self.coeffs
    }

    /// Core values on `{-1, 0, 1}^d`, row-major.
    pub fn core(&self) -> &[Rational] {
        &self.core
    }

    pub fn memo_len(&self) -> usize {
        self.memo.read().unwrap().len()
    }

    /// A one-dimensional table for lags along `axis`, built from the
    /// restricted recursion and its own core solve.
    pub fn axis_section(&self, axis: usize) -> Result<SectionTable> {
        SectionTable::new(self.coeffs.axis_section(axis)?, self.memo_limit)
    }

    pub fn eta(&self, m: &[i64]) -> Result<Rational> {
        if m.len() != self.coeffs.dim() {
            return Err(Error::Dimension {
                expected: self.coeffs.dim(),
                found: m.len(),
            });
        }
        eta_descent(&self.coeffs, &self.core, &self.memo, self.memo_limit, m)
    }

    pub fn eta_f64(&self, m: &[i64]) -> Result<f64> {
        self.eta(m).map(|q| to_f64(&q))
    }
}

fn eta_descent(
    coeffs: &CoeffTable,
    core: &[Rational],
    memo: &RwLock<HashMap<Box<[i64]>, Rational>>,
    limit: usize,
    m: &[i64],
) -> Result<Rational> {
    if let Some(i) = core_index(m) {
        return Ok(core[i].clone());
    }
    if let Some(v) = memo.read().unwrap().get(m) {
        return Ok(v.clone());
    }
    let (q, r_lin) = split(m, coeffs.dims());
    let mut acc = Rational::zero();
    for (mask, a) in coeffs.row(r_lin) {
        let sub = eta_descent(coeffs, core, memo, limit, &shifted(&q, mask))?;
        acc += a * sub;
    }
    let mut guard = memo.write().unwrap();
    if guard.len() >= limit {
        return Err(Error::MemoBudget { limit });
    }
    guard.insert(m.into(), acc.clone());
    Ok(acc)
}

fn bulk_box(
    coeffs: &CoeffTable,
    core: &[Rational],
    limit: usize,
    lo: &[i64],
    hi: &[i64],
) -> Result<Vec<Rational>> {
    let d = coeffs.dim();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return Ok(Vec::new());
    }
    if lo.iter().all(|&x| x >= -1) && hi.iter().all(|&x| x <= 1) {
        return Ok(shape::integer_box(lo, hi)
            .map(|m| core[core_index(&m).unwrap()].clone())
            .collect());
    }
    let extent: Vec<usize> = lo.iter().zip(hi).map(|(a, b)| (b - a + 1) as usize).collect();
    let cells = shape::cell_count(&extent)?;
    if cells > limit {
        return Err(Error::MemoBudget { limit });
    }
    let dims = coeffs.dims();
    let plo: Vec<i64> = lo
        .iter()
        .zip(dims)
        .map(|(&a, &k)| Integer::div_floor(&a, &(k as i64)))
        .collect();
    let phi: Vec<i64> = hi
        .iter()
        .zip(dims)
        .map(|(&b, &k)| -Integer::div_floor(&-b, &(k as i64)))
        .collect();
    let parent = bulk_box(coeffs, core, limit, &plo, &phi)?;
    let pshape: Vec<usize> = plo
        .iter()
        .zip(&phi)
        .map(|(a, b)| (b - a + 1) as usize)
        .collect();
    let rows: Vec<Vec<(usize, Rational)>> = (0..dims.iter().product::<usize>())
        .map(|r| coeffs.row(r).map(|(m, a)| (m, a.clone())).collect())
        .collect();
    let out = (0..cells)
        .into_par_iter()
        .map(|lin| {
            let idx = shape::unravel(lin, &extent);
            let m: Vec<i64> = idx.iter().zip(lo).map(|(&i, &a)| a + i as i64).collect();
            let (q, r_lin) = split(&m, dims);
            let mut acc = Rational::zero();
            for (mask, a) in &rows[r_lin] {
                let p: Vec<usize> = (0..d)
                    .map(|i| (q[i] + ((mask >> i) & 1) as i64 - plo[i]) as usize)
                    .collect();
                acc += a * &parent[shape::linear_index(&p, &pshape)];
            }
            acc
        })
        .collect();
    Ok(out)
}

impl Correlation for EtaTable {
    fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    fn scales(&self) -> Vec<usize> {
        self.coeffs.dims().to_vec()
    }

    fn value(&self, m: &[i64]) -> Result<Rational> {
        self.eta(m)
    }

    fn values_in_box(&self, lo: &[i64], hi: &[i64]) -> Result<Vec<Rational>> {
        bulk_box(&self.coeffs, &self.core, self.memo_limit, lo, hi)
    }
}

/// A correlation table driven by a one-dimensional recursion, such as the
/// restriction of a `d`-dimensional table to a coordinate axis.
pub struct SectionTable {
    coeffs: CoeffTable,
    core: Vec<Rational>,
    memo: RwLock<HashMap<Box<[i64]>, Rational>>,
    memo_limit: usize,
}

impl SectionTable {
    pub fn new(coeffs: CoeffTable, memo_limit: usize) -> Result<Self> {
        if coeffs.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                found: coeffs.dim(),
            });
        }
        let core = solve_core(&coeffs)?;
        Ok(Self {
            coeffs,
            core,
            memo: RwLock::new(HashMap::new()),
            memo_limit: memo_limit.max(1),
        })
    }

    pub fn coeffs(&self) -> &CoeffTable {
        &self.coeffs
    }

    pub fn scale(&self) -> usize {
        self.coeffs.dims()[0]
    }

    pub fn eta(&self, m: i64) -> Result<Rational> {
        eta_descent(&self.coeffs, &self.core, &self.memo, self.memo_limit, &[m])
    }
}

impl Correlation for SectionTable {
    fn dim(&self) -> usize {
        1
    }

    fn scales(&self) -> Vec<usize> {
        self.coeffs.dims().to_vec()
    }

    fn value(&self, m: &[i64]) -> Result<Rational> {
        if m.len() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                found: m.len(),
            });
        }
        self.eta(m[0])
    }

    fn values_in_box(&self, lo: &[i64], hi: &[i64]) -> Result<Vec<Rational>> {
        bulk_box(&self.coeffs, &self.core, self.memo_limit, lo, hi)
    }
}

/// Empirical autocorrelation `(1/N^d) Σ_{k ∈ [0,N)^d} w_k w_{k+m}` read off a
/// patch.
pub fn eta_bruteforce(patch: &LatticePatch, m: &[i64], window: usize) -> Result<f64> {
    let d = patch.dim();
    if m.len() != d {
        return Err(Error::Dimension {
            expected: d,
            found: m.len(),
        });
    }
    if window == 0 {
        return Err(Error::Invalid("window must be positive".into()));
    }
    let zero = vec![0i64; d];
    let extent = vec![window; d];
    if !patch.covers(&zero, &extent) || !patch.covers(m, &extent) {
        return Err(Error::Range(format!(
            "window [0,{window})^{d} shifted by {m:?} is not inside the patch"
        )));
    }
    let strides = shape::strides(patch.shape());
    let base: Vec<usize> = patch.origin().iter().map(|&o| (-o) as usize).collect();
    let lin_of = |idx: &[usize], shift: &[i64]| -> usize {
        (0..d)
            .map(|i| (base[i] as i64 + idx[i] as i64 + shift[i]) as usize * strides[i])
            .sum()
    };
    let values = patch.values();
    let tail = vec![window; d - 1];
    let total: i64 = (0..window)
        .into_par_iter()
        .map(|first| {
            let mut sum = 0i64;
            for rest in BoxIter::new(&tail) {
                let mut idx = Vec::with_capacity(d);
                idx.push(first);
                idx.extend_from_slice(&rest);
                sum += (values[lin_of(&idx, &zero)] * values[lin_of(&idx, m)]) as i64;
            }
            sum
        })
        .sum();
    Ok(total as f64 / (window as f64).powi(d as i32))
}

/// `(-1)^{Σ m_i} η(m)`; handy for the squiral's alternating-sign property.
pub fn alternating(m: &[i64], v: &Rational) -> Rational {
    if m.iter().sum::<i64>().rem_euclid(2) == 0 {
        v.clone()
    } else {
        -v.clone()
    }
}

/// Whether `Σ_{u,v} c_u c_v η(u - v) ≥ 0` for the given support and weights.
pub fn quadratic_form(
    table: &dyn Correlation,
    support: &[Vec<i64>],
    weights: &[Rational],
) -> Result<Rational> {
    let mut acc = Rational::zero();
    for (u, cu) in support.iter().zip(weights) {
        for (v, cv) in support.iter().zip(weights) {
            let diff: Vec<i64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
            acc += cu * cv * table.value(&diff)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subst::{builtin_squiral, builtin_thue_morse};

    #[test]
    fn squiral_coefficients_match_hand_values() {
        let c = recursion_coeffs(&builtin_squiral());
        assert_eq!(c.alpha(&[1, 0], &[0, 0]), &rat(-2, 9));
        assert_eq!(c.alpha(&[1, 0], &[1, 0]), &rat(1, 3));
        assert_eq!(c.alpha(&[1, 1], &[1, 1]), &rat(1, 9));
        assert_eq!(c.alpha(&[2, 2], &[0, 0]), &rat(1, 9));
        assert_eq!(c.alpha(&[0, 0], &[0, 0]), &rat(1, 1));
        for mask in 1..4 {
            assert!(c.get(&[0, 0], mask).is_zero());
        }
    }

    #[test]
    fn thue_morse_coefficients() {
        let c = recursion_coeffs(&builtin_thue_morse());
        assert_eq!(c.alpha(&[1], &[0]), &rat(-1, 2));
        assert_eq!(c.alpha(&[1], &[1]), &rat(-1, 2));
    }

    #[test]
    fn squiral_core() {
        let t = EtaTable::new(&builtin_squiral()).unwrap();
        assert_eq!(t.eta(&[0, 0]).unwrap(), rat(1, 1));
        for m in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            assert_eq!(t.eta(&m).unwrap(), rat(-1, 3));
        }
        for m in [[1, 1], [-1, 1], [1, -1], [-1, -1]] {
            assert_eq!(t.eta(&m).unwrap(), rat(1, 6));
        }
    }

    #[test]
    fn bulk_agrees_with_descent() {
        let t = EtaTable::new(&builtin_squiral()).unwrap();
        let lo = [-7, -4];
        let hi = [11, 5];
        let bulk = t.values_in_box(&lo, &hi).unwrap();
        for (m, v) in shape::integer_box(&lo, &hi).zip(&bulk) {
            assert_eq!(&t.eta(&m).unwrap(), v, "at {m:?}");
        }
    }

    #[test]
    fn memo_budget_is_reported() {
        let t = EtaTable::with_memo_limit(&builtin_squiral(), 3).unwrap();
        assert!(matches!(
            t.eta(&[1000, 77]),
            Err(Error::MemoBudget { limit: 3 })
        ));
    }

    #[test]
    fn axis_section_matches_full_table() {
        let t = EtaTable::new(&builtin_squiral()).unwrap();
        let s = t.axis_section(0).unwrap();
        for m in -40..=40 {
            assert_eq!(s.eta(m).unwrap(), t.eta(&[m, 0]).unwrap());
        }
    }

    #[test]
    fn offset_coeff_is_block_autocorrelation() {
        let map = builtin_squiral();
        let c = recursion_coeffs(&map);
        for o in shape::integer_box(&[-2, -2], &[2, 2]) {
            let mut sum = 0i64;
            for t in BoxIter::new(&[3, 3]) {
                let u = [t[0] as i64 + o[0], t[1] as i64 + o[1]];
                if (0..3).contains(&u[0]) && (0..3).contains(&u[1]) {
                    sum += (map.entry(&t) * map.entry(&[u[0] as usize, u[1] as usize])) as i64;
                }
            }
            assert_eq!(c.offset_coeff(&o), rat(sum, 9), "lag {o:?}");
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let rows = vec![vec![rat(1, 1), rat(1, 1)], vec![rat(2, 1), rat(2, 1)]];
        assert!(matches!(
            gauss_solve(rows, vec![rat(1, 1), rat(2, 1)]),
            Err(Error::SingularCore)
        ));
    }
}
