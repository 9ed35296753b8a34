//! The squiral's two-to-one factor.
//!
//! Multiplying the four signs of every `2 x 2` window turns a squiral
//! configuration into a configuration that is again substitutive, for a
//! non-bijective `3 x 3` rule, and whose `±1` level sets are model sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::shape::BoxIter;
use crate::subst::{legal_seeds, substitute_n, BlockMap, LatticePatch};

/// The pure-point part of the dynamical spectrum, recorded as metadata.
pub const FOURIER_MODULE: &str = "Z[1/3] x Z[1/3]";

/// `(ψw)_{m,n} = w_{m,n} w_{m+1,n} w_{m,n+1} w_{m+1,n+1}`.
pub fn psi(patch: &LatticePatch) -> Result<LatticePatch> {
    if patch.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: patch.dim(),
        });
    }
    let [h, w] = [patch.shape()[0], patch.shape()[1]];
    if h < 2 || w < 2 {
        return Err(Error::Range(format!(
            "patch of shape {h}x{w} is too small for 2x2 products"
        )));
    }
    let v = patch.values();
    let values = (0..h - 1)
        .flat_map(|i| (0..w - 1).map(move |j| (i, j)))
        .map(|(i, j)| v[i * w + j] * v[(i + 1) * w + j] * v[i * w + j + 1] * v[(i + 1) * w + j + 1])
        .collect();
    LatticePatch::new(patch.origin().to_vec(), vec![h - 1, w - 1], values)
}

/// Placement of the free letter inside the induced `3 x 3` block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Letter at block position `(2, 2)`.
    Identity,
    /// First block coordinate reversed: letter at `(0, 2)`.
    FlipFirst,
    /// Second block coordinate reversed: letter at `(2, 0)`.
    FlipSecond,
    /// Both reversed: letter at `(0, 0)`.
    FlipBoth,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::Identity,
        Orientation::FlipFirst,
        Orientation::FlipSecond,
        Orientation::FlipBoth,
    ];

    fn apply(self, r: usize, s: usize) -> (usize, usize) {
        match self {
            Orientation::Identity => (r, s),
            Orientation::FlipFirst => (2 - r, s),
            Orientation::FlipSecond => (r, 2 - s),
            Orientation::FlipBoth => (2 - r, 2 - s),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Identity => "identity",
            Orientation::FlipFirst => "flip-first",
            Orientation::FlipSecond => "flip-second",
            Orientation::FlipBoth => "flip-both",
        })
    }
}

/// The induced block for letter `a`, row-major in `(r, s)`.
pub fn induced_block(a: i8, orientation: Orientation) -> [i8; 9] {
    let mut block = [0i8; 9];
    for r in 0..3 {
        for s in 0..3 {
            let v = match (r, s) {
                (2, 2) => a,
                (0..=1, 0..=1) => -1,
                _ => 1,
            };
            let (r2, s2) = orientation.apply(r, s);
            block[r2 * 3 + s2] = v;
        }
    }
    block
}

/// One step of the induced inflation: the cell at `m` becomes the
/// `3 x 3` block for its letter at `3m`.
pub fn induced_substitute(patch: &LatticePatch, orientation: Orientation) -> Result<LatticePatch> {
    if patch.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: patch.dim(),
        });
    }
    let [h, w] = [patch.shape()[0], patch.shape()[1]];
    let plus = induced_block(1, orientation);
    let minus = induced_block(-1, orientation);
    let (oh, ow) = (3 * h, 3 * w);
    let values = (0..oh * ow)
        .map(|lin| {
            let (i, j) = (lin / ow, lin % ow);
            let src = patch.values()[(i / 3) * w + j / 3];
            let block = if src > 0 { &plus } else { &minus };
            block[(i % 3) * 3 + j % 3]
        })
        .collect();
    let origin = patch.origin().iter().map(|&o| 3 * o).collect();
    LatticePatch::new(origin, vec![oh, ow], values)
}

pub fn induced_substitute_n(
    patch: &LatticePatch,
    orientation: Orientation,
    n: usize,
) -> Result<LatticePatch> {
    let mut out = patch.clone();
    for _ in 0..n {
        out = induced_substitute(&out, orientation)?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct CommutationReport {
    pub orientation: Orientation,
    pub steps: usize,
    /// Number of legal `2 x 2` patches examined.
    pub patches: usize,
    pub mismatched_patches: Vec<Vec<i8>>,
}

impl CommutationReport {
    pub fn passed(&self) -> bool {
        self.mismatched_patches.is_empty()
    }
}

/// For every legal `2 x 2` patch `P` at the origin, compares
/// `ψ(ρ^steps P)` with `σ^steps(ψ P)` on the `3^steps` square grown from
/// the single factor cell.
pub fn check_commutation(
    map: &BlockMap,
    orientation: Orientation,
    steps: usize,
) -> Result<CommutationReport> {
    if map.dims() != [3, 3] {
        return Err(Error::Invalid("the factor construction needs a 3x3 block map".into()));
    }
    let seeds = legal_seeds(map)?;
    let side = 3usize.pow(steps as u32);
    let mut mismatched = Vec::new();
    for seed in &seeds {
        let p = LatticePatch::new(vec![0, 0], vec![2, 2], seed.clone())?;
        let lhs = psi(&substitute_n(&p, map, steps)?)?.restrict(&[0, 0], &[side, side])?;
        let rhs = induced_substitute_n(&psi(&p)?, orientation, steps)?;
        if lhs != rhs {
            mismatched.push(seed.clone());
        }
    }
    Ok(CommutationReport {
        orientation,
        steps,
        patches: seeds.len(),
        mismatched_patches: mismatched,
    })
}

/// The first orientation under which `ψ∘ρ² = σ²∘ψ` holds on all legal
/// patches, with the reports of every convention tried.
pub fn detect_orientation(map: &BlockMap) -> Result<(Orientation, Vec<CommutationReport>)> {
    let mut reports = Vec::new();
    for o in Orientation::ALL {
        let report = check_commutation(map, o, 2)?;
        let ok = report.passed();
        reports.push(report);
        if ok {
            return Ok((o, reports));
        }
    }
    Err(Error::Invariant(
        "no orientation of the induced block commutes with the substitution".into(),
    ))
}

/// Which of the two solutions of the set equations is realised: the point
/// `(-1, -1)` belongs to `Λ₊` or to `Λ₋`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelSetBranch {
    APlusNonempty,
    AMinusNonempty,
}

impl fmt::Display for ModelSetBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelSetBranch::APlusNonempty => "A_plus_nonempty",
            ModelSetBranch::AMinusNonempty => "A_minus_nonempty",
        })
    }
}

/// Whether `point` lies in `Λ₊` (`plus = true`) or `Λ₋`.
///
/// Residues `(2,0), (0,2), (2,1), (1,2)` mod 3 decide `Λ₊`, the four
/// residues in `{0,1}²` decide `Λ₋`, and residue `(2,2)` strips one level
/// via `m ↦ (m - 2)/3`; the only point never decided is the fixed point
/// `(-1, -1)` of that map, which the branch settles.
pub fn lambda_membership(point: [i64; 2], plus: bool, branch: ModelSetBranch) -> bool {
    let [mut m, mut n] = point;
    loop {
        if (m, n) == (-1, -1) {
            return plus == (branch == ModelSetBranch::APlusNonempty);
        }
        match (m.rem_euclid(3), n.rem_euclid(3)) {
            (2, 2) => {
                m = (m - 2) / 3;
                n = (n - 2) / 3;
            }
            (2, _) | (_, 2) => return plus,
            _ => return !plus,
        }
    }
}

/// Reads the branch off a factor patch containing `(-1, -1)`.
pub fn detect_branch(factor: &LatticePatch) -> Result<ModelSetBranch> {
    match factor.get(&[-1, -1]) {
        Some(1) => Ok(ModelSetBranch::APlusNonempty),
        Some(_) => Ok(ModelSetBranch::AMinusNonempty),
        None => Err(Error::Range("factor patch does not contain (-1,-1)".into())),
    }
}

#[derive(Clone, Debug)]
pub struct MembershipReport {
    pub branch: ModelSetBranch,
    pub points: usize,
    /// Points whose factor sign disagrees with the membership test.
    pub mismatches: usize,
    /// Points lying in both or neither of `Λ₊`, `Λ₋`.
    pub partition_failures: usize,
}

/// Compares the membership test against the sign field of `factor` on the
/// square `[-radius, radius]²`.
pub fn check_membership(
    factor: &LatticePatch,
    branch: ModelSetBranch,
    radius: i64,
) -> Result<MembershipReport> {
    let lo = [-radius, -radius];
    let side = (2 * radius + 1) as usize;
    if !factor.covers(&lo, &[side, side]) {
        return Err(Error::Range(format!(
            "factor patch does not cover [-{radius}, {radius}]^2"
        )));
    }
    let (mismatches, partition_failures) = (-radius..=radius)
        .into_par_iter()
        .map(|m| {
            let mut bad = (0usize, 0usize);
            for n in -radius..=radius {
                let plus = lambda_membership([m, n], true, branch);
                let minus = lambda_membership([m, n], false, branch);
                if plus == minus {
                    bad.1 += 1;
                }
                let sign = factor.get(&[m, n]).expect("covered");
                if plus != (sign > 0) {
                    bad.0 += 1;
                }
            }
            bad
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(MembershipReport {
        branch,
        points: side * side,
        mismatches,
        partition_failures,
    })
}

#[derive(Clone, Debug)]
pub struct FiberConfig {
    /// Side of the sampled factor windows.
    pub window: usize,
    /// Side of the central source square whose preimages are counted.
    pub core: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            window: 81,
            core: 2,
            samples: 2000,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FiberReport {
    pub config: FiberConfig,
    /// Number of distinct preimages → number of sampled windows.
    pub histogram: BTreeMap<usize, usize>,
    pub fraction_two: f64,
    pub max_preimages: usize,
    /// True when some sampled window has more than two preimages.
    pub not_globally_two_to_one: bool,
}

/// Samples factor windows of `config.window` cells per side and counts the
/// distinct central `config.core`-square source patterns over all occurrences
/// of each window in `patch`. The hull is closed under the global sign flip,
/// so every pattern found is counted together with its negative.
pub fn fiber_statistics(patch: &LatticePatch, config: &FiberConfig) -> Result<FiberReport> {
    let factor = psi(patch)?;
    let k = config.window;
    let s = config.core;
    if k == 0 || s == 0 || s > k + 1 || config.samples == 0 {
        return Err(Error::Invalid("window, core and samples must be positive, core ≤ window + 1".into()));
    }
    let [h, w] = [factor.shape()[0], factor.shape()[1]];
    if h < k || w < k {
        return Err(Error::Range(format!(
            "factor patch {h}x{w} is smaller than the window {k}"
        )));
    }
    let (ph, pw) = (h - k + 1, w - k + 1);
    let fv = factor.values();
    let sv = patch.values();
    let sw = patch.shape()[1];
    let offset = (k + 1 - s) / 2;

    let hashes = window_hashes(fv, h, w, k);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let positions: Vec<(usize, usize)> = (0..config.samples)
        .map(|_| (rng.gen_range(0..ph), rng.gen_range(0..pw)))
        .collect();

    let same_window = |a: (usize, usize), b: (usize, usize)| {
        (0..k).all(|i| {
            let ra = (a.0 + i) * w + a.1;
            let rb = (b.0 + i) * w + b.1;
            fv[ra..ra + k] == fv[rb..rb + k]
        })
    };
    // group samples into distinct windows
    let mut classes: Vec<(usize, usize)> = Vec::new();
    let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut class_of_sample = Vec::with_capacity(positions.len());
    for &p in &positions {
        let hash = hashes[p.0 * pw + p.1];
        let bucket = by_hash.entry(hash).or_default();
        let found = bucket.iter().copied().find(|&c| same_window(classes[c], p));
        let c = found.unwrap_or_else(|| {
            classes.push(p);
            bucket.push(classes.len() - 1);
            classes.len() - 1
        });
        class_of_sample.push(c);
    }

    let core_at = |p: (usize, usize)| -> Vec<i8> {
        let mut v = Vec::with_capacity(s * s);
        for i in 0..s {
            let row = (p.0 + offset + i) * sw + p.1 + offset;
            v.extend_from_slice(&sv[row..row + s]);
        }
        v
    };
    let preimages: Vec<BTreeSet<Vec<i8>>> = (0..ph)
        .into_par_iter()
        .fold(
            || vec![BTreeSet::new(); classes.len()],
            |mut acc, i| {
                for j in 0..pw {
                    if let Some(bucket) = by_hash.get(&hashes[i * pw + j]) {
                        for &c in bucket {
                            if same_window(classes[c], (i, j)) {
                                let core = core_at((i, j));
                                acc[c].insert(core.iter().map(|&x| -x).collect());
                                acc[c].insert(core);
                            }
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![BTreeSet::new(); classes.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.extend(y);
                }
                a
            },
        );

    let mut histogram = BTreeMap::new();
    for &c in &class_of_sample {
        *histogram.entry(preimages[c].len()).or_insert(0) += 1;
    }
    let max_preimages = histogram.keys().copied().max().unwrap_or(0);
    let fraction_two = *histogram.get(&2).unwrap_or(&0) as f64 / config.samples as f64;
    Ok(FiberReport {
        config: config.clone(),
        histogram,
        fraction_two,
        max_preimages,
        not_globally_two_to_one: max_preimages > 2,
    })
}

/// Polynomial hashes of all `k x k` windows, row-major over window corners.
fn window_hashes(values: &[i8], h: usize, w: usize, k: usize) -> Vec<u64> {
    const B1: u64 = 0x9E37_79B9_7F4A_7C15;
    const B2: u64 = 0xC2B2_AE3D_27D4_EB4F;
    let pw = w - k + 1;
    let ph = h - k + 1;
    let p1 = B1.wrapping_pow(k as u32);
    let p2 = B2.wrapping_pow(k as u32);
    let code = |v: i8| if v > 0 { 2u64 } else { 1u64 };
    let rows: Vec<u64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|i| {
            let row = &values[i * w..(i + 1) * w];
            let mut out = Vec::with_capacity(pw);
            let mut acc = 0u64;
            for j in 0..w {
                acc = acc.wrapping_mul(B1).wrapping_add(code(row[j]));
                if j >= k {
                    acc = acc.wrapping_sub(code(row[j - k]).wrapping_mul(p1));
                }
                if j + 1 >= k {
                    out.push(acc);
                }
            }
            out
        })
        .collect();
    let mut out = vec![0u64; ph * pw];
    for j in 0..pw {
        let mut acc = 0u64;
        for i in 0..h {
            acc = acc.wrapping_mul(B2).wrapping_add(rows[i * pw + j]);
            if i >= k {
                acc = acc.wrapping_sub(rows[(i - k) * pw + j].wrapping_mul(p2));
            }
            if i + 1 >= k {
                out[(i + 1 - k) * pw + j] = acc;
            }
        }
    }
    out
}

/// Symmetries of the square about the centre of the cell block `{-1,0}²`,
/// as maps on integer points.
pub fn square_symmetries() -> [(&'static str, fn(i64, i64) -> (i64, i64)); 8] {
    [
        ("identity", |m, n| (m, n)),
        ("rotate-90", |m, n| (-1 - n, m)),
        ("rotate-180", |m, n| (-1 - m, -1 - n)),
        ("rotate-270", |m, n| (n, -1 - m)),
        ("reflect-first", |m, n| (-1 - m, n)),
        ("reflect-second", |m, n| (m, -1 - n)),
        ("transpose", |m, n| (n, m)),
        ("anti-transpose", |m, n| (-1 - n, -1 - m)),
    ]
}

/// For each square symmetry `g`, whether `w∘g = w` (`Some(1)`),
/// `w∘g = -w` (`Some(-1)`), or neither (`None`), on a patch centred on the
/// block `{-1,0}²`.
pub fn symmetry_signs(patch: &LatticePatch) -> Result<Vec<(&'static str, Option<i8>)>> {
    if patch.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: patch.dim(),
        });
    }
    Ok(square_symmetries()
        .iter()
        .map(|&(name, g)| {
            let mut sign: Option<i8> = None;
            let mut consistent = true;
            for idx in BoxIter::new(patch.shape()) {
                let m = patch.origin()[0] + idx[0] as i64;
                let n = patch.origin()[1] + idx[1] as i64;
                let (a, b) = g(m, n);
                let (Some(x), Some(y)) = (patch.get(&[m, n]), patch.get(&[a, b])) else {
                    continue;
                };
                let s = x * y;
                match sign {
                    None => sign = Some(s),
                    Some(t) if t != s => {
                        consistent = false;
                        break;
                    }
                    _ => {}
                }
            }
            (name, if consistent { sign } else { None })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subst::{builtin_squiral, substitute};

    #[test]
    fn psi_of_small_patches() {
        let seed = LatticePatch::new(vec![-1, -1], vec![2, 2], vec![1, -1, -1, 1]).unwrap();
        let f = psi(&seed).unwrap();
        assert_eq!(f.values(), &[1]);
        assert_eq!(f.origin(), &[-1, -1]);
        let checker: Vec<i8> = (0..9).map(|i| if (i / 3 + i % 3) % 2 == 0 { 1 } else { -1 }).collect();
        let c = LatticePatch::new(vec![0, 0], vec![3, 3], checker).unwrap();
        assert!(psi(&c).unwrap().values().iter().all(|&v| v == 1));
        assert!(psi(&LatticePatch::single(vec![0, 0], 1)).is_err());
    }

    #[test]
    fn induced_blocks() {
        let plus = induced_block(1, Orientation::Identity);
        assert_eq!(plus.iter().filter(|&&v| v < 0).count(), 4);
        let minus = induced_block(-1, Orientation::Identity);
        assert_eq!(minus.iter().filter(|&&v| v < 0).count(), 5);
        assert_eq!(minus[8], -1);
        assert_eq!(plus[0], -1);
        assert_eq!(plus[2 * 3], 1);
    }

    #[test]
    fn one_step_commutation() {
        let map = builtin_squiral();
        let report = check_commutation(&map, Orientation::Identity, 1).unwrap();
        assert!(report.passed());
        assert_eq!(report.patches, 14);
    }

    #[test]
    fn psi_ignores_global_flip() {
        let map = builtin_squiral();
        let p = substitute(&LatticePatch::single(vec![0, 0], 1), &map).unwrap();
        assert_eq!(psi(&p).unwrap(), psi(&p.negated()).unwrap());
    }

    #[test]
    fn membership_examples() {
        let b = ModelSetBranch::APlusNonempty;
        assert!(lambda_membership([2, 0], true, b));
        assert!(lambda_membership([0, 0], false, b));
        assert!(lambda_membership([-1, -1], true, b));
        assert!(!lambda_membership([-1, -1], true, ModelSetBranch::AMinusNonempty));
    }

    #[test]
    fn hashes_match_direct_comparison() {
        let vals: Vec<i8> = (0..64).map(|i| if (i * 7 + i / 8) % 3 == 0 { 1 } else { -1 }).collect();
        let hs = window_hashes(&vals, 8, 8, 3);
        let direct = |i: usize, j: usize| -> Vec<i8> {
            (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| vals[(i + a) * 8 + j + b]).collect()
        };
        for i in 0..6 {
            for j in 0..6 {
                for a in 0..6 {
                    for b in 0..6 {
                        if direct(i, j) == direct(a, b) {
                            assert_eq!(hs[i * 6 + j], hs[a * 6 + b]);
                        }
                    }
                }
            }
        }
    }
}
