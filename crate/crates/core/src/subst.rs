//! Bijective binary block substitutions on `Z^d`.
//!
//! A [`BlockMap`] is a sign array `K` of shape `K_1 x ... x K_d`; the
//! substitution sends the letter `+1` to `K` and `-1` to `-K`. Configurations
//! are stored as [`LatticePatch`]es: finite boxes of signs with an explicit
//! integer anchor, so negative coordinates need no special casing.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, MapError, Result};
use crate::shape::{self, BoxIter};

/// Default cap on the number of cells a generated patch may hold.
pub const DEFAULT_MAX_CELLS: usize = 1 << 28;

/// Default cap on the cycle length accepted by [`find_seed_cycle`].
pub const DEFAULT_PERIOD_CAP: usize = 64;

/// The sign array defining `1 -> K`, `-1 -> -K`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BlockMap {
    dims: Vec<usize>,
    entries: Vec<i8>,
}

impl BlockMap {
    /// Validates and builds a map. `entries` are in row-major order with the
    /// last coordinate fastest.
    pub fn new(dims: Vec<usize>, entries: Vec<i8>) -> Result<Self, MapError> {
        if dims.is_empty() {
            return Err(MapError::NoDimensions);
        }
        if let Some((axis, &size)) = dims.iter().enumerate().find(|(_, &k)| k < 2) {
            return Err(MapError::AxisTooShort { axis, size });
        }
        let expected = dims.iter().product::<usize>();
        if entries.len() != expected {
            return Err(MapError::EntryCount {
                expected,
                found: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().position(|&v| v != 1 && v != -1) {
            return Err(MapError::BadToken {
                line: 0,
                token: entries[bad].to_string(),
            });
        }
        if entries.iter().all(|&v| v == entries[0]) {
            let sign = if entries[0] > 0 { '+' } else { '-' };
            return Err(MapError::AllEqual { sign });
        }
        Ok(Self { dims, entries })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// Block side lengths `K_1, ..., K_d`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    /// `∏ K_i`, the inflation factor of the substitution.
    pub fn volume(&self) -> usize {
        self.entries.len()
    }

    /// The sign `κ_r` at block position `r`.
    pub fn entry(&self, r: &[usize]) -> i8 {
        self.entries[shape::linear_index(r, &self.dims)]
    }

    /// Substitution matrix counts: (cells equal to the source letter, flipped cells).
    pub fn letter_counts(&self) -> (usize, usize) {
        let plus = self.entries.iter().filter(|&&v| v > 0).count();
        (plus, self.entries.len() - plus)
    }

    pub fn negated(&self) -> BlockMap {
        BlockMap {
            dims: self.dims.clone(),
            entries: self.entries.iter().map(|&v| -v).collect(),
        }
    }

    /// Text form accepted by [`parse_substitution`].
    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\nsize", self.dim());
        for k in &self.dims {
            out.push_str(&format!(" {k}"));
        }
        out.push_str("\nblock\n");
        let row = *self.dims.last().unwrap();
        for chunk in self.entries.chunks(row) {
            let line: Vec<&str> = chunk
                .iter()
                .map(|&v| if v > 0 { "+" } else { "-" })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for BlockMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let signs: String = self
            .entries
            .iter()
            .map(|&v| if v > 0 { '+' } else { '-' })
            .collect();
        f.debug_struct("BlockMap")
            .field("dims", &self.dims)
            .field("entries", &signs)
            .finish()
    }
}

/// Parses the substitution text format:
///
/// ```text
/// # comment
/// dim 2
/// size 3 3
/// block
/// - + -
/// + + +
/// - + -
/// ```
///
/// Blank lines and lines starting with `#` are skipped. Block tokens are in
/// ascending lexicographic order of the block position, last coordinate fastest.
pub fn parse_substitution(text: &str) -> Result<BlockMap, MapError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let header = |lines: &mut dyn Iterator<Item = (usize, &str)>, key: &str| {
        let (line, content) = lines.next().ok_or_else(|| MapError::MalformedHeader {
            line: 0,
            message: format!("missing `{key}` line"),
        })?;
        let mut words = content.split_whitespace();
        if words.next() != Some(key) {
            return Err(MapError::MalformedHeader {
                line,
                message: format!("expected `{key}`, found `{content}`"),
            });
        }
        Ok((line, words.map(str::to_owned).collect::<Vec<_>>()))
    };

    let (dim_line, dim_words) = header(&mut lines, "dim")?;
    let d: usize = match dim_words.as_slice() {
        [w] => w.parse().map_err(|_| MapError::MalformedHeader {
            line: dim_line,
            message: format!("`{w}` is not a dimension"),
        })?,
        _ => {
            return Err(MapError::MalformedHeader {
                line: dim_line,
                message: "`dim` takes exactly one integer".into(),
            })
        }
    };
    if d == 0 {
        return Err(MapError::NoDimensions);
    }

    let (size_line, size_words) = header(&mut lines, "size")?;
    if size_words.len() != d {
        return Err(MapError::MalformedHeader {
            line: size_line,
            message: format!("`size` lists {} lengths for dim {d}", size_words.len()),
        });
    }
    let mut dims = Vec::with_capacity(d);
    for w in &size_words {
        let k: usize = w.parse().map_err(|_| MapError::MalformedHeader {
            line: size_line,
            message: format!("`{w}` is not an axis length"),
        })?;
        dims.push(k);
    }
    if let Some((axis, &size)) = dims.iter().enumerate().find(|(_, &k)| k < 2) {
        return Err(MapError::AxisTooShort { axis, size });
    }

    let (block_line, rest) = header(&mut lines, "block")?;
    if !rest.is_empty() {
        return Err(MapError::MalformedHeader {
            line: block_line,
            message: "`block` takes no arguments".into(),
        });
    }

    let mut entries = Vec::new();
    for (line, content) in lines {
        for token in content.split_whitespace() {
            match token {
                "+" => entries.push(1),
                "-" => entries.push(-1),
                other => {
                    return Err(MapError::BadToken {
                        line,
                        token: other.to_owned(),
                    })
                }
            }
        }
    }
    BlockMap::new(dims, entries)
}

/// The squiral block rule: `3 x 3`, with `-1` exactly where both block
/// coordinates are even.
pub fn builtin_squiral() -> BlockMap {
    let entries = (0..9)
        .map(|i| if (i / 3) % 2 == 0 && (i % 3) % 2 == 0 { -1 } else { 1 })
        .collect();
    BlockMap::new(vec![3, 3], entries).expect("squiral block is valid")
}

/// Thue–Morse: `1 -> 1 -1`.
pub fn builtin_thue_morse() -> BlockMap {
    BlockMap::new(vec![2], vec![1, -1]).expect("Thue-Morse block is valid")
}

/// A `3 x 2` product rule, 2-periodic along the first axis and Thue–Morse
/// along the second: `κ(r_1, r_2) = (-1)^(r_1 + r_2)`.
pub fn builtin_period_doubling_product() -> BlockMap {
    let entries = (0..6)
        .map(|i| if ((i / 2) + (i % 2)) % 2 == 0 { 1 } else { -1 })
        .collect();
    BlockMap::new(vec![3, 2], entries).expect("product block is valid")
}

/// Resolves the names accepted after `builtin:`.
pub fn builtin(name: &str) -> Option<BlockMap> {
    match name {
        "squiral" => Some(builtin_squiral()),
        "thue-morse" | "thue_morse" | "tm" => Some(builtin_thue_morse()),
        "product" | "strange" => Some(builtin_period_doubling_product()),
        _ => None,
    }
}

pub const BUILTIN_NAMES: &[&str] = &["squiral", "thue-morse", "product"];

/// A finite sign configuration on an axis-aligned box of `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LatticePatch {
    origin: Vec<i64>,
    shape: Vec<usize>,
    values: Vec<i8>,
}

impl LatticePatch {
    pub fn new(origin: Vec<i64>, shape: Vec<usize>, values: Vec<i8>) -> Result<Self> {
        if origin.len() != shape.len() {
            return Err(Error::Dimension {
                expected: shape.len(),
                found: origin.len(),
            });
        }
        let n = shape::cell_count(&shape)?;
        if n != values.len() {
            return Err(Error::Invalid(format!(
                "patch of shape {shape:?} needs {n} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::Invalid("patch values must be +1 or -1".into()));
        }
        Ok(Self {
            origin,
            shape,
            values,
        })
    }

    /// One cell holding `value` at `origin`.
    pub fn single(origin: Vec<i64>, value: i8) -> Self {
        let d = origin.len();
        Self {
            origin,
            shape: vec![1; d],
            values: vec![value.signum()],
        }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Inclusive upper corner of the box.
    pub fn upper(&self) -> Vec<i64> {
        self.origin
            .iter()
            .zip(&self.shape)
            .map(|(&o, &n)| o + n as i64 - 1)
            .collect()
    }

    fn local(&self, point: &[i64]) -> Option<Vec<usize>> {
        if point.len() != self.dim() {
            return None;
        }
        point
            .iter()
            .zip(&self.origin)
            .zip(&self.shape)
            .map(|((&p, &o), &n)| {
                let i = p - o;
                (i >= 0 && (i as u64) < n as u64).then_some(i as usize)
            })
            .collect()
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.local(point).is_some()
    }

    pub fn get(&self, point: &[i64]) -> Option<i8> {
        self.local(point)
            .map(|idx| self.values[shape::linear_index(&idx, &self.shape)])
    }

    /// Whether the box `[lo, lo + extent)` lies inside the patch.
    pub fn covers(&self, lo: &[i64], extent: &[usize]) -> bool {
        lo.len() == self.dim()
            && lo
                .iter()
                .zip(extent)
                .zip(self.origin.iter().zip(&self.shape))
                .all(|((&a, &e), (&o, &n))| a >= o && a + e as i64 <= o + n as i64)
    }

    /// The sub-patch on `[lo, lo + extent)`.
    pub fn restrict(&self, lo: &[i64], extent: &[usize]) -> Result<LatticePatch> {
        if !self.covers(lo, extent) {
            return Err(Error::Range(format!(
                "box at {lo:?} of extent {extent:?} leaves patch at {:?} of shape {:?}",
                self.origin, self.shape
            )));
        }
        let offset: Vec<usize> = lo
            .iter()
            .zip(&self.origin)
            .map(|(&a, &o)| (a - o) as usize)
            .collect();
        let mut values = Vec::with_capacity(shape::cell_count(extent)?);
        for idx in BoxIter::new(extent) {
            let src: Vec<usize> = idx.iter().zip(&offset).map(|(&i, &o)| i + o).collect();
            values.push(self.values[shape::linear_index(&src, &self.shape)]);
        }
        LatticePatch::new(lo.to_vec(), extent.to_vec(), values)
    }

    pub fn negated(&self) -> LatticePatch {
        LatticePatch {
            origin: self.origin.clone(),
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| -v).collect(),
        }
    }

    /// Same values, anchored at a new origin.
    pub fn translated_to(&self, origin: Vec<i64>) -> LatticePatch {
        assert_eq!(origin.len(), self.dim());
        LatticePatch {
            origin,
            shape: self.shape.clone(),
            values: self.values.clone(),
        }
    }

    /// Iterates `(point, value)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (Vec<i64>, i8)> + '_ {
        BoxIter::new(&self.shape)
            .zip(self.values.iter().copied())
            .map(|(idx, v)| {
                let p = idx
                    .iter()
                    .zip(&self.origin)
                    .map(|(&i, &o)| o + i as i64)
                    .collect();
                (p, v)
            })
    }

    /// Number of `+1` and `-1` cells.
    pub fn letter_counts(&self) -> (usize, usize) {
        let plus = self.values.iter().filter(|&&v| v > 0).count();
        (plus, self.values.len() - plus)
    }
}

impl fmt::Debug for LatticePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticePatch")
            .field("origin", &self.origin)
            .field("shape", &self.shape)
            .finish_non_exhaustive()
    }
}

/// One substitution step: the cell at `m` becomes the block
/// `κ · w_m` at `(K_1 m_1, ..., K_d m_d)`.
pub fn substitute(patch: &LatticePatch, map: &BlockMap) -> Result<LatticePatch> {
    if patch.dim() != map.dim() {
        return Err(Error::Dimension {
            expected: map.dim(),
            found: patch.dim(),
        });
    }
    let k = map.dims();
    let mut shape = Vec::with_capacity(k.len());
    let mut origin = Vec::with_capacity(k.len());
    for i in 0..k.len() {
        shape.push(patch.shape[i].checked_mul(k[i]).ok_or_else(|| {
            Error::Size(format!("axis {i} of substituted patch overflows"))
        })?);
        origin.push(patch.origin[i].checked_mul(k[i] as i64).ok_or_else(|| {
            Error::Size(format!("origin on axis {i} overflows"))
        })?);
    }
    let total = shape::cell_count(&shape)?;
    let mut values = vec![0i8; total];

    // Rows along the first axis are filled independently.
    let slab: usize = shape[1..].iter().product();
    let tail_shape = &shape[1..];
    let src_strides = shape::strides(&patch.shape);
    values
        .par_chunks_mut(slab.max(1))
        .enumerate()
        .for_each(|(row, out)| {
            let (q0, r0) = (row / k[0], row % k[0]);
            let base_src = q0 * src_strides[0];
            let mut idx = vec![0usize; tail_shape.len()];
            for cell in out.iter_mut() {
                let mut src = base_src;
                let mut blk = r0;
                for (j, &t) in idx.iter().enumerate() {
                    let axis = j + 1;
                    src += (t / k[axis]) * src_strides[axis];
                    blk = blk * k[axis] + t % k[axis];
                }
                *cell = patch.values[src] * map.entries[blk];
                shape::advance(&mut idx, tail_shape);
            }
        });
    LatticePatch::new(origin, shape, values)
}

/// Applies [`substitute`] `n` times.
pub fn substitute_n(patch: &LatticePatch, map: &BlockMap, n: usize) -> Result<LatticePatch> {
    let mut out = patch.clone();
    for _ in 0..n {
        out = substitute(&out, map)?;
    }
    Ok(out)
}

/// All `side x ... x side` windows occurring in `patch`, as value vectors.
pub fn windows(patch: &LatticePatch, side: usize) -> BTreeSet<Vec<i8>> {
    let mut out = BTreeSet::new();
    if patch.shape.iter().any(|&n| n < side) {
        return out;
    }
    let starts: Vec<usize> = patch.shape.iter().map(|&n| n - side + 1).collect();
    let win = vec![side; patch.dim()];
    let strides = shape::strides(&patch.shape);
    for start in BoxIter::new(&starts) {
        let mut v = Vec::with_capacity(side.pow(patch.dim() as u32));
        for off in BoxIter::new(&win) {
            let lin: usize = start
                .iter()
                .zip(&off)
                .zip(&strides)
                .map(|((&s, &o), &st)| (s + o) * st)
                .sum();
            v.push(patch.values[lin]);
        }
        out.insert(v);
    }
    out
}

/// Legal `side^d` patches found by scanning the `n`-fold images of both
/// letters for `n = 1..=max_steps`.
pub fn legal_patches_by_scan(
    map: &BlockMap,
    side: usize,
    max_steps: usize,
) -> Result<BTreeSet<Vec<i8>>> {
    let d = map.dim();
    let mut found = BTreeSet::new();
    let mut image = LatticePatch::single(vec![0; d], 1);
    for _ in 0..max_steps {
        image = substitute(&image, map)?;
        let w = windows(&image, side);
        found.extend(w.iter().map(|p| p.iter().map(|&v| -v).collect::<Vec<_>>()));
        found.extend(w);
    }
    Ok(found)
}

/// The complete set of legal `2 x ... x 2` patches.
///
/// Every such window of `ρ(X)` lies inside `ρ(q)` for a `2^d` window `q` of
/// `X`, so the set is the closure of the windows of `ρ(±1)` under "substitute
/// and take windows". The closure is reached after finitely many rounds.
pub fn legal_seeds(map: &BlockMap) -> Result<BTreeSet<Vec<i8>>> {
    let d = map.dim();
    let two = vec![2usize; d];
    let mut found = BTreeSet::new();
    for letter in [1i8, -1] {
        let img = substitute(&LatticePatch::single(vec![0; d], letter), map)?;
        found.extend(windows(&img, 2));
    }
    let mut frontier: Vec<Vec<i8>> = found.iter().cloned().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for seed in frontier {
            let p = LatticePatch::new(vec![0; d], two.clone(), seed)?;
            for w in windows(&substitute(&p, map)?, 2) {
                if found.insert(w.clone()) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    Ok(found)
}

/// A legal `2^d` seed anchored on `{-1, 0}^d` together with its orbit under
/// the substitution, read off on those same `2^d` cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedCycle {
    pub seeds: Vec<LatticePatch>,
}

impl SeedCycle {
    pub fn period(&self) -> usize {
        self.seeds.len()
    }
}

fn seed_patch(d: usize, values: Vec<i8>) -> LatticePatch {
    LatticePatch::new(vec![-1; d], vec![2; d], values).expect("seed shape is consistent")
}

/// Number of hyperoctahedral symmetries (axis permutations with reflections,
/// acting on the `2^d` seed cells) that map the seed to itself or to its
/// negative.
fn seed_symmetry(values: &[i8], d: usize) -> usize {
    if d > 5 {
        return 0;
    }
    let mut perm: Vec<usize> = (0..d).collect();
    let mut count = 0;
    let cells = 1usize << d;
    loop {
        for flips in 0..cells {
            let image: Vec<i8> = (0..cells)
                .map(|c| {
                    // bit (d-1-i) of the linear index is coordinate i.
                    let mut src = 0usize;
                    for (i, &p) in perm.iter().enumerate() {
                        let bit = (c >> (d - 1 - i)) & 1;
                        let bit = bit ^ ((flips >> i) & 1);
                        src |= bit << (d - 1 - p);
                    }
                    values[src]
                })
                .collect();
            if image == values || image.iter().zip(values).all(|(a, b)| *a == -*b) {
                count += 1;
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    count
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Finds a legal seed and the length of the cycle its central cells run
/// through under the substitution.
///
/// Among all legal seeds the choice prefers balanced seeds, then seeds with
/// more symmetries (up to a global sign), then a `+1` on the cell at the
/// origin; remaining ties go to the lexicographically smallest value vector.
pub fn find_seed_cycle(map: &BlockMap) -> Result<SeedCycle> {
    find_seed_cycle_with_cap(map, DEFAULT_PERIOD_CAP)
}

pub fn find_seed_cycle_with_cap(map: &BlockMap, cap: usize) -> Result<SeedCycle> {
    let d = map.dim();
    let candidates = legal_seeds(map)?;
    let origin_cell = (1usize << d) - 1;
    let best = candidates
        .iter()
        .max_by_key(|v| {
            let sum: i64 = v.iter().map(|&x| x as i64).sum();
            (
                sum == 0,
                seed_symmetry(v, d),
                v[origin_cell] > 0,
                std::cmp::Reverse((*v).clone()),
            )
        })
        .ok_or_else(|| Error::SeedSearch("no legal 2^d patch found".into()))?;

    let first = seed_patch(d, best.clone());
    let lo = vec![-1i64; d];
    let two = vec![2usize; d];
    let mut seeds = vec![first.clone()];
    let mut current = first.clone();
    for _ in 0..cap {
        current = substitute(&current, map)?.restrict(&lo, &two)?;
        if current == first {
            return Ok(SeedCycle { seeds });
        }
        seeds.push(current.clone());
    }
    Err(Error::SeedSearch(format!(
        "seed {:?} did not return within {cap} steps ({} legal seeds examined)",
        first.values(),
        candidates.len()
    )))
}

/// The fixed point of `ρ^p` whose central cells are `cycle.seeds[0]`,
/// restricted to the box `[-K_i^n, K_i^n - 1]` on each axis.
///
/// The seed fed into the `n` steps is chosen by phase so that patches for
/// different `n` are restrictions of one another.
pub fn generate_fixed_patch(
    map: &BlockMap,
    cycle: &SeedCycle,
    iterations: usize,
) -> Result<LatticePatch> {
    generate_fixed_patch_with_budget(map, cycle, iterations, DEFAULT_MAX_CELLS)
}

pub fn generate_fixed_patch_with_budget(
    map: &BlockMap,
    cycle: &SeedCycle,
    iterations: usize,
    max_cells: usize,
) -> Result<LatticePatch> {
    if iterations == 0 {
        return Err(Error::Invalid("iterations must be at least 1".into()));
    }
    let p = cycle.period();
    if p == 0 {
        return Err(Error::Invalid("empty seed cycle".into()));
    }
    let mut cells = 1usize;
    for &k in map.dims() {
        let side = (k as u128)
            .checked_pow(iterations as u32)
            .and_then(|s| s.checked_mul(2))
            .filter(|&s| s <= usize::MAX as u128)
            .ok_or_else(|| Error::Size("patch side overflows".into()))?;
        cells = cells
            .checked_mul(side as usize)
            .ok_or_else(|| Error::Size("patch cell count overflows".into()))?;
    }
    if cells > max_cells {
        return Err(Error::Size(format!(
            "{cells} cells requested, budget is {max_cells}"
        )));
    }
    let phase = (p - iterations % p) % p;
    substitute_n(&cycle.seeds[phase], map, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUIRAL_TEXT: &str = "# squiral\ndim 2\nsize 3 3\nblock\n- + -\n+ + +\n- + -\n";

    #[test]
    fn parses_squiral_text() {
        let map = parse_substitution(SQUIRAL_TEXT).unwrap();
        assert_eq!(map, builtin_squiral());
        assert_eq!(map.letter_counts(), (5, 4));
    }

    #[test]
    fn parses_thue_morse() {
        let map = parse_substitution("dim 1\nsize 2\nblock\n+ -\n").unwrap();
        assert_eq!(map.dims(), &[2]);
        assert_eq!(map.entries(), &[1, -1]);
    }

    #[test]
    fn parse_errors_are_distinct() {
        let all_plus = parse_substitution("dim 2\nsize 2 2\nblock\n+ +\n+ +\n");
        assert_eq!(all_plus, Err(MapError::AllEqual { sign: '+' }));

        let short = parse_substitution("dim 1\nsize 1\nblock\n+\n");
        assert_eq!(short, Err(MapError::AxisTooShort { axis: 0, size: 1 }));

        let count = parse_substitution("dim 1\nsize 3\nblock\n+ -\n");
        assert_eq!(
            count,
            Err(MapError::EntryCount {
                expected: 3,
                found: 2
            })
        );

        let token = parse_substitution("dim 1\nsize 2\nblock\n+ x\n");
        assert!(matches!(token, Err(MapError::BadToken { line: 4, .. })));

        let header = parse_substitution("dims 1\nsize 2\nblock\n+ -\n");
        assert!(matches!(
            header,
            Err(MapError::MalformedHeader { line: 1, .. })
        ));
        let header = parse_substitution("dim 2\nsize 2\nblock\n+ -\n");
        assert!(matches!(
            header,
            Err(MapError::MalformedHeader { line: 2, .. })
        ));
        let header = parse_substitution("dim 1\nsize 2\n+ -\n");
        assert!(matches!(header, Err(MapError::MalformedHeader { .. })));
    }

    #[test]
    fn squiral_entries() {
        let map = builtin_squiral();
        assert_eq!(map.entries().iter().filter(|&&v| v < 0).count(), 4);
        assert_eq!(map.entry(&[1, 1]), 1);
        assert_eq!(map.entry(&[2, 2]), -1);
        assert_eq!(map.entry(&[0, 2]), -1);
        assert_eq!(map.entry(&[1, 2]), 1);
    }

    #[test]
    fn single_cell_substitution_gives_block() {
        let map = builtin_squiral();
        let img = substitute(&LatticePatch::single(vec![0, 0], 1), &map).unwrap();
        assert_eq!(img.values(), map.entries());
        let neg = substitute(&LatticePatch::single(vec![0, 0], -1), &map).unwrap();
        assert_eq!(neg.values(), map.negated().entries());
    }

    #[test]
    fn substitution_places_blocks() {
        let map = builtin_squiral();
        let p = LatticePatch::new(vec![-1, 2], vec![2, 1], vec![1, -1]).unwrap();
        let img = substitute(&p, &map).unwrap();
        assert_eq!(img.origin(), &[-3, 6]);
        assert_eq!(img.shape(), &[6, 3]);
        for (pt, v) in p.cells() {
            for r in BoxIter::new(&[3, 3]) {
                let q = [3 * pt[0] + r[0] as i64, 3 * pt[1] + r[1] as i64];
                assert_eq!(img.get(&q), Some(v * map.entry(&r)));
            }
        }
    }

    #[test]
    fn squiral_seed_cycle() {
        let map = builtin_squiral();
        let cycle = find_seed_cycle(&map).unwrap();
        assert_eq!(cycle.period(), 2);
        let seed = &cycle.seeds[0];
        assert_eq!(seed.get(&[-1, -1]), Some(1));
        assert_eq!(seed.get(&[0, 0]), Some(1));
        assert_eq!(seed.get(&[-1, 0]), Some(-1));
        assert_eq!(seed.get(&[0, -1]), Some(-1));
        assert_eq!(cycle.seeds[1], seed.negated());
    }

    #[test]
    fn squiral_seed_one_step() {
        let map = builtin_squiral();
        let seed = find_seed_cycle(&map).unwrap().seeds[0].clone();
        let one = substitute(&seed, &map).unwrap();
        assert_eq!(one.origin(), &[-3, -3]);
        assert_eq!(one.shape(), &[6, 6]);
        let two = substitute(&one, &map).unwrap();
        assert_eq!(two.restrict(&[-1, -1], &[2, 2]).unwrap(), seed);
    }

    #[test]
    fn thue_morse_and_product_cycles() {
        let tm = find_seed_cycle(&builtin_thue_morse()).unwrap();
        assert!(tm.period() <= 2);
        assert_eq!(tm.seeds[0].values(), &[-1, 1]);
        let prod = find_seed_cycle(&builtin_period_doubling_product()).unwrap();
        assert!(prod.period() >= 1 && prod.period() <= DEFAULT_PERIOD_CAP);
    }

    #[test]
    fn squiral_has_fourteen_legal_seeds() {
        let map = builtin_squiral();
        let closure = legal_seeds(&map).unwrap();
        assert_eq!(closure.len(), 14);
        assert!(!closure.contains(&vec![1, 1, 1, 1]));
        assert!(!closure.contains(&vec![-1, -1, -1, -1]));
        assert_eq!(legal_patches_by_scan(&map, 2, 4).unwrap(), closure);
    }

    #[test]
    fn fixed_patch_is_nested() {
        for map in [
            builtin_squiral(),
            builtin_thue_morse(),
            builtin_period_doubling_product(),
        ] {
            let cycle = find_seed_cycle(&map).unwrap();
            let mut prev = generate_fixed_patch(&map, &cycle, 1).unwrap();
            for n in 2..=4 {
                let next = generate_fixed_patch(&map, &cycle, n).unwrap();
                let sub = next.restrict(prev.origin(), prev.shape()).unwrap();
                assert_eq!(sub, prev, "map {map:?}, n = {n}");
                prev = next;
            }
        }
    }

    #[test]
    fn fixed_patch_quadrant_is_letter_image() {
        let map = builtin_squiral();
        let cycle = find_seed_cycle(&map).unwrap();
        let patch = generate_fixed_patch(&map, &cycle, 2).unwrap();
        assert_eq!(patch.shape(), &[18, 18]);
        assert_eq!(patch.origin(), &[-9, -9]);
        // The quadrant is the 2-step image of the origin cell of the
        // phase-matched seed, which is +1 here.
        let corner = patch.restrict(&[0, 0], &[9, 9]).unwrap();
        let image = substitute_n(&LatticePatch::single(vec![0, 0], 1), &map, 2).unwrap();
        assert_eq!(corner, image);
    }

    #[test]
    fn budget_is_enforced() {
        let map = builtin_squiral();
        let cycle = find_seed_cycle(&map).unwrap();
        assert!(matches!(
            generate_fixed_patch_with_budget(&map, &cycle, 3, 100),
            Err(Error::Size(_))
        ));
        assert!(generate_fixed_patch(&map, &cycle, 0).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let map = builtin_period_doubling_product();
        assert_eq!(parse_substitution(&map.to_text()).unwrap(), map);
    }
}
