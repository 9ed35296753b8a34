//! Riesz-product approximants of the diffraction measure on the unit torus.
//!
//! The level-`N` density is `f⁽ᴺ⁾(x) = ∏_{ℓ<N} ϑ(K^ℓ x)`. Its Fourier
//! coefficients `β⁽ᴺ⁾` follow the same recursion as the autocorrelation, so
//! distribution functions can be evaluated either from the coefficients
//! (series route) or by integrating sampled densities (product route).

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;

use crate::autocorr::{to_f64, CoeffTable, Correlation, Rational};
use crate::error::{Error, Result};
use crate::shape::{self, BoxIter};

/// Default cap on grid samples and series coefficients.
pub const DEFAULT_MAX_SAMPLES: usize = 1 << 26;

/// `ϑ(x) = Σ_o A(o) cos(2π o·x)`, with `A(o)` the signed block
/// autocorrelation at lag `o ∈ ∏(-K_i, K_i)`.
#[derive(Clone, Debug)]
pub struct TrigKernel {
    dims: Vec<usize>,
    offsets: Vec<Vec<i64>>,
    coefficients: Vec<Rational>,
    values: Vec<f64>,
}

impl TrigKernel {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// Nonzero `(lag, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (&[i64], &Rational)> {
        self.offsets
            .iter()
            .map(Vec::as_slice)
            .zip(&self.coefficients)
    }

    pub fn coefficient(&self, o: &[i64]) -> Rational {
        self.terms()
            .find(|(lag, _)| *lag == o)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rational::zero)
    }

    /// Whether `A(o)` depends only on `|o|` componentwise, in which case
    /// `ϑ` is a cosine polynomial in each variable separately.
    pub fn reflection_symmetric(&self) -> bool {
        self.terms().all(|(o, c)| {
            let abs: Vec<i64> = o.iter().map(|x| x.abs()).collect();
            &self.coefficient(&abs) == c
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offsets
            .iter()
            .zip(&self.values)
            .map(|(o, &c)| {
                let phase: f64 = o.iter().zip(x).map(|(&oi, &xi)| oi as f64 * xi).sum();
                c * (2.0 * PI * phase).cos()
            })
            .sum()
    }

    /// `ϑ(k/G)` for every `k ∈ [0, G)^d`, row-major.
    pub fn eval_grid(&self, resolution: usize) -> Result<Vec<f64>> {
        let d = self.dim();
        let n = shape::cell_count(&vec![resolution; d])?;
        let g = resolution as i64;
        Ok((0..n)
            .into_par_iter()
            .map(|lin| {
                let idx = shape::unravel(lin, &vec![resolution; d]);
                self.offsets
                    .iter()
                    .zip(&self.values)
                    .map(|(o, &c)| {
                        // reduce the phase exactly before converting
                        let p: i64 = o.iter().zip(&idx).map(|(&oi, &k)| oi * k as i64).sum();
                        c * (2.0 * PI * p.rem_euclid(g) as f64 / g as f64).cos()
                    })
                    .sum()
            })
            .collect())
    }
}

pub fn build_kernel(coeffs: &CoeffTable) -> TrigKernel {
    let dims = coeffs.dims().to_vec();
    let lo: Vec<i64> = dims.iter().map(|&k| 1 - k as i64).collect();
    let hi: Vec<i64> = dims.iter().map(|&k| k as i64 - 1).collect();
    let mut offsets = Vec::new();
    let mut coefficients = Vec::new();
    for o in shape::integer_box(&lo, &hi) {
        let c = coeffs.offset_coeff(&o);
        if !c.is_zero() {
            offsets.push(o);
            coefficients.push(c);
        }
    }
    let values = coefficients.iter().map(to_f64).collect();
    TrigKernel {
        dims,
        offsets,
        coefficients,
        values,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// Samples at `k/G`, `k ∈ [0, G)` per axis (one period).
    Density,
    /// Samples at `k/G`, `k ∈ [0, G]` per axis (closed unit box).
    Distribution,
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    pub dims: usize,
    pub resolution: usize,
    pub kind: GridKind,
    pub samples: Vec<f64>,
}

impl GridFunction {
    pub fn points_per_axis(&self) -> usize {
        match self.kind {
            GridKind::Density => self.resolution,
            GridKind::Distribution => self.resolution + 1,
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.points_per_axis(); self.dims]
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.samples[shape::linear_index(idx, &self.shape())]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        if self.samples.len() != other.samples.len() || self.dims != other.dims {
            return Err(Error::Invalid("grids differ in shape".into()));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Largest drop between neighbours along any axis (zero for a
    /// non-decreasing function).
    pub fn max_decrease(&self) -> f64 {
        let shape = self.shape();
        let strides = shape::strides(&shape);
        let mut worst = 0.0f64;
        for (lin, idx) in BoxIter::new(&shape).enumerate() {
            for axis in 0..self.dims {
                if idx[axis] + 1 < shape[axis] {
                    let next = self.samples[lin + strides[axis]];
                    worst = worst.max(self.samples[lin] - next);
                }
            }
        }
        worst
    }

    /// The section through the last grid point on every axis but `axis`.
    pub fn edge(&self, axis: usize) -> Vec<f64> {
        let n = self.points_per_axis();
        let mut idx = vec![n - 1; self.dims];
        (0..n)
            .map(|k| {
                idx[axis] = k;
                self.get(&idx)
            })
            .collect()
    }
}

/// `f⁽ᴺ⁾(k/G) = ∏_{ℓ<N} ϑ(K^ℓ k / G)` on the periodic grid.
pub fn density(kernel: &TrigKernel, level: usize, resolution: usize) -> Result<GridFunction> {
    if resolution < 2 {
        return Err(Error::Invalid("resolution must be at least 2".into()));
    }
    let d = kernel.dim();
    let shape = vec![resolution; d];
    let n = shape::cell_count(&shape)?;
    if n > DEFAULT_MAX_SAMPLES {
        return Err(Error::Size(format!("{n} samples exceed the grid budget")));
    }
    if level == 0 {
        return Ok(GridFunction {
            dims: d,
            resolution,
            kind: GridKind::Density,
            samples: vec![1.0; n],
        });
    }
    let theta = kernel.eval_grid(resolution)?;
    let scales = kernel.dims().to_vec();
    let samples = (0..n)
        .into_par_iter()
        .map(|lin| {
            let mut idx = shape::unravel(lin, &shape);
            let mut prod = 1.0;
            for _ in 0..level {
                prod *= theta[shape::linear_index(&idx, &shape)];
                for (i, k) in idx.iter_mut().zip(&scales) {
                    *i = (*i * k) % resolution;
                }
            }
            prod
        })
        .collect();
    Ok(GridFunction {
        dims: d,
        resolution,
        kind: GridKind::Density,
        samples,
    })
}

/// Exact Fourier coefficients `β⁽ᴺ⁾_m` of `f⁽ᴺ⁾`, stored densely on the box
/// `|m_i| < K_i^N`.
#[derive(Clone, Debug)]
pub struct SeriesCoeffs {
    pub level: usize,
    dims: Vec<usize>,
    half: Vec<i64>,
    beta: Vec<Rational>,
}

impl SeriesCoeffs {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// `K_i^N - 1` per axis.
    pub fn half_widths(&self) -> &[i64] {
        &self.half
    }

    fn box_shape(&self) -> Vec<usize> {
        self.half.iter().map(|&h| (2 * h + 1) as usize).collect()
    }

    pub fn get(&self, m: &[i64]) -> Rational {
        if m.len() != self.dim() || m.iter().zip(&self.half).any(|(x, h)| x.abs() > *h) {
            return Rational::zero();
        }
        let idx: Vec<usize> = m
            .iter()
            .zip(&self.half)
            .map(|(x, h)| (x + h) as usize)
            .collect();
        self.beta[shape::linear_index(&idx, &self.box_shape())].clone()
    }

    /// Coefficients on the box `[-half, half]`, row-major, as floats.
    pub fn as_f64(&self) -> Vec<f64> {
        self.beta.iter().map(to_f64).collect()
    }

    pub fn values(&self) -> &[Rational] {
        &self.beta
    }
}

pub fn series_coeffs(coeffs: &CoeffTable, level: usize) -> Result<SeriesCoeffs> {
    series_coeffs_with_budget(coeffs, level, DEFAULT_MAX_SAMPLES)
}

pub fn series_coeffs_with_budget(
    coeffs: &CoeffTable,
    level: usize,
    max_cells: usize,
) -> Result<SeriesCoeffs> {
    let dims = coeffs.dims().to_vec();
    let d = dims.len();
    let mut half = vec![0i64; d];
    let mut beta = vec![Rational::from_integer(1.into())];
    for step in 0..level {
        let next_half: Vec<i64> = half
            .iter()
            .zip(&dims)
            .map(|(&h, &k)| (h + 1).checked_mul(k as i64).map(|v| v - 1))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Size(format!("coefficient box overflows at level {}", step + 1)))?;
        let shape: Vec<usize> = next_half.iter().map(|&h| (2 * h + 1) as usize).collect();
        let cells = shape::cell_count(&shape)?;
        if cells > max_cells {
            return Err(Error::Size(format!(
                "{cells} coefficients at level {} exceed the budget of {max_cells}",
                step + 1
            )));
        }
        let prev_shape: Vec<usize> = half.iter().map(|&h| (2 * h + 1) as usize).collect();
        let rows: Vec<Vec<(usize, Rational)>> = (0..dims.iter().product::<usize>())
            .map(|r| {
                let r_idx = shape::unravel(r, &dims);
                (0..1usize << d)
                    .map(|mask| (mask, coeffs.get(&r_idx, mask).clone()))
                    .filter(|(_, a)| !a.is_zero())
                    .collect()
            })
            .collect();
        let prev = &beta;
        let prev_half = &half;
        let next: Vec<Rational> = (0..cells)
            .into_par_iter()
            .map(|lin| {
                let idx = shape::unravel(lin, &shape);
                let mut q = Vec::with_capacity(d);
                let mut r_lin = 0usize;
                for i in 0..d {
                    let m = idx[i] as i64 - next_half[i];
                    let (qi, ri) = m.div_mod_floor(&(dims[i] as i64));
                    q.push(qi);
                    r_lin = r_lin * dims[i] + ri as usize;
                }
                let mut acc = Rational::zero();
                'terms: for (mask, a) in &rows[r_lin] {
                    let mut p = Vec::with_capacity(d);
                    for i in 0..d {
                        let v = q[i] + ((mask >> i) & 1) as i64;
                        if v.abs() > prev_half[i] {
                            continue 'terms;
                        }
                        p.push((v + prev_half[i]) as usize);
                    }
                    acc += a * &prev[shape::linear_index(&p, &prev_shape)];
                }
                acc
            })
            .collect();
        beta = next;
        half = next_half;
    }
    Ok(SeriesCoeffs {
        level,
        dims,
        half,
        beta,
    })
}

/// `∫_0^x e^{2πimt} dt`.
fn primitive(m: i64, x: f64) -> Complex64 {
    if m == 0 {
        return Complex64::new(x, 0.0);
    }
    let w = 2.0 * PI * m as f64;
    let phase = w * x;
    Complex64::new(phase.sin() / w, (1.0 - phase.cos()) / w)
}

/// `Σ_m c_m ∏_i ∫_0^{x_i} e^{2πi m_i t} dt` on a tensor grid, for
/// coefficients `c` stored on the box `|m_i| ≤ half_i`. The coefficients must
/// be even in `m` so that the result is real.
pub fn stieltjes_on_grid(coeffs: &[f64], half: &[i64], axes: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = half.len();
    if axes.len() != d {
        return Err(Error::Dimension {
            expected: d,
            found: axes.len(),
        });
    }
    let mut shape: Vec<usize> = half.iter().map(|&h| (2 * h + 1) as usize).collect();
    if shape::cell_count(&shape)? != coeffs.len() {
        return Err(Error::Invalid("coefficient count does not match box".into()));
    }
    let mut data: Vec<Complex64> = coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    for axis in 0..d {
        let points = &axes[axis];
        let h = half[axis];
        let n_in = shape[axis];
        let basis: Vec<Complex64> = points
            .iter()
            .flat_map(|&x| (0..n_in).map(move |j| primitive(j as i64 - h, x)))
            .collect();
        let pre: usize = shape[..axis].iter().product();
        let post: usize = shape[axis + 1..].iter().product();
        let n_out = points.len();
        let mut out = vec![Complex64::zero(); pre * n_out * post];
        out.par_chunks_mut(post.max(1))
            .enumerate()
            .for_each(|(row, chunk)| {
                let (a, p) = (row / n_out, row % n_out);
                let b = &basis[p * n_in..(p + 1) * n_in];
                for (j, &g) in b.iter().enumerate() {
                    let src = &data[(a * n_in + j) * post..(a * n_in + j + 1) * post];
                    for (o, &s) in chunk.iter_mut().zip(src) {
                        *o += g * s;
                    }
                }
            });
        data = out;
        shape[axis] = n_out;
    }
    Ok(data.into_iter().map(|z| z.re).collect())
}

fn unit_axis(resolution: usize) -> Vec<f64> {
    (0..=resolution).map(|k| k as f64 / resolution as f64).collect()
}

/// `F⁽ᴺ⁾` sampled at `k/G`, `k ∈ [0, G]^d`, from its coefficients.
pub fn distribution(series: &SeriesCoeffs, resolution: usize) -> Result<GridFunction> {
    let d = series.dim();
    let axes = vec![unit_axis(resolution); d];
    let samples = stieltjes_on_grid(&series.as_f64(), series.half_widths(), &axes)?;
    Ok(GridFunction {
        dims: d,
        resolution,
        kind: GridKind::Distribution,
        samples,
    })
}

/// Exact correlations on `[-M, M]^d` as floats.
pub fn truncated_coefficients(table: &dyn Correlation, truncation: usize) -> Result<Vec<f64>> {
    let d = table.dim();
    let m = truncation as i64;
    let values = table.values_in_box(&vec![-m; d], &vec![m; d])?;
    Ok(values.iter().map(to_f64).collect())
}

/// Partial sum of the Fourier–Stieltjes series of the limit distribution
/// function over `|m_i| ≤ M`, sampled at `k/G`, `k ∈ [0, G]^d`.
pub fn distribution_via_eta(
    table: &dyn Correlation,
    truncation: usize,
    resolution: usize,
) -> Result<GridFunction> {
    let d = table.dim();
    let axes = vec![unit_axis(resolution); d];
    let samples = distribution_via_eta_at(table, truncation, &axes)?;
    Ok(GridFunction {
        dims: d,
        resolution,
        kind: GridKind::Distribution,
        samples,
    })
}

/// As [`distribution_via_eta`], on an arbitrary tensor grid (points need not
/// lie in `[0, 1]`).
pub fn distribution_via_eta_at(
    table: &dyn Correlation,
    truncation: usize,
    axes: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if truncation == 0 {
        return Err(Error::Invalid("truncation must be at least 1".into()));
    }
    let d = table.dim();
    let coeffs = truncated_coefficients(table, truncation)?;
    stieltjes_on_grid(&coeffs, &vec![truncation as i64; d], axes)
}

/// Default truncation for a grid of resolution `G`.
pub fn default_truncation(resolution: usize) -> usize {
    (resolution / 3).max(1)
}

/// Cumulative trapezoidal integral of a periodic density, giving a
/// distribution function on `[0, 1]^d`.
pub fn cumulative_trapezoid(density: &GridFunction) -> Result<GridFunction> {
    if density.kind != GridKind::Density {
        return Err(Error::Invalid("expected a density grid".into()));
    }
    let d = density.dims;
    let g = density.resolution;
    let in_shape = vec![g; d];
    let out_shape = vec![g + 1; d];
    // periodic extension onto the closed grid
    let mut data: Vec<f64> = BoxIter::new(&out_shape)
        .map(|idx| {
            let wrapped: Vec<usize> = idx.iter().map(|&i| i % g).collect();
            density.samples[shape::linear_index(&wrapped, &in_shape)]
        })
        .collect();
    let h = 1.0 / g as f64;
    let strides = shape::strides(&out_shape);
    for axis in 0..d {
        let stride = strides[axis];
        let starts: Vec<usize> = BoxIter::new(&out_shape)
            .enumerate()
            .filter(|(_, idx)| idx[axis] == 0)
            .map(|(lin, _)| lin)
            .collect();
        for start in starts {
            let mut prev = data[start];
            data[start] = 0.0;
            for k in 1..=g {
                let at = start + k * stride;
                let cur = data[at];
                data[at] = data[at - stride] + 0.5 * h * (prev + cur);
                prev = cur;
            }
        }
    }
    Ok(GridFunction {
        dims: d,
        resolution: g,
        kind: GridKind::Distribution,
        samples: data,
    })
}

/// Masses of the cells `∏[k_i/G, (k_i+1)/G)` of a distribution function.
fn cell_masses(dist: &GridFunction) -> Vec<f64> {
    let d = dist.dims;
    let g = dist.resolution;
    let mut shape = vec![g + 1; d];
    let mut data = dist.samples.clone();
    for axis in 0..d {
        let mut out_shape = shape.clone();
        out_shape[axis] = g;
        let strides = shape::strides(&shape);
        data = BoxIter::new(&out_shape)
            .map(|idx| {
                let lin = shape::linear_index(&idx, &shape);
                data[lin + strides[axis]] - data[lin]
            })
            .collect();
        shape = out_shape;
    }
    data
}

/// One step `F ↦ (1/∏K) ∫_{[0, K∘x]} ϑ(u/K) dF(u)`, with `dF` extended
/// periodically and the integral taken by the midpoint rule on the grid.
pub fn iterate_distribution(kernel: &TrigKernel, dist: &GridFunction) -> Result<GridFunction> {
    if dist.kind != GridKind::Distribution || dist.dims != kernel.dim() {
        return Err(Error::Invalid("expected a distribution grid matching the kernel".into()));
    }
    let d = dist.dims;
    let g = dist.resolution;
    let scales = kernel.dims().to_vec();
    let masses = cell_masses(dist);
    let base_shape = vec![g; d];
    let big: Vec<usize> = scales.iter().map(|&k| k * g).collect();
    // weighted masses on the enlarged grid, then prefix sums
    let mut acc: Vec<f64> = BoxIter::new(&big)
        .map(|idx| {
            let wrapped: Vec<usize> = idx.iter().map(|&i| i % g).collect();
            let u: Vec<f64> = idx
                .iter()
                .zip(&scales)
                .map(|(&i, &k)| (i as f64 + 0.5) / (g * k) as f64)
                .collect();
            kernel.eval(&u) * masses[shape::linear_index(&wrapped, &base_shape)]
        })
        .collect();
    let strides = shape::strides(&big);
    for axis in 0..d {
        for lin in 0..acc.len() {
            if (lin / strides[axis]) % big[axis] > 0 {
                acc[lin] += acc[lin - strides[axis]];
            }
        }
    }
    let volume: usize = scales.iter().product();
    let out_shape = vec![g + 1; d];
    let samples = BoxIter::new(&out_shape)
        .map(|idx| {
            if idx.iter().any(|&i| i == 0) {
                return 0.0;
            }
            let top: Vec<usize> = idx.iter().zip(&scales).map(|(&i, &k)| i * k - 1).collect();
            acc[shape::linear_index(&top, &big)] / volume as f64
        })
        .collect();
    Ok(GridFunction {
        dims: d,
        resolution: g,
        kind: GridKind::Distribution,
        samples,
    })
}

/// Numerical Fourier coefficient `∫ f(x) e^{-2πi m·x} dx` (real part) by the
/// periodic trapezoidal rule.
pub fn fourier_coefficient(density: &GridFunction, m: &[i64]) -> Result<f64> {
    if density.kind != GridKind::Density || m.len() != density.dims {
        return Err(Error::Invalid("expected a density grid of matching dimension".into()));
    }
    let g = density.resolution as i64;
    let shape = density.shape();
    let total: f64 = BoxIter::new(&shape)
        .zip(&density.samples)
        .map(|(idx, &f)| {
            let p: i64 = idx.iter().zip(m).map(|(&k, &mi)| k as i64 * mi).sum();
            f * (2.0 * PI * p.rem_euclid(g) as f64 / g as f64).cos()
        })
        .sum();
    Ok(total / density.samples.len() as f64)
}

#[derive(Clone, Debug)]
pub struct MarginalReport {
    pub axis: usize,
    /// Whether every coefficient on the axis equals the section's coefficient.
    pub exact: bool,
    /// Sup-norm gap between `F⁽ᴺ⁾` on the far edge and the section's `Φ_N`.
    pub max_deviation: f64,
}

/// Compares the marginal of `F⁽ᴺ⁾` along `axis` (all other variables at 1)
/// with the distribution function of the axis-section recursion.
pub fn marginal_check(
    coeffs: &CoeffTable,
    series: &SeriesCoeffs,
    axis: usize,
    resolution: usize,
) -> Result<MarginalReport> {
    let section = coeffs.axis_section(axis)?;
    let one_d = series_coeffs(&section, series.level)?;
    let h = one_d.half_widths()[0];
    let mut m = vec![0i64; series.dim()];
    let exact = (-h..=h).all(|k| {
        m[axis] = k;
        series.get(&m) == one_d.get(&[k])
    });
    let full = distribution(series, resolution)?;
    let phi = distribution(&one_d, resolution)?;
    let edge = full.edge(axis);
    let max_deviation = edge
        .iter()
        .zip(&phi.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(MarginalReport {
        axis,
        exact,
        max_deviation,
    })
}

#[derive(Clone, Debug)]
pub struct MarginalCauchy {
    pub axis: usize,
    /// `sup |Φ_{N} - Φ_{N-1}|` for `N = 2..=levels`.
    pub steps: Vec<f64>,
    /// True when the steps fail to shrink, hinting at a discontinuous limit.
    pub suspicious: bool,
}

/// Flags axis marginals whose approximants `Φ_N` do not settle, which
/// happens when the limit distribution function jumps. The check is a
/// heuristic and does not decide continuity.
pub fn marginal_cauchy_flags(
    coeffs: &CoeffTable,
    levels: usize,
    resolution: usize,
) -> Result<Vec<MarginalCauchy>> {
    if levels < 3 {
        return Err(Error::Invalid("need at least three levels".into()));
    }
    (0..coeffs.dim())
        .map(|axis| {
            let section = coeffs.axis_section(axis)?;
            // the grid must resolve the finest approximant
            let finest = section.dims()[0]
                .checked_pow(levels as u32)
                .ok_or_else(|| Error::Size("marginal grid overflows".into()))?;
            let resolution = resolution.max(finest);
            let grids: Vec<GridFunction> = (1..=levels)
                .map(|n| distribution(&series_coeffs(&section, n)?, resolution))
                .collect::<Result<_>>()?;
            let steps: Vec<f64> = grids
                .windows(2)
                .map(|w| w[1].max_abs_diff(&w[0]))
                .collect::<Result<_>>()?;
            let suspicious = steps.last().unwrap() > &(0.5 * steps[0]);
            Ok(MarginalCauchy {
                axis,
                steps,
                suspicious,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autocorr::{rat, recursion_coeffs};
    use crate::subst::{builtin_squiral, builtin_thue_morse};

    #[test]
    fn squiral_section_kernel_coefficients() {
        let c = recursion_coeffs(&builtin_squiral()).axis_section(0).unwrap();
        let k = build_kernel(&c);
        assert_eq!(k.coefficient(&[0]), rat(1, 1));
        assert_eq!(k.coefficient(&[1]), rat(-2, 9));
        assert_eq!(k.coefficient(&[-2]), rat(1, 3));
    }

    #[test]
    fn series_level_one_is_kernel() {
        let c = recursion_coeffs(&builtin_squiral());
        let k = build_kernel(&c);
        let s = series_coeffs(&c, 1).unwrap();
        for o in shape::integer_box(&[-2, -2], &[2, 2]) {
            assert_eq!(s.get(&o), k.coefficient(&o));
        }
        assert_eq!(s.get(&[0, 0]), rat(1, 1));
    }

    #[test]
    fn lebesgue_distribution() {
        let c = recursion_coeffs(&builtin_thue_morse());
        let s = series_coeffs(&c, 0).unwrap();
        let f = distribution(&s, 8).unwrap();
        for (k, v) in f.samples.iter().enumerate() {
            assert!((v - k as f64 / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn primitive_integrates_exponential() {
        let z = primitive(3, 0.25);
        // ∫_0^{1/4} e^{6πit} dt = (e^{3πi/2} - 1) / (6πi)
        let expect = (Complex64::new(0.0, -1.0) - 1.0) / Complex64::new(0.0, 6.0 * PI);
        assert!((z - expect).norm() < 1e-15);
    }

    #[test]
    fn trapezoid_of_constant() {
        let f = GridFunction {
            dims: 2,
            resolution: 4,
            kind: GridKind::Density,
            samples: vec![1.0; 16],
        };
        let big = cumulative_trapezoid(&f).unwrap();
        assert!((big.get(&[4, 4]) - 1.0).abs() < 1e-15);
        assert!((big.get(&[2, 1]) - 0.125).abs() < 1e-15);
        assert_eq!(big.max_decrease(), 0.0);
    }
}
