//! Plain-text artifacts: PGM images and CSV tables.
//!
//! Every CSV starts with `# key=value` comment lines describing how it was
//! produced. Floats use Rust's shortest round-trip formatting, so output is
//! byte-identical across runs.

use std::io::{self, Write};

use crate::autocorr::Rational;
use crate::error::{Error, Result};
use crate::riesz::GridFunction;
use crate::shape::BoxIter;
use crate::spectral::WienerReport;
use crate::subst::LatticePatch;

pub fn write_config_header<W: Write>(out: &mut W, config: &[(String, String)]) -> io::Result<()> {
    for (k, v) in config {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn columns(prefix: &str, d: usize) -> String {
    (1..=d)
        .map(|i| format!("{prefix}{i}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Image rows run over the first coordinate from high to low; columns run
/// over the second coordinate from low to high.
fn image_rows<T: Copy>(values: &[T], height: usize, width: usize) -> impl Iterator<Item = &[T]> {
    (0..height).rev().map(move |i| &values[i * width..(i + 1) * width])
}

/// Writes a two-dimensional patch as an ASCII greymap, `+1` white and `-1` black.
pub fn write_patch_pgm<W: Write>(out: &mut W, patch: &LatticePatch) -> Result<()> {
    if patch.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: patch.dim(),
        });
    }
    let [h, w] = [patch.shape()[0], patch.shape()[1]];
    writeln!(out, "P2")?;
    writeln!(out, "# origin {} {}", patch.origin()[0], patch.origin()[1])?;
    writeln!(out, "{w} {h}")?;
    writeln!(out, "255")?;
    for row in image_rows(patch.values(), h, w) {
        let line: Vec<&str> = row.iter().map(|&v| if v > 0 { "255" } else { "0" }).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Min–max scaled greymap of a two-dimensional grid; returns `(min, max)`.
pub fn write_grid_pgm<W: Write>(out: &mut W, grid: &GridFunction) -> Result<(f64, f64)> {
    if grid.dims != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: grid.dims,
        });
    }
    let n = grid.points_per_axis();
    let min = grid.samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = grid.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if max > min { max - min } else { 1.0 };
    writeln!(out, "P2")?;
    writeln!(out, "{n} {n}")?;
    writeln!(out, "255")?;
    for row in image_rows(&grid.samples, n, n) {
        let line: Vec<String> = row
            .iter()
            .map(|&v| (((v - min) / span) * 255.0).round().clamp(0.0, 255.0).to_string())
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok((min, max))
}

/// Text recorded next to a heatmap so that grey levels can be mapped back.
pub fn heatmap_sidecar(min: f64, max: f64) -> String {
    format!("min={min}\nmax={max}\nscale=(value-min)/(max-min)*255\n")
}

pub fn write_patch_csv<W: Write>(
    out: &mut W,
    patch: &LatticePatch,
    config: &[(String, String)],
) -> Result<()> {
    write_config_header(out, config)?;
    writeln!(out, "{},value", columns("m", patch.dim()))?;
    for (p, v) in patch.cells() {
        let coords: Vec<String> = p.iter().map(i64::to_string).collect();
        writeln!(out, "{},{v}", coords.join(","))?;
    }
    Ok(())
}

pub fn write_eta_csv<W: Write>(
    out: &mut W,
    points: &[Vec<i64>],
    values: &[Rational],
    config: &[(String, String)],
) -> Result<()> {
    let d = points.first().map_or(0, Vec::len);
    write_config_header(out, config)?;
    writeln!(out, "{},numerator,denominator,float", columns("m", d))?;
    for (p, v) in points.iter().zip(values) {
        let coords: Vec<String> = p.iter().map(i64::to_string).collect();
        writeln!(
            out,
            "{},{},{},{}",
            coords.join(","),
            v.numer(),
            v.denom(),
            crate::autocorr::to_f64(v)
        )?;
    }
    Ok(())
}

/// Brute-force rows carry only the float value.
pub fn write_eta_float_csv<W: Write>(
    out: &mut W,
    points: &[Vec<i64>],
    values: &[f64],
    config: &[(String, String)],
) -> Result<()> {
    let d = points.first().map_or(0, Vec::len);
    write_config_header(out, config)?;
    writeln!(out, "{},value", columns("m", d))?;
    for (p, v) in points.iter().zip(values) {
        let coords: Vec<String> = p.iter().map(i64::to_string).collect();
        writeln!(out, "{},{v}", coords.join(","))?;
    }
    Ok(())
}

pub fn write_wiener_csv<W: Write>(
    out: &mut W,
    report: &WienerReport,
    config: &[(String, String)],
) -> Result<()> {
    write_config_header(out, config)?;
    writeln!(out, "level,N,sigma_num,sigma_den,sigma_float,quotient")?;
    for l in &report.levels {
        let side: Vec<String> = l.side.iter().map(u128::to_string).collect();
        let side = if side.iter().all(|s| s == &side[0]) {
            side[0].clone()
        } else {
            side.join("x")
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            l.level,
            side,
            l.sigma.numer(),
            l.sigma.denom(),
            l.sigma_f64,
            l.quotient
        )?;
    }
    Ok(())
}

pub fn write_grid_csv<W: Write>(
    out: &mut W,
    grid: &GridFunction,
    config: &[(String, String)],
) -> Result<()> {
    write_config_header(out, config)?;
    writeln!(out, "{},value", columns("x", grid.dims))?;
    let g = grid.resolution as f64;
    for (idx, v) in BoxIter::new(&grid.shape()).zip(&grid.samples) {
        let coords: Vec<String> = idx.iter().map(|&k| (k as f64 / g).to_string()).collect();
        writeln!(out, "{},{v}", coords.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_orientation() {
        // first coordinate 0..2 (height), second 0..3 (width)
        let p = LatticePatch::new(vec![0, 0], vec![2, 3], vec![1, -1, -1, -1, -1, 1]).unwrap();
        let mut buf = Vec::new();
        write_patch_pgm(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "P2");
        assert_eq!(lines[2], "3 2");
        // top row is the larger first coordinate
        assert_eq!(lines[4], "0 0 255");
        assert_eq!(lines[5], "255 0 0");
    }

    #[test]
    fn patch_csv_has_header_and_columns() {
        let p = LatticePatch::new(vec![-1, 0], vec![1, 2], vec![1, -1]).unwrap();
        let mut buf = Vec::new();
        write_patch_csv(&mut buf, &p, &[("map".into(), "test".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# map=test\nm1,m2,value\n-1,0,1\n-1,1,-1\n");
    }
}
