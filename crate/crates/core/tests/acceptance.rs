//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints one line whether it passes or not; exits non-zero if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use blocksub::autocorr::{eta_bruteforce, recursion_coeffs, EtaTable, Rational};
use blocksub::factor::*;
use blocksub::riesz::*;
use blocksub::shape::integer_box;
use blocksub::spectral::*;
use blocksub::Correlation;
use blocksub::subst::*;
use num_traits::Signed;

type Outcome = Result<(bool, String), blocksub::Error>;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn squiral_patch(n: usize) -> LatticePatch {
    let map = builtin_squiral();
    let cycle = find_seed_cycle(&map).expect("seed cycle");
    generate_fixed_patch(&map, &cycle, n).expect("fixed patch")
}

fn unit_axis(g: usize, periods: usize) -> Vec<f64> {
    (0..=periods * g).map(|k| k as f64 / g as f64).collect()
}

fn exact_special_values() -> Outcome {
    let t = EtaTable::new(&builtin_squiral())?;
    let expected = [
        ([1, 0], q(-1, 3)),
        ([0, 1], q(-1, 3)),
        ([1, 1], q(1, 6)),
        ([-1, 1], q(1, 6)),
        ([0, 2], q(11, 27)),
        ([-2, 0], q(11, 27)),
        ([2, 2], q(7, 27)),
        ([2, -2], q(7, 27)),
        ([1, 2], q(-8, 27)),
        ([-2, 1], q(-8, 27)),
    ];
    let mut bad = Vec::new();
    for (m, v) in &expected {
        let got = t.eta(m)?;
        if &got != v {
            bad.push(format!("{m:?}={got}"));
        }
    }
    Ok((bad.is_empty(), format!("{} values checked, mismatches: {bad:?}", expected.len())))
}

fn sign_and_bound() -> Outcome {
    let t = EtaTable::new(&builtin_squiral())?;
    let r = 81i64;
    let values = t.values_in_box(&[-r, -r], &[r, r])?;
    let side = (2 * r + 1) as usize;
    let (mut sign_fail, mut bound_fail) = (0usize, 0usize);
    for (lin, v) in values.iter().enumerate() {
        let (m, n) = ((lin / side) as i64 - r, (lin % side) as i64 - r);
        let signed = if (m + n).rem_euclid(2) == 0 { v.clone() } else { -v };
        if !signed.is_positive() {
            sign_fail += 1;
        }
        let axis = &values[(m + r) as usize * side + r as usize];
        if axis * axis < v * v {
            bound_fail += 1;
        }
    }
    Ok((
        sign_fail == 0 && bound_fail == 0,
        format!("{} lags, sign violations {sign_fail}, bound violations {bound_fail}", values.len()),
    ))
}

fn wiener_bounds() -> Outcome {
    let t = EtaTable::new(&builtin_squiral())?;
    let planar = wiener_sums(&t, 5)?;
    let planar_ok = ratio_bound_holds(&planar, &q(319, 81));
    let line = t.axis_section(0)?;
    let deep = section_wiener_sums(&line, 38)?;
    let line_ok = ratio_bound_holds(&deep, &q(133, 81));
    let all_planar = planar_ok.iter().all(|(_, ok)| *ok) && planar_ok.len() == 4;
    let first_four = line_ok.iter().take(4).all(|(_, ok)| *ok);
    let all_line = line_ok.iter().all(|(_, ok)| *ok);
    let target = (133.0f64 / 81.0).ln() / 3.0f64.ln();
    let fitted = deep.fitted_exponent;
    let exp_ok = (fitted - target).abs() <= 0.05;
    Ok((
        all_planar && first_four && all_line && exp_ok,
        format!(
            "planar N=3..81 {all_planar}, line N=3..81 {first_four}, line N up to 3^37 {all_line}, \
             exponent {fitted:.4} vs {target:.4} (|diff| {:.4} <= 0.05)",
            (fitted - target).abs()
        ),
    ))
}

fn oracle_equivalence() -> Outcome {
    let t = EtaTable::new(&builtin_squiral())?;
    let patch = squiral_patch(7);
    let window = 729usize;
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for m in integer_box(&[-10, -10], &[10, 10]) {
        let brute = eta_bruteforce(&patch, &m, window)?;
        let exact = t.eta_f64(&m)?;
        let lag = m.iter().map(|x| x.abs()).max().unwrap_or(0) as f64;
        let tol = 5.0 * (lag + 1.0) / window as f64;
        let err = (brute - exact).abs();
        worst = worst.max(err / tol);
        if err > tol {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("441 lags, failures {failures}, worst error/tolerance {worst:.3}")))
}

fn kernel_identity() -> Outcome {
    let kernel = build_kernel(&recursion_coeffs(&builtin_squiral()));
    let g = 729usize;
    let grid = kernel.eval_grid(g)?;
    let c = |t: f64| (2.0 * PI * t).cos();
    let worst2 = grid
        .iter()
        .enumerate()
        .map(|(lin, v)| {
            let (x, y) = ((lin / g) as f64 / g as f64, (lin % g) as f64 / g as f64);
            let s = 1.0 + 2.0 * c(x) + 2.0 * c(y) - 2.0 * c(x + y) - 2.0 * c(x - y);
            (v - s * s / 9.0).abs()
        })
        .fold(0.0, f64::max);
    let section = build_kernel(&recursion_coeffs(&builtin_squiral()).axis_section(0)?);
    let worst1 = section
        .eval_grid(g)?
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let x = k as f64 / g as f64;
            (v - (1.0 - 4.0 / 9.0 * c(x) + 2.0 / 3.0 * c(2.0 * x))).abs()
        })
        .fold(0.0, f64::max);
    Ok((
        worst2 <= 1e-12 && worst1 <= 1e-14,
        format!("planar sup error {worst2:.2e} (<= 1e-12), section sup error {worst1:.2e} (<= 1e-14)"),
    ))
}

fn riesz_series_agreement() -> Outcome {
    let coeffs = recursion_coeffs(&builtin_squiral());
    let kernel = build_kernel(&coeffs);
    let g = 729;
    let series = distribution(&series_coeffs(&coeffs, 4)?, g)?;
    let mut worst_mean = 0.0f64;
    let mut trapezoid = None;
    for level in 0..=4 {
        let f = density(&kernel, level, g)?;
        worst_mean = worst_mean.max((f.mean() - 1.0).abs());
        if level == 4 {
            trapezoid = Some(cumulative_trapezoid(&f)?);
        }
    }
    let gap = series.max_abs_diff(&trapezoid.expect("level 4 density"))?;
    Ok((
        gap <= 2e-3 && worst_mean <= 1e-9,
        format!("sup gap {gap:.3e} (<= 2e-3), worst density mean error {worst_mean:.2e} (<= 1e-9)"),
    ))
}

fn marginal_and_translation() -> Outcome {
    let coeffs = recursion_coeffs(&builtin_squiral());
    let series = series_coeffs(&coeffs, 4)?;
    let mut marginal_gap = 0.0f64;
    let mut exact = true;
    for axis in 0..2 {
        let r = marginal_check(&coeffs, &series, axis, 243)?;
        exact &= r.exact;
        marginal_gap = marginal_gap.max(r.max_deviation);
    }

    // F(x+1, y) - F(x, y) against the distribution function of the measure
    // along the second axis
    let t = EtaTable::new(&builtin_squiral())?;
    let g = 243usize;
    let m = 243usize;
    let xs = unit_axis(g, 2);
    let ys = unit_axis(g, 1);
    let f = distribution_via_eta_at(&t, m, &[xs, ys.clone()])?;
    let ny = ys.len();
    let section = t.axis_section(1)?;
    let phi_m = distribution_via_eta_at(&section, m, &[ys.clone()])?;
    let phi_9 = distribution(&series_coeffs(&coeffs.axis_section(1)?, 9)?, g)?;
    let (mut same_series, mut limit_gap) = (0.0f64, 0.0f64);
    for i in 0..=g {
        for j in 0..ny {
            let step = f[(i + g) * ny + j] - f[i * ny + j];
            same_series = same_series.max((step - phi_m[j]).abs());
            limit_gap = limit_gap.max((step - phi_9.samples[j]).abs());
        }
    }
    Ok((
        exact && marginal_gap <= 1e-9 && same_series <= 1e-9 && limit_gap <= 5e-3,
        format!(
            "marginal exact {exact}, gap {marginal_gap:.2e} (<= 1e-9); translation step vs truncated \
             section series {same_series:.2e}, vs level-9 section distribution {limit_gap:.3e} (<= 5e-3)"
        ),
    ))
}

fn factor_consistency() -> Outcome {
    let map = builtin_squiral();
    let scanned = legal_patches_by_scan(&map, 2, 4)?.len();
    let (orientation, reports) = detect_orientation(&map)?;
    let report = reports.last().expect("at least one report");
    let factor = psi(&squiral_patch(5))?;
    let branch = detect_branch(&factor)?;
    let membership = check_membership(&factor, branch, 81)?;
    Ok((
        report.passed() && report.patches == 14 && scanned == 14 && membership.mismatches == 0
            && membership.partition_failures == 0,
        format!(
            "legal patches {} (scan {scanned}, expected 14), orientation {orientation:?}, \
             branch {branch}, {} points: sign mismatches {}, partition failures {}",
            report.patches, membership.points, membership.mismatches, membership.partition_failures
        ),
    ))
}

fn generalization() -> Outcome {
    let prod = EtaTable::new(&builtin_period_doubling_product())?;
    let tm = EtaTable::new(&builtin_thue_morse())?;
    let mut mismatches = 0usize;
    for m in -27i64..=27 {
        for n in -27i64..=27 {
            let tm_n = tm.eta(&[n])?;
            let expect = if m.rem_euclid(2) == 0 { tm_n } else { -tm_n };
            if prod.eta(&[m, n])? != expect {
                mismatches += 1;
            }
        }
    }
    let sq = classify(&builtin_squiral(), 5)?;
    let pr = classify(&builtin_period_doubling_product(), 7)?;
    let synthetic = PointMassTable::two_atoms(2, q(1, 2), q(1, 2), 3)?;
    let syn = classify_table(&synthetic, 5)?;
    let ok = mismatches == 0
        && sq.conclusion == Conclusion::SingularContinuous
        && pr.conclusion == Conclusion::SingularContinuous
        && syn.report.verdict == Continuity::HasPointPart;
    Ok((
        ok,
        format!(
            "factorisation mismatches {mismatches}; squiral {}, product map {}, synthetic {:?}",
            sq.conclusion, pr.conclusion, syn.report.verdict
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("exact special values", exact_special_values, Duration::from_secs(1)),
        ("sign pattern and axis bound", sign_and_bound, Duration::from_secs(10)),
        ("Wiener bounds", wiener_bounds, Duration::from_secs(30)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(60)),
        ("kernel identity", kernel_identity, Duration::from_secs(30)),
        ("Riesz/series agreement", riesz_series_agreement, Duration::from_secs(120)),
        ("marginal and translation identities", marginal_and_translation, Duration::from_secs(120)),
        ("factor consistency", factor_consistency, Duration::from_secs(30)),
        ("generalization", generalization, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= *budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {} {}: {name}: {detail}; {:.2}s (budget {}s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
