//! `blocksub`: command-line front end.
//!
//! Data goes to `--out` (or stdout); summaries go to stderr, except for
//! `classify` and `factor`, whose reports are the output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blocksub::autocorr::{eta_bruteforce, recursion_coeffs, EtaTable};
use blocksub::export::*;
use blocksub::factor::{self, FiberConfig};
use blocksub::riesz::{self, GridFunction};
use blocksub::shape::integer_box;
use blocksub::spectral::{self, WienerReport};
use blocksub::subst::{self, BlockMap, LatticePatch};
use blocksub::{Correlation, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Rough per-entry costs used to turn the byte budget into entry counts.
const RATIONAL_BYTES: u64 = 128;
const FLOAT_BYTES: u64 = 8;
const CELL_BYTES: u64 = 2;

#[derive(Parser, Debug)]
#[command(name = "blocksub", version, about = "Spectral analysis of bijective binary block substitutions")]
struct Cli {
    /// Worker threads (0 = one per core). Never changes output contents.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Memory budget in bytes for patches, tables and grids.
    #[arg(
        long,
        global = true,
        env = "BLOCKSUB_MEMORY_BUDGET",
        default_value_t = 4 << 30,
        value_parser = clap::value_parser!(u64).range(1..)
    )]
    memory_budget: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fixed-point patch after a number of substitution steps.
    Generate(GenerateArgs),
    /// Autocorrelation coefficients on a box of lags.
    Autocorr(AutocorrArgs),
    /// Wiener sums over growing windows.
    Wiener(WienerArgs),
    /// Spectral verdict as key=value lines.
    Classify(ClassifyArgs),
    /// Riesz-product densities, distribution functions and coefficients.
    Riesz(RieszArgs),
    /// The squiral's sliding block factor and its model-set description.
    Factor(FactorArgs),
}

#[derive(Args, Debug)]
struct MapArg {
    /// `builtin:NAME` (squiral, thue-morse, product) or a path to a map file.
    #[arg(long, default_value = "builtin:squiral")]
    map: String,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Pgm,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct AutocorrArgs {
    #[command(flatten)]
    map: MapArg,
    /// Lags in `[-R, R]^d`.
    #[arg(long, default_value_t = 4)]
    radius: i64,
    /// Empirical values from a generated patch instead of exact rationals.
    #[arg(long)]
    bruteforce: bool,
    /// Averaging window side for `--bruteforce`.
    #[arg(long, default_value_t = 243)]
    window: usize,
    /// Substitution steps for the `--bruteforce` patch.
    #[arg(long, default_value_t = 6)]
    iterations: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WienerArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Use the one-dimensional section along this axis.
    #[arg(long)]
    section: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Classify the one-dimensional section along this axis.
    #[arg(long)]
    section: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RieszMode {
    /// Product of kernels sampled on the periodic grid.
    Density,
    /// Distribution function from the exact coefficients.
    Distribution,
    /// Exact Fourier coefficients.
    Series,
    /// Distribution function of the limit measure from truncated correlations.
    ViaEta,
}

#[derive(Args, Debug)]
struct RieszArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long, value_enum, default_value_t = RieszMode::Density)]
    mode: RieszMode,
    #[arg(long, default_value_t = 3)]
    level: usize,
    /// Grid resolution G; samples sit at k/G.
    #[arg(long, default_value_t = 243)]
    grid: usize,
    /// Truncation M for `via-eta` (default G/3).
    #[arg(long)]
    truncation: Option<usize>,
    /// Work with the one-dimensional section along this axis.
    #[arg(long)]
    section: Option<usize>,
    /// Report whether the axis marginals settle as the level grows.
    #[arg(long)]
    marginal_flags: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct FactorArgs {
    /// Substitution steps for the squiral patch.
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Check that the factor map intertwines the two inflations.
    #[arg(long)]
    check_consistency: bool,
    /// Compare the factor signs with the model-set membership test.
    #[arg(long)]
    check_model_set: bool,
    /// Half-width of the membership window.
    #[arg(long, default_value_t = 81)]
    radius: i64,
    /// Number of factor windows sampled for preimage counts.
    #[arg(long)]
    fiber_samples: Option<usize>,
    #[arg(long, default_value_t = 81)]
    fiber_window: usize,
    #[arg(long, default_value_t = 2)]
    fiber_core: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the factor image here (CSV or PGM).
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Budget(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 4,
            Failure::Lib(e) => match e {
                Error::Invalid(_) => 2,
                Error::Map(_) | Error::Io(_) | Error::Range(_) | Error::Dimension { .. } => 3,
                Error::Size(_) | Error::MemoBudget { .. } => 4,
                Error::SingularCore | Error::SeedSearch(_) | Error::Invariant(_) => 5,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Budget(m) => write!(f, "memory budget: {m}"),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

type Run<T = ()> = Result<T, Failure>;

struct Budget(u64);

impl Budget {
    fn entries(&self, bytes_each: u64) -> usize {
        usize::try_from(self.0 / bytes_each).unwrap_or(usize::MAX).max(1)
    }

    fn check(&self, count: u128, bytes_each: u64, what: &str) -> Run {
        let need = count.saturating_mul(bytes_each as u128);
        if need > self.0 as u128 {
            return Err(Failure::Budget(format!(
                "{what} needs about {need} bytes, budget is {}",
                self.0
            )));
        }
        Ok(())
    }
}

fn load_map(source: &str) -> Run<BlockMap> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return subst::builtin(name).ok_or_else(|| {
            Failure::Usage(format!(
                "unknown builtin `{name}`; known: {}",
                subst::BUILTIN_NAMES.join(", ")
            ))
        });
    }
    let text = std::fs::read_to_string(source)
        .map_err(|e| io::Error::new(e.kind(), format!("{source}: {e}")))?;
    Ok(subst::parse_substitution(&text).map_err(Error::from)?)
}

fn open_out(path: Option<&Path>) -> Run<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn header(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn section_check(map: &BlockMap, axis: Option<usize>) -> Run {
    match axis {
        Some(a) if a >= map.dim() => Err(Failure::Usage(format!(
            "section axis {a} out of range for a {}-dimensional map",
            map.dim()
        ))),
        _ => Ok(()),
    }
}

fn fixed_patch(map: &BlockMap, iterations: usize, budget: &Budget) -> Run<LatticePatch> {
    let cycle = subst::find_seed_cycle(map)?;
    Ok(subst::generate_fixed_patch_with_budget(
        map,
        &cycle,
        iterations,
        budget.entries(CELL_BYTES),
    )?)
}

fn generate(args: &GenerateArgs, budget: &Budget) -> Run {
    let map = load_map(&args.map.map)?;
    let patch = fixed_patch(&map, args.iterations, budget)?;
    let mut out = open_out(args.out.out.as_deref())?;
    match args.out.format {
        Format::Pgm => write_patch_pgm(&mut out, &patch)?,
        Format::Csv => {
            let config = header(&[
                ("command", "generate".into()),
                ("map", args.map.map.clone()),
                ("iterations", args.iterations.to_string()),
                ("memory_budget", budget.0.to_string()),
            ]);
            write_patch_csv(&mut out, &patch, &config)?
        }
    }
    out.flush()?;
    let (plus, minus) = patch.letter_counts();
    eprintln!("shape={:?} origin={:?} plus={plus} minus={minus}", patch.shape(), patch.origin());
    Ok(())
}

fn autocorr(args: &AutocorrArgs, budget: &Budget) -> Run {
    if args.radius < 0 {
        return Err(Failure::Usage("radius must be non-negative".into()));
    }
    let map = load_map(&args.map.map)?;
    let d = map.dim();
    let r = args.radius;
    let side = (2 * r + 1) as u128;
    let count = side.checked_pow(d as u32).unwrap_or(u128::MAX);
    let lo = vec![-r; d];
    let hi = vec![r; d];
    let points: Vec<Vec<i64>> = {
        budget.check(count, RATIONAL_BYTES, "the lag box")?;
        integer_box(&lo, &hi).collect()
    };
    let mut config = header(&[
        ("command", "autocorr".into()),
        ("map", args.map.map.clone()),
        ("radius", r.to_string()),
        ("memory_budget", budget.0.to_string()),
    ]);
    let mut out = open_out(args.out.as_deref())?;
    if args.bruteforce {
        config.extend(header(&[
            ("method", "bruteforce".into()),
            ("iterations", args.iterations.to_string()),
            ("window", args.window.to_string()),
        ]));
        let patch = fixed_patch(&map, args.iterations, budget)?;
        let values = points
            .iter()
            .map(|m| eta_bruteforce(&patch, m, args.window))
            .collect::<Result<Vec<_>, _>>()?;
        write_eta_float_csv(&mut out, &points, &values, &config)?;
    } else {
        config.push(("method".into(), "exact".into()));
        let table = EtaTable::with_memo_limit(&map, budget.entries(RATIONAL_BYTES))?;
        let values = table.values_in_box(&lo, &hi)?;
        write_eta_csv(&mut out, &points, &values, &config)?;
    }
    out.flush()?;
    Ok(())
}

fn print_wiener_summary(report: &WienerReport) {
    eprintln!(
        "fitted_exponent={:.6} tail_exponent={:.6} verdict={:?}",
        report.fitted_exponent, report.tail_exponent, report.verdict
    );
}

fn wiener(args: &WienerArgs, budget: &Budget) -> Run {
    let map = load_map(&args.map.map)?;
    section_check(&map, args.section)?;
    let table = EtaTable::with_memo_limit(&map, budget.entries(RATIONAL_BYTES))?;
    let report = match args.section {
        Some(axis) => spectral::section_wiener_sums(&table.axis_section(axis)?, args.levels)?,
        None => {
            let cells = map
                .dims()
                .iter()
                .try_fold(1u128, |acc, &k| {
                    (k as u128).checked_pow(args.levels as u32).and_then(|s| acc.checked_mul(s))
                })
                .unwrap_or(u128::MAX);
            budget.check(cells, RATIONAL_BYTES, "the Wiener window")?;
            spectral::wiener_sums(&table, args.levels)?
        }
    };
    let config = header(&[
        ("command", "wiener".into()),
        ("map", args.map.map.clone()),
        ("levels", args.levels.to_string()),
        ("section", args.section.map_or("none".into(), |a| a.to_string())),
        ("memory_budget", budget.0.to_string()),
    ]);
    let mut out = open_out(args.out.as_deref())?;
    write_wiener_csv(&mut out, &report, &config)?;
    out.flush()?;
    print_wiener_summary(&report);
    Ok(())
}

fn classify(args: &ClassifyArgs, budget: &Budget) -> Run {
    let map = load_map(&args.map.map)?;
    section_check(&map, args.section)?;
    let verdict = match args.section {
        Some(axis) => {
            let table = EtaTable::with_memo_limit(&map, budget.entries(RATIONAL_BYTES))?;
            let section = table.axis_section(axis)?;
            spectral::classify_table(&section, args.levels)?
        }
        None => {
            let cells = (map.volume() as u128)
                .checked_pow(args.levels as u32)
                .unwrap_or(u128::MAX);
            budget.check(cells, RATIONAL_BYTES, "the Wiener window")?;
            spectral::classify(&map, args.levels)?
        }
    };
    let mut out = io::stdout().lock();
    writeln!(out, "map={}", args.map.map)?;
    for (k, v) in verdict.key_values() {
        writeln!(out, "{k}={v}")?;
    }
    for note in &verdict.notes {
        writeln!(out, "note={note}")?;
    }
    Ok(())
}

fn write_grid(
    grid: &GridFunction,
    out_args: &OutArgs,
    config: &[(String, String)],
) -> Run {
    let mut out = open_out(out_args.out.as_deref())?;
    match out_args.format {
        Format::Csv => write_grid_csv(&mut out, grid, config)?,
        Format::Pgm => {
            let path = out_args
                .out
                .as_ref()
                .ok_or_else(|| Failure::Usage("PGM heatmaps need --out for the scale sidecar".into()))?;
            let (min, max) = write_grid_pgm(&mut out, grid)?;
            let mut side = path.clone().into_os_string();
            side.push(".scale.txt");
            std::fs::write(side, heatmap_sidecar(min, max))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn riesz_cmd(args: &RieszArgs, budget: &Budget) -> Run {
    let map = load_map(&args.map.map)?;
    section_check(&map, args.section)?;
    if args.grid < 2 {
        return Err(Failure::Usage("grid must be at least 2".into()));
    }
    let full = recursion_coeffs(&map);
    let coeffs = match args.section {
        Some(axis) => full.axis_section(axis)?,
        None => full.clone(),
    };
    let d = coeffs.dim();
    let samples = ((args.grid + 1) as u128)
        .checked_pow(d as u32)
        .unwrap_or(u128::MAX);
    budget.check(samples, FLOAT_BYTES, "the sample grid")?;
    if args.out.format == Format::Pgm && (d != 2 || args.mode == RieszMode::Series) {
        return Err(Failure::Usage("PGM output needs a two-dimensional grid mode".into()));
    }
    let mut config = header(&[
        ("command", "riesz".into()),
        ("map", args.map.map.clone()),
        ("mode", format!("{:?}", args.mode).to_lowercase()),
        ("level", args.level.to_string()),
        ("grid", args.grid.to_string()),
        ("section", args.section.map_or("none".into(), |a| a.to_string())),
        ("memory_budget", budget.0.to_string()),
    ]);
    let series_budget = budget.entries(RATIONAL_BYTES);
    match args.mode {
        RieszMode::Density => {
            let kernel = riesz::build_kernel(&coeffs);
            let grid = riesz::density(&kernel, args.level, args.grid)?;
            eprintln!("mean={}", grid.mean());
            write_grid(&grid, &args.out, &config)?;
        }
        RieszMode::Distribution => {
            let series = riesz::series_coeffs_with_budget(&coeffs, args.level, series_budget)?;
            let grid = riesz::distribution(&series, args.grid)?;
            write_grid(&grid, &args.out, &config)?;
        }
        RieszMode::Series => {
            let series = riesz::series_coeffs_with_budget(&coeffs, args.level, series_budget)?;
            let half = series.half_widths().to_vec();
            let lo: Vec<i64> = half.iter().map(|h| -h).collect();
            let points: Vec<Vec<i64>> = integer_box(&lo, &half).collect();
            let mut out = open_out(args.out.out.as_deref())?;
            write_eta_csv(&mut out, &points, series.values(), &config)?;
            out.flush()?;
        }
        RieszMode::ViaEta => {
            let m = args.truncation.unwrap_or_else(|| riesz::default_truncation(args.grid));
            config.push(("truncation".into(), m.to_string()));
            let coeff_count = ((2 * m + 1) as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
            budget.check(coeff_count, RATIONAL_BYTES, "the truncated correlations")?;
            let table = EtaTable::with_memo_limit(&map, budget.entries(RATIONAL_BYTES))?;
            let grid = match args.section {
                Some(axis) => riesz::distribution_via_eta(&table.axis_section(axis)?, m, args.grid)?,
                None => riesz::distribution_via_eta(&table, m, args.grid)?,
            };
            write_grid(&grid, &args.out, &config)?;
        }
    }
    if args.marginal_flags {
        for flag in riesz::marginal_cauchy_flags(&full, args.level.max(5), args.grid)? {
            let steps: Vec<String> = flag.steps.iter().map(|s| format!("{s:.3e}")).collect();
            eprintln!(
                "marginal axis={} steps={} suspicious={}",
                flag.axis,
                steps.join(","),
                flag.suspicious
            );
            if flag.suspicious {
                eprintln!("note=distribution-function route requires continuous F; axis {} marginal does not settle", flag.axis);
            }
        }
    }
    Ok(())
}

fn factor_cmd(args: &FactorArgs, budget: &Budget) -> Run {
    let map = subst::builtin_squiral();
    let patch = fixed_patch(&map, args.iterations, budget)?;
    let image = factor::psi(&patch)?;
    let mut report = io::stdout().lock();
    writeln!(report, "fourier_module={}", factor::FOURIER_MODULE)?;
    writeln!(report, "factor_shape={:?}", image.shape())?;
    if args.check_consistency {
        let legal = subst::legal_patches_by_scan(&map, 2, 4)?.len();
        writeln!(report, "legal_patches={legal}")?;
        match factor::detect_orientation(&map) {
            Ok((o, reports)) => {
                for r in &reports {
                    writeln!(
                        report,
                        "orientation {:?}: patches={} mismatched={}",
                        r.orientation,
                        r.patches,
                        r.mismatched_patches.len()
                    )?;
                }
                writeln!(report, "consistency=pass orientation={o:?}")?;
            }
            Err(e) => {
                writeln!(report, "consistency=fail")?;
                return Err(e.into());
            }
        }
    }
    if args.check_model_set {
        let branch = factor::detect_branch(&image)?;
        let m = factor::check_membership(&image, branch, args.radius)?;
        writeln!(
            report,
            "branch={} points={} mismatches={} partition_failures={}",
            m.branch, m.points, m.mismatches, m.partition_failures
        )?;
        if m.mismatches > 0 || m.partition_failures > 0 {
            return Err(Error::Invariant("model-set membership disagrees with the factor".into()).into());
        }
    }
    if let Some(samples) = args.fiber_samples {
        let config = FiberConfig {
            window: args.fiber_window,
            core: args.fiber_core,
            samples,
            seed: args.seed,
        };
        let f = factor::fiber_statistics(&patch, &config)?;
        let hist: Vec<String> = f.histogram.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        writeln!(
            report,
            "fiber window={} core={} samples={} seed={} histogram={} fraction_two={:.4} max_preimages={} not_globally_two_to_one={}",
            config.window,
            config.core,
            config.samples,
            config.seed,
            hist.join(","),
            f.fraction_two,
            f.max_preimages,
            f.not_globally_two_to_one
        )?;
    }
    report.flush()?;
    if let Some(path) = &args.out.out {
        let mut out = BufWriter::new(File::create(path)?);
        match args.out.format {
            Format::Pgm => write_patch_pgm(&mut out, &image)?,
            Format::Csv => {
                let config = header(&[
                    ("command", "factor".into()),
                    ("iterations", args.iterations.to_string()),
                    ("memory_budget", budget.0.to_string()),
                ]);
                write_patch_csv(&mut out, &image, &config)?
            }
        }
        out.flush()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Run {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let budget = Budget(cli.memory_budget);
    match &cli.command {
        Command::Generate(a) => generate(a, &budget),
        Command::Autocorr(a) => autocorr(a, &budget),
        Command::Wiener(a) => wiener(a, &budget),
        Command::Classify(a) => classify(a, &budget),
        Command::Riesz(a) => riesz_cmd(a, &budget),
        Command::Factor(a) => factor_cmd(a, &budget),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
