mod args;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use kernelforge::kernelspace::KernelJson;
use kernelforge::metrics::{edge_field, isolines, standardize_scores, zone_plate_experiment, ZonePlateSetup};
use kernelforge::optimizer::{optimize_kernel, DesignMetric};
use kernelforge::pnm::{load_pgm, save_pgm, Depth};
use kernelforge::polyalg::rational::{self, parse_rational};
use kernelforge::report::{
    coefficient_listing, free_variable_csv, free_variable_grid, kernel_row, kernel_rows_csv, KernelRow, TableConfig,
};
use kernelforge::resample::{resample_image, ResamplePlan};
use kernelforge::staircase::{ed, ed_numeric, eg_squared, eg_squared_avg, eg_squared_avg_numeric, eg_squared_numeric};
use kernelforge::zoo::{reference_kernel_with, table_kernels, KernelName, ReferenceKernel};
use kernelforge::{Error, Kernel, KernelSpec, PiecewiseKernel};
use rayon::prelude::*;
use serde::Serialize;

use args::*;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_IO: u8 = 3;

type CliResult<T> = std::result::Result<T, Error>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownKernel(_)
        | Error::Parse(_)
        | Error::InvalidKernel(_)
        | Error::MissingFreeValue(_)
        | Error::UnknownVariable(_) => EXIT_USAGE,
        Error::Io(_) | Error::Pgm(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_NUMERIC,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("KERNELFORGE_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| Error::Parse(format!("KERNELFORGE_THREADS='{v}'")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parse(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Design(a) => design(a),
        Command::Eval(a) => eval(a),
        Command::Resample(a) => resample(a),
        Command::Zoneplate(a) => zoneplate(a),
        Command::Compare(a) => compare(a),
        Command::Tables(a) => tables(a),
    }
}

/// Writes `text` to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn to_json_line<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// A kernel given by name or loaded from a JSON file.
enum Selected {
    Named(ReferenceKernel),
    File { path: PathBuf, kernel: PiecewiseKernel },
}

impl Selected {
    fn load(args: &KernelArgs, search: &SearchArgs) -> CliResult<Self> {
        match (&args.kernel, &args.kernel_file) {
            (Some(name), _) => {
                let name: KernelName = name.parse()?;
                Ok(Selected::Named(reference_kernel_with(&name, &search.config())?))
            }
            (None, Some(path)) => {
                let json: KernelJson = serde_json::from_str(&fs::read_to_string(path)?)?;
                Ok(Selected::File { path: path.clone(), kernel: PiecewiseKernel::from_json(&json)? })
            }
            (None, None) => Err(Error::Parse("either --kernel or --kernel-file is required".into())),
        }
    }

    fn label(&self) -> String {
        match self {
            Selected::Named(k) => k.name.to_string(),
            Selected::File { path, .. } => path.display().to_string(),
        }
    }

    fn piecewise(&self) -> Option<&PiecewiseKernel> {
        match self {
            Selected::Named(k) => k.piecewise(),
            Selected::File { kernel, .. } => Some(kernel),
        }
    }

    fn numeric(&self) -> CliResult<Arc<dyn Kernel>> {
        match self {
            Selected::Named(k) => k.numeric(),
            Selected::File { kernel, .. } => Ok(Arc::new(kernel.to_numeric()?)),
        }
    }

    fn resampler(&self) -> CliResult<Arc<dyn Kernel>> {
        match self {
            Selected::Named(k) => k.resampler(),
            Selected::File { kernel, .. } => Ok(Arc::new(kernel.to_numeric()?)),
        }
    }
}

#[derive(Serialize)]
struct DesignReport<'a> {
    kernel: String,
    metric: DesignMetric,
    free: &'a [String],
    objective: Option<f64>,
    minimum: Option<&'a kernelforge::optimizer::CriticalPoint>,
    search: Option<&'a kernelforge::optimizer::CriticalSearch>,
    config: kernelforge::optimizer::SearchConfig,
    warnings: &'a [String],
}

fn design(a: DesignArgs) -> CliResult<()> {
    let spec = KernelSpec::from_radius(&parse_rational(&a.r)?, a.p, a.smooth)?;
    let metric = match a.metric {
        DesignMetricArg::EgHalf => DesignMetric::EgHalf,
        DesignMetricArg::EgAvg => DesignMetric::EgAvg,
    };
    let config = a.search.config();
    let d = optimize_kernel(&spec, metric, &config)?;
    for w in &d.warnings {
        eprintln!("warning: {w}");
    }
    emit(a.output.as_deref(), &to_json_line(&d.kernel.to_json()?)?)?;
    if let Some(path) = &a.report {
        let report = DesignReport {
            kernel: spec.label(),
            metric,
            free: &d.solution.free_names,
            objective: d.minimum.as_ref().map(|m| m.objective_value),
            minimum: d.minimum.as_ref(),
            search: d.search.as_ref(),
            config,
            warnings: &d.warnings,
        };
        fs::write(path, to_json_line(&report)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    kernel: String,
    metric: &'static str,
    theta: String,
    value: f64,
    exact: bool,
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let k = Selected::load(&a.kernel, &a.search)?;
    let theta = parse_rational(&a.theta)?;
    let theta_f = rational::to_f64(&theta);
    let quad = a.quad.config();
    let symbolic = |o: kernelforge::staircase::Objective, pk: &PiecewiseKernel| {
        o.value_f64().ok_or_else(|| Error::Symbolic(pk.free_vars()))
    };
    let (value, exact) = match k.piecewise() {
        Some(pk) => {
            let v = match a.metric {
                EvalMetric::Eg => symbolic(eg_squared(pk, &theta)?, pk)?.sqrt(),
                EvalMetric::EgAvg => symbolic(eg_squared_avg(pk)?, pk)?.sqrt(),
                EvalMetric::Ed => symbolic(ed(pk, &theta)?, pk)?,
            };
            (v, pk.is_exact())
        }
        None => {
            let nk = k.numeric()?;
            let v = match a.metric {
                EvalMetric::Eg => eg_squared_numeric(nk.as_ref(), theta_f, &quad)?.sqrt(),
                EvalMetric::EgAvg => eg_squared_avg_numeric(nk.as_ref(), &quad)?.sqrt(),
                EvalMetric::Ed => ed_numeric(nk.as_ref(), theta_f, &quad)?,
            };
            (v, false)
        }
    };
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("{} of {}", metric_name(a.metric), k.label())));
    }
    let out = EvalOutput {
        kernel: k.label(),
        metric: metric_name(a.metric),
        theta: rational::format_rational(&theta),
        value,
        exact,
    };
    emit(None, &to_json_line(&out)?)?;
    if let Some(dir) = &a.edge_field {
        write_edge_field(dir, k.resampler()?, &theta, a.field_size, a.field_upscale)?;
    }
    Ok(())
}

fn metric_name(m: EvalMetric) -> &'static str {
    match m {
        EvalMetric::Eg => "eg",
        EvalMetric::EgAvg => "eg-avg",
        EvalMetric::Ed => "ed",
    }
}

/// Isoline levels written alongside the edge field.
const ISO_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn write_edge_field(
    dir: &Path,
    kernel: Arc<dyn Kernel>,
    theta: &kernelforge::Rational,
    size: usize,
    upscale: u32,
) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let field = edge_field(kernel, theta, size, upscale)?;
    save_pgm(&dir.join("edge.pgm"), &field.interpolant, Depth::Sixteen)?;
    let peak = field.magnitude.data().iter().copied().fold(0.0, f64::max);
    let normalized = if peak > 0.0 { field.magnitude.map(|g| g / peak) } else { field.magnitude.clone() };
    save_pgm(&dir.join("gradient.pgm"), &normalized, Depth::Sixteen)?;
    let mut csv = format!("# gradient.pgm is scaled by 1/{peak:.9}\nlevel,x0,y0,x1,y1\n");
    for level in ISO_LEVELS {
        for ((x0, y0), (x1, y1)) in isolines(&field.interpolant, level) {
            let _ = writeln!(csv, "{level:.1},{x0:.6},{y0:.6},{x1:.6},{y1:.6}");
        }
    }
    fs::write(dir.join("isolines.csv"), csv)?;
    Ok(())
}

fn resample(a: ResampleArgs) -> CliResult<()> {
    let k = Selected::load(&a.kernel, &a.search)?;
    let img = load_pgm(&a.input)?;
    let plan = ResamplePlan::new(k.resampler()?, parse_rational(&a.scale)?)?
        .with_phase(parse_rational(&a.phase)?)
        .with_boundary(a.boundary);
    let out = resample_image(&img, &plan, a.grid)?;
    let depth = match a.depth {
        DepthArg::Eight => Depth::Eight,
        DepthArg::Sixteen => Depth::Sixteen,
    };
    save_pgm(&a.output, &out, depth)
}

fn zone_setup(a: &ZonePlateArgs) -> ZonePlateSetup {
    ZonePlateSetup {
        frequency: a.frequency,
        source_rate: a.source_rate,
        upscale: a.upscale,
        grid: a.grid,
        margin: a.margin,
    }
}

fn table_config(setup: &ZonePlateArgs, quad: &QuadArgs, search: &SearchArgs) -> TableConfig {
    TableConfig { search: search.config(), quadrature: quad.config(), zone_plate: zone_setup(setup) }
}

fn zoneplate(a: ZoneplateArgs) -> CliResult<()> {
    let k = Selected::load(&a.kernel, &a.search)?;
    let config = table_config(&a.setup, &a.quad, &a.search);
    let r = zone_plate_experiment(k.resampler()?, &config.zone_plate)?;
    let mut csv = config.header()?;
    csv.push_str("kernel,RMSE,RMSE_interior,crop,GCS\n");
    let _ = writeln!(csv, "{},{:.6e},{:.6e},{},{:.6}", k.label(), r.rmse, r.rmse_interior, r.crop, r.gcs);
    emit(a.output.as_deref(), &csv)?;
    if let Some(path) = &a.image {
        save_pgm(path, &r.image, Depth::Sixteen)?;
    }
    Ok(())
}

fn compare(a: CompareArgs) -> CliResult<()> {
    let names: Vec<KernelName> = if a.kernels.is_empty() {
        table_kernels()?
    } else {
        a.kernels.iter().map(|s| s.parse()).collect::<CliResult<_>>()?
    };
    let config = table_config(&a.setup, &a.quad, &a.search);
    if let Some(dir) = &a.images {
        fs::create_dir_all(dir)?;
    }
    let rows: Vec<KernelRow> = names
        .par_iter()
        .map(|n| {
            let row = kernel_row(n, &config)?;
            if let Some(dir) = &a.images {
                let k = reference_kernel_with(n, &config.search)?;
                let r = zone_plate_experiment(k.resampler()?, &config.zone_plate)?;
                save_pgm(&dir.join(format!("{}.pgm", file_stem(&row.name))), &r.image, Depth::Sixteen)?;
            }
            Ok(row)
        })
        .collect::<CliResult<_>>()?;
    let raw =
        |f: fn(&KernelRow) -> f64| -> BTreeMap<String, f64> { rows.iter().map(|r| (r.name.clone(), f(r))).collect() };
    let scores = if rows.len() >= 2 {
        Some((standardize_scores(&raw(|r| r.rmse), false, 0.0)?, standardize_scores(&raw(|r| r.gcs), true, 1.0)?))
    } else {
        None
    };
    let mut csv = config.header()?;
    csv.push_str("kernel,name,E_g,E_g_exact,RMSE,RMSE_interior,GCS,RMSE_score,GCS_score\n");
    for r in &rows {
        let (rs, gs) = match &scores {
            Some((rs, gs)) => (format!("{:.2}", rs[&r.name] + 0.0), format!("{:.2}", gs[&r.name] + 0.0)),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(
            csv,
            "{},{},{:.6},{},{:.6e},{:.6e},{:.6},{rs},{gs}",
            r.label, r.name, r.eg, r.eg_exact, r.rmse, r.rmse_interior, r.gcs
        );
    }
    emit(a.output.as_deref(), &csv)
}

/// File-system friendly version of a kernel name.
fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn tables(a: TablesArgs) -> CliResult<()> {
    let config = table_config(&a.setup, &a.quad, &a.search);
    let want = |w: Which| a.which == w || a.which == Which::All;
    let mut parts: Vec<(&str, String)> = Vec::new();
    if want(Which::FreeVars) {
        parts.push(("free_vars.csv", free_variable_csv(&free_variable_grid()?)));
    }
    if want(Which::Kernels) {
        let rows: Vec<KernelRow> =
            table_kernels()?.par_iter().map(|n| kernel_row(n, &config)).collect::<CliResult<_>>()?;
        parts.push(("kernels.csv", config.header()? + &kernel_rows_csv(&rows)));
    }
    if want(Which::Coefficients) {
        parts.push(("coefficients.txt", coefficient_listing(&config.search)?));
    }
    match &a.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (file, text) in &parts {
                fs::write(dir.join(file), text)?;
            }
            Ok(())
        }
        None => {
            let joined: Vec<&str> = parts.iter().map(|(_, t)| t.as_str()).collect();
            emit(None, &joined.join("\n"))
        }
    }
}
