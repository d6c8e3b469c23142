//! The `recordchar` command-line front end.
//!
//! Exit codes: `0` success, `2` invalid arguments or configuration, `3`
//! numerical or runtime failure, `4` I/O failure. Every failure prints one
//! JSON object to standard error:
//!
//! ```text
//! {"error":{"kind":"validation","message":"..."},"exit_code":2}
//! ```

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::divided_differences::{imj_integral, lemma1_check, lemma2_limit, MixedPartialRequest};
use crate::error::{Error, Result};
use crate::goftest::{
    calibrate_null, extract_records, run_test_with_table, Alternative, TestConfig, TestReport,
};
use crate::records::{sample_records, RecordSequence, SamplerConfig};
use crate::regression::{
    characterization_residual_with, conditional_density, conditional_expectation, mc_cross_check,
    residual_scan, RegressionQuery,
};
use crate::smooth::SmoothFunction;

use config::{
    parse, resolve_seed, DensityConfig, McCheckConfig, PsiSpec, RegressConfig, ScanConfig,
    SimulateConfig, VerifyConfig,
};
use output::{config_sidecar, fmt_f64, write_atomic, CsvText};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "recordchar",
    version,
    about = "Record-value regression identities and exponentiality testing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output file; standard output when omitted.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Seed override (falls back to the config, then RECORDCHAR_SEED, then 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate upper record sequences.
    Simulate(ConfigArg),
    /// Tabulate the conditional density of R_n given two records.
    Density(ConfigArg),
    /// Evaluate both sides of the regression identity for one query.
    Regress(ConfigArg),
    /// Evaluate the identity over a (k, r, u, v) grid.
    ResidualScan(ConfigArg),
    /// Check the derivative identity and boundary limits of _iM_j.
    VerifyIdentities(ConfigArg),
    /// Median/midrange exponentiality test.
    Goftest(GoftestArgs),
    /// Compare quadrature against Monte Carlo conditional draws.
    McCheck(ConfigArg),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// JSON configuration file.
    #[arg(long, short)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Raw observations; records are extracted.
    Raw,
    /// One record sequence per row (`rep,R1,...` as written by `simulate`).
    Records,
}

#[derive(Debug, Args)]
pub struct GoftestArgs {
    /// CSV input.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputKind::Raw)]
    pub input_kind: InputKind,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Defaults to n - 1.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2000)]
    pub null_reps: usize,
    #[arg(long, value_enum, default_value_t = AltArg::TwoSided)]
    pub alternative: AltArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AltArg {
    TwoSided,
    Greater,
    Less,
}

impl From<AltArg> for Alternative {
    fn from(a: AltArg) -> Self {
        match a {
            AltArg::TwoSided => Alternative::TwoSided,
            AltArg::Greater => Alternative::Greater,
            AltArg::Less => Alternative::Less,
        }
    }
}

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_)
        | Error::InvalidParameter(_)
        | Error::Order { .. }
        | Error::UnsupportedMethod { .. }
        | Error::Index(_)
        | Error::Config(_) => EXIT_VALIDATION,
        Error::Convergence(_)
        | Error::Overflow(_)
        | Error::CoefficientOverflow(_)
        | Error::Degenerate(_)
        | Error::Budget(_)
        | Error::Quadrature(_) => EXIT_RUNTIME,
        Error::Io(_) => EXIT_IO,
    }
}

fn error_kind(code: i32) -> &'static str {
    match code {
        EXIT_VALIDATION => "validation",
        EXIT_RUNTIME => "runtime",
        _ => "io",
    }
}

/// Error object written to standard error.
pub fn error_json(code: i32, message: &str) -> String {
    json!({"error": {"kind": error_kind(code), "message": message}, "exit_code": code}).to_string()
}

/// Parse `args`, run, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            eprintln!("{}", error_json(EXIT_VALIDATION, e.to_string().trim()));
            return EXIT_VALIDATION;
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", error_json(code, &e.to_string()));
            code
        }
    }
}

/// A rendered result plus the resolved configuration it came from.
struct Artifact {
    csv: String,
    json: serde_json::Value,
    config: serde_json::Value,
}

/// Run one subcommand and write its artifact.
pub fn dispatch(cli: &Cli) -> Result<()> {
    let artifact = match &cli.command {
        Command::Simulate(a) => simulate(&read_config(&a.config)?, cli.seed)?,
        Command::Density(a) => density(&read_config(&a.config)?)?,
        Command::Regress(a) => regress(&read_config(&a.config)?)?,
        Command::ResidualScan(a) => scan(&read_config(&a.config)?)?,
        Command::VerifyIdentities(a) => verify(&read_config(&a.config)?)?,
        Command::McCheck(a) => mc_check(&read_config(&a.config)?, cli.seed)?,
        Command::Goftest(a) => goftest(a, cli.seed)?,
    };
    emit(cli, artifact)
}

fn read_config(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn emit(cli: &Cli, artifact: Artifact) -> Result<()> {
    let body = match cli.format {
        Format::Csv => artifact.csv.into_bytes(),
        Format::Json => {
            let mut doc = artifact.json;
            if let Some(obj) = doc.as_object_mut() {
                obj.entry("config").or_insert(artifact.config.clone());
            }
            let mut s =
                serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?;
            s.push('\n');
            s.into_bytes()
        }
    };
    match &cli.output {
        Some(path) => {
            write_atomic(path, &body)?;
            if cli.format == Format::Csv {
                let mut cfg = serde_json::to_string_pretty(&artifact.config)
                    .map_err(|e| Error::Config(e.to_string()))?;
                cfg.push('\n');
                write_atomic(&config_sidecar(path), cfg.as_bytes())?;
            }
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(&body)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Config(e.to_string()))
}

fn simulate(text: &str, seed_flag: Option<u64>) -> Result<Artifact> {
    let mut cfg: SimulateConfig = parse(text)?;
    let seed = resolve_seed(seed_flag, cfg.seed)?;
    cfg.seed = Some(seed);
    let dist = cfg.dist.build()?;
    let sampler = SamplerConfig {
        count: cfg.count,
        replications: cfg.replications,
        seed,
        method: cfg.method,
    };
    let seqs = sample_records(&dist, &sampler)?;

    let mut header = vec!["rep".to_string()];
    header.extend((1..=cfg.count).map(|i| format!("R{i}")));
    let mut csv = CsvText::default();
    csv.row(header);
    for s in &seqs {
        let mut row = vec![s.replication.unwrap_or_default().to_string()];
        row.extend(s.values.iter().map(|&x| fmt_f64(x)));
        csv.row(row);
    }
    Ok(Artifact {
        csv: csv.into_string(),
        json: json!({ "sequences": to_value(&seqs)? }),
        config: to_value(&cfg)?,
    })
}

fn density(text: &str) -> Result<Artifact> {
    let cfg: DensityConfig = parse(text)?;
    if cfg.points < 1 {
        return Err(Error::param("points must be >= 1"));
    }
    let dist = cfg.dist.build()?;
    let mut csv = CsvText::with_header(&["t", "density"]);
    let mut rows = Vec::with_capacity(cfg.points);
    let step = (cfg.v - cfg.u) / (cfg.points + 1) as f64;
    for i in 1..=cfg.points {
        let t = cfg.u + i as f64 * step;
        let d = conditional_density(&dist, cfg.k, cfg.r, cfg.u, cfg.v, t)?;
        csv.row([fmt_f64(t), fmt_f64(d)]);
        rows.push(json!({"t": t, "density": d}));
    }
    let mass = crate::quadrature::integrate(
        |t| conditional_density(&dist, cfg.k, cfg.r, cfg.u, cfg.v, t).unwrap_or(f64::NAN),
        cfg.u,
        cfg.v,
        crate::quadrature::DEFAULT_REL_TOL,
    )?;
    Ok(Artifact {
        csv: csv.into_string(),
        json: json!({"points": rows, "mass": mass.value}),
        config: to_value(&cfg)?,
    })
}

const RESIDUAL_COLUMNS: [&str; 8] = ["k", "r", "u", "v", "lhs", "rhs", "residual", "quad_err"];

fn residual_row(k: u32, r: u32, u: f64, v: f64, vals: Option<(f64, f64, f64, f64)>) -> Vec<String> {
    let (lhs, rhs, res, err) = vals.unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN));
    vec![
        k.to_string(),
        r.to_string(),
        fmt_f64(u),
        fmt_f64(v),
        fmt_f64(lhs),
        fmt_f64(rhs),
        fmt_f64(res),
        fmt_f64(err),
    ]
}

fn regress(text: &str) -> Result<Artifact> {
    let cfg: RegressConfig = parse(text)?;
    if let Some(n) = cfg.n {
        if n <= cfg.k {
            return Err(Error::param(format!(
                "record index n = {n} must exceed k = {}",
                cfg.k
            )));
        }
    }
    let dist = cfg.dist.build()?;
    let g = cfg.g.build(Some(cfg.k), Some(cfg.r))?;
    let q = RegressionQuery::new(&dist, g.as_ref(), cfg.k, cfg.r, cfg.u, cfg.v);
    let rep = characterization_residual_with(&q, cfg.form)?;
    let mut csv = CsvText::with_header(&RESIDUAL_COLUMNS);
    csv.row(residual_row(
        rep.k,
        rep.r,
        rep.u,
        rep.v,
        Some((rep.lhs, rep.rhs, rep.residual, rep.quad_err)),
    ));
    Ok(Artifact {
        csv: csv.into_string(),
        json: json!({"report": to_value(&rep)?}),
        config: to_value(&cfg)?,
    })
}

fn scan(text: &str) -> Result<Artifact> {
    let cfg: ScanConfig = parse(text)?;
    let dist = cfg.dist.build()?;
    let gspec = cfg.g.clone();
    let cells = residual_scan(
        &dist,
        |k, r| gspec.build(Some(k), Some(r)),
        &cfg.k_set,
        &cfg.r_set,
        &cfg.uv_grid,
        cfg.form,
    );
    let mut csv = CsvText::with_header(&RESIDUAL_COLUMNS);
    let mut reports = Vec::with_capacity(cells.len());
    for c in &cells {
        match &c.outcome {
            Ok(rep) => {
                csv.row(residual_row(
                    c.k,
                    c.r,
                    c.u,
                    c.v,
                    Some((rep.lhs, rep.rhs, rep.residual, rep.quad_err)),
                ));
                reports.push(to_value(rep)?);
            }
            Err(e) => {
                eprintln!(
                    "{}",
                    json!({"warning": {"k": c.k, "r": c.r, "u": c.u, "v": c.v, "message": e.to_string()}})
                );
                csv.row(residual_row(c.k, c.r, c.u, c.v, None));
                reports
                    .push(json!({"k": c.k, "r": c.r, "u": c.u, "v": c.v, "error": e.to_string()}));
            }
        }
    }
    Ok(Artifact {
        csv: csv.into_string(),
        json: json!({"reports": reports}),
        config: to_value(&cfg)?,
    })
}

#[derive(Debug, Serialize)]
struct IdentityRow {
    check: &'static str,
    function: String,
    p1: u64,
    p2: u64,
    u: f64,
    v: f64,
    computed: f64,
    target: f64,
    abs_error: f64,
}

fn verify(text: &str) -> Result<Artifact> {
    let cfg: VerifyConfig = parse(text)?;
    let mut rows = Vec::new();
    for spec in &cfg.functions {
        if let Some(grid) = &cfg.lemma1 {
            for &k in &grid.k_values {
                for &n in &grid.n_values {
                    let g = spec.build(Some(k), Some(n))?;
                    for &(u, v) in &grid.uv {
                        let c = lemma1_check(g.as_ref(), k, n, u, v)?;
                        rows.push(IdentityRow {
                            check: "lemma1",
                            function: g.name(),
                            p1: k.into(),
                            p2: n.into(),
                            u,
                            v,
                            computed: c.rhs,
                            target: c.lhs,
                            abs_error: c.residual.abs(),
                        });
                    }
                }
            }
        }
        if let Some(grid) = &cfg.lemma2 {
            let g = spec.build(None, None)?;
            for total in 0..=grid.max_order {
                for i in 0..=total {
                    let j = total - i;
                    let l = lemma2_limit(g.as_ref(), i, j, grid.l_f)?;
                    rows.push(IdentityRow {
                        check: "lemma2",
                        function: g.name(),
                        p1: i as u64,
                        p2: j as u64,
                        u: grid.l_f,
                        v: grid.l_f,
                        computed: l.extrapolated,
                        target: l.target,
                        abs_error: l.abs_error(),
                    });
                }
            }
        }
        if let Some(grid) = &cfg.nonvanishing {
            let g = spec.build(Some(grid.k), Some(grid.r))?;
            for &v in &grid.v_values {
                let req =
                    MixedPartialRequest::new((grid.r - 1) as usize, grid.k as usize, grid.l_f, v);
                let val = imj_integral(g.as_ref(), req)?.value;
                rows.push(IdentityRow {
                    check: "nonvanishing",
                    function: g.name(),
                    p1: grid.k.into(),
                    p2: grid.r.into(),
                    u: grid.l_f,
                    v,
                    computed: val,
                    target: f64::NAN,
                    abs_error: f64::NAN,
                });
            }
        }
    }
    let mut csv = CsvText::with_header(&[
        "check",
        "function",
        "p1",
        "p2",
        "u",
        "v",
        "computed",
        "target",
        "abs_error",
    ]);
    for r in &rows {
        csv.row([
            r.check.to_string(),
            r.function.replace(',', ";"),
            r.p1.to_string(),
            r.p2.to_string(),
            fmt_f64(r.u),
            fmt_f64(r.v),
            fmt_f64(r.computed),
            fmt_f64(r.target),
            fmt_f64(r.abs_error),
        ]);
    }
    let max_error = rows
        .iter()
        .filter(|r| r.check != "nonvanishing")
        .map(|r| r.abs_error)
        .fold(0.0, f64::max);
    Ok(Artifact {
        csv: csv.into_string(),
        json: json!({"rows": to_value(&rows)?, "max_abs_error": max_error}),
        config: to_value(&cfg)?,
    })
}

fn mc_check(text: &str, seed_flag: Option<u64>) -> Result<Artifact> {
    let mut cfg: McCheckConfig = parse(text)?;
    let seed = resolve_seed(seed_flag, cfg.seed)?;
    cfg.seed = Some(seed);
    let dist = cfg.dist.build()?;
    let mut csv = CsvText::with_header(&[
        "k",
        "r",
        "u",
        "v",
        "quadrature",
        "quad_err",
        "mc_estimate",
        "std_error",
        "z",
    ]);
    let mut out = Vec::new();
    for (idx, q) in cfg.queries.iter().enumerate() {
        let g: Option<Box<dyn SmoothFunction>> = match &cfg.psi {
            PsiSpec::Power { .. } => None,
            PsiSpec::Characterization { g } => Some(g.build(Some(q.k), Some(q.r))?),
        };
        let psi = |t: f64| match (&cfg.psi, &g) {
            (PsiSpec::Power { p }, _) => t.powi(*p),
            (_, Some(g)) => {
                let m = q.k + q.r - 1;
                g.derivative(m as usize, t) / f64::from(m)
            }
            _ => unreachable!("characterization integrand always carries g"),
        };
        let quad = conditional_expectation(&dist, q, psi)?;
        let mc = mc_cross_check(&dist, q, psi, cfg.n_samples, seed.wrapping_add(idx as u64))?;
        let z = (mc.mc_estimate - quad.value) / mc.std_error;
        csv.row([
            q.k.to_string(),
            q.r.to_string(),
            fmt_f64(q.u),
            fmt_f64(q.v),
            fmt_f64(quad.value),
            fmt_f64(quad.error),
            fmt_f64(mc.mc_estimate),
            fmt_f64(mc.std_error),
            fmt_f64(z),
        ]);
        out.push(json!({
            "query": to_value(q)?,
            "quadrature": quad.value,
            "quad_err": quad.error,
            "mc_estimate": mc.mc_estimate,
            "std_error": mc.std_error,
            "z": z,
        }));
    }
    Ok(Artifact {
        csv: csv.into_string(),
        json: json!({"checks": out}),
        config: to_value(&cfg)?,
    })
}

/// Read record sequences or raw observations from CSV text.
pub fn read_sequences(text: &str, kind: InputKind) -> Result<Vec<RecordSequence>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Config(format!("malformed CSV input: {e}")))?;
        let cells: Vec<String> = rec
            .iter()
            .filter(|c| !c.is_empty())
            .map(str::to_string)
            .collect();
        if !cells.is_empty() {
            rows.push(cells);
        }
    }
    let mut skip_first_col = false;
    if let Some(first) = rows.first() {
        if first.iter().any(|c| c.parse::<f64>().is_err()) {
            skip_first_col = first[0].eq_ignore_ascii_case("rep");
            rows.remove(0);
        }
    }
    let parse_row = |row: &[String]| -> Result<Vec<f64>> {
        row.iter()
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| Error::Config(format!("non-numeric CSV cell {c:?}")))
            })
            .collect()
    };
    match kind {
        InputKind::Raw => {
            let mut all = Vec::new();
            for row in &rows {
                all.extend(parse_row(row)?);
            }
            if all.is_empty() {
                return Err(Error::Config("no observations in input".into()));
            }
            if all.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("observations must be finite".into()));
            }
            Ok(vec![extract_records(&all)])
        }
        InputKind::Records => {
            let seqs = rows
                .iter()
                .map(|row| {
                    let cells = if skip_first_col { &row[1..] } else { &row[..] };
                    RecordSequence::from_values(parse_row(cells)?)
                })
                .collect::<Result<Vec<_>>>()?;
            if seqs.is_empty() {
                return Err(Error::Config("no record sequences in input".into()));
            }
            Ok(seqs)
        }
    }
}

#[derive(Debug, Serialize)]
struct GoftestEcho<'a> {
    input: &'a Path,
    input_kind: InputKind,
    test: TestConfig,
}

fn goftest(args: &GoftestArgs, seed_flag: Option<u64>) -> Result<Artifact> {
    let seed = resolve_seed(seed_flag, None)?;
    let cfg = TestConfig {
        n: args.n,
        k: args.k.unwrap_or(args.n.saturating_sub(1)),
        alpha: args.alpha,
        null_reps: args.null_reps,
        seed,
        alternative: args.alternative.into(),
    };
    cfg.validate()?;
    let text = std::fs::read_to_string(&args.input)?;
    let seqs = read_sequences(&text, args.input_kind)?;
    let table = calibrate_null(&cfg)?;
    let reports = seqs
        .iter()
        .map(|s| run_test_with_table(s, &cfg, &table))
        .collect::<Result<Vec<TestReport>>>()?;

    let mut csv = CsvText::with_header(&["seq", "statistic", "p_value", "reject"]);
    for (i, r) in reports.iter().enumerate() {
        csv.row([
            i.to_string(),
            fmt_f64(r.statistic),
            fmt_f64(r.p_value),
            r.reject.to_string(),
        ]);
    }
    let echo = to_value(&GoftestEcho {
        input: &args.input,
        input_kind: args.input_kind,
        test: cfg,
    })?;
    let json = if args.input_kind == InputKind::Raw && reports.len() == 1 {
        to_value(&reports[0])?
    } else {
        let rejections = reports.iter().filter(|r| r.reject).count();
        json!({
            "reports": to_value(&reports)?,
            "rejections": rejections,
            "rejection_rate": rejections as f64 / reports.len() as f64,
        })
    };
    Ok(Artifact {
        csv: csv.into_string(),
        json,
        config: echo,
    })
}
