//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::adaptive::{arta_pvalue, artp_empirical, AdaptiveSpec, ArtpCalibrator};
use crate::correlation::CorrelationMatrix;
use crate::decorrelate::{decorrelate_pvalues, ld_matrix_from_haplotypes, HaplotypeTable, Sidedness};
use crate::error::Error;
use crate::fixed::{art, bonferroni_min, fisher, rtp_exact, sidak_min, simes, CombinedResult, Method, PValueVector, TruncationSpec};
use crate::simharness::{run_study, CorrelationSource, EffectLaw, Preset, SimStudyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "artcombine", version, about = "Combine p-values with truncated-product and adaptive methods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Combine one vector of p-values.
    Combine(CombineArgs),
    /// Run a type I error or power study.
    Simulate(SimulateArgs),
    /// Build an LD correlation matrix from haplotype frequencies.
    LdMatrix(LdMatrixArgs),
}

#[derive(Debug, clap::Args, Serialize)]
struct CombineArgs {
    /// P-values: one per line, whitespace separated, or `name,value` CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_method, required_unless_present = "all_k")]
    method: Option<Method>,
    /// Truncation point; the largest candidate for the adaptive methods.
    #[arg(long)]
    k: Option<usize>,
    /// Total number of tests; required when the input holds only the smallest values.
    #[arg(long = "L")]
    l: Option<usize>,
    /// Correlation matrix as headerless square CSV.
    #[arg(long)]
    corr: Option<PathBuf>,
    /// Signs (or signed statistics) aligned with the input.
    #[arg(long)]
    signs: Option<PathBuf>,
    /// Whiten the p-values with --corr before combining.
    #[arg(long)]
    decorrelate: bool,
    /// Ridge added to --corr before whitening.
    #[arg(long)]
    ridge: Option<f64>,
    /// How p-values map to normal scores for whitening: one or two.
    #[arg(long, default_value = "one", value_parser = parse_sided)]
    sided: Sidedness,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Resamples for aRTP and for --calibrate-plain.
    #[arg(long = "B", default_value_t = 10_000)]
    b: usize,
    /// Table of plain and decorrelated values for k = 2..K.
    #[arg(long)]
    all_k: bool,
    /// In --all-k tables, calibrate plain columns against correlated nulls.
    #[arg(long)]
    calibrate_plain: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    preset: Option<String>,
    #[arg(long = "B")]
    b: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// constant:MU, uniform:LO,HI or sparse:FRACTION,MU
    #[arg(long)]
    effect: Option<String>,
    /// Draw uniform effects once per study instead of per replicate.
    #[arg(long)]
    per_study: bool,
    /// independent, random:RHO,DELTA or file (uses --corr)
    #[arg(long)]
    correlation: Option<String>,
    #[arg(long)]
    corr: Option<PathBuf>,
    /// Comma-separated methods.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    decorrelate: bool,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    null_resamples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args, Serialize)]
struct LdMatrixArgs {
    #[arg(long)]
    haplotypes: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sided(s: &str) -> Result<Sidedness, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) | Error::Singular { .. } | Error::NotPsd { .. } => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the command line, writing results to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Combine(a) => echo_manifest(err, "combine", a).and_then(|_| cmd_combine(a, out, err)),
        Command::Simulate(a) => echo_manifest(err, "simulate", a).and_then(|_| cmd_simulate(a, out)),
        Command::LdMatrix(a) => echo_manifest(err, "ld-matrix", a).and_then(|_| cmd_ldmatrix(a, out)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message.replace('\n', " "));
            f.code
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn echo_manifest<A: Serialize>(err: &mut dyn Write, subcommand: &str, args: &A) -> CliResult<()> {
    #[derive(Serialize)]
    struct RunManifest<'a, A> {
        subcommand: &'a str,
        version: &'a str,
        args: &'a A,
    }
    let m = RunManifest { subcommand, version: env!("CARGO_PKG_VERSION"), args };
    let json = serde_json::to_string(&m).map_err(|e| Failure::usage(e.to_string()))?;
    writeln!(err, "manifest: {json}").map_err(io_failure)
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure { code: EXIT_DATA, message: e.to_string() }
}

/// Reads p-values or signs. Accepts one value per line, whitespace
/// separated values, or `name,value` rows with an optional header; `#`
/// starts a comment.
pub fn parse_values(text: &str) -> crate::Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut first = true;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let is_first = std::mem::take(&mut first);
        if line.contains(',') {
            let field = line.rsplit(',').next().unwrap_or("").trim().trim_matches('"');
            match field.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) if is_first => continue,
                Err(_) => return Err(Error::input(format!("line {}: {field:?} is not a number", n + 1))),
            }
        } else {
            for tok in line.split_whitespace() {
                let v = tok
                    .parse::<f64>()
                    .map_err(|_| Error::input(format!("line {}: {tok:?} is not a number", n + 1)))?;
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::input("no values found"));
    }
    Ok(values)
}

fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure { code: EXIT_DATA, message: format!("{}: {e}", path.display()) })?;
    Ok(parse_values(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))?)
}

fn write_report(out_path: Option<&Path>, out: &mut dyn Write, text: &str) -> CliResult<()> {
    match out_path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure { code: EXIT_DATA, message: format!("{}: {e}", p.display()) }),
        None => out.write_all(text.as_bytes()).map_err(io_failure),
    }
}

fn cmd_combine(a: &CombineArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    if (a.decorrelate || a.signs.is_some()) && a.corr.is_none() {
        return Err(Failure::usage("--decorrelate and --signs need --corr"));
    }
    if a.ridge.is_some() && !a.decorrelate && !a.all_k {
        return Err(Failure::usage("--ridge only applies with --decorrelate or --all-k"));
    }
    let raw = read_values(&a.input)?;
    let l = match a.l {
        Some(l) => l,
        None => raw.len(),
    };
    let p = PValueVector::with_total(raw, l)?;
    if p.clamped_count() > 0 {
        let _ = writeln!(err, "warning: {} p-value(s) clamped into [1e-300, 1]", p.clamped_count());
    }
    let corr = match &a.corr {
        Some(path) => Some(CorrelationMatrix::read_csv(path)?),
        None => None,
    };
    let signs = a.signs.as_deref().map(read_values).transpose()?;
    if corr.is_some() && signs.is_none() && (a.decorrelate || a.all_k) {
        let _ = writeln!(err, "warning: no --signs given; every statistic is taken as positive");
    }
    let whitening = |c: &CorrelationMatrix| -> CliResult<CorrelationMatrix> {
        Ok(match a.ridge {
            Some(eps) => c.with_ridge(eps)?,
            None => c.clone(),
        })
    };

    if a.all_k {
        let text = all_k_table(a, &p, corr.as_ref().map(whitening).transpose()?.as_ref(), signs.as_deref())?;
        return write_report(a.out.as_deref(), out, &text);
    }

    let p = if a.decorrelate {
        let sigma = whitening(corr.as_ref().expect("checked above"))?;
        decorrelate_pvalues(&p, signs.as_deref(), &sigma, a.sided)?
    } else {
        p
    };
    let k = a.k.unwrap_or(1);
    let method = a.method.ok_or_else(|| Failure::usage("--method is required without --all-k"))?;
    let result = combine_one(method, &p, k, a.b, a.seed)?;
    let mut text = String::new();
    text.push_str(&format!("method: {}\n", result.method));
    if !matches!(result.method, Method::Fisher | Method::Simes) {
        text.push_str(&format!("k: {k}\n"));
    }
    text.push_str(&format!("L: {}\n", p.total()));
    if a.decorrelate {
        text.push_str(&format!("decorrelated: {}-sided\n", a.sided));
    }
    text.push_str(&format!("statistic: {}\n", result.statistic));
    text.push_str(&format!("p_combined: {}\n", result.p_combined));
    for (key, v) in &result.diagnostics {
        text.push_str(&format!("diagnostic.{key}: {v}\n"));
    }
    for note in &result.notes {
        text.push_str(&format!("note: {note}\n"));
    }
    write_report(a.out.as_deref(), out, &text)
}

fn combine_one(method: Method, p: &PValueVector, k: usize, b: usize, seed: u64) -> crate::Result<CombinedResult> {
    let l = p.total();
    match method {
        Method::Fisher => fisher(p),
        Method::Simes => simes(p),
        Method::Sidak | Method::Bonferroni => {
            let p1 = p.sorted()[0];
            let v = if method == Method::Sidak { sidak_min(p1, l) } else { bonferroni_min(p1, l) };
            Ok(CombinedResult::new(method, p1, v))
        }
        Method::Rtp => rtp_exact(p, TruncationSpec::new(k, l)?),
        Method::Art => art(p, TruncationSpec::new(k, l)?),
        Method::Arta => arta_pvalue(p, &AdaptiveSpec::new(k, l)?, seed),
        Method::Artp => artp_empirical(p, &AdaptiveSpec::new(k, l)?, b, seed),
    }
}

/// Plain and decorrelated values for every `k` from 2 (or 1 when `L = 1`)
/// up to `--k`, or `L` when `--k` is absent.
fn all_k_table(a: &CombineArgs, p: &PValueVector, sigma: Option<&CorrelationMatrix>, signs: Option<&[f64]>) -> CliResult<String> {
    let l = p.total();
    let kmax = a.k.unwrap_or(l).min(p.len());
    TruncationSpec::new(kmax, l)?;
    let kmin = 2.min(kmax);
    let decorrelated = match sigma {
        Some(s) => Some(decorrelate_pvalues(p, signs, s, a.sided)?),
        None => None,
    };
    let plain_null = match (a.calibrate_plain, sigma) {
        (true, Some(s)) => Some(correlated_null_heads(s, kmax, a.b, a.seed, a.sided)?),
        (true, None) => return Err(Failure::usage("--calibrate-plain needs --corr")),
        _ => None,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k", "rtp", "art", "artp", "arta"];
    if decorrelated.is_some() {
        header.extend(["rtp_decorr", "art_decorr", "artp_decorr", "arta_decorr"]);
    }
    w.write_record(&header).map_err(|e| Failure::usage(e.to_string()))?;
    for k in kmin..=kmax {
        let spec = TruncationSpec::new(k, l)?;
        let adaptive = AdaptiveSpec::new(k, l)?;
        let mut row = vec![k.to_string()];
        let (rtp_p, art_p, artp_p, arta_p) = match &plain_null {
            None => (
                rtp_exact(p, spec)?.p_combined,
                art(p, spec)?.p_combined,
                artp_empirical(p, &adaptive, a.b, a.seed)?.p_combined,
                arta_pvalue(p, &adaptive, a.seed)?.p_combined,
            ),
            Some(rows) => calibrated_plain(p, rows, k, l, a.seed)?,
        };
        for v in [rtp_p, art_p, artp_p, arta_p] {
            row.push(format!("{v}"));
        }
        if let Some(d) = &decorrelated {
            row.push(format!("{}", rtp_exact(d, spec)?.p_combined));
            row.push(format!("{}", art(d, spec)?.p_combined));
            row.push(format!("{}", artp_empirical(d, &adaptive, a.b, a.seed)?.p_combined));
            row.push(format!("{}", arta_pvalue(d, &adaptive, a.seed)?.p_combined));
        }
        w.write_record(&row).map_err(|e| Failure::usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
}

/// Sorted null heads of length `k` drawn from `MVN(0, Σ)`.
fn correlated_null_heads(sigma: &CorrelationMatrix, k: usize, b: usize, seed: u64, sided: Sidedness) -> CliResult<Vec<Vec<f64>>> {
    use crate::rng::{par_generate, Domain};
    use rand::Rng;
    let f = sigma.sqrt_factor();
    let l = sigma.order();
    let rows = par_generate(seed, Domain::NullCalibration, b, |rng, _| {
        let z = nalgebra::DVector::from_fn(l, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let y = &f * z;
        let mut p: Vec<f64> = y.iter().map(|&v| sided.pvalue(v).max(crate::fixed::P_FLOOR)).collect();
        p.sort_by(f64::total_cmp);
        p.truncate(k);
        p
    });
    Ok(rows)
}

fn calibrated_plain(p: &PValueVector, rows: &[Vec<f64>], k: usize, l: usize, seed: u64) -> CliResult<(f64, f64, f64, f64)> {
    let b1 = (rows.len() + 1) as f64;
    let empirical = |obs: f64, nulls: &mut Vec<f64>| -> f64 {
        nulls.sort_by(f64::total_cmp);
        (nulls.partition_point(|&v| v <= obs) + 1) as f64 / b1
    };
    let spec = TruncationSpec::new(k, l)?;
    let adaptive = AdaptiveSpec::new(k, l)?;
    let head_vec = |r: &[f64]| PValueVector::with_total(r[..k].to_vec(), l);

    let obs_rtp = p.log_product(k);
    let mut null_rtp: Vec<f64> = rows.iter().map(|r| r[..k].iter().map(|v| v.ln()).sum()).collect();
    let obs_art = art(p, spec)?.p_combined;
    let mut null_art = rows.iter().map(|r| Ok(art(&head_vec(r)?, spec)?.p_combined)).collect::<crate::Result<Vec<f64>>>()?;
    let obs_arta = crate::adaptive::arta_statistic(p, &adaptive)?.min_p;
    let mut null_arta = rows
        .iter()
        .map(|r| Ok(crate::adaptive::arta_statistic_sorted(&r[..k], &adaptive)?.min_p))
        .collect::<crate::Result<Vec<f64>>>()?;
    let artp = ArtpCalibrator::from_null_rows(adaptive, rows)?.pvalue(p)?.p_combined;
    let _ = seed;
    Ok((empirical(obs_rtp, &mut null_rtp), empirical(obs_art, &mut null_art), artp, empirical(obs_arta, &mut null_arta)))
}

fn parse_pair(s: &str, what: &str) -> CliResult<(f64, f64)> {
    let mut it = s.split(',').map(|t| t.trim().parse::<f64>());
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Failure::usage(format!("{what} expects two comma-separated numbers, got {s:?}"))),
    }
}

fn parse_effect(s: &str, per_study: bool) -> CliResult<EffectLaw> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "constant" => rest
            .trim()
            .parse()
            .map(|mu| EffectLaw::Constant { mu })
            .map_err(|_| Failure::usage(format!("constant effect needs a number, got {rest:?}"))),
        "uniform" => parse_pair(rest, "uniform effect").map(|(lo, hi)| EffectLaw::Uniform { lo, hi, per_study }),
        "sparse" => parse_pair(rest, "sparse effect").map(|(fraction, mu)| EffectLaw::Sparse { fraction, mu }),
        "null" => Ok(EffectLaw::null()),
        _ => Err(Failure::usage(format!("unknown effect law {kind:?}"))),
    }
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let corr = match &a.corr {
        Some(path) => Some(CorrelationMatrix::read_csv(path)?),
        None => None,
    };
    let mut cfg = match &a.preset {
        Some(name) => name.parse::<Preset>().map_err(|e| Failure::usage(e.to_string()))?.config(corr.clone())?,
        None => {
            let (Some(l), Some(k)) = (a.l, a.k) else {
                return Err(Failure::usage("simulate needs --preset or both --L and --k"));
            };
            SimStudyConfig::new(l, k)
        }
    };
    if a.preset.is_some() {
        cfg.l = a.l.unwrap_or(cfg.l);
        cfg.k = a.k.unwrap_or(cfg.k);
    }
    if let Some(b) = a.b {
        cfg.b = b;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(e) = &a.effect {
        cfg.effect_law = parse_effect(e, a.per_study)?;
    } else if a.per_study {
        if let EffectLaw::Uniform { per_study, .. } = &mut cfg.effect_law {
            *per_study = true;
        }
    }
    if let Some(c) = &a.correlation {
        let (kind, rest) = c.split_once(':').unwrap_or((c, ""));
        cfg.correlation = match kind {
            "independent" => CorrelationSource::Independent,
            "random" => {
                let (rho, delta) = parse_pair(rest, "random correlation")?;
                CorrelationSource::Random { rho, delta }
            }
            "file" => CorrelationSource::Fixed(corr.clone().ok_or_else(|| Failure::usage("--correlation file needs --corr"))?),
            _ => return Err(Failure::usage(format!("unknown correlation source {kind:?}"))),
        };
    } else if a.preset.is_none() {
        if let Some(m) = &corr {
            cfg.correlation = CorrelationSource::Fixed(m.clone());
        }
    }
    if let Some(m) = &a.methods {
        cfg.methods = m
            .split(',')
            .map(|t| t.trim().parse::<Method>())
            .collect::<crate::Result<Vec<_>>>()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    if a.decorrelate {
        cfg.decorrelate = true;
    }
    if let Some(r) = a.ridge {
        cfg.ridge = Some(r);
    }
    if let Some(n) = a.null_resamples {
        cfg.null_resamples = n;
    }
    let report = run_study(&cfg)?;
    write_report(a.out.as_deref(), out, &report.to_csv())
}

fn cmd_ldmatrix(a: &LdMatrixArgs, out: &mut dyn Write) -> CliResult<()> {
    let table = HaplotypeTable::read_csv(&a.haplotypes)?;
    let r = ld_matrix_from_haplotypes(&table)?;
    std::fs::write(&a.out, r.to_csv()).map_err(|e| Failure { code: EXIT_DATA, message: format!("{}: {e}", a.out.display()) })?;
    writeln!(out, "wrote {}x{} LD matrix to {}", r.order(), r.order(), a.out.display()).map_err(io_failure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_formats() {
        assert_eq!(parse_values("0.1\n0.2\n# note\n\n0.3\n").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_values("0.7 0.07 0.15\n0.12\t0.08").unwrap(), vec![0.7, 0.07, 0.15, 0.12, 0.08]);
        assert_eq!(parse_values("SNP,Pval\nrs1,0.0007\nrs2,0.09 # x\n").unwrap(), vec![0.0007, 0.09]);
        assert_eq!(parse_values("rs1,0.5\n").unwrap(), vec![0.5]);
        assert!(parse_values("0.1\nabc\n").is_err());
        assert!(parse_values("rs1,0.1\nrs2,x\n").is_err());
        assert!(parse_values("# only comments\n").is_err());
    }

    #[test]
    fn effect_specs() {
        assert_eq!(parse_effect("constant:0.5", false).unwrap(), EffectLaw::Constant { mu: 0.5 });
        assert_eq!(
            parse_effect("uniform:-0.45,1.3", true).unwrap(),
            EffectLaw::Uniform { lo: -0.45, hi: 1.3, per_study: true }
        );
        assert!(parse_effect("sparse:0.05", false).is_err());
        assert!(parse_effect("normal:1", false).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["artcombine", "combine"], &mut o, &mut e), EXIT_USAGE);
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["artcombine", "simulate", "--preset", "nope"], &mut o, &mut e), EXIT_USAGE);
    }
}
