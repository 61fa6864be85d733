//! Command-line interface. Every subcommand writes one JSON (or CSV) document;
//! exit code 0 on success, 1 on a domain failure, 2 on usage or I/O errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::admissibility::classify_admissibility;
use crate::builder::build_ntf_traced;
use crate::error::Error;
use crate::fiber::{count_components, exact_fiber_special};
use crate::grassmann::Frame;
use crate::hypersimplex::{parse_vector, DiagonalTarget};
use crate::path::{
    certify_equal_norm, certify_target, reduction_sequence, verify_certificate,
    ConnectivityCertificate,
};
use crate::polygon::{frame_km_criterion, frame_to_polygon, km_disconnected};
use crate::strata::{enumerate_feasible_strata, enumerate_strata, verify_no_codim_one, StratumCandidate};
use crate::tol::{LINK_TOL, TOL_PATH};

#[derive(Debug, Parser)]
#[command(name = "frametop", version, about = "Tight frames with prescribed norms: admissibility, certificates, fibers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the output here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A target given inline (`--d 1,1/3,1/3,1/3 --k 2`) or as a JSON file
/// `{"d": [...], "k": 2}`.
#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Comma separated entries; fractions `a/b` allowed.
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// JSON file holding a target.
    #[arg(long, conflicts_with = "d")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hypersimplex membership, the subset-sum hypothesis and the verdict.
    Check(TargetArgs),
    /// A frame with the prescribed column norms.
    Build(TargetArgs),
    /// A verified connectivity certificate.
    Certify {
        #[command(flatten)]
        target: TargetArgs,
        /// Equal-norm target of size N and rank K instead of `--d`.
        #[arg(long, num_args = 2, value_names = ["N", "K"], conflicts_with_all = ["d", "input"])]
        equal_norm: Option<Vec<usize>>,
        #[arg(long, default_value_t = TOL_PATH)]
        tol: f64,
    },
    /// Re-checks a certificate file.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = TOL_PATH)]
        tol: f64,
    },
    /// Samples the fiber of the diagonal map and estimates its components.
    Fiber {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 150)]
        samples: usize,
        #[arg(long, default_value_t = LINK_TOL)]
        link_tol: f64,
        #[arg(long, default_value_t = 200)]
        path_budget: usize,
    },
    /// Critical-stratum candidates (CSV by default).
    Strata {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        max_blocks: Option<usize>,
        /// Only list feasible candidates (pruned search).
        #[arg(long)]
        feasible_only: bool,
    },
    /// The closed polygon of a rank-two frame (built from `--d`, or read from
    /// `--frame`).
    Polygon {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, conflicts_with_all = ["d", "input"])]
        frame: Option<PathBuf>,
    },
    /// The reduction sequence used by the equal-norm recursion.
    Reduce {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Parse(_)) { 2 } else { 1 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Output document and whether the run counts as a success.
pub struct Output {
    pub body: String,
    pub ok: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

impl TargetArgs {
    fn load(&self) -> Result<DiagonalTarget, CliError> {
        if let Some(path) = &self.input {
            let mut t: DiagonalTarget = parse_json(path)?;
            if let Some(k) = self.k {
                t = DiagonalTarget::new(k, t.d).map_err(|e| CliError::usage(e.to_string()))?;
            }
            return Ok(t);
        }
        let (Some(d), Some(k)) = (&self.d, self.k) else {
            return Err(CliError::usage("give --d and --k, or --input"));
        };
        let v = parse_vector(d).map_err(|e| CliError::usage(e.to_string()))?;
        DiagonalTarget::new(k, v).map_err(|e| CliError::usage(e.to_string()))
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn check(t: &DiagonalTarget) -> Result<Output, CliError> {
    let member = t.in_hypersimplex();
    let mut report = json!({
        "d": t.d,
        "k": t.k,
        "n": t.n,
        "hypersimplex": member,
    });
    if member {
        let verdict = classify_admissibility(t)?;
        report["hypothesis"] = json!(t.satisfies_hypothesis()?);
        report["verdict"] = json!(verdict.status);
        report["rule"] = json!(verdict.rule);
        report["witness"] = json!(verdict.witness);
        if t.k == 2 {
            report["km_criterion"] = json!(frame_km_criterion(t)?);
        }
    }
    Ok(Output {
        body: to_json(&report),
        ok: true,
    })
}

fn certify(cert: ConnectivityCertificate, tol: f64) -> Output {
    let report = verify_certificate(&cert, tol);
    let ok = report.passed;
    let cert = ConnectivityCertificate {
        report: Some(report),
        ..cert
    };
    Output {
        body: to_json(&cert),
        ok,
    }
}

fn strata_csv(t: &DiagonalTarget, rows: &[StratumCandidate]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::usage(e.to_string());
    w.write_record(["blocks", "m", "c", "b", "feasible", "level_codims", "codim_one"])
        .map_err(io)?;
    let join = |v: Vec<String>, sep: &str| v.join(sep);
    for s in rows {
        let blocks = join(
            s.block_entries(t)
                .iter()
                .map(|b| join(b.iter().map(|x| format!("{x}")).collect(), " "))
                .collect(),
            "|",
        );
        w.write_record([
            blocks,
            join(s.m.iter().map(|x| x.to_string()).collect(), " "),
            join(s.c.iter().map(|x| x.to_string()).collect(), " "),
            join(s.b.iter().map(|x| format!("{x}")).collect(), " "),
            s.feasible.to_string(),
            join(s.level_codims.iter().map(|x| x.to_string()).collect(), " "),
            s.witness_r.is_some().to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Runs one parsed invocation and returns the document to emit.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Check(args) => check(&args.load()?),
        Command::Build(args) => {
            let t = args.load()?;
            let built = build_ntf_traced(&t)?;
            let body = json!({
                "d": t.d,
                "k": t.k,
                "frame": built.frame,
                "rotations": built.rotations,
                "tight_residual": built.frame.tight_residual(),
                "norm_residual": built.frame.norm_residual(&t.d),
            });
            Ok(Output {
                body: to_json(&body),
                ok: true,
            })
        }
        Command::Certify {
            target,
            equal_norm,
            tol,
        } => {
            let cert = match equal_norm.as_deref() {
                Some([n, k]) => certify_equal_norm(*n, *k)?,
                Some(_) => return Err(CliError::usage("--equal-norm takes N K")),
                None => certify_target(&target.load()?)?,
            };
            Ok(certify(cert, *tol))
        }
        Command::Verify { input, tol } => {
            let cert: ConnectivityCertificate = parse_json(input)?;
            let report = verify_certificate(&cert, *tol);
            Ok(Output {
                ok: report.passed,
                body: to_json(&report),
            })
        }
        Command::Fiber {
            target,
            samples,
            link_tol,
            path_budget,
        } => {
            let t = target.load()?;
            let est = count_components(&t, *samples, *link_tol, *path_budget, cli.seed)?;
            let mut body = serde_json::to_value(&est).expect("serializable");
            if let Some(points) = exact_fiber_special(&t) {
                body["exact"] = json!(points);
            }
            Ok(Output {
                body: to_json(&body),
                ok: true,
            })
        }
        Command::Strata {
            target,
            max_blocks,
            feasible_only,
        } => {
            let t = target.load()?;
            let max_blocks = max_blocks.unwrap_or(t.n);
            let rows = if *feasible_only {
                enumerate_feasible_strata(&t, max_blocks)?
            } else {
                enumerate_strata(&t, max_blocks)?
            };
            let body = match cli.format {
                Format::Csv => strata_csv(&t, &rows)?,
                Format::Json => {
                    let (no_codim_one, witness) = verify_no_codim_one(&t)?;
                    to_json(&json!({
                        "d": t.d,
                        "k": t.k,
                        "candidates": rows,
                        "no_codim_one": no_codim_one,
                        "witness": witness,
                    }))
                }
            };
            Ok(Output { body, ok: true })
        }
        Command::Polygon { target, frame } => {
            let f: Frame = match frame {
                Some(path) => parse_json(path)?,
                None => {
                    let t = target.load()?;
                    if t.k != 2 {
                        return Err(Error::NotRankTwo(t.k).into());
                    }
                    build_ntf_traced(&t)?.frame
                }
            };
            let poly = frame_to_polygon(&f)?;
            let body = json!({
                "edges": poly.edges,
                "r": poly.r,
                "closure_residual": poly.closure_residual(),
                "km_disconnected": km_disconnected(&poly.r)?,
            });
            Ok(Output {
                body: to_json(&body),
                ok: true,
            })
        }
        Command::Reduce { n, k } => {
            let seq = reduction_sequence(*n, *k)?;
            let text: Vec<String> = seq.iter().map(|(a, b)| format!("({a},{b})")).collect();
            Ok(Output {
                body: format!("{}\n", text.join(" ")),
                ok: true,
            })
        }
    }
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Parses the environment, runs, emits, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = std::env::var("FRAMETOP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    match execute(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => write_atomic(path, &out.body),
                None => std::io::stdout().write_all(out.body.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 2;
            }
            if out.ok {
                0
            } else {
                eprintln!("error: verification failed");
                1
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
