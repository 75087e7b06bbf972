//! Batch front end over the fockpoint library: verification suites,
//! point-process sampling, correlation estimation, matrix functions, exact
//! spectral laws, and matrix-function timing.
//!
//! Exit codes: 0 all checks passed, 1 at least one check failed,
//! 2 validation/usage failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use fockpoint::ground::{GroundSet, Region};
use fockpoint::matfn::{det2, hafnian, matrix_from_json, permanent};
use fockpoint::moments::{inclusion_exclusion_law, joint_spectral_law, representation_for_order};
use fockpoint::rep::{RepKind, RepresentationSpec};
use fockpoint::sampling::{estimate_correlations, sample_point_process, SampleBatch};
use fockpoint::verify::{det2_cross_check, run_random_suite, run_verify, VerifyOptions};
use fockpoint::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fockpoint",
    version,
    about = "Finite-window quasi-free representations and their point processes"
)]
struct Cli {
    /// Worker threads (0 = automatic). Results never depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Relative tolerance override for verification comparisons
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Absolute tolerance override for roundoff-exact identities
    #[arg(long, global = true)]
    atol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the named check suite for a spec file, seeded random instances,
    /// or a det₂ kernel cross-check; emits a JSON report
    Verify {
        /// Representation spec JSON file
        #[arg(long, conflicts_with_all = ["kind", "det2_kernel"])]
        rep: Option<PathBuf>,
        /// Random-suite mode: car_hermitian | car_jhermitian | ccr_poisson |
        /// ccr_permanental | ccr_hafnian
        #[arg(long, conflicts_with = "det2_kernel")]
        kind: Option<String>,
        /// Number of random instances in random-suite mode
        #[arg(long, default_value_t = 20)]
        instances: usize,
        /// Largest site count in random-suite mode (cycles 2..=sites)
        #[arg(long, default_value_t = 4)]
        sites: usize,
        /// det₂ cross-check mode: real symmetric PSD kernel matrix JSON
        #[arg(long)]
        det2_kernel: Option<PathBuf>,
        /// Moment orders to verify
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3])]
        orders: Vec<usize>,
        /// Top even field-moment order (0 disables the field layer)
        #[arg(long, default_value_t = 4)]
        field_order: usize,
        /// Base seed for random-suite mode (default: FOCKPOINT_SEED or 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Report path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw replicated configurations from a spec's point process (CSV)
    Sample {
        /// Representation spec JSON file
        #[arg(long)]
        rep: PathBuf,
        /// Seed (default: FOCKPOINT_SEED or 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Number of replicas
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// CSV path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate a correlation measure from a sample CSV
    Estimate {
        /// Sample CSV produced by `sample`
        #[arg(long)]
        samples: PathBuf,
        /// Boxes as a JSON array of site-index arrays, e.g. [[0,1],[2]]
        #[arg(long)]
        boxes: String,
        /// Correlation order n (must equal the number of boxes)
        #[arg(long)]
        order: usize,
        /// JSON output path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a matrix function on a matrix JSON file
    Matfn {
        /// per | haf | det2
        #[arg(long)]
        func: String,
        /// Matrix JSON file
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Exact joint law of site occupations for a fermionic spec
    Spectral {
        /// Representation spec JSON file
        #[arg(long)]
        rep: PathBuf,
        /// JSON output path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time permanent/hafnian evaluation across sizes; emits CSV
    Bench {
        #[arg(long, default_value_t = 2)]
        min_size: usize,
        #[arg(long, default_value_t = 20)]
        max_size: usize,
        /// Timing repetitions per size (best is reported)
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// CSV path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("fockpoint: {}", e);
            return ExitCode::from(2);
        }
    };
    let outcome = pool.install(|| dispatch(&cli));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fockpoint: {}", e);
            ExitCode::from(2)
        }
    }
}

fn default_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("FOCKPOINT_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|e| Error::Validation(format!("FOCKPOINT_SEED is not a u64: {}", e))),
        Err(_) => Ok(0),
    }
}

fn read_file(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {}", path.display(), e)))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Validation(format!("cannot write {}: {}", path.display(), e))),
        None => {
            println!("{}", text);
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Verify {
            rep,
            kind,
            instances,
            sites,
            det2_kernel,
            orders,
            field_order,
            seed,
            out,
        } => {
            let mut opts = VerifyOptions {
                orders: orders.clone(),
                field_order: *field_order,
                ..VerifyOptions::default()
            };
            if let Some(r) = cli.rtol {
                opts.rtol = r;
            }
            if let Some(a) = cli.atol {
                opts.atol = a;
            }
            let report = if let Some(path) = det2_kernel {
                let kernel = matrix_from_json(&read_file(path)?)?;
                let ground = GroundSet::new(vec![1.0; kernel.nrows()])?;
                det2_cross_check(ground, &kernel, &opts.orders, opts.rtol)?
            } else if let Some(path) = rep {
                let spec = RepresentationSpec::from_json(&read_file(path)?)?;
                run_verify(&spec, &opts)?
            } else if let Some(name) = kind {
                let kind = RepKind::from_name(name)?;
                let seed = default_seed(*seed)?;
                run_random_suite(kind, *instances, *sites, seed, &opts)?
            } else {
                return Err(Error::Domain(
                    "verify needs one of --rep, --kind, or --det2-kernel".into(),
                ));
            };
            emit(out, &report.to_json()?)?;
            let failed = report.checks.iter().filter(|c| !c.pass).count();
            eprintln!(
                "fockpoint verify: {}/{} checks passed",
                report.checks.len() - failed,
                report.checks.len()
            );
            Ok(report.passed)
        }
        Command::Sample { rep, seed, count, out } => {
            let spec = RepresentationSpec::from_json(&read_file(rep)?)?;
            let seed = default_seed(*seed)?;
            let batch = sample_point_process(&spec, seed, *count)?;
            emit(out, batch.to_csv().trim_end())?;
            Ok(true)
        }
        Command::Estimate { samples, boxes, order, out } => {
            let text = read_file(samples)?;
            let header = text
                .lines()
                .next()
                .ok_or_else(|| Error::Validation("sample CSV is empty".into()))?;
            let m = header.split(',').count().saturating_sub(1);
            if m == 0 {
                return Err(Error::Validation("sample CSV has no count columns".into()));
            }
            let ground = GroundSet::new(vec![1.0; m])?;
            let batch = SampleBatch::from_csv(&text, ground, 0)?;
            let site_lists: Vec<Vec<usize>> = serde_json::from_str(boxes)
                .map_err(|e| Error::Validation(format!("bad --boxes JSON: {}", e)))?;
            for list in &site_lists {
                if let Some(&bad) = list.iter().find(|&&s| s >= m) {
                    return Err(Error::Domain(format!(
                        "box site {} out of range for {} sites",
                        bad, m
                    )));
                }
            }
            let regions: Vec<Region> =
                site_lists.iter().map(|l| Region::from_sites(l.iter().copied())).collect();
            let (estimate, stderr) = estimate_correlations(&batch, &regions, *order)?;
            let payload = serde_json::json!({
                "order": order,
                "boxes": site_lists,
                "replicas": batch.len(),
                "estimate": estimate,
                "stderr": stderr,
            });
            emit(
                out,
                &serde_json::to_string_pretty(&payload)
                    .map_err(|e| Error::Validation(e.to_string()))?,
            )?;
            Ok(true)
        }
        Command::Matfn { func, matrix } => {
            let mat = matrix_from_json(&read_file(matrix)?)?;
            let value: C64 = match func.as_str() {
                "per" => permanent(&mat)?,
                "haf" => hafnian(&mat)?,
                "det2" => det2(&mat)?,
                other => {
                    return Err(Error::Domain(format!(
                        "unknown matrix function '{}' (expected per | haf | det2)",
                        other
                    )));
                }
            };
            println!("{:.16e} {:.16e}", value.re, value.im);
            Ok(true)
        }
        Command::Spectral { rep, out } => {
            let spec = RepresentationSpec::from_json(&read_file(rep)?)?;
            let law = joint_spectral_law(&representation_for_order(&spec, 1, 0)?)?;
            let oracle = inclusion_exclusion_law(&spec)?;
            let tv = law.total_variation(&oracle);
            let m = law.num_sites();
            let entries: Vec<serde_json::Value> = (0..(1usize << m))
                .map(|mask| {
                    let sites: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
                    serde_json::json!({ "sites": sites, "probability": law.table()[mask] })
                })
                .collect();
            let payload = serde_json::json!({
                "kind": spec.kind().name(),
                "probabilities": entries,
                "total": law.total(),
                "tv_vs_inclusion_exclusion": tv,
            });
            emit(
                out,
                &serde_json::to_string_pretty(&payload)
                    .map_err(|e| Error::Validation(e.to_string()))?,
            )?;
            Ok(tv <= 1e-8)
        }
        Command::Bench { min_size, max_size, repeats, out } => {
            if *min_size < 2 || *max_size > 20 || min_size > max_size || *repeats == 0 {
                return Err(Error::Domain(
                    "bench sizes must satisfy 2 ≤ min ≤ max ≤ 20 with repeats ≥ 1".into(),
                ));
            }
            let mut csv = String::from("size,permanent_seconds,hafnian_seconds\n");
            let mut rng = ChaCha12Rng::seed_from_u64(0xBE7C);
            for n in *min_size..=*max_size {
                let a = fockpoint::CMat::from_shape_fn((n, n), |_| {
                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                });
                let per_secs = best_time(*repeats, || {
                    permanent(&a).map(|_| ())
                })?;
                let haf_field = if n % 2 == 0 {
                    let sym = {
                        let mut s = a.clone();
                        for i in 0..n {
                            for j in 0..n {
                                s[[i, j]] = (a[[i, j]] + a[[j, i]]) * 0.5;
                            }
                        }
                        s
                    };
                    format!("{:.6e}", best_time(*repeats, || hafnian(&sym).map(|_| ()))?)
                } else {
                    String::new()
                };
                csv.push_str(&format!("{},{:.6e},{}\n", n, per_secs, haf_field));
            }
            emit(out, csv.trim_end())?;
            Ok(true)
        }
    }
}

fn best_time(repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats {
        let start = Instant::now();
        f()?;
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}
