//! Command-line entry point. Every pipeline is exposed as a subcommand with
//! machine-readable CSV or JSON output; all randomness is controlled by
//! --seed. Exit codes: 0 success (or detect match), 1 detect found no match,
//! 2 any error.

use crate::bounds::{self, ball_bounds, ball_bruteforce, ball_center_upper};
use crate::error::{Error, Result};
use crate::imaging::{adjust, load_image, save_image, AdjustKind, BlockPlan};
use crate::metrics::PredicateParams;
use crate::pph::samp;
use crate::sim::{
    self, bench_block, bench_eval_scaling, empirical_error, fit_log_slope, list_size_curve,
    simulate_delta, TrialConfig,
};
use crate::store;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "l1pph",
    about = "Hash images to truncated sigma-polynomials and decide the asymmetric l1-distance predicate in the hash domain",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format for reports and tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Suppress progress lines on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Worker threads for database builds, scans, and trials (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct KeyParams {
    /// Flattened vector length n (width * height * channels).
    #[arg(long)]
    n: usize,

    /// Alphabet size.
    #[arg(long, default_value_t = 256)]
    q: u32,

    /// Whole-image threshold t; defaults to ceil(0.01 q n) rounded up to even.
    #[arg(long)]
    t: Option<u64>,

    /// One-sided threshold for the query-over-reference difference.
    #[arg(long)]
    t_plus: Option<u64>,

    /// One-sided threshold for the reference-over-query difference.
    #[arg(long)]
    t_minus: Option<u64>,

    /// Slack in the cofactor-degree test; false matches occur with rate
    /// about p^-delta.
    #[arg(long, default_value_t = 3)]
    delta: u64,

    /// Number of contiguous blocks the image is split into.
    #[arg(long, default_value_t = 1)]
    blocks: usize,

    /// RNG seed for key sampling.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl KeyParams {
    fn resolve(&self) -> Result<(PredicateParams, usize)> {
        let t = match self.t {
            Some(t) => t,
            None => {
                let raw = (0.01 * self.q as f64 * self.n as f64).ceil() as u64;
                raw + raw % 2
            }
        };
        let params = match (self.t_plus, self.t_minus) {
            (Some(tp), Some(tm)) => PredicateParams::new(t, tp, tm, self.delta)?,
            (None, None) => PredicateParams::symmetric(t, self.delta)?,
            _ => {
                return Err(Error::ParamsInvalid(
                    "give both --t-plus and --t-minus or neither".into(),
                ))
            }
        };
        Ok((params, self.blocks))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a hash key and write it as a key file.
    Keygen {
        #[command(flatten)]
        params: KeyParams,

        /// Output key file.
        #[arg(long)]
        out: PathBuf,
    },

    /// Hash an image into a digest file under an existing key.
    Hash {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },

    /// Alias of `hash`: produce the query digests for an image.
    Prepare {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },

    /// Hash every image in a directory into a database file.
    DbBuild {
        #[arg(long)]
        key: PathBuf,

        /// Directory of .pgm/.ppm images.
        #[arg(long)]
        dir: PathBuf,

        #[arg(long)]
        out: PathBuf,

        /// Skip images whose dimensions do not match the key instead of
        /// aborting.
        #[arg(long)]
        skip_mismatched: bool,

        /// Withhold the evaluation points from the database file; hashing
        /// then requires the key file.
        #[arg(long)]
        split_key: bool,
    },

    /// Scan a database for matches. Exit 0 on match, 1 on no match.
    Detect {
        #[arg(long)]
        db: PathBuf,

        /// Query digest file produced by `hash`/`prepare`.
        #[arg(long, conflicts_with = "image")]
        digest: Option<PathBuf>,

        /// Query image; hashed on the fly (requires the a-vector).
        #[arg(long)]
        image: Option<PathBuf>,

        /// Report every matching entry instead of stopping at the first.
        #[arg(long)]
        all: bool,

        /// Fraction of blocks that must match (1.0 = every block).
        #[arg(long, default_value_t = 1.0)]
        min_blocks: f64,
    },

    /// Print the compression-bound table.
    Bounds {
        /// Table preset; "paper" is the reference grid (q=256, gray/RGB
        /// 28..224 squares).
        #[arg(long, default_value = "paper")]
        preset: String,
    },

    /// Bounds and exact count for one l1-ball.
    Ball {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        t: u64,
    },

    /// Measure the false-match rate on distance-violating pairs against
    /// the p^-delta reference.
    SimulateDelta {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        q: u32,
        #[arg(long, default_value_t = 10)]
        t: u64,
        #[arg(long)]
        t_plus: Option<u64>,
        #[arg(long)]
        t_minus: Option<u64>,
        /// Comma-separated slack values to test.
        #[arg(long, default_value = "0,1,2,3", value_delimiter = ',')]
        deltas: Vec<u64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },

    /// Oracle pairwise error of an image directory over a sweep of t.
    EmpiricalError {
        #[arg(long)]
        dir: PathBuf,
        /// Comma-separated thresholds (even values).
        #[arg(long, value_delimiter = ',')]
        t_list: Vec<u64>,
        #[arg(long, default_value_t = 3)]
        delta: u64,
    },

    /// Wall-clock medians for the three kernels.
    Bench {
        /// "paper" for the per-block reference grid, "scaling" for the
        /// doubling-t eval grid with the fitted exponent.
        #[arg(long, default_value = "paper")]
        preset: String,
        #[arg(long, default_value_t = 11)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },

    /// log2 of the list-size lower bound over a grid.
    ListCurve {
        #[arg(long, default_value = "784,4096,16384,50176", value_delimiter = ',')]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 256)]
        q: u64,
        #[arg(long, default_value_t = 257)]
        t_from: u64,
        #[arg(long, default_value_t = 266)]
        t_to: u64,
    },

    /// Brightness/contrast transforms for distance experiments.
    Transform {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, value_enum)]
        kind: TransformKind,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TransformKind {
    Brightness,
    Contrast,
}

/// Runs the CLI; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with success codes
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.jobs > 0 {
        // ignore failure: the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn read_images_dir(dir: &Path) -> Result<Vec<(String, crate::imaging::Image)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm") | Some("ppm")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::ParseError(format!(
            "no .pgm/.ppm images in {}",
            dir.display()
        )));
    }
    paths
        .into_iter()
        .map(|p| {
            let id = p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((id, load_image(&fs::read(&p)?)?))
        })
        .collect()
}

fn emit<T: serde::Serialize>(format: Format, rows: &[T], csv_header: &str, csv_row: impl Fn(&T) -> String) {
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(rows).expect("serializable rows")
        ),
        Format::Csv => {
            println!("{csv_header}");
            for r in rows {
                println!("{}", csv_row(r));
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Keygen { params, out } => {
            let (pred, blocks) = params.resolve()?;
            let key = samp(params.seed, params.n, params.q, pred)?;
            let plan = BlockPlan::new(params.n, blocks, pred.t)?;
            store::block_params(&key, &plan)?;
            fs::write(out, store::save_key(&key, &plan))?;
            if !cli.quiet {
                eprintln!(
                    "key: p={} n={} q={} t={} t+={} t-={} delta={} B={} n_B={} t_B={}",
                    key.p,
                    key.n,
                    key.q,
                    pred.t,
                    pred.t_plus,
                    pred.t_minus,
                    pred.delta,
                    plan.b,
                    plan.n_b,
                    plan.t_b
                );
            }
            Ok(0)
        }

        Command::Hash { key, image, out } | Command::Prepare { key, image, out } => {
            let (k, plan) = store::load_key(&fs::read(key)?)?;
            let img = load_image(&fs::read(image)?)?;
            let digests = store::prepare(&k, &plan, &img)?;
            fs::write(out, store::save_digests(&k, &plan, &digests))?;
            Ok(0)
        }

        Command::DbBuild {
            key,
            dir,
            out,
            skip_mismatched,
            split_key,
        } => {
            let (k, plan) = store::load_key(&fs::read(key)?)?;
            let images = read_images_dir(dir)?;
            let (db, skipped) = store::setup(&k, &plan, &images, *skip_mismatched)?;
            for s in &skipped {
                eprintln!("skipped {s}");
            }
            fs::write(out, store::save(&db, !*split_key))?;
            if !cli.quiet {
                eprintln!("database: {} entries, {} skipped", db.entries.len(), skipped.len());
            }
            Ok(0)
        }

        Command::Detect {
            db,
            digest,
            image,
            all,
            min_blocks,
        } => {
            let database = store::load(&fs::read(db)?)?;
            let query = match (digest, image) {
                (Some(path), None) => {
                    store::load_digests(&fs::read(path)?, &database.key, &database.plan)?
                }
                (None, Some(path)) => {
                    let img = load_image(&fs::read(path)?)?;
                    store::prepare(&database.key, &database.plan, &img)?
                }
                _ => {
                    return Err(Error::ParamsInvalid(
                        "give exactly one of --digest or --image".into(),
                    ))
                }
            };
            let report = store::detect(&database, &query, *min_blocks, *all)?;
            match cli.format {
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("serializable report")
                ),
                Format::Csv => {
                    println!("matched,matched_id,scanned,blocks_hit");
                    let hit = report.per_block_bits.iter().filter(|&&b| b).count();
                    println!(
                        "{},{},{},{}",
                        report.matched as u8,
                        report.matched_id.as_deref().unwrap_or(""),
                        report.scanned,
                        hit
                    );
                }
            }
            Ok(if report.matched { 0 } else { 1 })
        }

        Command::Bounds { preset } => {
            if preset != "paper" {
                return Err(Error::ParamsInvalid(format!("unknown preset {preset}")));
            }
            let rows = bounds::paper_table()?;
            match cli.format {
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&rows).expect("serializable rows")
                ),
                Format::Csv => print!("{}", bounds::render_csv(&rows)),
            }
            Ok(0)
        }

        Command::Ball { n, q, t } => {
            let (lo, hi) = ball_bounds(*n, *q, *t);
            let center = if q % 2 == 0 {
                Some(ball_center_upper(*n, *q, *t)?)
            } else {
                None
            };
            let brute = if (*q as f64).powi(*n as i32) <= 1e6 {
                Some(ball_bruteforce(
                    *n as usize,
                    *q as u32,
                    *t,
                    &vec![0u32; *n as usize],
                )?)
            } else {
                None
            };
            println!("n,q,t,lower,upper,center_upper,bruteforce_at_zero");
            println!(
                "{n},{q},{t},{lo},{hi},{},{}",
                center.map(|c| c.to_string()).unwrap_or_default(),
                brute.map(|c| c.to_string()).unwrap_or_default()
            );
            Ok(0)
        }

        Command::SimulateDelta {
            n,
            q,
            t,
            t_plus,
            t_minus,
            deltas,
            trials,
            seed,
        } => {
            let mut rows = Vec::new();
            for &delta in deltas {
                let (tp, tm) = match (t_plus, t_minus) {
                    (Some(tp), Some(tm)) => (*tp, *tm),
                    _ => (t / 2, t - t / 2),
                };
                let cfg = TrialConfig {
                    n: *n,
                    q: *q,
                    t: *t,
                    t_plus: tp,
                    t_minus: tm,
                    delta,
                    trials: *trials,
                    seed: *seed,
                };
                if !cli.quiet {
                    eprintln!("delta={delta}: running {trials} trials");
                }
                rows.push(simulate_delta(&cfg)?);
            }
            emit(cli.format, &rows, "delta,p,trials,empirical,reference", |r| {
                format!(
                    "{},{},{},{},{}",
                    r.delta, r.p, r.trials, r.empirical, r.reference
                )
            });
            Ok(0)
        }

        Command::EmpiricalError { dir, t_list, delta } => {
            if t_list.is_empty() {
                return Err(Error::ParamsInvalid("give --t-list".into()));
            }
            let images = read_images_dir(dir)?;
            let corpus: Vec<_> = images.iter().map(|(_, img)| img.to_pixel_vector()).collect();
            #[derive(serde::Serialize)]
            struct Row {
                t: u64,
                err: f64,
            }
            let mut rows = Vec::new();
            for &t in t_list {
                let params = PredicateParams::symmetric(t, (*delta).min(t / 2))?;
                rows.push(Row {
                    t,
                    err: empirical_error(&corpus, &params)?,
                });
            }
            emit(cli.format, &rows, "t,err", |r| format!("{},{}", r.t, r.err));
            Ok(0)
        }

        Command::Bench { preset, reps, seed } => match preset.as_str() {
            "paper" => {
                let mut rows = Vec::new();
                for (size, color, b, n_b, t_b) in sim::paper_bench_grid() {
                    if !cli.quiet {
                        eprintln!("bench {size} {color} B={b}");
                    }
                    rows.push(bench_block(size, color, b, n_b, t_b, *reps, *seed)?);
                }
                emit(
                    cli.format,
                    &rows,
                    "size,color,B,n_B,t_B,time_sigma,time_inv,time_eval",
                    |r| {
                        format!(
                            "{},{},{},{},{},{:.6},{:.6},{:.6}",
                            r.size, r.color, r.b, r.n_b, r.t_b, r.time_sigma, r.time_inv, r.time_eval
                        )
                    },
                );
                Ok(0)
            }
            "scaling" => {
                let ts = [256u64, 512, 1024, 2048];
                let points = bench_eval_scaling(784, &ts, *reps, *seed)?;
                println!("t,time_eval");
                for (t, s) in &points {
                    println!("{t},{s:.6}");
                }
                println!("# fitted exponent: {:.3}", fit_log_slope(&points));
                Ok(0)
            }
            other => Err(Error::ParamsInvalid(format!("unknown preset {other}"))),
        },

        Command::ListCurve {
            n_grid,
            q,
            t_from,
            t_to,
        } => {
            let rows = list_size_curve(n_grid, *q, *t_from..=*t_to)?;
            println!("n,t,log2_size");
            for (n, t, l) in rows {
                println!("{n},{t},{l:.3}");
            }
            Ok(0)
        }

        Command::Transform {
            image,
            kind,
            epsilon,
            out,
        } => {
            if *epsilon < 0.0 {
                return Err(Error::ParamsInvalid("epsilon must be nonnegative".into()));
            }
            let img = load_image(&fs::read(image)?)?;
            let kind = match kind {
                TransformKind::Brightness => AdjustKind::Brightness,
                TransformKind::Contrast => AdjustKind::Contrast,
            };
            fs::write(out, save_image(&adjust(&img, kind, *epsilon)))?;
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{scheme_digest_bits, DigestSizeMode};

    #[test]
    fn keyparams_default_t_is_even_operating_point() {
        let kp = KeyParams {
            n: 784,
            q: 256,
            t: None,
            t_plus: None,
            t_minus: None,
            delta: 3,
            blocks: 1,
            seed: 1,
        };
        let (p, _) = kp.resolve().unwrap();
        // ceil(0.01 * 256 * 784) = 2008, already even
        assert_eq!(p.t, 2008);
        assert_eq!(p.t_plus, 1004);
    }

    #[test]
    fn usage_error_exits_2() {
        assert_eq!(run(["l1pph", "no-such-command"]), 2);
        // t_plus without t_minus is a usage error
        assert_eq!(
            run([
                "l1pph", "keygen", "--n", "16", "--t", "10", "--t-plus", "7", "--out",
                "/dev/null"
            ]),
            2
        );
    }

    #[test]
    fn scheme_digest_helper_reachable() {
        // keep the exact-mode path exercised from the CLI crate too
        assert_eq!(scheme_digest_bits(784, 78, DigestSizeMode::Exact), 790);
    }
}
