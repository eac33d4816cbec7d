//! `primegrid` — build, check, and probe the coprime-barrier construction.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 usage or malformed input,
//! 3 precision shortfall or partial results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use primegrid::error::Error;
use primegrid::grid::{erdos_min_box_u64, gcd_table, grid_certificate, solve_crt_pair};
use primegrid::rng::SplitMix64;
use primegrid::scan::{coprime_scan, render_report_text, certified_margin};
use primegrid::state::{BuildParams, ConstructionState};
use primegrid::{arrange_primes, certified_digits, PermutationPolicy, WPolicy};

const EXIT_INVARIANT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PRECISION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "primegrid",
    about = "Coprime-barrier construction: prime grids, a scheduled continued fraction, and certified scans",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PermChoice {
    Canonical,
    Seeded,
}

#[derive(Subcommand)]
enum Command {
    /// Build a construction state and write it as canonical JSON.
    Build {
        /// Number of continued-fraction levels to construct (at least 2).
        #[arg(long, default_value_t = 14)]
        depth: usize,
        /// Growth factors for the quotient schedule, e.g. "k+5".
        #[arg(long = "w-policy", default_value = "k+5")]
        w_policy: String,
        /// How primes are arranged within each shell.
        #[arg(long, value_enum, default_value_t = PermChoice::Canonical)]
        perm: PermChoice,
        /// Seed for the seeded arrangement (ignored for canonical).
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output path; defaults to state.json in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run every construction law against a state file.
    Check {
        state: PathBuf,
    },
    /// Scan q·|qα - η - r| over a q range and report certified extremes.
    Scan {
        state: PathBuf,
        /// Smallest q scanned (the certified margin speaks from 101 up).
        #[arg(long, default_value_t = 101)]
        qmin: u64,
        /// Largest q scanned.
        #[arg(long, default_value_t = 100_000)]
        qmax: u64,
        /// Worker threads; the report is identical for any value.
        #[arg(long, default_value_t = 8)]
        jobs: usize,
        /// Output directory for report.json / report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the gcd table of the translated grid at shell k.
    ErdosGrid {
        /// Shell index k (table spans |i|,|j| ≤ k).
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = PermChoice::Canonical)]
        perm: PermChoice,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Sample random pairs and report the minimal coprime box statistics.
    ErdosB {
        /// Number of sampled pairs.
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        /// Samples are drawn from 1..=max, then ordered.
        #[arg(long, default_value_t = 1_000_000)]
        max: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Search cap on the box size.
        #[arg(long, default_value_t = 64)]
        tmax: u64,
        /// Optional path for a JSON distribution report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit certified decimal digits of α and η from a state file.
    Digits {
        state: PathBuf,
        /// Number of guaranteed fractional digits.
        #[arg(long, default_value_t = 30)]
        digits: usize,
    },
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("PRIMEGRID_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ConstructionSoundness { .. } => EXIT_INVARIANT,
        Error::Precision(_) | Error::DepthExhausted { .. } => EXIT_PRECISION,
        _ => EXIT_USAGE,
    }
}

fn perm_policy(perm: PermChoice, seed: u64) -> PermutationPolicy {
    match perm {
        PermChoice::Canonical => PermutationPolicy::Canonical,
        PermChoice::Seeded => PermutationPolicy::Seeded { seed },
    }
}

fn load_state(path: &Path) -> Result<ConstructionState, Error> {
    ConstructionState::load(path)
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Build {
            depth,
            w_policy,
            perm,
            seed,
            out,
        } => {
            let params = BuildParams::new(depth, WPolicy::parse(&w_policy)?, perm_policy(perm, seed));
            let state = ConstructionState::build(params)?;
            let log = state.check();
            if !log.all_passed() {
                print!("{}", log.render_text());
                let failure = log.first_failure().expect("a failing line exists");
                eprintln!("build aborted: {} failed — {}", failure.law, failure.detail);
                return Ok(EXIT_INVARIANT);
            }
            let path = out.unwrap_or_else(|| out_dir(None).join("state.json"));
            state.save(&path)?;
            println!(
                "built depth {} (max shell {}), all checks passed, wrote {}",
                state.depth(),
                state.max_shell(),
                path.display()
            );
            Ok(0)
        }
        Command::Check { state } => {
            let state = load_state(&state)?;
            let log = state.check();
            print!("{}", log.render_text());
            if log.all_passed() {
                println!("all checks passed");
                Ok(0)
            } else {
                let failure = log.first_failure().expect("a failing line exists");
                eprintln!("check failed: {} — {}", failure.law, failure.detail);
                Ok(EXIT_INVARIANT)
            }
        }
        Command::Scan {
            state,
            qmin,
            qmax,
            jobs,
            out,
        } => {
            if qmin < 2 || qmax < qmin || qmax < 101 {
                eprintln!("usage: need 2 ≤ qmin ≤ qmax and qmax ≥ 101");
                return Ok(EXIT_USAGE);
            }
            let state = load_state(&state)?;
            let deepened = state.deepened_for_scan(qmax)?;
            if deepened.depth() != state.depth() {
                eprintln!(
                    "state deepened from {} to {} levels for this range",
                    state.depth(),
                    deepened.depth()
                );
            }
            let report = coprime_scan(&deepened.ctx(), &deepened.levels, qmin, qmax, jobs)?;
            let dir = out_dir(out);
            std::fs::create_dir_all(&dir)?;
            let json_path = dir.join("report.json");
            let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
            json.push('\n');
            std::fs::write(&json_path, json)?;
            let text = render_report_text(&report);
            std::fs::write(dir.join("report.txt"), &text)?;
            print!("{text}");
            println!("wrote {} and report.txt", json_path.display());
            if report.is_partial() {
                eprintln!("partial report: {} unresolved q values", report.unresolved.len());
                return Ok(EXIT_PRECISION);
            }
            let margin = certified_margin(&report)?;
            println!(
                "margin positive: c_hat_lower = {} at q={}",
                margin.c_hat_lower, margin.attained.q
            );
            Ok(0)
        }
        Command::ErdosGrid { depth, perm, seed } => {
            let arr = arrange_primes(depth, perm_policy(perm, seed));
            let pair = solve_crt_pair(&arr, depth)?;
            let cert = grid_certificate(&arr, &pair)?;
            print!("{}", gcd_table(&pair, depth as i64));
            println!(
                "certificate: {} witnesses, every gcd in the box exceeds 1",
                cert.entries.len()
            );
            Ok(0)
        }
        Command::ErdosB {
            samples,
            max,
            seed,
            tmax,
            out,
        } => {
            let mut rng = SplitMix64::new(seed);
            let mut histogram: Vec<u64> = Vec::new();
            let mut worst = 0u64;
            for _ in 0..samples {
                let a = 1 + rng.below(max);
                let b = 1 + rng.below(max);
                let (x, y) = if a <= b { (a, b) } else { (b, a) };
                let found = erdos_min_box_u64(x, y, tmax)?;
                if histogram.len() <= found.t as usize {
                    histogram.resize(found.t as usize + 1, 0);
                }
                histogram[found.t as usize] += 1;
                worst = worst.max(found.t);
            }
            println!("minimal coprime box over {samples} pairs (x ≤ y ≤ {max}, seed {seed}):");
            for (t, count) in histogram.iter().enumerate() {
                println!("  t = {t}: {count}");
            }
            println!("largest box needed: t = {worst}");
            if let Some(path) = out {
                let payload = serde_json::json!({
                    "samples": samples,
                    "max": max,
                    "seed": seed,
                    "histogram": histogram,
                    "worst": worst,
                });
                let mut body = serde_json::to_string_pretty(&payload).expect("serializes");
                body.push('\n');
                std::fs::write(path, body)?;
            }
            Ok(0)
        }
        Command::Digits { state, digits } => {
            let state = load_state(&state)?;
            let result = certified_digits(&state.ctx(), &state.levels, digits)?;
            println!("alpha = {} (depth {})", result.alpha, result.alpha_depth);
            println!("eta   = {} (level {})", result.eta, result.eta_level);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
