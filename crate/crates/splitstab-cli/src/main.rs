//! Command-line front end: parses problem files, dispatches to the
//! certifier, solver, and probe, and reports results.
//!
//! Exit codes are the machine contract: 0 = Lipschitz-like (or a
//! successfully completed non-analyze command), 3 = not Lipschitz-like,
//! 4 = inconclusive, 2 = any error, 1 = probe inconsistency under `--ci`.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use splitstab::certify::{certify, ProblemInstance, Verdict};
use splitstab::nalgebra::DVector;
use splitstab::probe::{estimate_modulus, ProbeConsistency};
use splitstab::solver::{solve_alternating, ProblemData};
use splitstab_cli::{report, schema};
use std::path::PathBuf;
use std::process::ExitCode;

/// Default probe seed; override with --seed or the SPLITSTAB_SEED
/// environment variable.
const DEFAULT_PROBE_SEED: u64 = 19;

#[derive(Parser)]
#[command(
    name = "splitstab",
    version,
    about = "Lipschitz-like stability certification for split equality (NSEP) and split feasibility (NSFP) problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the solution map's Lipschitz-likeness at the reference point
    /// (exit 0 = Lipschitz-like, 3 = not, 4 = inconclusive, 2 = error).
    Analyze {
        file: PathBuf,
        /// Emit the versioned JSON report instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Print the limiting normal cone of C or Q at a given point.
    NormalCone {
        file: PathBuf,
        /// Which constraint set to use.
        #[arg(long, value_enum)]
        set: WhichSet,
        /// The point, comma-separated: --at 1,1
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
    },
    /// Find a feasible point by alternating projections.
    Solve {
        file: PathBuf,
        /// Start point, comma-separated; defaults to the reference point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        /// Emit the JSON report instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Estimate the empirical local modulus and compare it with the
    /// certified verdict.
    Probe {
        file: PathBuf,
        /// Decreasing radii, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-1, 1e-2, 1e-3])]
        radii: Vec<f64>,
        /// Parameter pairs per radius.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// RNG seed (also settable via SPLITSTAB_SEED).
        #[arg(long)]
        seed: Option<u64>,
        /// Exit nonzero when the probe contradicts the certified verdict.
        #[arg(long)]
        ci: bool,
        /// Emit the JSON report instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichSet {
    C,
    Q,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Analyze { file, json } => {
            let instance = load(&file)?;
            let verdict = certify(&instance)?;
            let rep = report::AnalyzeReport::new(instance.kind_name(), &verdict)?;
            if json {
                println!("{}", report::to_json_string(&rep)?);
            } else {
                print_analyze(&rep);
            }
            Ok(match verdict.verdict {
                Verdict::LipschitzLike => 0,
                Verdict::NotLipschitzLike => 3,
                Verdict::Inconclusive => 4,
            })
        }
        Command::NormalCone { file, set, at } => {
            let instance = load(&file)?;
            let (set_ref, name) = match (&instance, set) {
                (ProblemInstance::Nsep(p), WhichSet::C) => (&p.set_c, "C"),
                (ProblemInstance::Nsep(p), WhichSet::Q) => (&p.set_q, "Q"),
                (ProblemInstance::Nsfp(p), WhichSet::C) => (&p.set_c, "C"),
                (ProblemInstance::Nsfp(p), WhichSet::Q) => (&p.set_q, "Q"),
            };
            let point = DVector::from_row_slice(&at);
            let cone = set_ref.normal_cone(&point)?;
            let rep = report::ConeReport::from_cone(&cone)?;
            println!("normal cone of {name} at {}:", fmt_vec(&at));
            println!("  {}", rep.classification);
            print_matrix("E", &rep.e);
            print_matrix("G", &rep.g);
            print_matrix("L", &rep.l);
            Ok(0)
        }
        Command::Solve {
            file,
            start,
            tol,
            max_iter,
            json,
        } => {
            let instance = load(&file)?;
            let data: ProblemData = (&instance).into();
            let start = match start {
                Some(s) => DVector::from_row_slice(&s),
                None => instance.reference_unknown(),
            };
            let solved = solve_alternating(&data, &start, max_iter, tol)?;
            let rep = report::SolveJsonReport::new(&solved);
            if json {
                println!("{}", report::to_json_string(&rep)?);
            } else {
                println!("converged: {}", solved.converged);
                println!("iterations: {}", solved.iterations);
                println!("residual: {:.3e}", solved.residual);
                println!("point: {}", fmt_vec(&rep.point));
            }
            Ok(0)
        }
        Command::Probe {
            file,
            radii,
            samples,
            seed,
            ci,
            json,
        } => {
            let instance = load(&file)?;
            let seed = seed.or_else(env_seed).unwrap_or(DEFAULT_PROBE_SEED);
            let verdict = certify(&instance)?;
            let estimate = estimate_modulus(&instance, &radii, samples, seed)?;
            let rep = report::ProbeJsonReport::new(&estimate, verdict.verdict);
            if json {
                println!("{}", report::to_json_string(&rep)?);
            } else {
                print_probe(&rep);
            }
            if ci && rep.consistency == ProbeConsistency::Inconsistent {
                return Ok(1);
            }
            Ok(0)
        }
    }
}

fn load(path: &PathBuf) -> Result<ProblemInstance> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    schema::parse_problem(&text).with_context(|| format!("parsing {}", path.display()))
}

fn env_seed() -> Option<u64> {
    std::env::var("SPLITSTAB_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

fn print_matrix(name: &str, rows: &[Vec<f64>]) {
    if rows.is_empty() || rows[0].is_empty() {
        println!("  {name}: (empty)");
        return;
    }
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>10.4}")).collect();
        if i == 0 {
            println!("  {name}: [{}]", cells.join(" "));
        } else {
            println!("  {}  [{}]", " ".repeat(name.len()), cells.join(" "));
        }
    }
}

fn print_analyze(rep: &report::AnalyzeReport) {
    let verdict = match rep.verdict {
        Verdict::LipschitzLike => "LipschitzLike",
        Verdict::NotLipschitzLike => "NotLipschitzLike",
        Verdict::Inconclusive => "Inconclusive",
    };
    println!("verdict: {verdict}");
    println!(
        "regularity condition (intersection cone trivial): {}",
        if rep.condition_holds {
            "holds"
        } else {
            "violated"
        }
    );
    println!("reference point max-norm: {}", rep.reference_norm);
    if let Some(w) = &rep.witness {
        println!("witness (nonzero cone element): {}", fmt_vec(w));
    }
    println!("cone trace:");
    println!(
        "  N(x; C):            {}",
        rep.trace.normal_cone_c.classification
    );
    println!(
        "  N(.; Q):            {}",
        rep.trace.normal_cone_q.classification
    );
    println!(
        "  (A^T)^-1(-N(x; C)): {}",
        rep.trace.preimage_c.classification
    );
    if let Some(pq) = &rep.trace.preimage_q {
        println!("  (B^T)^-1(N(y; Q)):  {}", pq.classification);
    }
    println!(
        "  intersection:       {}",
        rep.trace.intersection.classification
    );
}

fn print_probe(rep: &report::ProbeJsonReport) {
    println!("generator: {} seed: {}", rep.generator, rep.seed);
    println!("radius      max ratio      samples");
    for i in 0..rep.radii.len() {
        match rep.estimates[i] {
            Some(e) => println!(
                "{:>9.3e}  {:>12.5e}  {:>7}",
                rep.radii[i], e, rep.sample_counts[i]
            ),
            None => println!(
                "{:>9.3e}  {:>12}  {:>7}  ({})",
                rep.radii[i],
                "missing",
                rep.sample_counts[i],
                rep.errors[i].as_deref().unwrap_or("no samples")
            ),
        }
    }
    match rep.blowup_factor {
        Some(bf) => println!(
            "blow-up factor: {bf:.3} (threshold {})",
            rep.blowup_threshold
        ),
        None => println!("blow-up factor: undefined"),
    }
    let verdict = match rep.verdict {
        Verdict::LipschitzLike => "LipschitzLike",
        Verdict::NotLipschitzLike => "NotLipschitzLike",
        Verdict::Inconclusive => "Inconclusive",
    };
    let label = match rep.consistency {
        ProbeConsistency::Consistent => "CONSISTENT",
        ProbeConsistency::Inconsistent => "INCONSISTENT",
        ProbeConsistency::Insufficient => "INSUFFICIENT",
    };
    println!("certified verdict: {verdict}; probe: {label}");
}
