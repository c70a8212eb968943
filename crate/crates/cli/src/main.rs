//! Command-line front end: validate, analyze, simulate, and sample systems
//! of the form g -> b(u) * h * g * h^-1 described by JSON files.
//!
//! Exit codes: 0 success, 1 unreadable input or internal failure, 2 a
//! requested check failed, 3 request refused (over a safety cap).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use liectl_core::descriptor::SystemDescriptor;
use liectl_core::jsonfmt::to_canonical_string;
use liectl_core::lie::group_membership;
use liectl_core::linalg::Matrix;
use liectl_core::reach::{self, ReachError, SampleStrategy};
use liectl_core::system::{ControlSequence, SystemSpec};
use liectl_core::verdict::analyze;
use serde_json::json;

const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_REFUSED: u8 = 3;

#[derive(Parser)]
#[command(name = "liectl", version, about = "Controllability toolkit for conjugation-driven systems on matrix groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Grid,
    #[value(alias = "mc")]
    MonteCarlo,
}

impl From<StrategyArg> for SampleStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Grid => SampleStrategy::Grid,
            StrategyArg::MonteCarlo => SampleStrategy::MonteCarlo,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check that the descriptor defines a well-posed system
    Validate {
        /// System descriptor JSON file
        system: PathBuf,
        /// Random controls drawn for the membership check
        #[arg(long, default_value_t = 128)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the report as canonical JSON
        #[arg(long)]
        json: bool,
    },
    /// Run the full controllability analysis
    Analyze {
        system: PathBuf,
        /// Longest control window tried for a certificate
        #[arg(long, default_value_t = 8)]
        k_max: usize,
        /// Allowed deviation of drift eigenvalues from the unit circle
        #[arg(long, default_value_t = 1e-6)]
        tol_unimodular: f64,
        /// Singular-value cutoff for the certificate rank
        #[arg(long, default_value_t = 1e-8)]
        tol_rank: f64,
        #[arg(long)]
        json: bool,
    },
    /// Step the system along an explicit control sequence
    Simulate {
        system: PathBuf,
        /// File with the controls: steps separated by ';' or newlines,
        /// components by ','; a JSON array of arrays also works
        #[arg(long)]
        controls: PathBuf,
        /// Starting point as a JSON matrix (defaults to the identity)
        #[arg(long)]
        initial: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Sample the reachable set at a fixed horizon and emit CSV
    Reach {
        system: PathBuf,
        /// Number of steps
        #[arg(long)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::Grid)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 729)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; the output is identical for any count
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit the summary as canonical JSON (only with --out)
        #[arg(long)]
        json: bool,
    },
    /// Cross-check the composition and time-reversal identities
    Duality {
        system: PathBuf,
        /// Window length for the identities
        #[arg(long, default_value_t = 4)]
        horizon: usize,
        /// Random control windows per identity
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest residual accepted as a pass
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn load_system(path: &PathBuf) -> Result<SystemSpec, AnyError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(SystemDescriptor::from_json(&text)?.to_system()?)
}

fn run(command: Command) -> Result<ExitCode, AnyError> {
    match command {
        Command::Validate { system, samples, seed, json } => {
            let sys = load_system(&system)?;
            let report = sys.validate(samples, seed);
            if json {
                let v = json!({
                    "passed": report.passed(),
                    "samples": report.samples,
                    "seed": report.seed,
                    "checks": report.checks.iter().map(|c| json!({
                        "name": c.name,
                        "passed": c.passed,
                        "residual": c.residual,
                        "detail": c.detail,
                    })).collect::<Vec<_>>(),
                });
                println!("{}", to_canonical_string(&v)?);
            } else {
                for c in &report.checks {
                    let mark = if c.passed { "ok " } else { "FAIL" };
                    println!("{mark} {:<14} residual {:.3e}", c.name, c.residual);
                    if !c.passed {
                        println!("     {}", c.detail);
                    }
                }
                println!("validation {}", if report.passed() { "passed" } else { "failed" });
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            })
        }
        Command::Analyze { system, k_max, tol_unimodular, tol_rank, json } => {
            let sys = load_system(&system)?;
            let verdict = analyze(&sys, k_max, tol_unimodular, tol_rank)?;
            if json {
                println!("{}", verdict.report_json());
            } else {
                println!("status: {}", verdict.status.name());
                if let Some(m) = verdict.unimodular_margin {
                    println!("unimodular margin: {m:.6e}");
                }
                if let Some(s) = &verdict.spectral {
                    println!("drift eigenvalues (algebra representation):");
                    for e in &s.eigenvalues {
                        println!(
                            "  {:+.6e} {:+.6e}i  x{}  {}",
                            e.value.re,
                            e.value.im,
                            e.multiplicity,
                            e.class.name()
                        );
                    }
                }
                match &verdict.certificate {
                    Some(c) => println!("certificate: k = {}, rank = {}", c.k, c.rank),
                    None => println!("certificate: none up to k_max = {k_max}"),
                }
                for n in &verdict.notes {
                    println!("note: {n}");
                }
            }
            // Every completed analysis exits 0; the verdict itself is the
            // result, not a pass/fail gate.
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { system, controls, initial, json } => {
            let sys = load_system(&system)?;
            let text = std::fs::read_to_string(&controls)
                .map_err(|e| format!("cannot read {}: {e}", controls.display()))?;
            let u = parse_controls(&text, sys.control_dim)?;
            let g0 = match initial {
                Some(text) => {
                    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)
                        .map_err(|e| format!("initial matrix: {e}"))?;
                    let n = sys.group.n;
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(format!("initial matrix must be {n}x{n}").into());
                    }
                    let g = Matrix::from_rows(&rows);
                    let residual = group_membership(&sys.group, &g);
                    if residual > 1e-9 {
                        return Err(format!(
                            "initial matrix is not in the group (membership residual {residual:.3e})"
                        )
                        .into());
                    }
                    g
                }
                None => Matrix::identity(sys.group.n),
            };
            let mut trajectory = vec![g0.clone()];
            let mut g = g0;
            for t in 0..u.len() {
                g = sys.step(&g, u.get(t))?;
                trajectory.push(g.clone());
            }
            if json {
                let v = json!({
                    "controls": u.steps(),
                    "trajectory": trajectory.iter().map(|m| m.to_rows()).collect::<Vec<_>>(),
                });
                println!("{}", to_canonical_string(&v)?);
            } else {
                for (t, m) in trajectory.iter().enumerate() {
                    let flat = m
                        .as_slice()
                        .iter()
                        .map(|x| format!("{x:+.12e}"))
                        .collect::<Vec<_>>()
                        .join("  ");
                    println!("t={t:<3} {flat}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Reach { system, horizon, strategy, samples, seed, workers, out, json } => {
            let sys = load_system(&system)?;
            let sample =
                match reach::sample_reachable(&sys, horizon, strategy.into(), samples, seed, workers) {
                    Ok(s) => s,
                    Err(ReachError::Refusal { requested, cap }) => {
                        eprintln!("refused: {requested} samples exceed the cap of {cap}");
                        return Ok(ExitCode::from(EXIT_REFUSED));
                    }
                    Err(e) => return Err(e.into()),
                };
            let csv = reach::reach_csv(&sample);
            match out {
                Some(path) => {
                    std::fs::write(&path, csv)
                        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                    if json {
                        let v = json!({
                            "horizon": sample.k,
                            "strategy": sample.strategy.name(),
                            "seed": sample.seed,
                            "rows": sample.points.len(),
                            "out": path.display().to_string(),
                        });
                        println!("{}", to_canonical_string(&v)?);
                    } else {
                        println!(
                            "wrote {} points at horizon {} ({}) to {}",
                            sample.points.len(),
                            sample.k,
                            sample.strategy.name(),
                            path.display()
                        );
                    }
                }
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Duality { system, horizon, samples, seed, tol, json } => {
            let sys = load_system(&system)?;
            let k1 = (horizon / 2).max(1);
            let k2 = (horizon - horizon / 2).max(1);
            let duality = reach::duality_check(&sys, horizon.max(1), samples, seed)?;
            let composition = reach::semigroup_check(&sys, k1, k2, samples, seed)?;
            let passed = duality.max_residual <= tol && composition.max_residual <= tol;
            if json {
                let checks: Vec<_> = [&duality, &composition]
                    .iter()
                    .map(|c| {
                        json!({
                            "name": c.name,
                            "samples": c.samples,
                            "max_residual": c.max_residual,
                            "construction": c.construction,
                        })
                    })
                    .collect();
                let v = json!({
                    "passed": passed,
                    "tol": tol,
                    "checks": checks,
                });
                println!("{}", to_canonical_string(&v)?);
            } else {
                for c in [&duality, &composition] {
                    println!(
                        "{:<12} max residual {:.3e} over {} windows (tol {tol:.1e}; {})",
                        c.name, c.max_residual, c.samples, c.construction
                    );
                }
                println!("{}", if passed { "identities hold" } else { "identities FAILED" });
            }
            Ok(if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            })
        }
    }
}

fn parse_controls(text: &str, dim: usize) -> Result<ControlSequence, AnyError> {
    let trimmed = text.trim();
    let steps: Vec<Vec<f64>> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| format!("controls JSON: {e}"))?
    } else {
        trimmed
            .split(|c| c == ';' || c == '\n')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|step| {
                step.split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|e| format!("control '{c}': {e}"))
                    })
                    .collect::<Result<Vec<f64>, String>>()
            })
            .collect::<Result<Vec<Vec<f64>>, String>>()?
    };
    Ok(ControlSequence::new(steps, dim)?)
}
