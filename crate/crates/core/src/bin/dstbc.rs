//! Command-line front end: build designs and signal sets, verify codebooks,
//! run error-rate sweeps.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dstbc::codebook::{Codebook, PairMode};
use dstbc::design::construct_design;
use dstbc::error::Error;
use dstbc::signalset::{Branch, Preset, SignalSet};
use dstbc::sim::{self, DecoderChoice, SignalSpec, SimConfig};

#[derive(Parser)]
#[command(version, about = "Four-group decodable differential scaled-unitary STBCs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the design for 2^L antennas and check its group decodability
    Design {
        #[arg(long)]
        lambda: u32,
        /// Print the symbolic design matrix
        #[arg(long)]
        print: bool,
        /// Check the exact cross-group condition for the canonical grouping
        #[arg(long)]
        verify_groups: bool,
    },
    /// Print a signal set as JSON
    Signalset {
        #[command(flatten)]
        set: SetArgs,
        /// Emit all four group point lists instead of the first group's
        #[arg(long)]
        all_groups: bool,
    },
    /// Codebook checks
    #[command(subcommand)]
    Codebook(CodebookCommand),
    /// Monte Carlo error-rate sweep
    Simulate(SimulateArgs),
}

#[derive(Subcommand)]
enum CodebookCommand {
    /// Scaled-unitarity, full diversity, coding gain, power and rate
    Verify {
        #[command(flatten)]
        set: SetArgs,
        /// exhaustive | sampled | sampled:N (default: exhaustive up to 4096 codewords)
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct SetArgs {
    /// Antenna exponent (2^L antennas); implied by --preset
    #[arg(long)]
    lambda: Option<u32>,
    /// Total number of signal vectors M (fourth power of an even integer)
    #[arg(long)]
    points: Option<usize>,
    /// Comma-separated radii (renormalised)
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Named radius preset, e.g. paper-8ant-rate2
    #[arg(long)]
    preset: Option<String>,
    /// axis | hyperbola
    #[arg(long, default_value = "axis")]
    family: String,
    /// Hyperbola constant (hyperbola family)
    #[arg(long)]
    c: Option<f64>,
    /// Intersection branch kept by the hyperbola family: a | b | both
    #[arg(long)]
    branch: Option<String>,
}

impl SetArgs {
    fn resolve(&self) -> Result<(u32, usize, SignalSpec), Error> {
        if let Some(name) = &self.preset {
            let p = Preset::parse(name)?;
            if self.radii.is_some() || self.family != "axis" {
                return Err(Error::InvalidParameter("--preset excludes --radii and --family".into()));
            }
            let lambda = self.lambda.unwrap_or(p.lambda());
            let points = self.points.unwrap_or(p.points());
            return Ok((lambda, points, SignalSpec::Preset { name: name.clone() }));
        }
        let lambda = self
            .lambda
            .ok_or_else(|| Error::InvalidParameter("--lambda is required".into()))?;
        let points = self
            .points
            .ok_or_else(|| Error::InvalidParameter("--points is required".into()))?;
        let spec = match self.family.as_str() {
            "axis" => {
                if self.c.is_some() || self.branch.is_some() {
                    return Err(Error::InvalidParameter(
                        "--c and --branch apply to the hyperbola family".into(),
                    ));
                }
                SignalSpec::Axis { radii: self.radii.clone() }
            }
            "hyperbola" => SignalSpec::Hyperbola {
                radii: self.radii.clone(),
                c: self.c,
                branch: self.branch.as_deref().map(Branch::parse).transpose()?.unwrap_or_default(),
            },
            other => return Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        };
        Ok((lambda, points, spec))
    }

    fn build(&self) -> Result<(u32, SignalSet), Error> {
        let (lambda, points, spec) = self.resolve()?;
        Ok((lambda, spec.build(lambda, points)?))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    set: SetArgs,
    /// SNR points in dB: A:B:STEP, a comma list, or inf
    #[arg(long, allow_hyphen_values = true)]
    snr_db: String,
    /// Data frames per SNR point
    #[arg(long)]
    frames: usize,
    /// Stop a point after this many frame errors
    #[arg(long)]
    target_errors: Option<usize>,
    /// Receive antennas
    #[arg(long, default_value_t = 1)]
    nr: usize,
    /// Frames per coherence block, reference frame included (default: whole burst)
    #[arg(long)]
    coherence: Option<usize>,
    /// group | exhaustive | both
    #[arg(long, default_value = "group")]
    decoder: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print JSON (results and configuration) to stdout
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    scaled_unitary: bool,
    max_scaled_unitary_residual: f64,
    full_diversity: bool,
    verdict: &'static str,
    pairs_checked: usize,
    rank_deficient_pairs: usize,
    det_bound_violations: usize,
    min_det: f64,
    coding_gain: f64,
    avg_scale: f64,
    rate_bits_per_use: f64,
    mode: PairMode,
}

enum Failure {
    Config(Error),
    Verification(String),
    Io(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Verification(msg) => Failure::Verification(msg),
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => Failure::Io(e),
            other => Failure::Config(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.into())
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Design {
            lambda,
            print,
            verify_groups,
        } => {
            let d = construct_design(lambda)?;
            println!(
                "lambda {}: {}x{} design in {} complex symbols ({} real variables)",
                lambda,
                d.n(),
                d.n(),
                d.complex_symbols(),
                d.k()
            );
            if print {
                print!("{}", d.block());
            }
            if verify_groups {
                let g = d.canonical_grouping();
                for (k, grp) in g.groups().iter().enumerate() {
                    let names: Vec<String> = grp
                        .iter()
                        .map(|&i| format!("x{}{}", i / 2 + 1, if i % 2 == 0 { "I" } else { "Q" }))
                        .collect();
                    println!("group {}: {{{}}}", k + 1, names.join(", "));
                }
                match d.find_cross_group_violation(&g) {
                    None => println!("cross-group condition: PASS"),
                    Some((i, j)) => {
                        println!("cross-group condition: FAIL");
                        return Err(Failure::Verification(format!(
                            "weights {} and {} do not anticommute",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Command::Signalset { set, all_groups } => {
            let (_, sset) = set.build()?;
            if all_groups {
                let groups: Vec<&[Vec<f64>]> = sset.groups().iter().map(|g| g.points()).collect();
                print_json(&groups)?;
            } else {
                print_json(&sset.group(0).points())?;
            }
        }
        Command::Codebook(CodebookCommand::Verify { set, mode, seed }) => {
            let (lambda, sset) = set.build()?;
            let cb = Codebook::new(construct_design(lambda)?, sset)?;
            let mode = match mode {
                Some(m) => PairMode::parse(&m, seed)?,
                None => PairMode::auto(cb.size(), seed),
            };
            let residual = cb.max_scaled_unitary_residual();
            let div = cb.verify_full_diversity(mode)?;
            let report = VerifyReport {
                scaled_unitary: residual <= 1e-9,
                max_scaled_unitary_residual: residual,
                full_diversity: div.all_full_rank,
                verdict: div.verdict(),
                pairs_checked: div.pairs_checked,
                rank_deficient_pairs: div.rank_deficient_pairs,
                det_bound_violations: div.bound_violations,
                min_det: div.min_abs_det,
                coding_gain: div.coding_gain,
                avg_scale: cb.average_scale(),
                rate_bits_per_use: cb.rate_bits_per_use(),
                mode,
            };
            print_json(&report)?;
            if !report.scaled_unitary || !report.full_diversity {
                return Err(Failure::Verification(report.verdict.to_string()));
            }
        }
        Command::Simulate(args) => {
            let (lambda, points, signal) = args.set.resolve()?;
            let cfg = SimConfig {
                lambda,
                points,
                signal,
                n_r: args.nr,
                snr_db: sim::parse_snr_list(&args.snr_db)?,
                frames: args.frames,
                target_errors: args.target_errors,
                coherence: args.coherence,
                decoder: DecoderChoice::parse(&args.decoder)?,
                seed: args.seed,
                workers: args.workers,
            };
            let result = sim::run_sim(&cfg)?;
            match &args.out {
                Some(path) => sim::write_csv(&result, BufWriter::new(File::create(path)?))?,
                None if !args.json => sim::write_csv(&result, io::stdout().lock())?,
                None => {}
            }
            if args.json {
                print_json(&result)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
