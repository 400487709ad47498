//! `hardball` — command-line front end for the hard-sphere configuration
//! space toolkit.
//!
//! Every subcommand reads JSON files (`{"lengths": [...]}` for boxes,
//! `{"points": [[...]], "radius": ...}` for configurations), writes
//! machine-readable JSON to stdout, and reserves stderr for `--verbose`
//! commentary and errors. Exit codes are a scripting contract:
//!
//! - 0: success (for `classify`: the configuration is regular)
//! - 1: a computation failed to converge or produced nothing
//! - 2: unreadable input (missing file, malformed JSON, bad flags)
//! - 3: input violates the domain (point outside the box, wrong dimension)
//! - 10: `classify` found a balanced configuration
//! - 11: `classify` landed in the ambiguity band

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use hardball::flow::{ascend, retract_level, FlowError, FlowOpts, TerminalStatus, Trajectory};
use hardball::geometry::{BoxDomain, Configuration, GeometryError, Radius};
use hardball::render::{render_configuration, render_stress_graph};
use hardball::roadmap::{connectivity_experiment, RoadmapError, RoadmapOpts};
use hardball::stress::{classify, CertParams, Classification, StressError};
use hardball::taut::{active_set, TautError};
use hardball::topo::{betti_across_threshold, k_multiplicity, TopoError};
use hardball::witness::{
    chain_configuration, intersection_witness, path_to_jsonl, retract_chain, sample_S_epsilon,
    sigma_membership, ChainSpec, RetractOpts, SigmaOpts, WitnessError,
};

const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_BALANCED: u8 = 10;
const EXIT_AMBIGUOUS: u8 = 11;

#[derive(Parser)]
#[command(
    name = "hardball",
    version,
    about = "Hard spheres in a box: tau, certificates, flows, chains, Betti tables"
)]
struct Cli {
    /// Cap the worker thread pool (also settable via HARDBALL_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Narrate results on stderr in addition to the JSON on stdout.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate tau and print the active constraint set.
    Tau {
        #[command(flatten)]
        io: IoArgs,
        /// Active band width (default 1e-9 x shortest side).
        #[arg(long)]
        eps_act: Option<f64>,
    },
    /// Decide regular (ascent direction) versus balanced (stress weights).
    Classify {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        tols: TolArgs,
    },
    /// Flow a configuration up to a target tau level.
    Ascend {
        #[command(flatten)]
        io: IoArgs,
        /// Target tau level.
        #[arg(long)]
        target: f64,
        /// Initial step size (default 0.05 x shortest side).
        #[arg(long)]
        h0: Option<f64>,
        /// Step budget (default 10000).
        #[arg(long)]
        max_steps: Option<usize>,
        /// Emit the trajectory as JSON lines on stdout instead of a summary.
        #[arg(long)]
        jsonl: bool,
        /// Also write the trajectory JSON lines to this file.
        #[arg(long)]
        traj: Option<PathBuf>,
    },
    /// Flow several configurations from level a up to level b.
    Retract {
        #[arg(long)]
        domain: PathBuf,
        /// Configuration file; repeat the flag for a batch.
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Directory for per-input trajectory JSON-lines files.
        #[arg(long)]
        traj_dir: Option<PathBuf>,
    },
    /// The extremal straight chain and its balance certificate.
    Chain {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        n: usize,
        /// Spanned axis (0-based; default: first shortest axis).
        #[arg(long)]
        axis: Option<usize>,
        /// Comma-separated 1-based labels along the chain, e.g. "3,1,2".
        #[arg(long)]
        perm: Option<String>,
    },
    /// Sample the sphere of touching chains at radius L/2n + epsilon.
    Sphere {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Test membership in the aligned-stack polytope at radius r.
    Sigma {
        #[command(flatten)]
        io: IoArgs,
        /// Radius (default: the configuration file's "radius" field).
        #[arg(long)]
        r: Option<f64>,
        /// Constrain the first gap too, not just the later ones.
        #[arg(long)]
        gap_from_first: bool,
    },
    /// The transversal intersection of the chain sphere with the polytope.
    Intersect {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: f64,
        /// Also print the two-stage retraction path as JSON lines.
        #[arg(long)]
        retract: bool,
    },
    /// Betti tables on both sides of the first critical threshold.
    Betti {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Multiplicity of the minimal side (default from --domain, else 1).
        #[arg(long)]
        k: Option<usize>,
        /// Optional box file, used for r* and the default multiplicity.
        #[arg(long)]
        domain: Option<PathBuf>,
    },
    /// Probabilistic-roadmap component count of Conf(n, r).
    Connect {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Neighbors tried per node (default 10).
        #[arg(long)]
        k: Option<usize>,
        /// Local-planner probe resolution (default 1e-3 x shortest side).
        #[arg(long)]
        resolution: Option<f64>,
        /// Comma-separated radii: emit a CSV of (r, components) instead.
        #[arg(long)]
        sweep: Option<String>,
        /// Include the accepted edge list in the JSON output.
        #[arg(long)]
        dump: bool,
    },
    /// Draw a configuration (or its stress graph) as SVG.
    Render {
        #[command(flatten)]
        io: IoArgs,
        /// Sphere radius (default: the configuration file's "radius" field).
        #[arg(long)]
        radius: Option<f64>,
        /// Draw the balanced stress graph instead of plain spheres.
        #[arg(long)]
        stress: bool,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct IoArgs {
    /// Box file: {"lengths": [1.0, 2.0]}.
    #[arg(long)]
    domain: PathBuf,
    /// Configuration file: {"points": [[...], ...], "radius": optional}.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct TolArgs {
    /// Active band width (default 1e-9 x shortest side).
    #[arg(long)]
    eps_act: Option<f64>,
    /// Ascent margin below which a direction does not certify.
    #[arg(long)]
    margin_tol: Option<f64>,
    /// Balance residual ceiling.
    #[arg(long)]
    balance_tol: Option<f64>,
    /// Minimum certified stress weight.
    #[arg(long)]
    weight_floor: Option<f64>,
    /// Convex-hull membership tolerance.
    #[arg(long)]
    hull_tol: Option<f64>,
}

impl TolArgs {
    fn params(&self, domain: &BoxDomain) -> Result<CertParams, CliError> {
        let mut p = CertParams::strict(domain);
        for (name, value, slot) in [
            ("--eps-act", self.eps_act, &mut p.eps_act),
            ("--margin-tol", self.margin_tol, &mut p.margin_tol),
            ("--balance-tol", self.balance_tol, &mut p.balance_tol),
            ("--weight-floor", self.weight_floor, &mut p.weight_floor),
            ("--hull-tol", self.hull_tol, &mut p.hull_tol),
        ] {
            if let Some(v) = value {
                if !(v > 0.0) {
                    return Err(CliError::Input(format!("{name} must be positive, got {v}")));
                }
                *slot = v;
            }
        }
        Ok(p)
    }
}

// ---------------------------------------------------------------------------
// errors and exit codes

#[derive(Debug)]
enum CliError {
    /// Unreadable or invalid input: exit 2.
    Input(String),
    /// Input outside the domain contract: exit 3.
    Domain(String),
    /// A computation failed or produced nothing: exit 1.
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Domain(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<TautError> for CliError {
    fn from(e: TautError) -> Self {
        match e {
            TautError::Geometry(g) => g.into(),
            TautError::InvalidBand(_) => CliError::Input(e.to_string()),
            TautError::DegenerateGradient { .. } => CliError::Domain(e.to_string()),
        }
    }
}

impl From<StressError> for CliError {
    fn from(e: StressError) -> Self {
        match e {
            StressError::Taut(t) => t.into(),
            // ambiguity is handled where classification runs; reaching here
            // means a sub-computation could not decide
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Taut(t) => t.into(),
            FlowError::Stress(s) => s.into(),
            FlowError::BadLevels { .. } | FlowError::CrossingOutOfRange { .. } => {
                CliError::Input(e.to_string())
            }
            FlowError::BelowLevel { .. } => CliError::Domain(e.to_string()),
            FlowError::IterationCap(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<WitnessError> for CliError {
    fn from(e: WitnessError) -> Self {
        match e {
            WitnessError::Geometry(g) => g.into(),
            WitnessError::AxisNotMinimal { .. }
            | WitnessError::BadPermutation(..)
            | WitnessError::TooFewSpheres(_)
            | WitnessError::EpsilonOutOfRange { .. } => CliError::Input(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<TopoError> for CliError {
    fn from(e: TopoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RoadmapError> for CliError {
    fn from(e: RoadmapError) -> Self {
        CliError::Internal(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// file formats

#[derive(Serialize, Deserialize)]
struct DomainFile {
    lengths: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    points: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_domain(path: &Path) -> Result<BoxDomain, CliError> {
    let file: DomainFile = read_json(path)?;
    Ok(BoxDomain::new(file.lengths)?)
}

fn load_config(path: &Path) -> Result<(Configuration, Option<f64>), CliError> {
    let file: ConfigFile = read_json(path)?;
    Ok((Configuration::from_rows(file.points)?, file.radius))
}

fn radius_arg(flag: Option<f64>, from_file: Option<f64>, what: &str) -> Result<f64, CliError> {
    flag.or(from_file).ok_or_else(|| {
        CliError::Input(format!(
            "{what} needs a radius: pass --r/--radius or put \"radius\" in the configuration file"
        ))
    })
}

fn emit(value: &serde_json::Value) {
    println!("{value}");
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("HARDBALL_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(t) = threads {
        // a second build_global in one process is harmless; keep the first
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let verbose = cli.verbose;
    match run(cli.command, verbose) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command, verbose: bool) -> Result<u8, CliError> {
    match command {
        Command::Tau { io, eps_act } => cmd_tau(&io, eps_act, verbose),
        Command::Classify { io, tols } => cmd_classify(&io, &tols, verbose),
        Command::Ascend {
            io,
            target,
            h0,
            max_steps,
            jsonl,
            traj,
        } => cmd_ascend(&io, target, h0, max_steps, jsonl, traj.as_deref(), verbose),
        Command::Retract {
            domain,
            config,
            from,
            to,
            traj_dir,
        } => cmd_retract(&domain, &config, from, to, traj_dir.as_deref(), verbose),
        Command::Chain {
            domain,
            n,
            axis,
            perm,
        } => cmd_chain(&domain, n, axis, perm.as_deref(), verbose),
        Command::Sphere {
            domain,
            n,
            epsilon,
            seed,
        } => cmd_sphere(&domain, n, epsilon, seed),
        Command::Sigma {
            io,
            r,
            gap_from_first,
        } => cmd_sigma(&io, r, gap_from_first),
        Command::Intersect {
            domain,
            n,
            epsilon,
            retract,
        } => cmd_intersect(&domain, n, epsilon, retract),
        Command::Betti { n, d, k, domain } => cmd_betti(n, d, k, domain.as_deref()),
        Command::Connect {
            domain,
            n,
            r,
            samples,
            seed,
            k,
            resolution,
            sweep,
            dump,
        } => cmd_connect(&domain, n, r, samples, seed, k, resolution, sweep, dump),
        Command::Render {
            io,
            radius,
            stress,
            out,
        } => cmd_render(&io, radius, stress, out.as_deref()),
    }
}

fn cmd_tau(io: &IoArgs, eps_act: Option<f64>, verbose: bool) -> Result<u8, CliError> {
    let domain = load_domain(&io.domain)?;
    let (config, _) = load_config(&io.config)?;
    let eps = match eps_act {
        Some(v) if v > 0.0 => v,
        Some(v) => return Err(CliError::Input(format!("--eps-act must be positive, got {v}"))),
        None => CertParams::strict(&domain).eps_act,
    };
    let active = active_set(&domain, &config, eps)?;
    if verbose {
        eprintln!(
            "tau = {:.12} with {} active constraints",
            active.tau,
            active.constraints.len()
        );
    }
    emit(&serde_json::to_value(&active).expect("active set serializes"));
    Ok(0)
}

fn cmd_classify(io: &IoArgs, tols: &TolArgs, verbose: bool) -> Result<u8, CliError> {
    let domain = load_domain(&io.domain)?;
    let (config, _) = load_config(&io.config)?;
    let params = tols.params(&domain)?;
    match classify(&domain, &config, &params) {
        Ok(Classification::Regular(cert)) => {
            if verbose {
                eprintln!("regular: ascent margin {:.3e}", cert.margin);
            }
            emit(&json!({
                "classification": "regular",
                "direction": cert.direction,
                "margin": cert.margin,
            }));
            Ok(0)
        }
        Ok(Classification::Balanced {
            certificate,
            graph,
            nontrivial,
        }) => {
            if verbose {
                let weights: Vec<f64> =
                    certificate.weights.iter().map(|w| w.weight).collect();
                eprintln!("balanced: weights {weights:?}");
            }
            emit(&json!({
                "classification": "balanced",
                "weights": certificate.weights,
                "residual": certificate.residual,
                "nontrivial": nontrivial,
                "graph": graph,
            }));
            Ok(EXIT_BALANCED)
        }
        Err(StressError::Ambiguous {
            ascent_margin,
            balance_residual,
        }) => {
            if verbose {
                eprintln!("ambiguous: neither certificate clears its tolerance");
            }
            emit(&json!({
                "classification": "ambiguous",
                "ascent_margin": ascent_margin,
                "balance_residual": balance_residual,
            }));
            Ok(EXIT_AMBIGUOUS)
        }
        Err(e) => Err(e.into()),
    }
}

fn trajectory_summary(traj: &Trajectory) -> serde_json::Value {
    json!({
        "status": match traj.status {
            TerminalStatus::ReachedTarget => "reached",
            TerminalStatus::Stalled => "stalled",
            TerminalStatus::HitIterationCap => "iteration-cap",
        },
        "initial_tau": traj.initial().tau,
        "terminal_tau": traj.terminal().tau,
        "steps": traj.samples.len() - 1,
        "total_time": traj.total_time(),
        "stall_balanced": traj.stall_balanced,
        "terminal_points": traj.terminal().config.as_flat(),
    })
}

fn cmd_ascend(
    io: &IoArgs,
    target: f64,
    h0: Option<f64>,
    max_steps: Option<usize>,
    jsonl: bool,
    traj_path: Option<&Path>,
    verbose: bool,
) -> Result<u8, CliError> {
    let domain = load_domain(&io.domain)?;
    let (config, _) = load_config(&io.config)?;
    let mut opts = FlowOpts::for_domain(&domain);
    if let Some(h) = h0 {
        if !(h > 0.0) {
            return Err(CliError::Input(format!("--h0 must be positive, got {h}")));
        }
        opts.h0 = h;
    }
    if let Some(m) = max_steps {
        opts.max_steps = m;
    }
    let traj = ascend(&domain, &config, target, &opts)?;
    if let Some(path) = traj_path {
        std::fs::write(path, traj.to_jsonl())
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    if verbose {
        eprintln!(
            "flow: tau {:.6} -> {:.6} in {} steps",
            traj.initial().tau,
            traj.terminal().tau,
            traj.samples.len() - 1
        );
    }
    if jsonl {
        print!("{}", traj.to_jsonl());
    } else {
        emit(&trajectory_summary(&traj));
    }
    Ok(0)
}

fn cmd_retract(
    domain_path: &Path,
    config_paths: &[PathBuf],
    from: f64,
    to: f64,
    traj_dir: Option<&Path>,
    verbose: bool,
) -> Result<u8, CliError> {
    let domain = load_domain(domain_path)?;
    let configs: Vec<Configuration> = config_paths
        .iter()
        .map(|p| load_config(p).map(|(c, _)| c))
        .collect::<Result<_, _>>()?;
    let report = retract_level(&domain, &configs, from, to, &FlowOpts::for_domain(&domain))?;
    if let Some(dir) = traj_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        for (i, traj) in report.trajectories.iter().enumerate() {
            let path = dir.join(format!("traj_{i}.jsonl"));
            std::fs::write(&path, traj.to_jsonl())
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        }
    }
    if verbose {
        eprintln!(
            "retracted {} of {} inputs from {from} to {to}",
            report.trajectories.len() - report.stalled.len(),
            report.trajectories.len()
        );
    }
    emit(&json!({
        "complete": report.complete,
        "stalled": report.stalled,
        "trajectories": report.trajectories.iter().map(trajectory_summary).collect::<Vec<_>>(),
    }));
    Ok(0)
}

fn cmd_chain(
    domain_path: &Path,
    n: usize,
    axis: Option<usize>,
    perm: Option<&str>,
    verbose: bool,
) -> Result<u8, CliError> {
    let domain = load_domain(domain_path)?;
    let spec = match (axis, perm) {
        (None, None) => ChainSpec::canonical(&domain, n),
        (axis, perm) => {
            let axis = axis.unwrap_or_else(|| domain.shortest_axis());
            let permutation = match perm {
                None => (0..n).collect(),
                Some(text) => parse_permutation(text, n)?,
            };
            ChainSpec::new(&domain, axis, permutation)?
        }
    };
    let (config, r_star) = chain_configuration(&domain, n, &spec)?;
    let params = CertParams::strict(&domain);
    let classification = match classify(&domain, &config, &params)? {
        Classification::Balanced {
            certificate,
            graph,
            nontrivial,
        } => json!({
            "classification": "balanced",
            "weights": certificate.weights,
            "residual": certificate.residual,
            "nontrivial": nontrivial,
            "graph": graph,
        }),
        Classification::Regular(cert) => json!({
            "classification": "regular",
            "direction": cert.direction,
            "margin": cert.margin,
        }),
    };
    if verbose {
        eprintln!("chain of {n} spheres at r* = {r_star}");
    }
    emit(&json!({
        "points": config.to_rows(),
        "radius": r_star,
        "r_star": r_star,
        "classification": classification,
    }));
    Ok(0)
}

/// Comma-separated 1-based labels -> 0-based permutation vector.
fn parse_permutation(text: &str, n: usize) -> Result<Vec<usize>, CliError> {
    let labels: Vec<usize> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("bad permutation entry {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if labels.iter().any(|&l| l == 0 || l > n) {
        return Err(CliError::Input(format!(
            "permutation labels must lie in 1..={n}"
        )));
    }
    Ok(labels.into_iter().map(|l| l - 1).collect())
}

fn cmd_sphere(domain_path: &Path, n: usize, epsilon: f64, seed: u64) -> Result<u8, CliError> {
    let domain = load_domain(domain_path)?;
    let sample = sample_S_epsilon(&domain, n, epsilon, seed)?;
    emit(&json!({
        "points": sample.config.to_rows(),
        "radius": sample.r_prime,
        "epsilon": sample.epsilon,
        "axis": sample.axis,
        "directions": sample.directions,
    }));
    Ok(0)
}

fn cmd_sigma(io: &IoArgs, r: Option<f64>, gap_from_first: bool) -> Result<u8, CliError> {
    let domain = load_domain(&io.domain)?;
    let (config, file_radius) = load_config(&io.config)?;
    let r = radius_arg(r, file_radius, "sigma")?;
    let mut opts = SigmaOpts::for_domain(&domain);
    opts.gap_from_first = gap_from_first;
    let member = sigma_membership(&domain, &config, r, &opts);
    emit(&json!({ "member": member, "r": r }));
    Ok(0)
}

fn cmd_intersect(
    domain_path: &Path,
    n: usize,
    epsilon: f64,
    with_retraction: bool,
) -> Result<u8, CliError> {
    let domain = load_domain(domain_path)?;
    let (config, rank) = intersection_witness(&domain, n, epsilon)?;
    let length = domain.shortest_side();
    let r_prime = length / (2.0 * n as f64) + epsilon;
    let r = length / (2.0 * n as f64) - epsilon;
    emit(&json!({
        "points": config.to_rows(),
        "rank": rank,
        "r_prime": r_prime,
        "r": r,
    }));
    if with_retraction {
        // rebuild the sample view of the witness and print its contraction
        let directions: Vec<Vec<f64>> = (0..n - 1)
            .map(|i| {
                config
                    .point(i + 1)
                    .iter()
                    .zip(config.point(i))
                    .map(|(a, b)| (a - b) / (2.0 * r_prime))
                    .collect()
            })
            .collect();
        let sample = hardball::witness::SphereSample {
            directions,
            epsilon,
            r_prime,
            axis: domain.shortest_axis(),
            config,
        };
        let path = retract_chain(&domain, &sample, r, r_prime, &RetractOpts::default())?;
        print!("{}", path_to_jsonl(&domain, &path));
    }
    Ok(0)
}

fn cmd_betti(
    n: usize,
    d: usize,
    k: Option<usize>,
    domain_path: Option<&Path>,
) -> Result<u8, CliError> {
    let domain = domain_path.map(load_domain).transpose()?;
    let k = k
        .or_else(|| domain.as_ref().map(k_multiplicity))
        .unwrap_or(1);
    let tables = betti_across_threshold(n, d, k)?;
    let r_star = domain
        .as_ref()
        .map(|dom| dom.shortest_side() / (2.0 * n as f64));
    let to_ints = |p: &hardball::topo::PoincarePolynomial| -> Result<Vec<u64>, CliError> {
        p.coefficients()
            .iter()
            .map(|c| {
                u64::try_from(c).map_err(|_| {
                    CliError::Input(format!("Betti number {c} too large for the CLI; use the library"))
                })
            })
            .collect()
    };
    let cells = u64::try_from(&tables.cells_attached)
        .map_err(|_| CliError::Input("cell count exceeds u64; use the library".into()))?;
    let to_n = u64::try_from(&tables.cells_to_betti_n)
        .map_err(|_| CliError::Input("cell count exceeds u64; use the library".into()))?;
    emit(&json!({
        "r_star": r_star,
        "below": to_ints(&tables.below)?,
        "above": to_ints(&tables.above)?,
        "cells_attached": cells,
        "cells_to_betti_N": to_n,
    }));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_connect(
    domain_path: &Path,
    n: usize,
    r: f64,
    samples: usize,
    seed: u64,
    k: Option<usize>,
    resolution: Option<f64>,
    sweep: Option<String>,
    dump: bool,
) -> Result<u8, CliError> {
    let domain = load_domain(domain_path)?;
    let mut opts = RoadmapOpts::for_domain(&domain);
    if let Some(k) = k {
        opts.k = k;
    }
    if let Some(res) = resolution {
        if !(res > 0.0) {
            return Err(CliError::Input(format!(
                "--resolution must be positive, got {res}"
            )));
        }
        opts.resolution = res;
    }
    if let Some(list) = sweep {
        println!("r,components");
        for item in list.split(',') {
            let r: f64 = item
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("bad sweep radius {item:?}")))?;
            let radius = Radius::new(r)?;
            let (components, _) =
                connectivity_experiment(&domain, n, radius, samples, seed, &opts)?;
            println!("{r},{components}");
        }
        return Ok(0);
    }
    let radius = Radius::new(r)?;
    let (components, map) = connectivity_experiment(&domain, n, radius, samples, seed, &opts)?;
    let mut out = json!({
        "components": components,
        "nodes": map.nodes.len(),
        "edges": map.edges.len(),
        "r": r,
    });
    if dump {
        out["adjacency"] = json!(map.edges);
        out["component_labels"] = json!(map.components);
    }
    emit(&out);
    Ok(0)
}

fn cmd_render(
    io: &IoArgs,
    radius: Option<f64>,
    stress: bool,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let domain = load_domain(&io.domain)?;
    let (config, file_radius) = load_config(&io.config)?;
    if config.dim() > 2 {
        eprintln!(
            "warning: {}-dimensional configuration; drawing the first two coordinates",
            config.dim()
        );
    }
    let svg = if stress {
        let params = CertParams::strict(&domain);
        match classify(&domain, &config, &params)? {
            Classification::Balanced { graph, .. } => render_stress_graph(&domain, &graph),
            Classification::Regular(_) => {
                return Err(CliError::Internal(
                    "configuration is regular; no stress graph to draw".into(),
                ))
            }
        }
    } else {
        let r = radius_arg(radius, file_radius, "render")?;
        render_configuration(&domain, &config, r)
    };
    let svg = svg.ok_or_else(|| {
        CliError::Input("rendering needs at least two dimensions".into())
    })?;
    match out {
        Some(path) => std::fs::write(path, svg)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => println!("{svg}"),
    }
    Ok(0)
}
