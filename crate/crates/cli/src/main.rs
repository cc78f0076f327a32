//! Command-line front end: parse, augment, analyze, simulate, integrate
//! moments, evaluate the gene-expression variance closed forms, and attach
//! antithetic integral controllers.
//!
//! Exit codes: 0 on success, 1 when an analysis answers "not certified" or
//! "not ergodic", 2 on usage or tool errors. Every file artifact starts
//! with a header recording the tool version, the seed (or `-` for
//! deterministic outputs), and the sha256 of the input file.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use phasenet::aic::{check_aic, verify_closed_loop, AicSpec, AicVerdict};
use phasenet::augment::augment_network;
use phasenet::ergodicity::{
    check_bimolecular, check_bimolecular_delayed, check_unimolecular, Certificate, Verdict,
};
use phasenet::moments::{gene_expression_variance, moment_ode, stationary_mean, MomentsError};
use phasenet::nalgebra::{DMatrix, DVector};
use phasenet::netmodel::{parse_delay_spec, parse_network, propensity, serialize_network, Network};
use phasenet::simulate::{default_burn_in, ensemble, ensemble_stats, Engine, Trajectory};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "phasenet", version, about = "Reaction networks with phase-type delays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a network file and report its structure.
    Validate(ValidateArgs),
    /// Expand delays into explicit species; dump network and moment blocks.
    Augment(AugmentArgs),
    /// Certify exponential ergodicity of a network.
    Analyze(AnalyzeArgs),
    /// Sample trajectories and summarize stationary statistics.
    Simulate(SimulateArgs),
    /// Integrate the first-moment dynamics and solve the stationary mean.
    Moments(MomentsArgs),
    /// Evaluate the gene-expression mean/variance closed forms.
    Variance(VarianceArgs),
    /// Certify an antithetic integral controller on a plant.
    Control(ControlArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Directory for output artifacts.
    #[arg(short = 'o', long, default_value = ".")]
    out_dir: PathBuf,
    /// Overwrite existing artifacts.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Network file.
    input: PathBuf,
}

#[derive(Args)]
struct AugmentArgs {
    /// Network file.
    input: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Network file.
    input: PathBuf,
    /// Take irreducibility of the state space as given.
    #[arg(long)]
    assume_irreducible: bool,
    /// Per-species bound for the truncated reachability diagnostic.
    #[arg(long, default_value_t = 6)]
    reach_bound: i64,
    /// For bimolecular networks, accept v'S_b <= 0 instead of = 0
    /// (still certifies ergodicity, drops the moment-bound claim).
    #[arg(long)]
    relaxed: bool,
    /// Also write the certificate to <out-dir>/<stem>.certificate.txt.
    #[arg(short = 'o', long)]
    out_dir: Option<PathBuf>,
    /// Overwrite existing artifacts.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    /// Simulate the delay-expanded network with a plain SSA.
    Augmented,
    /// Keep delays implicit and schedule completions on a queue.
    Direct,
}

#[derive(Args)]
struct SimulateArgs {
    /// Network file.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = EngineArg::Augmented)]
    engine: EngineArg,
    /// Time horizon.
    #[arg(long = "T", default_value_t = 100.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    replicas: usize,
    /// Time discarded before averaging; defaults to 20% of the horizon.
    #[arg(long)]
    burn_in: Option<f64>,
    /// Initial counts, comma-separated, one per species. Defaults to zeros.
    #[arg(long, value_delimiter = ',')]
    x0: Option<Vec<i64>>,
    /// With the augmented engine, include delay-species columns in the CSV.
    #[arg(long)]
    full_state: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct MomentsArgs {
    /// Network file.
    input: PathBuf,
    /// Time horizon.
    #[arg(long = "T", default_value_t = 20.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Initial means, comma-separated, one per species. Defaults to zeros.
    #[arg(long, value_delimiter = ',')]
    m0: Option<Vec<f64>>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct VarianceArgs {
    /// Transcription rate.
    #[arg(long)]
    k1: f64,
    /// mRNA degradation rate.
    #[arg(long)]
    gamma1: f64,
    /// Translation rate.
    #[arg(long)]
    k2: f64,
    /// Protein degradation rate.
    #[arg(long)]
    gamma2: f64,
    /// Rate of the exponential translation delay; omit for no delay.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct ControlArgs {
    /// Plant network file (first-order kinetics).
    input: PathBuf,
    /// Species driven by the controller; defaults to the first species.
    #[arg(long)]
    actuated: Option<String>,
    /// Species regulated to the set-point; defaults to the last species.
    #[arg(long)]
    measured: Option<String>,
    /// Actuation rate (does not affect the verdict or the set-point).
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Sensing rate; the set-point is mu/theta.
    #[arg(long)]
    theta: f64,
    /// Reference rate; the set-point is mu/theta.
    #[arg(long)]
    mu: f64,
    /// Annihilation rate (does not affect the verdict or the set-point).
    #[arg(long, default_value_t = 10.0)]
    eta: f64,
    /// Actuation delay, e.g. "kind=erlang shape=3 rate=2.0".
    #[arg(long)]
    actuation_delay: Option<String>,
    /// Sensing delay, same syntax as --actuation-delay.
    #[arg(long)]
    sensing_delay: Option<String>,
    /// Simulate the closed loop and check set-point tracking.
    #[arg(long)]
    verify: bool,
    /// Simulation horizon for --verify.
    #[arg(long = "T", default_value_t = 400.0)]
    horizon: f64,
    #[arg(long, default_value_t = 8)]
    replicas: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the report to <out-dir>/<stem>.control.txt.
    #[arg(short = 'o', long)]
    out_dir: Option<PathBuf>,
    /// Overwrite existing artifacts.
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Moments(args) => cmd_moments(args),
        Command::Variance(args) => cmd_variance(args),
        Command::Control(args) => cmd_control(args),
    }
}

// ---------------------------------------------------------------------------
// Artifact plumbing
// ---------------------------------------------------------------------------

struct Input {
    net: Network,
    stem: String,
    sha256: String,
}

fn load_network(path: &Path) -> Result<Input> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = String::from_utf8(bytes.clone())
        .with_context(|| format!("{} is not UTF-8", path.display()))?;
    let net = parse_network(&text).with_context(|| format!("parsing {}", path.display()))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "network".into());
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let sha256 = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(Input { net, stem, sha256 })
}

fn artifact_header(seed: Option<u64>, input_sha256: &str) -> String {
    let seed = seed.map_or("-".to_string(), |s| s.to_string());
    format!(
        "# phasenet {}\n# seed {}\n# input sha256 {}\n",
        env!("CARGO_PKG_VERSION"),
        seed,
        input_sha256
    )
}

fn write_artifact(dir: &Path, name: &str, text: &str, force: bool) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    if path.exists() && !force {
        bail!("refusing to overwrite {}; pass --force", path.display());
    }
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Full-precision decimal rendering (shortest digits that round-trip).
fn vec_line(v: impl IntoIterator<Item = f64>) -> String {
    let entries: Vec<String> = v.into_iter().map(|x| x.to_string()).collect();
    format!("[{}]", entries.join(", "))
}

fn matrix_block(out: &mut String, label: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "[{label}] {} x {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

fn vector_block(out: &mut String, label: &str, v: &DVector<f64>) {
    let _ = writeln!(out, "[{label}] {}", v.len());
    let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(out, "{}", row.join(" "));
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(args: ValidateArgs) -> Result<u8> {
    let input = load_network(&args.input)?;
    let net = &input.net;
    let delayed = net.reactions.iter().filter(|r| r.delay.is_some()).count();
    let bimolecular = net.reactions.iter().filter(|r| r.order() == 2).count();
    println!("ok: {}", args.input.display());
    println!("species: {} ({})", net.n_species(), net.species.join(" "));
    println!(
        "reactions: {} ({} delayed, {} bimolecular)",
        net.reactions.len(),
        delayed,
        bimolecular
    );
    if delayed > 0 {
        let aug = augment_network(net)?;
        println!(
            "delay expansion: {} phase species across {} lines",
            aug.network.n_species() - aug.n_base,
            aug.lines.len()
        );
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

fn cmd_augment(args: AugmentArgs) -> Result<u8> {
    let input = load_network(&args.input)?;
    let aug = augment_network(&input.net)?;
    let header = artifact_header(None, &input.sha256);

    let net_text = format!("{header}{}", serialize_network(&aug.network));
    let net_path = write_artifact(
        &args.out.out_dir,
        &format!("{}.augmented.rxn", input.stem),
        &net_text,
        args.out.force,
    )?;

    let mut dump = header.clone();
    let _ = writeln!(
        dump,
        "species {} (base {}, delay {})",
        aug.network.n_species(),
        aug.n_base,
        aug.network.n_species() - aug.n_base
    );
    match &aug.blocks {
        Some(blocks) => {
            matrix_block(&mut dump, "A", &blocks.a);
            matrix_block(&mut dump, "B", &blocks.b);
            matrix_block(&mut dump, "C", &blocks.c);
            matrix_block(&mut dump, "H^T", &blocks.h_t);
            vector_block(&mut dump, "b0", &blocks.b0);
            vector_block(&mut dump, "bd", &blocks.bd);
        }
        None => {
            let _ = writeln!(
                dump,
                "moment blocks unavailable: a delayed reaction is bimolecular"
            );
        }
    }
    let dump_path = write_artifact(
        &args.out.out_dir,
        &format!("{}.blocks.txt", input.stem),
        &dump,
        args.out.force,
    )?;

    println!("wrote {}", net_path.display());
    println!("wrote {}", dump_path.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn certificate_text(route: &str, cert: &Certificate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verdict: {}", cert.verdict);
    let _ = writeln!(out, "route: {route}");
    if let Some(v) = &cert.witness_v {
        let _ = writeln!(out, "witness v: {}", vec_line(v.iter().copied()));
    }
    if let Some(w) = &cert.witness_w {
        let _ = writeln!(out, "witness w: {}", vec_line(w.iter().copied()));
    }
    if let Some(slack) = cert.residuals {
        let _ = writeln!(out, "worst slack: {slack:e}");
    }
    let _ = writeln!(out, "detail: {}", cert.detail);
    out
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<u8> {
    let input = load_network(&args.input)?;
    let net = &input.net;
    let delayed_bi = net
        .reactions
        .iter()
        .any(|r| r.order() == 2 && r.delay.is_some());
    let (route, cert) = if !net.has_bimolecular() {
        (
            "first-order drift (two-sided, verdict invariant to delays)",
            check_unimolecular(net)?,
        )
    } else if delayed_bi || net.has_delays() {
        (
            "delayed bimolecular drift (sufficient condition)",
            check_bimolecular_delayed(net)?,
        )
    } else {
        (
            "bimolecular drift (sufficient condition)",
            check_bimolecular(net, args.relaxed)?,
        )
    };

    let mut text = certificate_text(route, &cert);
    if !args.assume_irreducible {
        text.push_str(&reachability_diagnostic(net, args.reach_bound));
    }
    print!("{text}");

    if let Some(dir) = &args.out_dir {
        let file = format!("{}{}", artifact_header(None, &input.sha256), text);
        let path = write_artifact(dir, &format!("{}.certificate.txt", input.stem), &file, args.force)?;
        println!("wrote {}", path.display());
    }
    Ok(match cert.verdict {
        Verdict::Ergodic => 0,
        Verdict::NotCertified | Verdict::NotErgodic => 1,
    })
}

/// Brute-force reachability on the box [0, bound]^n. Warns about states
/// that are reachable from the origin but cannot return inside the box;
/// silence is not a certificate, the box cuts off transitions.
fn reachability_diagnostic(net: &Network, bound: i64) -> String {
    let d = net.n_species();
    if d == 0 || bound < 1 {
        return String::new();
    }
    if (bound as f64 + 1.0).powi(d as i32) > 2e6 {
        return "note: irreducibility is assumed, and the network is too large for the \
                truncated reachability diagnostic; pass --assume-irreducible to silence\n"
            .to_string();
    }
    let steps: Vec<Vec<i64>> = net
        .reactions
        .iter()
        .map(|r| r.net_change(d).iter().copied().collect())
        .collect();
    let forward = |x: &Vec<i64>| -> Vec<Vec<i64>> {
        let lambda = propensity(net, x).expect("state dimension matches");
        let mut next = Vec::new();
        for (k, step) in steps.iter().enumerate() {
            if lambda[k] <= 0.0 {
                continue;
            }
            let y: Vec<i64> = x.iter().zip(step).map(|(a, b)| a + b).collect();
            if y.iter().all(|&c| (0..=bound).contains(&c)) {
                next.push(y);
            }
        }
        next
    };
    let origin = vec![0i64; d];
    let reached = bfs(origin.clone(), &forward);
    // Backward sweep: which box states flow into the origin.
    let mut parents: HashMap<Vec<i64>, Vec<Vec<i64>>> = HashMap::new();
    for x in &reached {
        for y in forward(x) {
            parents.entry(y).or_default().push(x.clone());
        }
    }
    let backward = |x: &Vec<i64>| parents.get(x).cloned().unwrap_or_default();
    let can_return = bfs(origin, &backward);
    let stranded = reached
        .iter()
        .find(|x| !can_return.contains(*x));
    match stranded {
        Some(x) => format!(
            "warning: state {x:?} is reachable from the origin but cannot return within \
             the bound {bound}; the state space may be reducible and the certificate \
             assumes irreducibility\n"
        ),
        None => format!(
            "note: no irreducibility obstruction found on the truncated lattice \
             (bound {bound} per species); this diagnostic never certifies, pass \
             --assume-irreducible to silence\n"
        ),
    }
}

fn bfs(start: Vec<i64>, neighbors: &dyn Fn(&Vec<i64>) -> Vec<Vec<i64>>) -> std::collections::HashSet<Vec<i64>> {
    let mut seen = std::collections::HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(x) = queue.pop_front() {
        for y in neighbors(&x) {
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    seen
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn initial_state(net: &Network, x0: Option<Vec<i64>>) -> Result<Vec<i64>> {
    match x0 {
        Some(v) => {
            if v.len() != net.n_species() {
                bail!(
                    "--x0 has {} entries, the network has {} species",
                    v.len(),
                    net.n_species()
                );
            }
            Ok(v)
        }
        None => Ok(vec![0; net.n_species()]),
    }
}

fn csv_columns(net: &Network, engine: Engine, full_state: bool) -> Result<(Vec<String>, usize)> {
    if full_state {
        if matches!(engine, Engine::Direct) {
            bail!("--full-state requires --engine augmented");
        }
        let aug = augment_network(net)?;
        let names = aug.network.species.clone();
        let len = names.len();
        return Ok((names, len));
    }
    Ok((net.species.clone(), net.n_species()))
}

fn trajectory_csv(header: &str, names: &[String], run: &Trajectory, columns: usize) -> String {
    let mut out = String::with_capacity(run.times.len() * 16);
    out.push_str(header);
    out.push_str("time,");
    out.push_str(&names.join(","));
    out.push('\n');
    for (i, t) in run.times.iter().enumerate() {
        let _ = write!(out, "{t}");
        let row = run.state_at(i);
        for &x in row.iter().take(columns) {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

fn stats_table(names: &[String], stats: &phasenet::simulate::EnsembleStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "species mean variance se_mean se_variance");
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(
            out,
            "{name} {} {} {} {}",
            stats.mean[i], stats.variance[i], stats.standard_error[i], stats.variance_standard_error[i]
        );
    }
    out
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8> {
    if !(args.horizon > 0.0 && args.horizon.is_finite()) {
        bail!("--T must be positive and finite");
    }
    let input = load_network(&args.input)?;
    let net = &input.net;
    let engine = match args.engine {
        EngineArg::Augmented => Engine::Augmented,
        EngineArg::Direct => Engine::Direct,
    };
    let x0 = initial_state(net, args.x0)?;
    let burn_in = args.burn_in.unwrap_or_else(|| default_burn_in(args.horizon));
    if !(burn_in >= 0.0 && burn_in < args.horizon) {
        bail!("--burn-in must lie in [0, T)");
    }
    let (names, columns) = csv_columns(net, engine, args.full_state)?;

    let runs = ensemble(net, engine, &x0, args.horizon, args.seed, args.replicas)?;
    let header = artifact_header(Some(args.seed), &input.sha256);
    for (r, run) in runs.iter().enumerate() {
        let text = trajectory_csv(&header, &names, run, columns);
        write_artifact(
            &args.out.out_dir,
            &format!("{}_r{r:03}.csv", input.stem),
            &text,
            args.out.force,
        )?;
    }

    let projection: Vec<usize> = (0..columns).collect();
    let stats = ensemble_stats(&runs, burn_in, Some(&projection))?;
    let mut summary = header;
    let _ = writeln!(
        summary,
        "engine {}",
        match engine {
            Engine::Augmented => "augmented",
            Engine::Direct => "direct",
        }
    );
    let _ = writeln!(summary, "replicas {}", stats.replicas);
    let _ = writeln!(summary, "horizon {}", args.horizon);
    let _ = writeln!(summary, "burn_in {burn_in}");
    let _ = writeln!(summary, "window {}", stats.window);
    summary.push_str(&stats_table(&names, &stats));
    let path = write_artifact(
        &args.out.out_dir,
        &format!("{}_stats.txt", input.stem),
        &summary,
        args.out.force,
    )?;
    println!(
        "wrote {} trajectories and {}",
        runs.len(),
        path.display()
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// moments
// ---------------------------------------------------------------------------

fn cmd_moments(args: MomentsArgs) -> Result<u8> {
    if !(args.horizon > 0.0 && args.horizon.is_finite()) {
        bail!("--T must be positive and finite");
    }
    let input = load_network(&args.input)?;
    let net = &input.net;
    if net.has_bimolecular() {
        bail!(
            "the first-moment dynamics are not closed for bimolecular networks; \
             estimate means with `simulate` instead"
        );
    }
    let aug = augment_network(net)?;
    let m0 = match args.m0 {
        Some(v) => {
            if v.len() != net.n_species() {
                bail!(
                    "--m0 has {} entries, the network has {} species",
                    v.len(),
                    net.n_species()
                );
            }
            v
        }
        None => vec![0.0; net.n_species()],
    };
    let traj = moment_ode(&aug, &m0, args.horizon, args.steps)?;

    let header = artifact_header(None, &input.sha256);
    let mut csv = header.clone();
    csv.push_str("time,");
    csv.push_str(&net.species.join(","));
    csv.push('\n');
    for (i, t) in traj.grid.iter().enumerate() {
        let _ = write!(csv, "{t}");
        for j in 0..aug.n_base {
            let _ = write!(csv, ",{}", traj.means[i][j]);
        }
        csv.push('\n');
    }
    let csv_path = write_artifact(
        &args.out.out_dir,
        &format!("{}_moments.csv", input.stem),
        &csv,
        args.out.force,
    )?;

    let mut summary = header;
    match stationary_mean(&aug) {
        Ok(mean) => {
            let _ = writeln!(summary, "stationary mean (delay-invariant)");
            for (name, value) in net.species.iter().zip(mean.iter()) {
                let _ = writeln!(summary, "{name} {value}");
            }
        }
        Err(MomentsError::NotStationary) => {
            let _ = writeln!(
                summary,
                "stationary mean unavailable: the delay-free drift is not Hurwitz"
            );
        }
        Err(e) => return Err(e.into()),
    }
    let summary_path = write_artifact(
        &args.out.out_dir,
        &format!("{}_stationary.txt", input.stem),
        &summary,
        args.out.force,
    )?;
    println!("wrote {} and {}", csv_path.display(), summary_path.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// variance
// ---------------------------------------------------------------------------

fn cmd_variance(args: VarianceArgs) -> Result<u8> {
    let result = gene_expression_variance(args.k1, args.gamma1, args.k2, args.gamma2, args.lambda)?;
    println!("protein mean: {}", result.mean);
    println!("protein variance, no delay: {}", result.variance);
    if let (Some(vd), Some(ratio), Some(lambda)) =
        (result.variance_delayed, result.ratio, args.lambda)
    {
        println!("protein variance, exponential delay (lambda={lambda}): {vd}");
        println!("variance ratio (delayed/undelayed): {ratio}");
    }
    println!(
        "note: these closed forms cover the two-stage expression model only; \
         variance of other networks is empirical via `simulate`"
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// control
// ---------------------------------------------------------------------------

fn species_index(net: &Network, name: &str) -> Result<usize> {
    net.species
        .iter()
        .position(|s| s == name)
        .with_context(|| format!("species {name:?} not in the network"))
}

fn cmd_control(args: ControlArgs) -> Result<u8> {
    let input = load_network(&args.input)?;
    let net = &input.net;
    if net.n_species() == 0 {
        bail!("the plant has no species");
    }
    let actuated = match &args.actuated {
        Some(name) => species_index(net, name)?,
        None => 0,
    };
    let measured = match &args.measured {
        Some(name) => species_index(net, name)?,
        None => net.n_species() - 1,
    };
    let parse_delay = |label: &str, text: &Option<String>| -> Result<_> {
        text.as_deref()
            .map(|s| parse_delay_spec(s).with_context(|| format!("parsing --{label}")))
            .transpose()
    };
    let spec = AicSpec {
        actuated,
        measured,
        k: args.k,
        theta: args.theta,
        mu: args.mu,
        eta: args.eta,
        actuation_delay: parse_delay("actuation-delay", &args.actuation_delay)?,
        sensing_delay: parse_delay("sensing-delay", &args.sensing_delay)?,
    };

    let cert = check_aic(net, &spec)?;
    let mut text = String::new();
    let _ = writeln!(text, "verdict: {}", cert.verdict);
    let _ = writeln!(
        text,
        "actuated: {} measured: {}",
        net.species[actuated], net.species[measured]
    );
    let _ = writeln!(text, "set-point (mu/theta): {}", cert.predicted_setpoint);
    if let Some(g) = cert.static_gain {
        let _ = writeln!(text, "static gain: {g}");
    }
    if let Some(v) = &cert.v {
        let _ = writeln!(text, "witness v: {}", vec_line(v.iter().copied()));
    }
    if let Some(w) = &cert.w {
        let _ = writeln!(text, "output weight w: {}", vec_line(w.iter().copied()));
    }
    let _ = writeln!(text, "detail: {}", cert.detail);

    let mut code = match cert.verdict {
        AicVerdict::ControllableErgodic => 0u8,
        AicVerdict::NotCertified => 1u8,
    };

    if args.verify {
        if cert.verdict != AicVerdict::ControllableErgodic {
            let _ = writeln!(text, "verification skipped: the controller is not certified");
        } else {
            let report =
                verify_closed_loop(net, &spec, args.horizon, args.replicas, args.seed)?;
            let _ = writeln!(text, "closed-loop mean: {}", report.empirical_mean);
            let _ = writeln!(text, "standard error: {}", report.standard_error);
            let _ = writeln!(text, "target: {}", report.target);
            let _ = writeln!(text, "tolerance: {}", report.tolerance);
            let _ = writeln!(text, "tracking: {}", if report.pass { "pass" } else { "fail" });
            if !report.pass {
                code = 1;
            }
        }
    }

    print!("{text}");
    if let Some(dir) = &args.out_dir {
        let seed = args.verify.then_some(args.seed);
        let file = format!("{}{}", artifact_header(seed, &input.sha256), text);
        let path = write_artifact(dir, &format!("{}.control.txt", input.stem), &file, args.force)?;
        println!("wrote {}", path.display());
    }
    Ok(code)
}
