//! Command-line front end: argument parsing, run orchestration and output
//! files. `main.rs` only maps [`run`]'s result to an exit code.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bms_core::asymptotics::{
    classify_regime, dist_attractor_to_s, effective_lyapunov, omega_sample, sample_initial_state, Horizons,
    LyapunovConfig, DEFAULT_EPSILON_SINGULAR, DEFAULT_TOLERANCE,
};
use bms_core::ensemble::{derive_seed, lyapunov_map, sweep, SweepConfig};
use bms_core::graph::build_transition_graph;
use bms_core::io::{
    fmt_f64, read_network, write_heatmap_csv, write_lyapunov_csv, write_raster, write_sweep_csv,
    write_trajectory_csv, GraphExport, OrbitFile,
};
use bms_core::model::{simulate, simulate_with_noise};
use bms_core::{NetworkParams, State};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_CAPABILITY: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bms_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(bms_core::Error::TooLarge { .. }) => EXIT_CAPABILITY,
            _ => EXIT_INPUT,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "bms", version, about = "Leaky integrate-and-fire network dynamics")]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel runs (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Primary output file (standard output when omitted, where applicable).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trajectory; writes a trajectory CSV and a raster file.
    Simulate(SimulateArgs),
    /// Build the transition graph of the natural partition.
    Graph(GraphArgs),
    /// Detect periodic orbits from random initial conditions.
    Orbit(OrbitArgs),
    /// Sweep a (gamma, C) grid of random networks.
    Sweep(SweepArgs),
    /// Effective Lyapunov exponent of a network or of an ensemble grid.
    Lyap(LyapArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Network JSON file.
    #[arg(long)]
    pub net: PathBuf,
    /// `zero`, `random`, or comma-separated potentials.
    #[arg(long, default_value = "zero")]
    pub v0: String,
    #[arg(long, default_value_t = 100)]
    pub t_max: usize,
    /// Standard deviation of additive Gaussian noise per step.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Raster output (default: `<out>` with extension `raster.txt`).
    #[arg(long)]
    pub raster_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// Also list illegal edges in the JSON.
    #[arg(long)]
    pub include_illegal: bool,
}

#[derive(Debug, Args)]
pub struct HorizonArgs {
    #[arg(long, default_value_t = 100_000)]
    pub max_transient: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_period: usize,
    /// Recurrence tolerance in the max metric.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON_SINGULAR)]
    pub epsilon_singular: f64,
}

impl HorizonArgs {
    fn horizons(&self) -> Horizons {
        Horizons {
            max_transient: self.max_transient,
            max_period: self.max_period,
        }
    }

    fn echo(&self, echo: &mut Echo) {
        echo.push("max_transient", self.max_transient);
        echo.push("max_period", self.max_period);
        echo.push("tol", fmt_f64(self.tol));
        echo.push("epsilon_singular", fmt_f64(self.epsilon_singular));
    }
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub inits: usize,
    #[command(flatten)]
    pub horizons: HorizonArgs,
    /// Include orbit potentials in the JSON.
    #[arg(long)]
    pub with_states: bool,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Leak rates: `start:stop:count` (inclusive) or a comma list.
    #[arg(long, default_value = "0:0.875:8")]
    pub gammas: String,
    /// Coupling scales, same syntax as `--gammas`.
    #[arg(long, default_value = "0.25:3:8")]
    pub cs: String,
    #[arg(long, default_value_t = 10)]
    pub networks: usize,
    #[arg(long, default_value_t = 5)]
    pub inits: usize,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub i_ext: f64,
    #[command(flatten)]
    pub horizons: HorizonArgs,
}

impl EnsembleArgs {
    fn config(&self, seed: u64) -> CliResult<SweepConfig> {
        let cfg = SweepConfig {
            gammas: parse_grid(&self.gammas)?,
            cs: parse_grid(&self.cs)?,
            n: self.n,
            networks_per_cell: self.networks,
            inits_per_network: self.inits,
            max_transient: self.horizons.max_transient,
            max_period: self.horizons.max_period,
            tol: self.horizons.tol,
            theta: self.theta,
            i_ext: self.i_ext,
            epsilon_singular: self.horizons.epsilon_singular,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn echo_sweep(echo: &mut Echo, cfg: &SweepConfig) {
    echo.push("n", cfg.n);
    echo.push("gammas", join_floats(&cfg.gammas));
    echo.push("cs", join_floats(&cfg.cs));
    echo.push("networks_per_cell", cfg.networks_per_cell);
    echo.push("inits_per_network", cfg.inits_per_network);
    echo.push("theta", fmt_f64(cfg.theta));
    echo.push("i_ext", fmt_f64(cfg.i_ext));
    echo.push("max_transient", cfg.max_transient);
    echo.push("max_period", cfg.max_period);
    echo.push("tol", fmt_f64(cfg.tol));
    echo.push("epsilon_singular", fmt_f64(cfg.epsilon_singular));
    echo.push("seed", cfg.seed);
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Heatmap output (default: `<out>` with extension `heatmap.csv`).
    #[arg(long)]
    pub heatmap_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LyapArgs {
    /// Network JSON file; without it the ensemble grid flags are used.
    #[arg(long)]
    pub net: Option<PathBuf>,
    /// Initial conditions per network.
    #[arg(long, default_value_t = 5)]
    pub inits: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub ball: f64,
    #[arg(long, default_value_t = 4)]
    pub directions: usize,
    #[arg(long, default_value_t = 2_000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value = "0:0.875:8")]
    pub gammas: String,
    #[arg(long, default_value = "0.25:3:8")]
    pub cs: String,
    #[arg(long, default_value_t = 10)]
    pub networks: usize,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub i_ext: f64,
}

/// Ordered `key=value` pairs written at the top of every CSV.
#[derive(Debug, Default)]
struct Echo(Vec<(String, String)>);

impl Echo {
    fn new(command: &str) -> Self {
        let mut e = Echo::default();
        e.push("command", command);
        e.push("version", env!("CARGO_PKG_VERSION"));
        e
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

/// `start:stop:count` with inclusive ends, or a comma-separated list.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("invalid grid {spec:?}: expected start:stop:count or a comma list"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, count] => {
            let start: f64 = start.trim().parse().map_err(|_| bad())?;
            let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            match count {
                0 => Err(bad()),
                1 => Ok(vec![start]),
                _ => Ok((0..count)
                    .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                    .collect()),
            }
        }
        [list] => list
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
            .collect(),
        _ => Err(bad()),
    }
}

fn parse_v0(net: &NetworkParams, spec: &str, seed: u64) -> CliResult<State> {
    match spec {
        "zero" => Ok(State::zeros(net)),
        "random" => Ok(sample_initial_state(net, seed, 0)),
        list => {
            let values = list
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Usage(format!("invalid --v0 {list:?}: expected zero, random or a comma list")))?;
            Ok(State::from_potentials(net, &values)?)
        }
    }
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    let mut p = path.to_path_buf();
    p.set_extension(ext);
    p
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load(path: &Path) -> CliResult<NetworkParams> {
    read_network(path).map_err(|e| match e {
        bms_core::Error::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Core(other),
    })
}

/// Writes to `path`, or to standard output when there is none.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> bms_core::Result<()>) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush().map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            pool.install(|| dispatch(&cli))
        }
        None => dispatch(&cli),
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, cli.seed, out),
        Command::Graph(a) => cmd_graph(a, out),
        Command::Orbit(a) => cmd_orbit(a, cli.seed, out),
        Command::Sweep(a) => cmd_sweep(a, cli.seed, out),
        Command::Lyap(a) => cmd_lyap(a, cli.seed, out),
    }
}

fn cmd_simulate(a: &SimulateArgs, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let net = load(&a.net)?;
    let v0 = parse_v0(&net, &a.v0, seed)?;
    let traj = if a.noise == 0.0 {
        simulate(&net, &v0, a.t_max)?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        simulate_with_noise(&net, &v0, a.t_max, a.noise, Some(&mut rng))?
    };
    let mut echo = Echo::new("simulate");
    echo.push("net", a.net.display());
    echo.push("v0", &a.v0);
    echo.push("t_max", a.t_max);
    echo.push("noise", fmt_f64(a.noise));
    echo.push("seed", seed);
    emit(out, |w| write_trajectory_csv(w, &traj, &echo.0))?;
    let raster_path = a.raster_out.clone().or_else(|| out.map(|p| with_extension(p, "raster.txt")));
    if let Some(p) = raster_path {
        emit(Some(&p), |w| write_raster(w, traj.raster()))?;
    }
    Ok(())
}

fn cmd_graph(a: &GraphArgs, out: Option<&Path>) -> CliResult<()> {
    let net = load(&a.net)?;
    let graph = build_transition_graph(&net)?;
    let counts = graph.counts();
    println!(
        "unconditional={} conditional={} illegal={}",
        counts.unconditional, counts.conditional, counts.illegal
    );
    if let Some(p) = out {
        let mut export = GraphExport::from_graph(&graph, a.include_illegal);
        let mut echo = Echo::new("graph");
        echo.push("net", a.net.display());
        echo.push("include_illegal", a.include_illegal);
        export.config = echo.0.into_iter().collect();
        emit(Some(p), |w| {
            serde_json::to_writer_pretty(&mut *w, &export)?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    Ok(())
}

fn cmd_orbit(a: &OrbitArgs, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let net = load(&a.net)?;
    let sample = omega_sample(&net, a.inits, seed, a.horizons.horizons(), a.horizons.tol)?;
    let regime = classify_regime(&sample, a.horizons.epsilon_singular)?;
    let d_as = if sample.orbits.is_empty() {
        None
    } else {
        Some(dist_attractor_to_s(&sample.orbits)?)
    };
    println!(
        "regime={regime} orbits={} dAS={} undetermined={}",
        sample.orbits.len(),
        d_as.map_or_else(|| "none".to_string(), |d| d.to_string()),
        sample.undetermined
    );
    if let Some(p) = out {
        let mut file = OrbitFile::new(&sample, regime, d_as, a.with_states);
        let mut echo = Echo::new("orbit");
        echo.push("net", a.net.display());
        echo.push("inits", a.inits);
        a.horizons.echo(&mut echo);
        echo.push("seed", seed);
        file.config = echo.0.into_iter().collect();
        emit(Some(p), |w| {
            serde_json::to_writer_pretty(&mut *w, &file)?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let cfg = a.ensemble.config(seed)?;
    let mut echo = Echo::new("sweep");
    echo_sweep(&mut echo, &cfg);
    eprintln!(
        "sweep: {} cells x {} networks x {} inits, N={}",
        cfg.gammas.len() * cfg.cs.len(),
        cfg.networks_per_cell,
        cfg.inits_per_network,
        cfg.n
    );
    let started = Instant::now();
    let cells = sweep(&cfg)?;
    eprintln!("sweep: done in {:.1} s", started.elapsed().as_secs_f64());
    emit(out, |w| write_sweep_csv(w, &cells, &echo.0))?;
    let heatmap = a.heatmap_out.clone().or_else(|| out.map(|p| with_extension(p, "heatmap.csv")));
    if let Some(p) = heatmap {
        emit(Some(&p), |w| write_heatmap_csv(w, &cells, &echo.0))?;
    }
    Ok(())
}

fn cmd_lyap(a: &LyapArgs, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let lyap = LyapunovConfig {
        ball_radius: a.ball,
        num_directions: a.directions,
        horizon: a.horizon,
        burn_in: a.burn_in,
    };
    let mut echo = Echo::new("lyap");
    echo.push("ball", fmt_f64(a.ball));
    echo.push("directions", a.directions);
    echo.push("horizon", a.horizon);
    echo.push("burn_in", a.burn_in);
    echo.push("inits", a.inits);
    match &a.net {
        Some(path) => {
            let net = load(path)?;
            if a.inits == 0 {
                return Err(CliError::Usage("--inits must be at least 1".into()));
            }
            echo.push("net", path.display());
            echo.push("seed", seed);
            let mut rows = Vec::with_capacity(a.inits);
            for j in 0..a.inits {
                let v0 = sample_initial_state(&net, seed, j);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[2, j as u64]));
                rows.push(effective_lyapunov(&net, &v0, &lyap, &mut rng)?);
            }
            emit(out, |w| {
                for (k, v) in &echo.0 {
                    writeln!(w, "# {k}={v}")?;
                }
                writeln!(w, "init,lambda")?;
                for (j, l) in rows.iter().enumerate() {
                    writeln!(w, "{j},{}", fmt_f64(*l))?;
                }
                Ok(())
            })
        }
        None => {
            let cfg = SweepConfig {
                gammas: parse_grid(&a.gammas)?,
                cs: parse_grid(&a.cs)?,
                n: a.n,
                networks_per_cell: a.networks,
                inits_per_network: a.inits,
                theta: a.theta,
                i_ext: a.i_ext,
                seed,
                ..SweepConfig::default()
            };
            echo.push("n", cfg.n);
            echo.push("gammas", join_floats(&cfg.gammas));
            echo.push("cs", join_floats(&cfg.cs));
            echo.push("networks_per_cell", cfg.networks_per_cell);
            echo.push("theta", fmt_f64(cfg.theta));
            echo.push("i_ext", fmt_f64(cfg.i_ext));
            echo.push("seed", cfg.seed);
            let cells = lyapunov_map(&cfg, &lyap)?;
            emit(out, |w| write_lyapunov_csv(w, &cells, &echo.0))
        }
    }
}
