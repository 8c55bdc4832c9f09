//! `qcohere` command-line front end.
//!
//! Every subcommand takes `--config <file.json>` whose keys are the flag
//! names in snake case; flags given on the command line win over the file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qcohere::coherence::{BasisSpec, DeltaConvention};
use qcohere::decompose::DecomposeOptions;
use qcohere::harness::{self, Ensemble, MetricSpec, ProductSpec, SampleSpec, SweepSpec};
use qcohere::optim::OptimizerConfig;
use qcohere::qstate::{make_state, DensityMatrix, RecipeKind, StateRecipe};
use qcohere::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "qcohere",
    version,
    about = "Coherence measures built on the square-root quantum Jensen-Shannon divergence"
)]
struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true, env = "QCOHERE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Report every coherence quantity for one state as JSON.
    Coherence(CoherenceArgs),
    /// Run a parameter sweep and write CSV.
    Sweep(SweepArgs),
    /// Sample triples and report the smallest triangle slack per dimension.
    VerifyMetric(MetricArgs),
    /// Compare the product of marginals against random product states.
    VerifyProduct(ProductArgs),
    /// Print a random density matrix as JSON.
    Sample(SampleArgs),
}

/// Fills every `None` field of `$flags` from `$file`.
macro_rules! merge {
    ($flags:ident, $file:ident; $($f:ident),* $(,)?) => {
        $( if $flags.$f.is_none() { $flags.$f = $file.$f; } )*
    };
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

/// Optimizer flags shared by the subcommands that run searches.
#[derive(Args, Debug, Default, Deserialize, Serialize)]
#[serde(default)]
struct OptimizerFlags {
    /// Starts per search (explicit plus random).
    #[arg(long)]
    starts: Option<usize>,
    /// Objective evaluations allowed per start.
    #[arg(long)]
    max_evals: Option<usize>,
    /// Stall tolerance of the local search.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for the random starts.
    #[arg(long)]
    opt_seed: Option<u64>,
    /// Product terms in the separable ansatz.
    #[arg(long)]
    terms: Option<usize>,
    /// Incoherent state used for the basis gap: argmin or dephased.
    #[arg(long)]
    delta: Option<String>,
}

impl OptimizerFlags {
    fn merge(mut self, file: Self) -> Self {
        merge!(self, file; starts, max_evals, tol, opt_seed, terms, delta);
        self
    }

    fn apply(&self, opts: &mut DecomposeOptions) -> Result<()> {
        for cfg in [&mut opts.intrinsic.optimizer, &mut opts.basis_optimizer] {
            apply_optimizer(self, cfg);
        }
        if let Some(seed) = self.opt_seed {
            *opts = opts.clone().with_seed(seed);
        }
        if self.terms.is_some() {
            opts.intrinsic.terms = self.terms;
        }
        if let Some(d) = &self.delta {
            opts.delta_convention = match d.as_str() {
                "argmin" => DeltaConvention::Argmin,
                "dephased" => DeltaConvention::Dephased,
                other => return Err(Error::BadParameter(format!("unknown delta convention {other:?}"))),
            };
        }
        opts.intrinsic.optimizer.validate()?;
        opts.basis_optimizer.validate()
    }
}

fn apply_optimizer(flags: &OptimizerFlags, cfg: &mut OptimizerConfig) {
    if let Some(v) = flags.starts {
        cfg.starts = v;
    }
    if let Some(v) = flags.max_evals {
        cfg.max_evals = v;
    }
    if let Some(v) = flags.tol {
        cfg.tol = v;
    }
}

#[derive(Args, Debug, Default, Deserialize, Serialize)]
#[serde(default)]
struct CoherenceArgs {
    /// State family: ghz, w, bell, ising, plus, werner, random_pure, random_mixed.
    #[arg(long)]
    recipe: Option<String>,
    /// Pure state mixed in by a werner recipe (defaults to the uniform superposition).
    #[arg(long)]
    inner: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    qubits: Option<usize>,
    /// Dimension of a single-system register.
    #[arg(long)]
    dim: Option<usize>,
    /// Seed for the random recipes.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file holding an explicit matrix (`dims`, `re`, optional `im`).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Basis name (computational, hadamard) or a JSON file with a unitary.
    #[arg(long)]
    basis: Option<String>,
    /// Full recipe object; config file only.
    #[arg(skip)]
    state: Option<StateRecipe>,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerFlags,
    /// JSON config file with the same keys as the flags.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl CoherenceArgs {
    fn resolve(mut self) -> Result<Self> {
        let file: Self = load_config(self.config.as_deref())?;
        merge!(self, file; recipe, inner, theta, phi, xi, mu, qubits, dim, seed, matrix, basis, state);
        self.optimizer = self.optimizer.merge(file.optimizer);
        Ok(self)
    }

    fn recipe(&self) -> Result<StateRecipe> {
        let kind = match &self.recipe {
            Some(k) => RecipeKind::parse(k)?,
            None => {
                return self
                    .state
                    .clone()
                    .ok_or_else(|| Error::BadRecipe("give --recipe, --matrix or a state in --config".into()))
            }
        };
        let mut outer = StateRecipe::new(kind);
        let target = match (&self.inner, kind) {
            (Some(inner), RecipeKind::WernerMix) => {
                outer.params.inner = Some(Box::new(StateRecipe::new(RecipeKind::parse(inner)?)));
                outer.params.inner.as_deref_mut().unwrap()
            }
            (Some(_), _) => return Err(Error::BadRecipe("--inner only applies to werner".into())),
            (None, _) => &mut outer,
        };
        let p = &mut target.params;
        p.theta = self.theta;
        p.phi = self.phi;
        p.xi = self.xi;
        p.qubits = self.qubits;
        p.dim = self.dim;
        p.seed = self.seed;
        outer.params.mu = self.mu;
        Ok(outer)
    }

    fn state(&self) -> Result<DensityMatrix> {
        match &self.matrix {
            Some(path) => DensityMatrix::from_json_str(&fs::read_to_string(path)?),
            None => make_state(&self.recipe()?),
        }
    }
}

fn resolve_basis(name: Option<&str>, dims: &[usize]) -> Result<BasisSpec> {
    let name = name.unwrap_or("computational");
    let path = Path::new(name);
    if path.is_file() {
        let b = BasisSpec::from_json_str(&fs::read_to_string(path)?)?;
        if b.dim() != dims.iter().product::<usize>() {
            return Err(Error::DimensionMismatch(format!(
                "basis of dimension {} for state with dims {dims:?}",
                b.dim()
            )));
        }
        return Ok(b);
    }
    BasisSpec::named(name, dims)
}

fn run_coherence(args: CoherenceArgs) -> Result<()> {
    let args = args.resolve()?;
    let rho = args.state()?;
    let basis = resolve_basis(args.basis.as_deref(), rho.dims())?;
    let mut opts = DecomposeOptions::default();
    args.optimizer.apply(&mut opts)?;
    let report = harness::coherence_report(&rho, &basis, &opts)?;
    print_json(&report)
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Sweep description (JSON).
    #[arg(long, alias = "spec")]
    config: PathBuf,
    /// CSV destination; standard output if neither this nor the file names one.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid points, overriding the file.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    basis: Option<String>,
    #[command(flatten)]
    optimizer: OptimizerFlags,
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let mut spec: SweepSpec = serde_json::from_str(&fs::read_to_string(&args.config)?)?;
    if args.output.is_some() {
        spec.output = args.output;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(p) = args.points {
        spec.grid.points = p;
    }
    if let Some(b) = args.basis {
        spec.basis = b;
    }
    args.optimizer.apply(&mut spec.options)?;
    let records = harness::run_sweep_to_file(&spec)?;
    if spec.output.is_none() {
        let stdout = std::io::stdout();
        harness::write_sweep_csv(&records, stdout.lock())?;
    }
    Ok(())
}

#[derive(Args, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct MetricArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    triples: Option<usize>,
    /// pure or mixed.
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

fn run_verify_metric(mut args: MetricArgs) -> Result<()> {
    let file: MetricArgs = load_config(args.config.as_deref())?;
    merge!(args, file; dims, triples, ensemble, seed);
    let spec = MetricSpec {
        dims: args.dims.unwrap_or_else(|| vec![2, 3, 4, 8]),
        triples: args.triples.unwrap_or(10_000),
        ensemble: args.ensemble.as_deref().map_or(Ok(Ensemble::Mixed), Ensemble::parse)?,
        seed: args.seed.unwrap_or(0),
    };
    print_json(&harness::verify_metric(&spec)?)
}

#[derive(Args, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct ProductArgs {
    /// Comma-separated qubit counts, one register each.
    #[arg(long, value_delimiter = ',')]
    qubits: Option<Vec<usize>>,
    /// Explicit registers as subsystem dimension lists; config file only.
    #[arg(skip)]
    systems: Option<Vec<Vec<usize>>>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

fn run_verify_product(mut args: ProductArgs) -> Result<()> {
    let file: ProductArgs = load_config(args.config.as_deref())?;
    let flag_qubits = args.qubits.is_some();
    merge!(args, file; qubits, systems, states, trials, seed);
    let systems = match (args.qubits, args.systems) {
        (Some(q), s) if flag_qubits || s.is_none() => q.into_iter().map(|n| vec![2; n]).collect(),
        (_, Some(s)) => s,
        _ => vec![vec![2, 2], vec![2, 2, 2]],
    };
    let spec = ProductSpec {
        systems,
        states: args.states.unwrap_or(100),
        trials: args.trials.unwrap_or(1000),
        seed: args.seed.unwrap_or(0),
    };
    print_json(&harness::verify_product(&spec)?)
}

#[derive(Args, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct SampleArgs {
    /// Comma-separated subsystem dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// pure or mixed.
    #[arg(long)]
    ensemble: Option<String>,
    /// Rank of an induced mixed state.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

fn run_sample(mut args: SampleArgs) -> Result<()> {
    let file: SampleArgs = load_config(args.config.as_deref())?;
    merge!(args, file; dims, ensemble, rank, seed);
    let spec = SampleSpec {
        dims: args
            .dims
            .ok_or_else(|| Error::BadParameter("--dims is required".into()))?,
        ensemble: args.ensemble.as_deref().map_or(Ok(Ensemble::Mixed), Ensemble::parse)?,
        rank: args.rank,
        seed: args.seed.unwrap_or(0),
    };
    print_json(&harness::sample_state(&spec)?.to_json())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        qcohere::par::init_threads(n);
    }
    let result = match cli.command {
        Command::Coherence(a) => run_coherence(a),
        Command::Sweep(a) => run_sweep(a),
        Command::VerifyMetric(a) => run_verify_metric(a),
        Command::VerifyProduct(a) => run_verify_product(a),
        Command::Sample(a) => run_sample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
