//! Experiment runner: single-state reports, parameter sweeps written as CSV,
//! and Monte Carlo verification campaigns.
//!
//! Every campaign derives the randomness of task `i` from `task_seed(seed, i)`,
//! so results depend only on the seed and never on the number of workers.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coherence::{self, BasisSpec, DeltaConvention};
use crate::decompose::{self, DecomposeOptions, DecompositionReport};
use crate::divergence::Anchor;
use crate::error::{Error, Result};
use crate::par;
use crate::qstate::{random_induced, random_mixed, random_pure, seeded_rng, DensityMatrix, MatrixJson, StateRecipe};

/// Fixed CSV header of a sweep.
pub const SWEEP_COLUMNS: [&str; 15] = [
    "param",
    "C",
    "C_c",
    "C_l",
    "C_I",
    "C_L",
    "C_basis",
    "delta_C",
    "slack29",
    "slack36",
    "slack37",
    "slack41",
    "slack42",
    "converged",
    "walltime_ms",
];

/// Canonical name of a sweepable parameter; accepts the Greek letters too.
pub fn canonical_param(name: &str) -> Result<&'static str> {
    Ok(match name {
        "xi" | "ξ" => "xi",
        "theta" | "θ" => "theta",
        "phi" | "φ" => "phi",
        "mu" | "µ" | "μ" => "mu",
        other => return Err(Error::BadParameter(format!("unknown sweep parameter {other:?}"))),
    })
}

/// Sets `name` on the recipe, or on the inner pure state of a Werner mix.
pub fn apply_param(recipe: &mut StateRecipe, name: &str, value: f64) -> Result<()> {
    let name = canonical_param(name)?;
    if recipe.accepts_param(name) {
        return recipe.set_param(name, value);
    }
    if let Some(inner) = recipe.params.inner.as_deref_mut() {
        if inner.accepts_param(name) {
            return inner.set_param(name, value);
        }
    }
    Err(Error::BadParameter(format!(
        "parameter {name} does not apply to a {:?} recipe",
        recipe.kind
    )))
}

/// Evenly spaced grid including both end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::BadParameter(format!(
                "grid needs at least 2 points, got {}",
                self.points
            )));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::BadParameter("grid end points must be finite".into()));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            return self.stop;
        }
        self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }
}

fn default_basis() -> String {
    "computational".into()
}

/// A one-parameter sweep over a state family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub recipe: StateRecipe,
    /// One of `xi`, `theta`, `phi`, `mu` (Greek letters accepted).
    pub param: String,
    pub grid: Grid,
    /// Parameters held fixed, applied before the swept one.
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default = "default_basis")]
    pub basis: String,
    #[serde(default)]
    pub options: DecomposeOptions,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(recipe: StateRecipe, param: &str, grid: Grid) -> Self {
        Self {
            recipe,
            param: param.into(),
            grid,
            fixed: BTreeMap::new(),
            basis: default_basis(),
            options: DecomposeOptions::default(),
            output: None,
            seed: 0,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.options.intrinsic.optimizer.validate()?;
        self.options.basis_optimizer.validate()?;
        // Building the first and last states checks the recipe, the swept
        // parameter and the basis together.
        let first = self.state_at(self.grid.start)?;
        self.state_at(self.grid.stop)?;
        BasisSpec::named(&self.basis, first.dims())?;
        Ok(())
    }

    /// The recipe with fixed parameters and the swept parameter applied.
    pub fn recipe_at(&self, value: f64) -> Result<StateRecipe> {
        let mut r = self.recipe.clone();
        for (k, v) in &self.fixed {
            apply_param(&mut r, k, *v)?;
        }
        apply_param(&mut r, &self.param, value)?;
        Ok(r)
    }

    pub fn state_at(&self, value: f64) -> Result<DensityMatrix> {
        crate::qstate::make_state(&self.recipe_at(value)?)
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub param: f64,
    pub report: DecompositionReport,
    pub walltime_ms: f64,
}

/// CSV row in the fixed column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    #[serde(rename = "C")]
    pub total: f64,
    #[serde(rename = "C_c")]
    pub collective: f64,
    #[serde(rename = "C_l")]
    pub localized: f64,
    #[serde(rename = "C_I")]
    pub intrinsic: f64,
    #[serde(rename = "C_L")]
    pub local: f64,
    #[serde(rename = "C_basis")]
    pub basis: f64,
    #[serde(rename = "delta_C")]
    pub delta: f64,
    pub slack29: f64,
    pub slack36: f64,
    pub slack37: f64,
    pub slack41: f64,
    pub slack42: f64,
    pub converged: bool,
    pub walltime_ms: f64,
}

impl From<&SweepRecord> for SweepRow {
    fn from(r: &SweepRecord) -> Self {
        let p = &r.report;
        Self {
            param: r.param,
            total: p.total,
            collective: p.collective,
            localized: p.localized,
            intrinsic: p.intrinsic,
            local: p.local,
            basis: p.basis,
            delta: p.delta,
            slack29: p.slack29,
            slack36: p.slack36,
            slack37: p.slack37,
            slack41: p.slack41,
            slack42: p.slack42,
            converged: p.converged(),
            walltime_ms: r.walltime_ms,
        }
    }
}

/// Runs every grid point and returns the records in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let grid = spec.grid;
    let results = par::map_indexed(grid.points, |i| -> Result<SweepRecord> {
        let started = Instant::now();
        let param = grid.value(i);
        let rho = spec.state_at(param)?;
        let basis = BasisSpec::named(&spec.basis, rho.dims())?;
        let opts = spec.options.clone().with_seed(par::task_seed(spec.seed, i as u64));
        let report = decompose::check_inequalities(&rho, &basis, &opts)?;
        Ok(SweepRecord {
            param,
            report,
            walltime_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    });
    results.into_iter().collect()
}

/// Writes the header and one row per record.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(SweepRow::from(r))?;
    }
    if records.is_empty() {
        w.write_record(SWEEP_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV through a temporary sibling file that is renamed into
/// place, so a failed write never leaves a partial file at `path`.
pub fn write_sweep_file(records: &[SweepRecord], path: &Path) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let written = fs::File::create(&tmp)
        .map_err(Error::from)
        .and_then(|f| write_sweep_csv(records, std::io::BufWriter::new(f)))
        .and_then(|_| fs::rename(&tmp, path).map_err(Error::from));
    if written.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    written
}

/// Parses a sweep CSV back into rows.
pub fn read_sweep_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_COLUMNS {
        return Err(Error::BadParameter(format!("unexpected sweep header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Runs the sweep and, if the spec names an output file, writes it. On
/// failure any existing partial output at that path is removed.
pub fn run_sweep_to_file(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    let records = run_sweep(spec);
    match (&records, &spec.output) {
        (Ok(rs), Some(path)) => write_sweep_file(rs, path)?,
        (Err(_), Some(path)) => {
            let _ = fs::remove_file(path);
        }
        _ => {}
    }
    records
}

/// Report for one state. The decomposition is present for multipartite
/// states only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub dims: Vec<usize>,
    pub basis_label: String,
    pub total: f64,
    pub basis: f64,
    pub delta: f64,
    pub delta_convention: DeltaConvention,
    pub converged: bool,
    pub decomposition: Option<DecompositionReport>,
}

pub fn coherence_report(rho: &DensityMatrix, b: &BasisSpec, opts: &DecomposeOptions) -> Result<CoherenceReport> {
    if rho.num_subsystems() >= 2 {
        let d = decompose::check_inequalities(rho, b, opts)?;
        return Ok(CoherenceReport {
            dims: rho.dims().to_vec(),
            basis_label: d.basis_label.clone(),
            total: d.total,
            basis: d.basis,
            delta: d.delta,
            delta_convention: d.delta_convention,
            converged: d.converged(),
            decomposition: Some(d),
        });
    }
    let total = coherence::total_coherence(rho)?;
    let basis = coherence::basis_coherence(rho, b, &opts.basis_optimizer)?;
    let delta = match opts.delta_convention {
        DeltaConvention::Argmin => coherence::total_coherence(&basis.minimizer)?,
        DeltaConvention::Dephased => coherence::total_coherence(&rho.dephase(b)?)?,
    };
    Ok(CoherenceReport {
        dims: rho.dims().to_vec(),
        basis_label: b.label().to_string(),
        total,
        basis: basis.value,
        delta,
        delta_convention: opts.delta_convention,
        converged: basis.converged(),
        decomposition: None,
    })
}

/// Ensemble a random state is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Haar-random pure states.
    Pure,
    /// Hilbert-Schmidt mixed states.
    #[default]
    Mixed,
}

impl Ensemble {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pure" | "haar" => Ok(Self::Pure),
            "mixed" | "hs" | "hilbert_schmidt" | "hilbert-schmidt" => Ok(Self::Mixed),
            other => Err(Error::BadParameter(format!("unknown ensemble {other:?}"))),
        }
    }

    pub fn draw<R: rand::Rng + ?Sized>(self, dims: &[usize], rng: &mut R) -> Result<DensityMatrix> {
        match self {
            Self::Pure => Ok(random_pure(dims, rng)?.to_density()),
            Self::Mixed => random_mixed(dims, rng),
        }
    }
}

/// Triangle-inequality campaign for the √QJSD distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub dims: Vec<usize>,
    pub triples: usize,
    #[serde(default)]
    pub ensemble: Ensemble,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDimReport {
    pub dim: usize,
    pub triples: usize,
    /// Smallest of `D(a,b) + D(b,c) - D(a,c)` over all orderings of every triple.
    pub min_slack: f64,
    pub worst_index: usize,
    /// Regenerate with [`metric_triple`].
    pub worst_triple: [MatrixJson; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ensemble: Ensemble,
    pub seed: u64,
    pub per_dim: Vec<MetricDimReport>,
}

/// Triple number `index` of the campaign at dimension `dim`.
pub fn metric_triple(dim: usize, ensemble: Ensemble, seed: u64, index: usize) -> Result<[DensityMatrix; 3]> {
    let mut rng = seeded_rng(par::task_seed(par::task_seed(seed, dim as u64), index as u64));
    Ok([
        ensemble.draw(&[dim], &mut rng)?,
        ensemble.draw(&[dim], &mut rng)?,
        ensemble.draw(&[dim], &mut rng)?,
    ])
}

/// Smallest triangle slack over the three orderings of `(a, b, c)`.
pub fn triangle_slack(a: &DensityMatrix, b: &DensityMatrix, c: &DensityMatrix) -> Result<f64> {
    let (aa, ab) = (Anchor::new(a)?, Anchor::new(b)?);
    let dab = aa.distance_with_entropy(b.matrix(), ab.entropy())?;
    let ec = c.entropy()?;
    let dac = aa.distance_with_entropy(c.matrix(), ec)?;
    let dbc = ab.distance_with_entropy(c.matrix(), ec)?;
    Ok((dab + dbc - dac).min(dab + dac - dbc).min(dac + dbc - dab))
}

pub fn verify_metric(spec: &MetricSpec) -> Result<MetricReport> {
    if spec.triples == 0 || spec.dims.is_empty() {
        return Err(Error::BadParameter("need at least one dimension and one triple".into()));
    }
    let mut per_dim = Vec::with_capacity(spec.dims.len());
    for &dim in &spec.dims {
        if dim < 2 {
            return Err(Error::BadDimension(dim));
        }
        let slacks = par::map_indexed(spec.triples, |i| {
            let [a, b, c] = metric_triple(dim, spec.ensemble, spec.seed, i)?;
            triangle_slack(&a, &b, &c)
        });
        let mut worst = (f64::INFINITY, 0);
        for (i, s) in slacks.into_iter().enumerate() {
            let s = s?;
            if s < worst.0 {
                worst = (s, i);
            }
        }
        let triple = metric_triple(dim, spec.ensemble, spec.seed, worst.1)?;
        per_dim.push(MetricDimReport {
            dim,
            triples: spec.triples,
            min_slack: worst.0,
            worst_index: worst.1,
            worst_triple: triple.map(|t| t.to_json()),
        });
    }
    Ok(MetricReport {
        ensemble: spec.ensemble,
        seed: spec.seed,
        per_dim,
    })
}

/// Campaign comparing `π_ρ` with random product states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductSpec {
    /// Subsystem dimensions of each register tested, e.g. `[[2,2],[2,2,2]]`.
    pub systems: Vec<Vec<usize>>,
    pub states: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDimReport {
    pub dims: Vec<usize>,
    pub states: usize,
    pub trials: usize,
    /// Largest `D(ρ, π_ρ) - D(ρ, π)`; positive means a sampled product
    /// state beat `π_ρ`.
    pub max_violation: f64,
    pub worst_state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductReport {
    pub seed: u64,
    pub per_system: Vec<ProductDimReport>,
}

/// Mixed state number `index` of the product campaign on `dims`.
pub fn product_state(dims: &[usize], seed: u64, index: usize) -> Result<DensityMatrix> {
    let key = dims.iter().fold(seed, |s, &q| par::task_seed(s, q as u64));
    random_mixed(dims, &mut seeded_rng(par::task_seed(key, 2 * index as u64)))
}

fn product_trial_seed(dims: &[usize], seed: u64, index: usize) -> u64 {
    let key = dims.iter().fold(seed, |s, &q| par::task_seed(s, q as u64));
    par::task_seed(key, 2 * index as u64 + 1)
}

/// Runs the comparison for externally supplied states.
pub fn verify_product_states(states: &[DensityMatrix], trials: usize, seed: u64) -> Result<(f64, usize)> {
    if states.is_empty() {
        return Err(Error::BadParameter("need at least one state".into()));
    }
    let v = par::map_indexed(states.len(), |i| {
        decompose::verify_closest_product(&states[i], trials, par::task_seed(seed, i as u64))
    });
    let mut worst = (f64::NEG_INFINITY, 0);
    for (i, x) in v.into_iter().enumerate() {
        let x = x?;
        if x > worst.0 {
            worst = (x, i);
        }
    }
    Ok(worst)
}

pub fn verify_product(spec: &ProductSpec) -> Result<ProductReport> {
    if spec.states == 0 || spec.trials == 0 || spec.systems.is_empty() {
        return Err(Error::BadParameter(
            "need at least one register, one state and one trial".into(),
        ));
    }
    let mut per_system = Vec::with_capacity(spec.systems.len());
    for dims in &spec.systems {
        if dims.len() < 2 {
            return Err(Error::SingleSubsystem);
        }
        let v = par::map_indexed(spec.states, |i| {
            let rho = product_state(dims, spec.seed, i)?;
            decompose::verify_closest_product(&rho, spec.trials, product_trial_seed(dims, spec.seed, i))
        });
        let mut worst = (f64::NEG_INFINITY, 0);
        for (i, x) in v.into_iter().enumerate() {
            let x = x?;
            if x > worst.0 {
                worst = (x, i);
            }
        }
        per_system.push(ProductDimReport {
            dims: dims.clone(),
            states: spec.states,
            trials: spec.trials,
            max_violation: worst.0,
            worst_state: worst.1,
        });
    }
    Ok(ProductReport {
        seed: spec.seed,
        per_system,
    })
}

/// Random state request for the `sample` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub ensemble: Ensemble,
    /// Rank of an induced mixed state; full rank (Hilbert-Schmidt) if absent.
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

pub fn sample_state(spec: &SampleSpec) -> Result<DensityMatrix> {
    let mut rng = seeded_rng(spec.seed);
    match (spec.ensemble, spec.rank) {
        (Ensemble::Mixed, Some(k)) => random_induced(&spec.dims, k, &mut rng),
        (Ensemble::Pure, Some(k)) if k != 1 => Err(Error::BadParameter(format!("pure states have rank 1, not {k}"))),
        (e, _) => e.draw(&spec.dims, &mut rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimizerConfig;
    use crate::qstate::RecipeKind;
    use std::f64::consts::FRAC_PI_2;

    fn quick() -> DecomposeOptions {
        let cfg = OptimizerConfig {
            starts: 2,
            max_evals: 1500,
            ..Default::default()
        };
        DecomposeOptions {
            intrinsic: decompose::IntrinsicOptions {
                optimizer: cfg.clone(),
                terms: None,
            },
            basis_optimizer: cfg,
            delta_convention: DeltaConvention::Argmin,
        }
    }

    fn ising_spec(points: usize) -> SweepSpec {
        let mut s = SweepSpec::new(
            StateRecipe::ising_ground(0.0),
            "ξ",
            Grid {
                start: 0.0,
                stop: FRAC_PI_2,
                points,
            },
        );
        s.options = quick();
        s
    }

    #[test]
    fn grid_values_hit_end_points() {
        let g = Grid {
            start: 0.0,
            stop: 1.0,
            points: 11,
        };
        let v = g.values();
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[10], 1.0);
        assert!((v[3] - 0.3).abs() < 1e-15);
        assert!(Grid { points: 1, ..g }.validate().is_err());
    }

    #[test]
    fn params_route_to_inner_recipe() {
        let mut r = StateRecipe::werner(StateRecipe::ghz(3, 0.0), 0.5);
        apply_param(&mut r, "θ", 1.0).unwrap();
        apply_param(&mut r, "mu", 0.25).unwrap();
        assert_eq!(r.params.mu, Some(0.25));
        assert_eq!(r.params.inner.as_ref().unwrap().params.theta, Some(1.0));
        assert!(apply_param(&mut r, "xi", 1.0).is_err());
        assert!(apply_param(&mut r, "gamma", 1.0).is_err());
    }

    #[test]
    fn sweep_rejects_bad_specs() {
        let mut s = ising_spec(3);
        s.param = "theta".into();
        assert!(run_sweep(&s).is_err());
        let mut s = ising_spec(1);
        assert!(run_sweep(&s).is_err());
        s.grid.points = 3;
        s.basis = "nonsense".into();
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn csv_round_trip_and_determinism() {
        let s = ising_spec(4);
        let a = run_sweep(&s).unwrap();
        let b = run_sweep(&s).unwrap();
        let strip = |rs: &[SweepRecord]| {
            let mut buf = Vec::new();
            let rs: Vec<SweepRecord> = rs
                .iter()
                .cloned()
                .map(|mut r| {
                    r.walltime_ms = 0.0;
                    r
                })
                .collect();
            write_sweep_csv(&rs, &mut buf).unwrap();
            buf
        };
        let (ca, cb) = (strip(&a), strip(&b));
        assert_eq!(ca, cb);
        let text = String::from_utf8(ca.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 5);
        let rows = read_sweep_csv(ca.as_slice()).unwrap();
        assert_eq!(rows.len(), 4);
        for (row, rec) in rows.iter().zip(&a) {
            assert_eq!(row.total, rec.report.total);
            assert_eq!(row.param, rec.param);
        }
    }

    #[test]
    fn failed_sweep_removes_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        fs::write(&out, "stale").unwrap();
        let mut s = ising_spec(3);
        s.recipe = StateRecipe::werner(StateRecipe::ghz(3, 0.0), 0.5);
        s.param = "mu".into();
        s.grid = Grid {
            start: 0.0,
            stop: 2.0,
            points: 3,
        };
        s.output = Some(out.clone());
        assert!(run_sweep_to_file(&s).is_err());
        assert!(!out.exists());

        let mut s = ising_spec(2);
        s.output = Some(out.clone());
        run_sweep_to_file(&s).unwrap();
        let rows = read_sweep_csv(fs::File::open(&out).unwrap()).unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn degenerate_triple_has_zero_slack() {
        let mut rng = seeded_rng(3);
        let r = random_mixed(&[3], &mut rng).unwrap();
        assert_eq!(triangle_slack(&r, &r, &r).unwrap(), 0.0);
    }

    #[test]
    fn metric_worst_triple_is_reproducible() {
        let spec = MetricSpec {
            dims: vec![2, 3],
            triples: 200,
            ensemble: Ensemble::Mixed,
            seed: 9,
        };
        let rep = verify_metric(&spec).unwrap();
        for d in &rep.per_dim {
            assert!(d.min_slack >= -1e-12);
            let [a, b, c] = metric_triple(d.dim, spec.ensemble, spec.seed, d.worst_index).unwrap();
            assert_eq!(triangle_slack(&a, &b, &c).unwrap(), d.min_slack);
            assert_eq!(a.to_json(), d.worst_triple[0]);
        }
        assert_eq!(rep, verify_metric(&spec).unwrap());
    }

    #[test]
    fn product_inputs_do_not_violate() {
        let mut rng = seeded_rng(5);
        let states: Vec<DensityMatrix> = (0..5)
            .map(|_| {
                let a = random_mixed(&[2], &mut rng).unwrap();
                a.tensor(&random_mixed(&[2], &mut rng).unwrap())
            })
            .collect();
        let (v, _) = verify_product_states(&states, 200, 1).unwrap();
        assert!(v <= 0.0, "violation {v}");
    }

    #[test]
    fn single_system_report_has_no_decomposition() {
        let mut r = StateRecipe::new(RecipeKind::WernerMix);
        r.params.mu = Some(0.0);
        r.params.dim = Some(4);
        let rho = crate::qstate::make_state(&r).unwrap();
        let b = BasisSpec::computational(rho.dims()).unwrap();
        let rep = coherence_report(&rho, &b, &quick()).unwrap();
        assert_eq!(rep.total, 0.0);
        assert_eq!(rep.basis, 0.0);
        assert!(rep.decomposition.is_none());
    }

    #[test]
    fn sample_respects_rank() {
        let spec = SampleSpec {
            dims: vec![2, 2],
            ensemble: Ensemble::Mixed,
            rank: Some(2),
            seed: 4,
        };
        let rho = sample_state(&spec).unwrap();
        let ev = rho.eigenvalues().unwrap();
        assert!(ev[2].abs() < 1e-12 && ev[1] > 1e-6);
        assert_eq!(rho, sample_state(&spec).unwrap());
        let pure = SampleSpec {
            ensemble: Ensemble::Pure,
            rank: None,
            ..spec
        };
        assert!(sample_state(&pure).unwrap().entropy().unwrap() < 1e-9);
    }
}
