//! Multi-start derivative-free minimization over products of probability
//! simplices and unit spheres.
//!
//! Each block is searched in unconstrained coordinates: logits for a
//! simplex (mapped through softmax) and a raw vector for a sphere (mapped by
//! normalization). The local method is a coordinate pattern search with
//! per-coordinate step sizes that grow on success and shrink on failure,
//! followed by a pattern move along the last sweep's displacement.
//!
//! The objective always receives the *feasible* point: simplex weights and
//! unit vectors concatenated in block order.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::qstate::seeded_rng;

/// One block of the search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    /// `n` nonnegative weights summing to one.
    Simplex(usize),
    /// A unit vector in `R^n`.
    Sphere(usize),
}

impl Block {
    fn len(&self) -> usize {
        match *self {
            Block::Simplex(n) | Block::Sphere(n) => n,
        }
    }
}

/// Concatenation of blocks describing the feasible set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Parametrization {
    blocks: Vec<Block>,
}

/// Smallest weight representable when mapping a feasible point to logits.
const MIN_WEIGHT: f64 = 1e-300;

impl Parametrization {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() || blocks.iter().any(|b| b.len() == 0) {
            return Err(Error::BadParameter("parametrization blocks must be nonempty".into()));
        }
        Ok(Self { blocks })
    }

    pub fn simplex(n: usize) -> Result<Self> {
        Self::new(vec![Block::Simplex(n)])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of coordinates (feasible and internal alike).
    pub fn len(&self) -> usize {
        self.blocks.iter().map(Block::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Maps internal coordinates to a feasible point, writing into `out`.
    pub fn to_feasible_into(&self, internal: &[f64], out: &mut [f64]) {
        let mut at = 0;
        for b in &self.blocks {
            let n = b.len();
            let src = &internal[at..at + n];
            let dst = &mut out[at..at + n];
            match b {
                Block::Simplex(_) => {
                    let max = src.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut total = 0.0;
                    for (o, &s) in dst.iter_mut().zip(src) {
                        *o = (s - max).exp();
                        total += *o;
                    }
                    for o in dst.iter_mut() {
                        *o /= total;
                    }
                }
                Block::Sphere(_) => {
                    let norm = src.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 && norm.is_finite() {
                        for (o, &s) in dst.iter_mut().zip(src) {
                            *o = s / norm;
                        }
                    } else {
                        dst.fill(0.0);
                        dst[0] = 1.0;
                    }
                }
            }
            at += n;
        }
    }

    pub fn to_feasible(&self, internal: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.to_feasible_into(internal, &mut out);
        out
    }

    /// Maps a feasible point to internal coordinates. Zero weights become
    /// very negative logits.
    pub fn to_internal(&self, feasible: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut at = 0;
        for b in &self.blocks {
            let n = b.len();
            let src = &feasible[at..at + n];
            match b {
                Block::Simplex(_) => out.extend(src.iter().map(|&w| w.max(MIN_WEIGHT).ln().max(-60.0))),
                Block::Sphere(_) => out.extend_from_slice(src),
            }
            at += n;
        }
        out
    }

    /// Checks that `feasible` lies in the feasible set (within `1e-8`).
    pub fn check_feasible(&self, feasible: &[f64]) -> Result<()> {
        if feasible.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "start has {} coordinates, parametrization has {}",
                feasible.len(),
                self.len()
            )));
        }
        let mut at = 0;
        for b in &self.blocks {
            let n = b.len();
            let src = &feasible[at..at + n];
            match b {
                Block::Simplex(_) => {
                    let total: f64 = src.iter().sum();
                    if src.iter().any(|&w| w < 0.0 || !w.is_finite()) || (total - 1.0).abs() > 1e-8 {
                        return Err(Error::BadParameter("start is not on the simplex".into()));
                    }
                }
                Block::Sphere(_) => {
                    let norm = src.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if (norm - 1.0).abs() > 1e-8 {
                        return Err(Error::BadParameter("start is not a unit vector".into()));
                    }
                }
            }
            at += n;
        }
        Ok(())
    }

    /// A random feasible point: flat Dirichlet on simplices, uniform on spheres.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut raw = Vec::with_capacity(self.len());
        for b in &self.blocks {
            match *b {
                Block::Simplex(n) => {
                    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                    let total: f64 = draws.iter().sum();
                    raw.extend(draws.iter().map(|x| x / total));
                }
                Block::Sphere(n) => {
                    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let norm = draws.iter().map(|v| v * v).sum::<f64>().sqrt();
                    raw.extend(draws.iter().map(|x| x / norm));
                }
            }
        }
        raw
    }
}

fn default_starts() -> usize {
    8
}
fn default_max_evals() -> usize {
    20_000
}
fn default_tol() -> f64 {
    1e-10
}
fn default_initial_step() -> f64 {
    0.5
}
fn default_min_step() -> f64 {
    1e-7
}
fn default_shrink() -> f64 {
    0.5
}
fn default_expand() -> f64 {
    2.0
}

/// Optimizer settings. `starts` counts explicit and random starts together;
/// random starts fill whatever the explicit ones leave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "default_starts")]
    pub starts: usize,
    /// Objective evaluations allowed per start.
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    /// A sweep improving the value by less than this counts as stalled.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    /// Converged once a stalled sweep leaves every step below this.
    #[serde(default = "default_min_step")]
    pub min_step: f64,
    #[serde(default = "default_shrink")]
    pub shrink: f64,
    #[serde(default = "default_expand")]
    pub expand: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: default_starts(),
            max_evals: default_max_evals(),
            tol: default_tol(),
            seed: 0,
            initial_step: default_initial_step(),
            min_step: default_min_step(),
            shrink: default_shrink(),
            expand: default_expand(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::BadParameter(format!("optimizer config: {msg}")));
        if self.starts == 0 {
            return bad("starts must be at least 1");
        }
        if self.max_evals == 0 {
            return bad("max_evals must be positive");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol must lie in (0, 1)");
        }
        if !(self.initial_step > 0.0) || !(self.min_step > 0.0) {
            return bad("step sizes must be positive");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.expand >= 1.0) {
            return bad("expand must be at least 1");
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Outcome of a multi-start run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub value: f64,
    /// Feasible point attaining `value`.
    pub params: Vec<f64>,
    /// Total objective evaluations over all starts.
    pub evaluations: usize,
    /// Whether the winning start met the convergence criterion.
    pub converged: bool,
    pub start_values: Vec<f64>,
    pub best_start: usize,
    /// Best value after each sweep of the winning start.
    pub trace: Vec<f64>,
}

struct StartOutcome {
    value: f64,
    params: Vec<f64>,
    evaluations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

fn local_search<F>(objective: &F, param: &Parametrization, cfg: &OptimizerConfig, start: &[f64]) -> StartOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let n = param.len();
    let mut feasible = vec![0.0; n];
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| -> f64 {
        *evaluations += 1;
        param.to_feasible_into(x, &mut feasible);
        finite_or_inf(objective(&feasible))
    };

    // Explicit feasible starts are scored exactly as supplied.
    let start_value = {
        evaluations += 1;
        finite_or_inf(objective(start))
    };
    let mut x = param.to_internal(start);
    let mut fx = eval(&x, &mut evaluations);
    let mut steps = vec![cfg.initial_step; n];
    let max_step = 8.0;
    let mut trace = Vec::new();
    let mut converged = false;

    while evaluations < cfg.max_evals && fx.is_finite() {
        let sweep_start = fx;
        let x_prev = x.clone();
        for i in 0..n {
            if evaluations >= cfg.max_evals {
                break;
            }
            let mut improved = false;
            for sign in [1.0, -1.0] {
                let old = x[i];
                x[i] = old + sign * steps[i];
                let fy = eval(&x, &mut evaluations);
                if fy < fx {
                    fx = fy;
                    improved = true;
                    steps[i] = (steps[i] * cfg.expand).min(max_step);
                    break;
                }
                x[i] = old;
            }
            if !improved {
                steps[i] *= cfg.shrink;
            }
        }
        if fx < sweep_start && evaluations < cfg.max_evals {
            let trial: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| 2.0 * a - b).collect();
            let ft = eval(&trial, &mut evaluations);
            if ft < fx {
                fx = ft;
                x = trial;
            }
        }
        trace.push(fx.min(start_value));
        let largest = steps.iter().copied().fold(0.0, f64::max);
        if sweep_start - fx < cfg.tol && largest < cfg.min_step {
            converged = true;
            break;
        }
        if fx == 0.0 {
            converged = true;
            break;
        }
    }

    if start_value <= fx {
        StartOutcome {
            value: start_value,
            params: start.to_vec(),
            evaluations,
            converged,
            trace,
        }
    } else {
        StartOutcome {
            value: fx,
            params: param.to_feasible(&x),
            evaluations,
            converged,
            trace,
        }
    }
}

/// Minimizes `objective` over the feasible set of `param`.
///
/// Every point in `explicit_starts` is evaluated as given, so the returned
/// value never exceeds the objective at any explicit start. The result is a
/// deterministic function of `(objective, param, cfg, explicit_starts)`,
/// independent of how starts are scheduled over workers.
pub fn minimize<F>(
    objective: F,
    param: &Parametrization,
    cfg: &OptimizerConfig,
    explicit_starts: &[Vec<f64>],
) -> Result<OptimizerResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    cfg.validate()?;
    for s in explicit_starts {
        param.check_feasible(s)?;
    }
    let random = cfg.starts.saturating_sub(explicit_starts.len());
    let total = explicit_starts.len() + random;

    let outcomes = par::map_indexed(total, |k| {
        let start = if k < explicit_starts.len() {
            explicit_starts[k].clone()
        } else {
            let mut rng = seeded_rng(par::task_seed(cfg.seed, k as u64));
            param.random_point(&mut rng)
        };
        local_search(&objective, param, cfg, &start)
    });

    let (best_start, best) = outcomes
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::OptimizerFailure("objective is non-finite at every start".into()));
    }
    Ok(OptimizerResult {
        value: best.value,
        params: best.params.clone(),
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        converged: best.converged,
        start_values: outcomes.iter().map(|o| o.value).collect(),
        best_start,
        trace: best.trace.clone(),
    })
}
