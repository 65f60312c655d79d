//! `key = value` run configuration.

use std::path::PathBuf;
use std::sync::Arc;

use crate::grid::{GridSpec, StepRule};
use crate::manufactured;
use crate::operators::SingularPolicy;
use crate::stepper::{ProblemDef, Seed, SpaceFn, TaylorOrder};

use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Sylvester,
    Kronecker,
    Both,
}

impl SolverChoice {
    pub fn sylvester(self) -> bool {
        matches!(self, SolverChoice::Sylvester | SolverChoice::Both)
    }

    pub fn kronecker(self) -> bool {
        matches!(self, SolverChoice::Kronecker | SolverChoice::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedMode {
    /// Both starting levels from the exact solution.
    Exact,
    /// Second-order Taylor start from `u(t0)`, `u_t(t0)`.
    Taylor,
    /// First-order Taylor start (`U¹ = U⁰ + l·u_t`).
    Taylor1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub l0: f64,
    pub l1: f64,
    pub js: Vec<usize>,
    pub t0: f64,
    pub t_final: f64,
    pub alpha: f64,
    pub a: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub step_rule: StepRule,
    pub solver: SolverChoice,
    pub sing_eps: Option<f64>,
    pub singular_policy: SingularPolicy,
    pub seed_mode: SeedMode,
    pub out_csv: Option<PathBuf>,
    pub out_dat: Option<PathBuf>,
    /// Seed for randomized checks; the solver itself is deterministic.
    pub rng_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            l0: manufactured::L0,
            l1: manufactured::L1,
            js: DESK_JS.to_vec(),
            t0: 0.0,
            t_final: manufactured::T_FINAL,
            alpha: manufactured::ALPHA,
            a: manufactured::A,
            lambda: manufactured::LAMBDA,
            gamma: manufactured::GAMMA,
            p: manufactured::P,
            q: manufactured::Q,
            step_rule: StepRule::Coupled,
            solver: SolverChoice::Both,
            sing_eps: None,
            singular_policy: SingularPolicy::Limit,
            seed_mode: SeedMode::Exact,
            out_csv: None,
            out_dat: None,
            rng_seed: 0x5eed,
        }
    }
}

impl RunConfig {
    /// Benchmark defaults for the given resolutions.
    pub fn with_js(js: &[usize]) -> Self {
        Self {
            js: js.to_vec(),
            ..Self::default()
        }
    }

    /// Grid reaching `T`, with at least the two steps the scheme needs.
    pub fn grid_spec(&self, j: usize) -> GridSpec {
        let mut spec = GridSpec::new(self.l0, self.l1, j)
            .with_t0(self.t0)
            .with_step_rule(self.step_rule)
            .until(self.t_final);
        spec.n_steps = spec.n_steps.max(MIN_STEPS);
        if let Some(eps) = self.sing_eps {
            spec = spec.with_sing_eps(eps);
        }
        spec
    }

    /// The manufactured problem with this configuration's coefficients.
    pub fn problem(&self) -> ProblemDef {
        let mut prob = manufactured::problem_with(self.a, self.lambda, self.gamma, self.p, self.q, self.alpha);
        prob.singular_policy = self.singular_policy;
        let t0 = self.t0;
        let order = match self.seed_mode {
            SeedMode::Exact => return prob,
            SeedMode::Taylor => TaylorOrder::Second,
            SeedMode::Taylor1 => TaylorOrder::First,
        };
        let u0: SpaceFn = Arc::new(move |x, y| manufactured::exact(x, y, t0));
        let u1: SpaceFn = Arc::new(move |x, y| -t0 * manufactured::exact(x, y, t0));
        prob.seed = Seed::Taylor {
            u0: u0.clone(),
            u1: u1.clone(),
            v0: u0,
            v1: u1,
            order,
            regularize: true,
        };
        prob
    }
}

/// Resolutions used when none are given programmatically.
pub const DESK_JS: [usize; 4] = [4, 9, 24, 49];

/// Smallest step count a run accepts.
pub const MIN_STEPS: usize = 2;

fn parse_f64(value: &str, line: usize, key: &str) -> Result<f64, BenchError> {
    let v: f64 = value.parse().map_err(|_| BenchError::Config {
        line,
        message: format!("{key}: expected a number, got {value:?}"),
    })?;
    if !v.is_finite() {
        return Err(BenchError::Config {
            line,
            message: format!("{key}: value must be finite"),
        });
    }
    Ok(v)
}

/// Parses a comma- or whitespace-separated list of resolutions.
pub fn parse_j_list(value: &str) -> Result<Vec<usize>, String> {
    let js: Result<Vec<usize>, _> = value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>())
        .collect();
    match js {
        Ok(js) if !js.is_empty() && js.iter().all(|&j| j >= 1) => Ok(js),
        _ => Err(format!("expected a list of positive integers, got {value:?}")),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, BenchError> {
    let mut cfg = RunConfig::default();
    let mut have_j = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(BenchError::Config {
                line,
                message: format!("expected `key = value`, got {content:?}"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = |message: String| BenchError::Config { line, message };
        match key {
            "L0" => cfg.l0 = parse_f64(value, line, key)?,
            "L1" => cfg.l1 = parse_f64(value, line, key)?,
            "J" => {
                cfg.js = parse_j_list(value).map_err(|m| bad(format!("J: {m}")))?;
                have_j = true;
            }
            "t0" => cfg.t0 = parse_f64(value, line, key)?,
            "T" => cfg.t_final = parse_f64(value, line, key)?,
            "alpha" => cfg.alpha = parse_f64(value, line, key)?,
            "a" => cfg.a = parse_f64(value, line, key)?,
            "lambda" => cfg.lambda = parse_f64(value, line, key)?,
            "gamma" => cfg.gamma = parse_f64(value, line, key)?,
            "p" => cfg.p = parse_f64(value, line, key)?,
            "q" => cfg.q = parse_f64(value, line, key)?,
            "step_rule" => {
                cfg.step_rule = if value == "coupled" {
                    StepRule::Coupled
                } else if let Some(l) = value.strip_prefix("independent:") {
                    let l = parse_f64(l.trim(), line, key)?;
                    if l <= 0.0 {
                        return Err(bad("step_rule: time step must be positive".into()));
                    }
                    StepRule::Independent(l)
                } else {
                    return Err(bad(format!(
                        "step_rule: expected `coupled` or `independent:<l>`, got {value:?}"
                    )));
                }
            }
            "solver" => {
                cfg.solver = match value {
                    "sylvester" => SolverChoice::Sylvester,
                    "kronecker" => SolverChoice::Kronecker,
                    "both" => SolverChoice::Both,
                    _ => return Err(bad(format!("solver: expected sylvester|kronecker|both, got {value:?}"))),
                }
            }
            "sing_eps" => {
                let eps = parse_f64(value, line, key)?;
                if eps < 0.0 {
                    return Err(bad("sing_eps must be non-negative".into()));
                }
                cfg.sing_eps = Some(eps);
            }
            "singular_policy" => {
                cfg.singular_policy = match value {
                    "zero" => SingularPolicy::Zero,
                    "limit" => SingularPolicy::Limit,
                    _ => return Err(bad(format!("singular_policy: expected zero|limit, got {value:?}"))),
                }
            }
            "seed_mode" => {
                cfg.seed_mode = match value {
                    "exact" => SeedMode::Exact,
                    "taylor" => SeedMode::Taylor,
                    "taylor1" => SeedMode::Taylor1,
                    _ => return Err(bad(format!("seed_mode: expected exact|taylor|taylor1, got {value:?}"))),
                }
            }
            "out_csv" => cfg.out_csv = Some(PathBuf::from(value)),
            "out_dat" => cfg.out_dat = Some(PathBuf::from(value)),
            "seed" => {
                cfg.rng_seed = value
                    .parse()
                    .map_err(|_| bad(format!("seed: expected an unsigned integer, got {value:?}")))?
            }
            _ => return Err(bad(format!("unknown key {key:?}"))),
        }
    }
    if !have_j {
        return Err(BenchError::MissingKey("J"));
    }
    if !(cfg.l1 > cfg.l0) {
        return Err(BenchError::Config {
            line: 0,
            message: format!("need L0 < L1, got [{}, {}]", cfg.l0, cfg.l1),
        });
    }
    if !(cfg.p > 1.0 && cfg.q > 1.0) {
        return Err(BenchError::Config {
            line: 0,
            message: "exponents must satisfy p, q > 1".into(),
        });
    }
    if !(0.0..=0.5).contains(&cfg.alpha) {
        return Err(BenchError::Config {
            line: 0,
            message: format!("alpha must lie in [0, 1/2], got {}", cfg.alpha),
        });
    }
    Ok(cfg)
}
