//! Uniform space-time mesh, sampled fields and the discrete error functionals.
//!
//! Matrices follow the convention `values[[j, m]] = z(x_j, y_m)`: the row index
//! walks the x-nodes and the column index walks the y-nodes.

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidSpec(String),
    #[error("sampled function is not finite at (x, y) = ({x}, {y}): got {value}")]
    NonFinite { x: f64, y: f64, value: f64 },
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("trajectory level {level} has shape {found:?}, grid expects {expected:?}")]
    ShapeMismatch {
        level: usize,
        found: (usize, usize),
        expected: (usize, usize),
    },
    #[error("exact solution vanishes at level {level}; relative error undefined")]
    DegenerateExact { level: usize },
}

/// How the time step is tied to the space step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `l = h^(3/2)`.
    Coupled,
    /// Explicit time step.
    Independent(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub l0: f64,
    pub l1: f64,
    /// Interior resolution; the mesh has `j + 2` nodes per axis.
    pub j: usize,
    pub t0: f64,
    pub n_steps: usize,
    pub step_rule: StepRule,
    /// Singular-node threshold; `None` means `h / 100`.
    pub sing_eps: Option<f64>,
}

impl GridSpec {
    /// Square domain `[l0, l1]^2`, coupled step rule, a single step.
    pub fn new(l0: f64, l1: f64, j: usize) -> Self {
        Self {
            l0,
            l1,
            j,
            t0: 0.0,
            n_steps: 1,
            step_rule: StepRule::Coupled,
            sing_eps: None,
        }
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }

    pub fn with_step_rule(mut self, rule: StepRule) -> Self {
        self.step_rule = rule;
        self
    }

    pub fn with_sing_eps(mut self, eps: f64) -> Self {
        self.sing_eps = Some(eps);
        self
    }

    pub fn h(&self) -> f64 {
        (self.l1 - self.l0) / (self.j as f64 + 1.0)
    }

    pub fn l(&self) -> f64 {
        match self.step_rule {
            StepRule::Coupled => self.h().powf(1.5),
            StepRule::Independent(l) => l,
        }
    }

    /// Sets `n_steps = ceil((t_final - t0) / l)` so the last level reaches `t_final`.
    pub fn until(mut self, t_final: f64) -> Self {
        let l = self.l();
        let steps = ((t_final - self.t0) / l).ceil();
        self.n_steps = if steps.is_finite() && steps > 0.0 {
            steps as usize
        } else {
            0
        };
        self
    }
}

/// Built mesh. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub h: f64,
    pub l: f64,
    pub sigma: f64,
    pub t0: f64,
    pub n_steps: usize,
    pub sing_eps: f64,
    /// Indices of x-nodes (equivalently y-nodes) with `|x_j| <= sing_eps`.
    pub singular_nodes: Vec<usize>,
}

pub fn build_grid(spec: &GridSpec) -> Result<Grid, GridError> {
    if !(spec.l0.is_finite() && spec.l1.is_finite()) || spec.l1 <= spec.l0 {
        return Err(GridError::InvalidSpec(format!(
            "need L1 > L0, got L0 = {}, L1 = {}",
            spec.l0, spec.l1
        )));
    }
    if spec.j < 1 {
        return Err(GridError::InvalidSpec("J must be at least 1".into()));
    }
    if !(spec.t0.is_finite() && spec.t0 >= 0.0) {
        return Err(GridError::InvalidSpec(format!("t0 must be >= 0, got {}", spec.t0)));
    }
    let h = spec.h();
    let l = spec.l();
    if !(l.is_finite() && l > 0.0) {
        return Err(GridError::InvalidSpec(format!("time step must be positive, got {l}")));
    }
    let sing_eps = spec.sing_eps.unwrap_or(h / 100.0);
    if !(sing_eps.is_finite() && sing_eps >= 0.0) {
        return Err(GridError::InvalidSpec(format!("sing_eps must be >= 0, got {sing_eps}")));
    }
    let nodes: Vec<f64> = (0..spec.j + 2).map(|k| spec.l0 + k as f64 * h).collect();
    let singular_nodes = nodes
        .iter()
        .enumerate()
        .filter(|(_, x)| x.abs() <= sing_eps)
        .map(|(k, _)| k)
        .collect();
    Ok(Grid {
        x: nodes.clone(),
        y: nodes,
        h,
        l,
        sigma: (l * l) / (h * h),
        t0: spec.t0,
        n_steps: spec.n_steps,
        sing_eps,
        singular_nodes,
    })
}

impl Grid {
    /// Nodes per axis (`J + 2`).
    pub fn size(&self) -> usize {
        self.x.len()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.l
    }

    pub fn is_singular(&self, k: usize) -> bool {
        self.singular_nodes.binary_search(&k).is_ok()
    }
}

/// Net function at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Array2<f64>,
    pub level: usize,
}

impl Field {
    pub fn zeros(size: usize, level: usize) -> Self {
        Self {
            values: Array2::zeros((size, size)),
            level,
        }
    }

    pub fn new(values: Array2<f64>, level: usize) -> Self {
        Self { values, level }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// The unknown pair `(U, V)` at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub u: Field,
    pub v: Field,
}

impl CoupledState {
    pub fn new(u: Field, v: Field) -> Self {
        debug_assert_eq!(u.values.dim(), v.values.dim());
        debug_assert_eq!(u.level, v.level);
        Self { u, v }
    }

    pub fn zeros(size: usize, level: usize) -> Self {
        Self::new(Field::zeros(size, level), Field::zeros(size, level))
    }

    pub fn level(&self) -> usize {
        self.u.level
    }

    /// `(‖U‖₂² + ‖V‖₂²)^(1/2)`.
    pub fn norm(&self) -> f64 {
        l2_norm(&self.u.values).hypot(l2_norm(&self.v.values))
    }

    pub fn sup_norm(&self) -> f64 {
        self.u
            .values
            .iter()
            .chain(self.v.values.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Entrywise L2 (Frobenius) norm, computed with scaling so it does not overflow.
pub fn l2_norm(x: &Array2<f64>) -> f64 {
    let scale = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * sum.sqrt()
}

pub fn sample<F>(f: F, grid: &Grid) -> Result<Field, GridError>
where
    F: Fn(f64, f64) -> f64,
{
    sample_at_level(f, grid, 0)
}

pub fn sample_at_level<F>(f: F, grid: &Grid, level: usize) -> Result<Field, GridError>
where
    F: Fn(f64, f64) -> f64,
{
    let n = grid.size();
    let mut values = Array2::zeros((n, n));
    for (j, &x) in grid.x.iter().enumerate() {
        for (m, &y) in grid.y.iter().enumerate() {
            let value = f(x, y);
            if !value.is_finite() {
                return Err(GridError::NonFinite { x, y, value });
            }
            values[[j, m]] = value;
        }
    }
    Ok(Field::new(values, level))
}

/// `Er` and `RelEr` for one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentError {
    pub er: f64,
    pub rel: f64,
}

/// Error functionals for both unknowns plus their combined maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub u: ComponentError,
    pub v: ComponentError,
}

impl ErrorReport {
    pub fn er(&self) -> f64 {
        self.u.er
    }

    pub fn rel(&self) -> f64 {
        self.u.rel
    }

    pub fn combined(&self) -> ComponentError {
        ComponentError {
            er: self.u.er.max(self.v.er),
            rel: self.u.rel.max(self.v.rel),
        }
    }
}

/// `Er = max_n ‖Uⁿ − uⁿ‖₂` and `RelEr = max_n ‖Uⁿ − uⁿ‖₂ / ‖uⁿ‖₂` over every
/// node of the mesh, boundary included.
pub fn discrete_errors<E>(trajectory: &[CoupledState], exact: E, grid: &Grid) -> Result<ErrorReport, GridError>
where
    E: Fn(f64, f64, f64) -> (f64, f64),
{
    if trajectory.is_empty() {
        return Err(GridError::EmptyTrajectory);
    }
    let n = grid.size();
    let mut report = ErrorReport {
        u: ComponentError { er: 0.0, rel: 0.0 },
        v: ComponentError { er: 0.0, rel: 0.0 },
    };
    for state in trajectory {
        let level = state.level();
        for found in [state.u.values.dim(), state.v.values.dim()] {
            if found != (n, n) {
                return Err(GridError::ShapeMismatch {
                    level,
                    found,
                    expected: (n, n),
                });
            }
        }
        let t = grid.time(level);
        let mut exact_u = Array2::zeros((n, n));
        let mut exact_v = Array2::zeros((n, n));
        for (j, &x) in grid.x.iter().enumerate() {
            for (m, &y) in grid.y.iter().enumerate() {
                let (u, v) = exact(x, y, t);
                exact_u[[j, m]] = u;
                exact_v[[j, m]] = v;
            }
        }
        for (numeric, exact_values, slot) in [
            (&state.u.values, &exact_u, &mut report.u),
            (&state.v.values, &exact_v, &mut report.v),
        ] {
            let diff = l2_norm(&(numeric - exact_values));
            let denom = l2_norm(exact_values);
            let rel = if diff == 0.0 {
                0.0
            } else if denom == 0.0 {
                return Err(GridError::DegenerateExact { level });
            } else {
                diff / denom
            };
            slot.er = slot.er.max(diff);
            slot.rel = slot.rel.max(rel);
        }
    }
    Ok(report)
}
