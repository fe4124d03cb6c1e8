//! Explicit finite-difference scheme for the coupled system. Each step treats
//! the velocity coupling and the damping implicitly through a per-node 2x2
//! solve; everything else is the classical three-level leapfrog stencil.
//!
//! Two step paths compute the same level: [`step_closed_form`] applies the
//! twelve precomputed per-node constants, [`step_reference_solve`] assembles
//! and inverts the 2x2 system directly. They must agree to rounding and are
//! tested against each other.

use crate::model::{GridSpec, InitialData, ModelError, PhysicalConfig, SampledInitialData};
use crate::model::sample_profile;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cfl_factor must lie in (0, 1], got {0}")]
    BadCflFactor(f64),
    #[error("final time must be finite and nonnegative, got {0}")]
    BadFinalTime(f64),
    #[error("wave speed a must be positive and finite, got {0}")]
    BadWaveSpeed(f64),
    #[error("dt = {dt} violates the stability bound {max} = min(1, 1/sqrt(a)) * dx")]
    CflViolation { dt: f64, max: f64 },
    #[error("non-finite value detected at step {step}")]
    Instability { step: u64 },
}

/// Largest stable time step for spacing `dx`: min(1, 1/sqrt(a)) * dx.
/// The u-stencil needs a * (dt/dx)^2 <= 1, the y-stencil (dt/dx)^2 <= 1.
pub fn max_stable_dt(a: f64, dx: f64) -> f64 {
    (1.0f64).min(1.0 / a.sqrt()) * dx
}

/// Time discretization: dt, lambda = (dt/dx)^2, and the step count covering
/// the requested horizon. dt is always cfl_factor * max_stable_dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSpec {
    dt: f64,
    lambda: f64,
    t_final: f64,
    steps: u64,
    cfl_factor: f64,
}

impl TimeSpec {
    pub fn new(a: f64, grid: &GridSpec, t_final: f64, cfl_factor: f64) -> Result<Self, SchemeError> {
        if !a.is_finite() || a <= 0.0 {
            return Err(SchemeError::BadWaveSpeed(a));
        }
        if !t_final.is_finite() || t_final < 0.0 {
            return Err(SchemeError::BadFinalTime(t_final));
        }
        if !cfl_factor.is_finite() || cfl_factor <= 0.0 || cfl_factor > 1.0 {
            return Err(SchemeError::BadCflFactor(cfl_factor));
        }
        let dx = grid.dx();
        let dt = cfl_factor * max_stable_dt(a, dx);
        let lambda = (dt * dt) / (dx * dx);
        // The relative backoff keeps T/dt from ceiling up a whole extra step
        // when the quotient lands a few ulps above an integer.
        let steps = if t_final == 0.0 {
            0
        } else {
            (t_final / dt * (1.0 - 1e-12)).ceil() as u64
        };
        Ok(TimeSpec { dt, lambda, t_final, steps, cfl_factor })
    }

    /// Same discretization, horizon given as an exact step count.
    pub fn from_step_count(
        a: f64,
        grid: &GridSpec,
        steps: u64,
        cfl_factor: f64,
    ) -> Result<Self, SchemeError> {
        let mut spec = TimeSpec::new(a, grid, 0.0, cfl_factor)?;
        spec.steps = steps;
        spec.t_final = steps as f64 * spec.dt;
        Ok(spec)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn cfl_factor(&self) -> f64 {
        self.cfl_factor
    }
}

/// The twelve per-node update constants plus the 2x2 determinant they share.
/// Vectors are indexed by node; boundary entries are computed but unused.
#[derive(Debug, Clone)]
pub struct NodeCoefficients {
    pub det: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
    pub xi: Vec<f64>,
    pub kappa: Vec<f64>,
    pub alpha_t: Vec<f64>,
    pub beta_t: Vec<f64>,
    pub gamma_t: Vec<f64>,
    pub rho_t: Vec<f64>,
    pub xi_t: Vec<f64>,
    pub kappa_t: Vec<f64>,
}

/// The per-node 2x2 system matrix applied to the unknown level (u, y):
/// [[1 + c dt/2, b dt/2], [-b dt/2, 1]].
pub fn node_matrix(b: f64, c: f64, dt: f64) -> [[f64; 2]; 2] {
    [[1.0 + c * dt / 2.0, b * dt / 2.0], [-(b * dt / 2.0), 1.0]]
}

/// det = 1 + c dt/2 + (b dt/2)^2; at least 1 whenever c >= 0.
pub fn node_matrix_det(b: f64, c: f64, dt: f64) -> f64 {
    1.0 + c * dt / 2.0 + (b * dt / 2.0) * (b * dt / 2.0)
}

/// Evaluates the twelve constants at every node. Fails if dt breaks the
/// stability bound for the grid.
pub fn precompute_coefficients(
    config: &PhysicalConfig,
    grid: &GridSpec,
    dt: f64,
) -> Result<NodeCoefficients, SchemeError> {
    let dx = grid.dx();
    let max = max_stable_dt(config.a, dx);
    if !dt.is_finite() || dt <= 0.0 || dt > max * (1.0 + 1e-12) {
        return Err(SchemeError::CflViolation { dt, max });
    }
    let a = config.a;
    let b = sample_profile(&config.b, grid);
    let c = sample_profile(&config.c, grid);
    let m = grid.node_count();
    let mut k = NodeCoefficients {
        det: Vec::with_capacity(m),
        alpha: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
        gamma: Vec::with_capacity(m),
        rho: Vec::with_capacity(m),
        xi: Vec::with_capacity(m),
        kappa: Vec::with_capacity(m),
        alpha_t: Vec::with_capacity(m),
        beta_t: Vec::with_capacity(m),
        gamma_t: Vec::with_capacity(m),
        rho_t: Vec::with_capacity(m),
        xi_t: Vec::with_capacity(m),
        kappa_t: Vec::with_capacity(m),
    };
    for j in 0..m {
        let det = node_matrix_det(b[j], c[j], dt);
        debug_assert!(det >= 1.0);
        let p = b[j] * dt;
        k.det.push(det);
        k.alpha.push(2.0 / det);
        k.beta.push(a / det);
        k.gamma.push((c[j] * dt / 2.0 + (b[j] * dt / 2.0) * (b[j] * dt / 2.0) - 1.0) / det);
        k.rho.push(p / det);
        k.xi.push(p / (2.0 * det));
        k.kappa.push(p / det);
        k.alpha_t.push(2.0 - p * p / (2.0 * det));
        k.beta_t.push(1.0 - p * p / (4.0 * det));
        k.gamma_t.push(p * p / (2.0 * det) - 1.0);
        k.rho_t.push(p / det);
        k.xi_t.push(a * p / (2.0 * det));
        k.kappa_t.push(-p / det);
    }
    Ok(k)
}

/// Level 1 from the initial data via the second-order ghost start:
///
/// ```text
/// u1 = u0 + dt*du0 + dt^2/2 * (a*D2 u0 - b*dy0 - c*du0)
/// y1 = y0 + dt*dy0 + dt^2/2 * (   D2 y0 + b*du0)
/// ```
///
/// where du0/dy0 are the initial velocities and D2 the second difference.
/// Substituting the result back into the n = 0 step equations together with
/// the ghost levels u^{-1} = u1 - 2 dt du0, y^{-1} = y1 - 2 dt dy0 leaves
/// only rounding-level residuals.
pub fn first_step(
    init: &SampledInitialData,
    b: &[f64],
    c: &[f64],
    a: f64,
    dx: f64,
    dt: f64,
) -> (Vec<f64>, Vec<f64>) {
    let m = init.u0.len();
    let mut u = vec![0.0; m];
    let mut y = vec![0.0; m];
    let (u0, du0, y0, dy0) = (&init.u0, &init.u1, &init.y0, &init.y1);
    for j in 1..m - 1 {
        let d2u = (u0[j + 1] - 2.0 * u0[j] + u0[j - 1]) / (dx * dx);
        let d2y = (y0[j + 1] - 2.0 * y0[j] + y0[j - 1]) / (dx * dx);
        let au = a * d2u - b[j] * dy0[j] - c[j] * du0[j];
        let ay = d2y + b[j] * du0[j];
        // Grouped so u0 enters through a single rounding; the ghost-step
        // residual is divided by dt^2 and feels every ulp lost here.
        u[j] = u0[j] + (dt * du0[j] + 0.5 * dt * dt * au);
        y[j] = y0[j] + (dt * dy0[j] + 0.5 * dt * dt * ay);
    }
    (u, y)
}

/// One step via the twelve precomputed constants. Interior nodes follow
///
/// ```text
/// u' = (1-a l) alpha u + l beta (uR+uL) + gamma u_prev
///      - (1-l) rho y - l xi (yR+yL) + kappa y_prev
/// y' = (1-l) alpha~ y + l beta~ (yR+yL) + gamma~ y_prev
///      + (1-a l) rho~ u + l xi~ (uR+uL) + kappa~ u_prev
/// ```
///
/// with l = lambda; boundaries stay zero.
#[allow(clippy::too_many_arguments)]
pub fn step_closed_form(
    u_prev: &[f64],
    u_curr: &[f64],
    y_prev: &[f64],
    y_curr: &[f64],
    coeffs: &NodeCoefficients,
    lambda: f64,
    a: f64,
    u_next: &mut [f64],
    y_next: &mut [f64],
) {
    let m = u_curr.len();
    let su = 1.0 - a * lambda;
    let sy = 1.0 - lambda;
    u_next[0] = 0.0;
    y_next[0] = 0.0;
    u_next[m - 1] = 0.0;
    y_next[m - 1] = 0.0;
    for j in 1..m - 1 {
        let un = u_curr[j + 1] + u_curr[j - 1];
        let yn = y_curr[j + 1] + y_curr[j - 1];
        u_next[j] = su * coeffs.alpha[j] * u_curr[j] + lambda * coeffs.beta[j] * un
            + coeffs.gamma[j] * u_prev[j]
            - sy * coeffs.rho[j] * y_curr[j]
            - lambda * coeffs.xi[j] * yn
            + coeffs.kappa[j] * y_prev[j];
        y_next[j] = sy * coeffs.alpha_t[j] * y_curr[j] + lambda * coeffs.beta_t[j] * yn
            + coeffs.gamma_t[j] * y_prev[j]
            + su * coeffs.rho_t[j] * u_curr[j]
            + lambda * coeffs.xi_t[j] * un
            + coeffs.kappa_t[j] * u_prev[j];
    }
}

/// One step by assembling and inverting the per-node 2x2 system
/// M (u', y')^T = (A, B)^T directly. Algebraically identical to
/// [`step_closed_form`]; kept as an independently-coded reference path.
#[allow(clippy::too_many_arguments)]
pub fn step_reference_solve(
    u_prev: &[f64],
    u_curr: &[f64],
    y_prev: &[f64],
    y_curr: &[f64],
    b: &[f64],
    c: &[f64],
    dt: f64,
    lambda: f64,
    a: f64,
    u_next: &mut [f64],
    y_next: &mut [f64],
) {
    let m = u_curr.len();
    u_next[0] = 0.0;
    y_next[0] = 0.0;
    u_next[m - 1] = 0.0;
    y_next[m - 1] = 0.0;
    for j in 1..m - 1 {
        let mat = node_matrix(b[j], c[j], dt);
        let det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0];
        let rhs_u = 2.0 * (1.0 - a * lambda) * u_curr[j]
            + (c[j] * dt / 2.0 - 1.0) * u_prev[j]
            + a * lambda * (u_curr[j + 1] + u_curr[j - 1])
            + b[j] / 2.0 * dt * y_prev[j];
        let rhs_y = 2.0 * (1.0 - lambda) * y_curr[j]
            + lambda * (y_curr[j + 1] + y_curr[j - 1])
            - y_prev[j]
            - b[j] / 2.0 * dt * u_prev[j];
        u_next[j] = (mat[1][1] * rhs_u - mat[0][1] * rhs_y) / det;
        y_next[j] = (mat[0][0] * rhs_y - mat[1][0] * rhs_u) / det;
    }
}

/// Which of the two step paths drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StepMode {
    ClosedForm,
    ReferenceSolve,
}

impl Default for StepMode {
    fn default() -> Self {
        StepMode::ClosedForm
    }
}

impl std::fmt::Display for StepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepMode::ClosedForm => write!(f, "closed-form"),
            StepMode::ReferenceSolve => write!(f, "solve"),
        }
    }
}

impl std::str::FromStr for StepMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed-form" => Ok(StepMode::ClosedForm),
            "solve" => Ok(StepMode::ReferenceSolve),
            _ => Err(format!("unknown step mode '{s}' (closed-form or solve)")),
        }
    }
}

impl TryFrom<String> for StepMode {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<StepMode> for String {
    fn from(m: StepMode) -> String {
        m.to_string()
    }
}

/// Final two levels of a run plus the step index of the newest one.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub y_prev: Vec<f64>,
    pub y_curr: Vec<f64>,
    pub n: u64,
}

/// Read-only view of three consecutive levels handed to observers after the
/// newest one is computed. `n` indexes the middle level, so an energy record
/// built from the view belongs to time `t = n * dt`.
pub struct LevelView<'a> {
    pub n: u64,
    pub t: f64,
    pub u_prev: &'a [f64],
    pub u_curr: &'a [f64],
    pub u_next: &'a [f64],
    pub y_prev: &'a [f64],
    pub y_curr: &'a [f64],
    pub y_next: &'a [f64],
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Runs the scheme over the whole horizon. The observer fires for level
/// indices n = 0 (right after the ghost start, with the ghost level in the
/// `prev` slot), every multiple of `stride`, and the final index; non-finite
/// values are detected at the same points and abort the run.
#[allow(clippy::too_many_arguments)]
pub fn run(
    config: &PhysicalConfig,
    grid: &GridSpec,
    time: &TimeSpec,
    init: &InitialData,
    mode: StepMode,
    stride: u64,
    mut observe: impl FnMut(LevelView<'_>),
) -> Result<WaveState, SchemeError> {
    let stride = stride.max(1);
    let dt = time.dt();
    let lambda = time.lambda();
    let a = config.a;
    let sampled = init.sample(grid)?;
    let coeffs = precompute_coefficients(config, grid, dt)?;
    let b = sample_profile(&config.b, grid);
    let c = sample_profile(&config.c, grid);
    let steps = time.steps();

    if steps == 0 {
        return Ok(WaveState {
            u_prev: sampled.u0.clone(),
            u_curr: sampled.u0,
            y_prev: sampled.y0.clone(),
            y_curr: sampled.y0,
            n: 0,
        });
    }

    let (u1, y1) = first_step(&sampled, &b, &c, a, grid.dx(), dt);
    if !all_finite(&u1) || !all_finite(&y1) {
        return Err(SchemeError::Instability { step: 1 });
    }

    // Ghost level used only by the n = 0 observation: the centered velocity
    // at t = 0 then reduces to the sampled initial velocity.
    let ghost_u: Vec<f64> = u1
        .iter()
        .zip(&sampled.u1)
        .map(|(un, v)| un - 2.0 * dt * v)
        .collect();
    let ghost_y: Vec<f64> = y1
        .iter()
        .zip(&sampled.y1)
        .map(|(yn, v)| yn - 2.0 * dt * v)
        .collect();
    observe(LevelView {
        n: 0,
        t: 0.0,
        u_prev: &ghost_u,
        u_curr: &sampled.u0,
        u_next: &u1,
        y_prev: &ghost_y,
        y_curr: &sampled.y0,
        y_next: &y1,
    });

    let mut u_prev = sampled.u0;
    let mut u_curr = u1;
    let mut y_prev = sampled.y0;
    let mut y_curr = y1;
    let m = grid.node_count();
    let mut u_next = vec![0.0; m];
    let mut y_next = vec![0.0; m];

    for n in 1..steps {
        match mode {
            StepMode::ClosedForm => step_closed_form(
                &u_prev, &u_curr, &y_prev, &y_curr, &coeffs, lambda, a, &mut u_next, &mut y_next,
            ),
            StepMode::ReferenceSolve => step_reference_solve(
                &u_prev, &u_curr, &y_prev, &y_curr, &b, &c, dt, lambda, a, &mut u_next,
                &mut y_next,
            ),
        }
        if n % stride == 0 || n == steps - 1 {
            if !all_finite(&u_next) || !all_finite(&y_next) {
                return Err(SchemeError::Instability { step: n + 1 });
            }
            observe(LevelView {
                n,
                t: n as f64 * dt,
                u_prev: &u_prev,
                u_curr: &u_curr,
                u_next: &u_next,
                y_prev: &y_prev,
                y_curr: &y_curr,
                y_next: &y_next,
            });
        }
        std::mem::swap(&mut u_prev, &mut u_curr);
        std::mem::swap(&mut u_curr, &mut u_next);
        std::mem::swap(&mut y_prev, &mut y_curr);
        std::mem::swap(&mut y_curr, &mut y_next);
    }

    Ok(WaveState { u_prev, u_curr, y_prev, y_curr, n: steps })
}
