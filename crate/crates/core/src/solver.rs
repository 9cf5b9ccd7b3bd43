//! Time integration of the periodic NLS-KdV system
//!
//! ```text
//! i u_t + u_xx = α u v + β |u|² u
//! v_t + v_xxx + ½ (v²)_x = γ (|u|²)_x
//! ```
//!
//! The production scheme is Strang splitting with the exact linear flow; the
//! oracle is classical RK4 on the full right-hand side at small steps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{Grid, SpectralField};

/// Largest `dt·K³` accepted by the oracle. Classical RK4 is stable on the
/// imaginary axis up to `2√2`.
pub const ORACLE_STABILITY_LIMIT: f64 = 2.8;

/// Hard cap on the number of steps in one integration.
pub const MAX_STEPS: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl SystemParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// `αγ > 0`, the regime where `E` controls the `H¹` norms.
    pub fn is_energy_coercive(&self) -> bool {
        self.alpha * self.gamma > 0.0
    }

    /// `β = 0`.
    pub fn is_resonant(&self) -> bool {
        self.beta == 0.0
    }
}

/// `(u, v)` at time `t`; `v` is real with zero mean.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub u: SpectralField,
    pub v: SpectralField,
}

impl SystemState {
    pub fn new(t: f64, u: SpectralField, v: SpectralField) -> Result<Self> {
        u.check_grid(&v)?;
        if !v.is_real() {
            return Err(LabError::Config("v must be a real field".into()));
        }
        if v.coeff(0) != Complex64::new(0.0, 0.0) {
            return Err(LabError::Config("v must have zero mean".into()));
        }
        Ok(Self { t, u, v })
    }

    pub fn zero(grid: &Grid) -> Self {
        Self {
            t: 0.0,
            u: SpectralField::zeros(grid, false),
            v: SpectralField::zeros(grid, true),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    fn axpy(&self, h: f64, du: &SpectralField, dv: &SpectralField) -> (SpectralField, SpectralField) {
        (&self.u + &du.scale(h), &self.v + &dv.scale(h))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Strang,
    OracleRk4,
}

/// Step size and scheme. Products are always dealiased.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
}

impl SolverConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Self {
        Self { dt, scheme }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(LabError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.scheme == Scheme::OracleRk4 {
            let k = grid.k_max() as f64;
            let cfl = self.dt * k.powi(3);
            if cfl > ORACLE_STABILITY_LIMIT {
                return Err(LabError::Config(format!(
                    "oracle step too large: dt·K³ = {cfl:.3} exceeds {ORACLE_STABILITY_LIMIT}"
                )));
            }
        }
        Ok(())
    }

    /// Largest oracle step allowed on `grid`.
    pub fn max_oracle_dt(grid: &Grid) -> f64 {
        ORACLE_STABILITY_LIMIT / (grid.k_max() as f64).powi(3)
    }
}

/// Nonlinear terms only: `(-i(α uv + β|u|²u), ∂_x(γ|u|² - ½v²))`.
fn nonlinear_rhs(u: &SpectralField, v: &SpectralField, params: &SystemParams) -> (SpectralField, SpectralField) {
    let grid = u.grid();
    let up = u.to_padded();
    let vp = v.to_padded();
    let mut schr = Vec::with_capacity(up.len());
    let mut kdv = Vec::with_capacity(up.len());
    for (a, b) in up.iter().zip(&vp) {
        let vr = b.re;
        let modsq = a.norm_sqr();
        schr.push(*a * (params.alpha * vr + params.beta * modsq));
        kdv.push(Complex64::new(params.gamma * modsq - 0.5 * vr * vr, 0.0));
    }
    let schr = SpectralField::from_padded(grid, schr, false);
    let kdv = SpectralField::from_padded(grid, kdv, true);
    (schr.scale_complex(Complex64::new(0.0, -1.0)), kdv.derivative(1))
}

/// Full right-hand side `(du/dt, dv/dt)`.
pub fn rhs(state: &SystemState, params: &SystemParams) -> (SpectralField, SpectralField) {
    full_rhs(&state.u, &state.v, params)
}

fn full_rhs(u: &SpectralField, v: &SpectralField, params: &SystemParams) -> (SpectralField, SpectralField) {
    let (nu, nv) = nonlinear_rhs(u, v, params);
    // i u_xx = -i n² û ;  -v_xxx = i n³ v̂
    let lu = u.map_modes(false, |n| Complex64::new(0.0, -((n * n) as f64)));
    let lv = v.map_modes(true, |n| Complex64::new(0.0, (n * n * n) as f64));
    (&lu + &nu, &lv + &nv)
}

/// Exact linear flow `û ← e^{-i n² dt} û`, `v̂ ← e^{i n³ dt} v̂`.
pub fn linear_propagate(state: &SystemState, dt: f64) -> SystemState {
    SystemState {
        t: state.t + dt,
        u: state.u.map_modes(false, |n| Complex64::from_polar(1.0, -((n * n) as f64) * dt)),
        v: state.v.map_modes(true, |n| Complex64::from_polar(1.0, (n * n * n) as f64 * dt)),
    }
}

fn rk4_combine(
    state: &SystemState,
    dt: f64,
    k: [(SpectralField, SpectralField); 4],
) -> (SpectralField, SpectralField) {
    let [(a1, b1), (a2, b2), (a3, b3), (a4, b4)] = k;
    let du = &(&a1 + &a4) + &(&a2 + &a3).scale(2.0);
    let dv = &(&b1 + &b4) + &(&b2 + &b3).scale(2.0);
    state.axpy(dt / 6.0, &du, &dv)
}

fn rk4_step(
    state: &SystemState,
    dt: f64,
    f: impl Fn(&SpectralField, &SpectralField) -> (SpectralField, SpectralField),
) -> (SpectralField, SpectralField) {
    let k1 = f(&state.u, &state.v);
    let (u2, v2) = state.axpy(0.5 * dt, &k1.0, &k1.1);
    let k2 = f(&u2, &v2);
    let (u3, v3) = state.axpy(0.5 * dt, &k2.0, &k2.1);
    let k3 = f(&u3, &v3);
    let (u4, v4) = state.axpy(dt, &k3.0, &k3.1);
    let k4 = f(&u4, &v4);
    rk4_combine(state, dt, [k1, k2, k3, k4])
}

fn finish(state: &SystemState, t: f64, u: SpectralField, v: SpectralField) -> Result<SystemState> {
    let next = SystemState { t, u, v };
    if !next.is_finite() {
        return Err(LabError::Instability { t: state.t });
    }
    assert_eq!(next.v.coeff(0), Complex64::new(0.0, 0.0), "mean of v drifted at t = {t}");
    Ok(next)
}

/// One Strang step: half linear flow, RK4 on the nonlinear field, half linear flow.
pub fn step_strang(state: &SystemState, dt: f64, params: &SystemParams) -> Result<SystemState> {
    let half = linear_propagate(state, 0.5 * dt);
    let (u, v) = rk4_step(&half, dt, |u, v| nonlinear_rhs(u, v, params));
    let mid = SystemState { t: half.t, u, v };
    let out = linear_propagate(&mid, 0.5 * dt);
    finish(state, state.t + dt, out.u, out.v)
}

/// One classical RK4 step on the full right-hand side.
pub fn step_oracle(state: &SystemState, dt: f64, params: &SystemParams) -> Result<SystemState> {
    let (u, v) = rk4_step(state, dt, |u, v| full_rhs(u, v, params));
    finish(state, state.t + dt, u, v)
}

pub fn step(state: &SystemState, dt: f64, scheme: Scheme, params: &SystemParams) -> Result<SystemState> {
    match scheme {
        Scheme::Strang => step_strang(state, dt, params),
        Scheme::OracleRk4 => step_oracle(state, dt, params),
    }
}

/// Uniform step count and step size covering `duration` with steps no larger than `dt`.
pub fn step_plan(duration: f64, dt: f64) -> Result<(u64, f64)> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(LabError::Config(format!("integration time must be positive, got {duration}")));
    }
    let ratio = duration / dt;
    if ratio > MAX_STEPS {
        return Err(LabError::Config(format!("{ratio:.3e} steps exceed the limit of {MAX_STEPS:e}")));
    }
    let rounded = ratio.round();
    let n = if rounded >= 1.0 && (rounded - ratio).abs() <= 1e-9 * ratio {
        rounded
    } else {
        ratio.ceil().max(1.0)
    };
    Ok((n as u64, duration / n))
}

/// Summary of one [`integrate`] call.
#[derive(Clone, Debug)]
pub struct Integration {
    pub state: SystemState,
    pub steps: u64,
    pub dt: f64,
}

/// Advances `state` by `duration`, calling `observer` at step 0, every `stride`
/// steps and at the final step.
pub fn integrate(
    state: &SystemState,
    duration: f64,
    config: &SolverConfig,
    params: &SystemParams,
    stride: u64,
    mut observer: impl FnMut(&SystemState),
) -> Result<Integration> {
    config.validate(state.grid())?;
    let (steps, dt) = step_plan(duration, config.dt)?;
    let stride = stride.max(1);
    let t0 = state.t;
    let mut current = state.clone();
    observer(&current);
    for k in 1..=steps {
        let mut next = step(&current, dt, config.scheme, params)?;
        next.t = if k == steps { t0 + duration } else { t0 + k as f64 * dt };
        current = next;
        if k % stride == 0 || k == steps {
            observer(&current);
        }
    }
    Ok(Integration { state: current, steps, dt })
}

/// States stored at selected times along one run.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    samples: Vec<SystemState>,
}

impl Trajectory {
    /// Integrates from `state` through the increasing `times`, storing each.
    pub fn record(state: &SystemState, times: &[f64], config: &SolverConfig, params: &SystemParams) -> Result<Self> {
        let mut samples = Vec::with_capacity(times.len());
        let mut current = state.clone();
        for &t in times {
            let gap = t - current.t;
            if gap < -1e-12 {
                return Err(LabError::Config("trajectory times must be nondecreasing".into()));
            }
            if gap > 1e-12 {
                current = integrate(&current, gap, config, params, u64::MAX, |_| {})?.state;
            }
            samples.push(current.clone());
        }
        Ok(Self { samples })
    }

    pub fn push(&mut self, state: SystemState) {
        self.samples.push(state);
    }

    pub fn samples(&self) -> &[SystemState] {
        &self.samples
    }

    /// The stored state whose time matches `t` to `1e-9` (relative to `max(1, |t|)`).
    pub fn sample_at(&self, t: f64) -> Result<&SystemState> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.samples
            .iter()
            .find(|s| (s.t - t).abs() <= tol)
            .ok_or(LabError::MissingSample { t })
    }
}
