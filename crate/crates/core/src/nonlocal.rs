//! Upwind finite-volume solver for the nonlocal model
//! ∂_t u + ∂_x(V(u ∗ γ_ε) u) = 0.
//!
//! The flux velocity at interface j+1/2 is evaluated on the discrete impact
//! whose window starts at the right neighbor, w_{j+1/2} = Σ_k Γ_k u_{j+1+k};
//! with V ≥ 0 and V' ≤ 0 this is the upwind choice that keeps u in [0, 1]
//! under the CFL restriction Δt ≤ Δx / (V_max + Δx ‖V'‖ γ_ε(0)).
//!
//! Fields are extended by constant continuation of the edge cells, and the
//! boundary fluxes go into a mass ledger so conservation can be audited to
//! rounding accuracy.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::DiscreteKernel;

/// Rounding violations of the invariant region beyond this are a hard error.
const INVARIANT_SLACK: f64 = 1e-12;

type SpeedFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Speed law V on [0, 1] with its Lipschitz constant and supremum.
#[derive(Clone)]
pub struct VelocityModel {
    name: String,
    v: Arc<SpeedFn>,
    v_lip: f64,
    v_max: f64,
}

impl std::fmt::Debug for VelocityModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VelocityModel")
            .field("name", &self.name)
            .field("v_lip", &self.v_lip)
            .field("v_max", &self.v_max)
            .finish()
    }
}

impl VelocityModel {
    pub fn new(
        name: impl Into<String>,
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        v_lip: f64,
        v_max: f64,
    ) -> Self {
        Self {
            name: name.into(),
            v: Arc::new(v),
            v_lip,
            v_max,
        }
    }

    /// Greenshields law V(ξ) = 1 − ξ.
    pub fn greenshields() -> Self {
        Self::new("greenshields", |w| 1.0 - w, 1.0, 1.0)
    }

    /// Constant speed V ≡ c ≥ 0.
    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant:{c}"), move |_| c, 0.0, c)
    }

    /// Model specifiers: "greenshields" or "constant:<speed>".
    pub fn by_spec(spec: &str) -> Result<Self> {
        if spec == "greenshields" {
            return Ok(Self::greenshields());
        }
        if let Some(c) = spec.strip_prefix("constant:") {
            let c: f64 = c
                .parse()
                .map_err(|_| Error::Validation(format!("bad constant speed in model '{spec}'")))?;
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::Validation(format!(
                    "constant speed must be finite and >= 0, got {c}"
                )));
            }
            return Ok(Self::constant(c));
        }
        Err(Error::Validation(format!(
            "unknown velocity model '{spec}' (expected greenshields or constant:<v>)"
        )))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, w: f64) -> f64 {
        (self.v)(w)
    }

    pub fn v_lip(&self) -> f64 {
        self.v_lip
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Sampled check of V ≥ 0 and V non-increasing on [0, 1].
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        let n = n_samples.max(2);
        let mut prev = f64::INFINITY;
        for i in 0..n {
            let xi = i as f64 / (n - 1) as f64;
            let v = self.eval(xi);
            if !v.is_finite() || v < -1e-12 {
                return Err(Error::Validation(format!(
                    "velocity model '{}' takes value {v} at {xi}",
                    self.name
                )));
            }
            if v > prev + 1e-12 {
                return Err(Error::Validation(format!(
                    "velocity model '{}' increases at {xi}",
                    self.name
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Boundary-flux ledger of a run. `clamp` records the (tiny) mass added or
/// removed when rounding pushed a cell outside [0, 1].
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct MassLedger {
    pub inflow: f64,
    pub outflow: f64,
    pub clamp: f64,
}

impl MassLedger {
    /// Signed residual mass(final) − mass(initial) − inflow + outflow − clamp.
    pub fn residual(&self, mass_initial: f64, mass_final: f64) -> f64 {
        mass_final - mass_initial - self.inflow + self.outflow - self.clamp
    }

    /// Conservation audit relative to the field masses.
    pub fn audit(&self, mass_initial: f64, mass_final: f64, rel_tol: f64) -> bool {
        let scale = mass_initial.abs().max(mass_final.abs()).max(1e-30);
        self.residual(mass_initial, mass_final).abs() <= rel_tol * scale
    }
}

/// Per-run diagnostics accumulated at every accepted step.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RunStats {
    pub steps: usize,
    pub min_value: f64,
    pub max_value: f64,
    /// max over steps of TV(w) with w = Γ ∗ u.
    pub max_tv_w: f64,
    /// max over snapshots of ‖u(t)‖² / (e^{‖V'‖ γ_ε(0) t} ‖u₀‖²).
    pub max_energy_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub u: GridFunction,
}

#[derive(Debug)]
pub struct RunResult {
    pub snapshots: Vec<Snapshot>,
    pub ledger: MassLedger,
    pub stats: RunStats,
}

/// Solver state: a density field plus the discretized kernel and speed law.
#[derive(Clone, Debug)]
pub struct NonlocalState {
    pub t: f64,
    pub u: GridFunction,
    pub kernel: DiscreteKernel,
    pub model: VelocityModel,
}

impl NonlocalState {
    pub fn new(
        t: f64,
        u: GridFunction,
        kernel: DiscreteKernel,
        model: VelocityModel,
    ) -> Result<Self> {
        if (kernel.dx() - u.grid().dx()).abs() > 1e-12 * u.grid().dx() {
            return Err(Error::GridMismatch(format!(
                "kernel dx = {} vs grid dx = {}",
                kernel.dx(),
                u.grid().dx()
            )));
        }
        let (lo, hi) = (u.min(), u.max());
        if lo < -INVARIANT_SLACK || hi > 1.0 + INVARIANT_SLACK {
            return Err(Error::Validation(format!(
                "density values outside [0, 1]: min = {lo}, max = {hi}"
            )));
        }
        Ok(Self { t, u, kernel, model })
    }
}

/// Nonlocal impact w = Γ ∗ u at cell centers: w_j = Σ_k Γ_k u_{j+k},
/// edge-extended on the right.
pub fn nonlocal_impact(u: &GridFunction, kernel: &DiscreteKernel) -> Result<GridFunction> {
    if (kernel.dx() - u.grid().dx()).abs() > 1e-12 * u.grid().dx() {
        return Err(Error::GridMismatch(format!(
            "kernel dx = {} vs grid dx = {}",
            kernel.dx(),
            u.grid().dx()
        )));
    }
    let vals = impact_values(u.values(), kernel.weights());
    GridFunction::new(*u.grid(), vals)
}

fn impact_values(u: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = u.len();
    let last = *u.last().expect("nonempty field");
    (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for (k, &w) in weights.iter().enumerate() {
                let idx = j + k;
                acc += w * if idx < n { u[idx] } else { last };
            }
            acc
        })
        .collect()
}

/// Impact at the n+1 interfaces: entry i is w_{i−1/2} = Σ_k Γ_k u_{i+k}.
fn impact_at_interfaces(u: &[f64], weights: &[f64], out: &mut Vec<f64>) {
    let n = u.len();
    let last = u[n - 1];
    out.clear();
    out.reserve(n + 1);
    for i in 0..=n {
        let mut acc = 0.0;
        for (k, &w) in weights.iter().enumerate() {
            let idx = i + k;
            acc += w * if idx < n { u[idx] } else { last };
        }
        out.push(acc);
    }
}

/// CFL time step Δt = cfl·Δx / (V_max + Δx ‖V'‖ γ_ε(0)); for a degenerate
/// model (constant zero flux) the step is a free choice cfl·Δx.
pub fn cfl_timestep(state: &NonlocalState, cfl: f64) -> f64 {
    let dx = state.u.grid().dx();
    let denom = state.model.v_max() + dx * state.model.v_lip() * state.kernel.gamma_eps_at_zero();
    if denom <= 0.0 {
        cfl * dx
    } else {
        cfl * dx / denom
    }
}

struct StepOutcome {
    flux_in: f64,
    flux_out: f64,
    clamped_mass: f64,
}

/// One conservative update of the raw cell values. `w_buf` and `u_next` are
/// scratch storage reused across steps.
fn step_values(
    u: &mut Vec<f64>,
    w_buf: &mut Vec<f64>,
    u_next: &mut Vec<f64>,
    kernel: &DiscreteKernel,
    model: &VelocityModel,
    dt: f64,
    dx: f64,
) -> Result<StepOutcome> {
    let n = u.len();
    impact_at_interfaces(u, kernel.weights(), w_buf);
    let lambda = dt / dx;
    // upwind flux at interface i: V(w_{i-1/2}) * u_{i-1}, edge-extended
    let flux = |i: usize| -> f64 {
        let left = if i == 0 { u[0] } else { u[i - 1] };
        model.eval(w_buf[i]) * left
    };
    u_next.clear();
    u_next.reserve(n);
    let mut clamped = 0.0;
    let mut f_left = flux(0);
    let flux_in = f_left;
    for j in 0..n {
        let f_right = flux(j + 1);
        let mut val = u[j] - lambda * (f_right - f_left);
        if val < 0.0 {
            if val < -INVARIANT_SLACK {
                return Err(Error::InvariantRegion {
                    cell: j,
                    excess: -val,
                });
            }
            clamped += -val;
            val = 0.0;
        } else if val > 1.0 {
            if val > 1.0 + INVARIANT_SLACK {
                return Err(Error::InvariantRegion {
                    cell: j,
                    excess: val - 1.0,
                });
            }
            clamped -= val - 1.0;
            val = 1.0;
        }
        u_next.push(val);
        f_left = f_right;
    }
    let flux_out = f_left;
    std::mem::swap(u, u_next);
    Ok(StepOutcome {
        flux_in,
        flux_out,
        clamped_mass: clamped * dx,
    })
}

/// Single explicit step; requires Δt ≤ cfl_timestep(state, 1).
pub fn step(state: &NonlocalState, dt: f64) -> Result<NonlocalState> {
    if dt > cfl_timestep(state, 1.0) * (1.0 + 1e-12) {
        return Err(Error::Validation(format!(
            "time step {dt} violates the CFL bound {}",
            cfl_timestep(state, 1.0)
        )));
    }
    let mut u = state.u.values().to_vec();
    let mut w_buf = Vec::new();
    let mut u_next = Vec::new();
    step_values(
        &mut u,
        &mut w_buf,
        &mut u_next,
        &state.kernel,
        &state.model,
        dt,
        state.u.grid().dx(),
    )?;
    Ok(NonlocalState {
        t: state.t + dt,
        u: GridFunction::new(*state.u.grid(), u)?,
        kernel: state.kernel.clone(),
        model: state.model.clone(),
    })
}

/// Advance u₀ to time T with CFL-limited steps, landing exactly on each
/// requested snapshot time. Deterministic for fixed inputs.
pub fn run(
    u0: &GridFunction,
    kernel: &DiscreteKernel,
    model: &VelocityModel,
    t_end: f64,
    cfl: f64,
    snap_times: &[f64],
) -> Result<RunResult> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Validation(format!("bad horizon T = {t_end}")));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Validation(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    let state0 = NonlocalState::new(0.0, u0.clone(), kernel.clone(), model.clone())?;
    let mut snaps: Vec<f64> = if snap_times.is_empty() {
        vec![t_end]
    } else {
        snap_times.to_vec()
    };
    snaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snaps.dedup();
    if snaps
        .iter()
        .any(|&s| s < 0.0 || s > t_end * (1.0 + 1e-12) + 1e-15)
    {
        return Err(Error::Validation(format!(
            "snapshot times {snaps:?} outside [0, {t_end}]"
        )));
    }

    let dx = u0.grid().dx();
    let dt_cfl = cfl_timestep(&state0, cfl);
    let gamma0 = kernel.gamma_eps_at_zero();
    let energy0 = u0.l2_norm_sq();

    let mut u = u0.values().to_vec();
    let mut w_buf: Vec<f64> = Vec::new();
    let mut u_next: Vec<f64> = Vec::new();
    let mut ledger = MassLedger::default();
    let mut stats = RunStats {
        steps: 0,
        min_value: u0.min(),
        max_value: u0.max(),
        max_tv_w: tv_of_impact(&u, kernel.weights()),
        max_energy_ratio: if energy0 > 0.0 { 1.0 } else { 0.0 },
    };
    let mut snapshots: Vec<Snapshot> = Vec::with_capacity(snaps.len());
    let mut t = 0.0;

    let mut next_snap = 0;
    while next_snap < snaps.len() {
        let target = snaps[next_snap];
        while t < target - 1e-14 {
            let dt = dt_cfl.min(target - t);
            let out = step_values(&mut u, &mut w_buf, &mut u_next, kernel, model, dt, dx)?;
            ledger.inflow += dt * out.flux_in;
            ledger.outflow += dt * out.flux_out;
            ledger.clamp += out.clamped_mass;
            t += dt;
            stats.steps += 1;
            for &v in u.iter() {
                stats.min_value = stats.min_value.min(v);
                stats.max_value = stats.max_value.max(v);
            }
            stats.max_tv_w = stats.max_tv_w.max(tv_of_impact(&u, kernel.weights()));
        }
        t = target;
        let gf = GridFunction::new(*u0.grid(), u.clone())?;
        if energy0 > 0.0 {
            let bound = (model.v_lip() * gamma0 * t).exp() * energy0;
            stats.max_energy_ratio = stats.max_energy_ratio.max(gf.l2_norm_sq() / bound);
        }
        snapshots.push(Snapshot { t, u: gf });
        next_snap += 1;
    }
    Ok(RunResult {
        snapshots,
        ledger,
        stats,
    })
}

fn tv_of_impact(u: &[f64], weights: &[f64]) -> f64 {
    let w = impact_values(u, weights);
    w.windows(2).map(|p| (p[1] - p[0]).abs()).sum()
}
