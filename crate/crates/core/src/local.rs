//! Godunov solver for the local limit ∂_t u + ∂_x(V(u) u) = 0, plus the
//! exact Riemann oracle for the affine law V(u) = 1 − u.
//!
//! The Godunov interface flux is the extremum of f(u) = u V(u) between the
//! neighboring states: min over [u_L, u_R] when u_L ≤ u_R, max over
//! [u_R, u_L] otherwise. The extremum is located by golden-section search
//! with endpoint comparison, so no smoothness of V is assumed.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::nonlocal::VelocityModel;
use crate::quad;

const GOLDEN_TOL: f64 = 1e-12;
const INVARIANT_SLACK: f64 = 1e-12;

/// Flux f(u) = u·V(u) with its Lipschitz constant sup|f'|.
#[derive(Clone, Debug)]
pub struct FluxModel {
    model: VelocityModel,
    f_lip: f64,
}

impl FluxModel {
    /// Builds the flux and estimates sup|f'| from dense difference quotients.
    pub fn new(model: VelocityModel) -> Self {
        let n = 4000;
        let mut f_lip: f64 = 0.0;
        let mut prev = 0.0; // f(0) = 0
        for i in 1..=n {
            let u = i as f64 / n as f64;
            let f = u * model.eval(u);
            f_lip = f_lip.max(((f - prev) * n as f64).abs());
            prev = f;
        }
        // small inflation so the CFL bound stays safe if the true sup sits
        // between sample points
        Self {
            model,
            f_lip: f_lip * (1.0 + 1e-3),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        u * self.model.eval(u)
    }

    pub fn f_lip(&self) -> f64 {
        self.f_lip
    }

    pub fn model(&self) -> &VelocityModel {
        &self.model
    }
}

/// Godunov interface flux between states u_L, u_R in [0, 1].
pub fn godunov_flux(u_left: f64, u_right: f64, flux: &FluxModel) -> f64 {
    if u_left == u_right {
        return flux.eval(u_left);
    }
    if u_left < u_right {
        let (_, fmin) = quad::golden_min(&mut |u| flux.eval(u), u_left, u_right, GOLDEN_TOL);
        fmin
    } else {
        let (_, fmax) = quad::golden_max(&mut |u| flux.eval(u), u_right, u_left, GOLDEN_TOL);
        fmax
    }
}

/// March the Godunov scheme from `u0` to time T, landing on each snapshot
/// time exactly. Boundary cells are edge-extended.
pub fn evolve_with_snapshots(
    u0: &GridFunction,
    flux: &FluxModel,
    t_end: f64,
    cfl: f64,
    snap_times: &[f64],
) -> Result<Vec<(f64, GridFunction)>> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Validation(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    if !(t_end >= 0.0) {
        return Err(Error::Validation(format!("bad horizon T = {t_end}")));
    }
    let mut snaps: Vec<f64> = if snap_times.is_empty() {
        vec![t_end]
    } else {
        snap_times.to_vec()
    };
    snaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snaps.dedup();

    let dx = u0.grid().dx();
    let dt_cfl = if flux.f_lip() > 0.0 {
        cfl * dx / flux.f_lip()
    } else {
        cfl * dx
    };
    let mut u = u0.values().to_vec();
    let n = u.len();
    let mut out = Vec::with_capacity(snaps.len());
    let mut t = 0.0;
    let mut fluxes = vec![0.0; n + 1];
    for &target in &snaps {
        while t < target - 1e-14 {
            let dt = dt_cfl.min(target - t);
            let lambda = dt / dx;
            fluxes[0] = godunov_flux(u[0], u[0], flux);
            for i in 1..n {
                fluxes[i] = godunov_flux(u[i - 1], u[i], flux);
            }
            fluxes[n] = godunov_flux(u[n - 1], u[n - 1], flux);
            for j in 0..n {
                let mut val = u[j] - lambda * (fluxes[j + 1] - fluxes[j]);
                if val < 0.0 {
                    if val < -INVARIANT_SLACK {
                        return Err(Error::InvariantRegion {
                            cell: j,
                            excess: -val,
                        });
                    }
                    val = 0.0;
                } else if val > 1.0 {
                    if val > 1.0 + INVARIANT_SLACK {
                        return Err(Error::InvariantRegion {
                            cell: j,
                            excess: val - 1.0,
                        });
                    }
                    val = 1.0;
                }
                u[j] = val;
            }
            t += dt;
        }
        t = target;
        out.push((t, GridFunction::new(*u0.grid(), u.clone())?));
    }
    Ok(out)
}

/// Godunov solution at time T (single snapshot).
pub fn evolve(u0: &GridFunction, flux: &FluxModel, t_end: f64, cfl: f64) -> Result<GridFunction> {
    let snaps = evolve_with_snapshots(u0, flux, t_end, cfl, &[t_end])?;
    Ok(snaps.into_iter().next_back().expect("one snapshot").1)
}

/// Entropy solution of the Riemann problem for V(u) = 1 − u at (t, x).
///
/// The flux u(1 − u) is concave: u_L < u_R gives a shock of speed
/// 1 − (u_L + u_R), u_L > u_R a rarefaction u = (1 − x/t)/2 clamped to
/// [u_R, u_L]. At t = 0 the datum itself is returned.
pub fn exact_riemann(u_left: f64, u_right: f64, t: f64, x: f64) -> f64 {
    if u_left == u_right {
        return u_left;
    }
    if t <= 0.0 {
        return if x < 0.0 { u_left } else { u_right };
    }
    if u_left < u_right {
        let s = 1.0 - (u_left + u_right);
        if x < s * t {
            u_left
        } else {
            u_right
        }
    } else {
        ((1.0 - x / t) / 2.0).clamp(u_right, u_left)
    }
}

/// Exact cell averages of the Riemann solution on a grid. The profile is
/// piecewise linear in x, so every cell integral is evaluated in closed form.
pub fn exact_riemann_averages(u_left: f64, u_right: f64, t: f64, grid: &Grid) -> GridFunction {
    let values: Vec<f64> = (0..grid.n_cells())
        .map(|j| {
            let (a, b) = grid.cell(j);
            exact_riemann_cell_average(u_left, u_right, t, a, b)
        })
        .collect();
    GridFunction::new(*grid, values).expect("finite averages")
}

fn exact_riemann_cell_average(u_left: f64, u_right: f64, t: f64, a: f64, b: f64) -> f64 {
    let width = b - a;
    if u_left == u_right {
        return u_left;
    }
    if t <= 0.0 {
        // step at x = 0
        if b <= 0.0 {
            return u_left;
        }
        if a >= 0.0 {
            return u_right;
        }
        return (u_left * (0.0 - a) + u_right * b) / width;
    }
    if u_left < u_right {
        let xs = (1.0 - (u_left + u_right)) * t;
        if b <= xs {
            return u_left;
        }
        if a >= xs {
            return u_right;
        }
        return (u_left * (xs - a) + u_right * (b - xs)) / width;
    }
    // rarefaction between x1 = (1 − 2 u_L) t and x2 = (1 − 2 u_R) t,
    // with u(x) = (1 − x/t)/2 in between
    let x1 = (1.0 - 2.0 * u_left) * t;
    let x2 = (1.0 - 2.0 * u_right) * t;
    let fan_primitive = |x: f64| (x - x * x / (2.0 * t)) / 2.0;
    let mut acc = 0.0;
    if a < x1 {
        acc += u_left * (b.min(x1) - a);
    }
    let lo = a.max(x1);
    let hi = b.min(x2);
    if hi > lo {
        acc += fan_primitive(hi) - fan_primitive(lo);
    }
    if b > x2 {
        acc += u_right * (b - a.max(x2));
    }
    acc / width
}

/// Refine a grid by an integer factor (same left edge, same extent).
pub fn refine_grid(grid: &Grid, factor: usize) -> Result<Grid> {
    Grid::new(
        grid.x_left(),
        grid.dx() / factor as f64,
        grid.n_cells() * factor,
    )
}

/// Project a fine field onto the coarse grid it refines, by cell averaging.
pub fn project_mean(fine: &GridFunction, coarse: &Grid, factor: usize) -> Result<GridFunction> {
    if fine.len() != coarse.n_cells() * factor {
        return Err(Error::GridMismatch(format!(
            "{} fine cells cannot project onto {} coarse cells at factor {}",
            fine.len(),
            coarse.n_cells(),
            factor
        )));
    }
    let inv = 1.0 / factor as f64;
    let values = (0..coarse.n_cells())
        .map(|j| fine.values()[j * factor..(j + 1) * factor].iter().sum::<f64>() * inv)
        .collect();
    GridFunction::new(*coarse, values)
}
