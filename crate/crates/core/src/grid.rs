//! Uniform grids, cell-averaged fields and the functionals of the estimates
//! (L¹, L², total variation, mass).
//!
//! Everything is finite-volume: a `GridFunction` stores cell averages, and
//! pointwise initializers are averaged with a 3-point Gauss rule per cell so
//! the discrete conservation and TV statements are exact at the grid level.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Uniform 1-D grid: cells [x_left + jΔx, x_left + (j+1)Δx), j = 0..n_cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    x_left: f64,
    dx: f64,
    n_cells: usize,
}

impl Grid {
    pub fn new(x_left: f64, dx: f64, n_cells: usize) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() || !x_left.is_finite() {
            return Err(Error::Validation(format!(
                "grid requires finite x_left and dx > 0 (got x_left = {x_left}, dx = {dx})"
            )));
        }
        if n_cells < 2 {
            return Err(Error::Validation(format!(
                "grid requires n_cells >= 2 (got {n_cells})"
            )));
        }
        Ok(Self {
            x_left,
            dx,
            n_cells,
        })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_left + self.dx * self.n_cells as f64
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn length(&self) -> f64 {
        self.dx * self.n_cells as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |j| self.center(j))
    }

    /// Cell edges [x_j, x_{j+1}] of cell j.
    pub fn cell(&self, j: usize) -> (f64, f64) {
        (
            self.x_left + j as f64 * self.dx,
            self.x_left + (j + 1) as f64 * self.dx,
        )
    }

    /// Same layout up to floating-point placement noise.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.n_cells == other.n_cells
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
            && (self.x_left - other.x_left).abs() <= 1e-9 * self.dx.max(1.0)
    }
}

/// Cell-averaged field on a uniform grid.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("grid function has non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n_cells();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Cell averages of a pointwise function, by 3-point Gauss per cell.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let s = (3.0f64 / 5.0).sqrt();
        let (w0, w1) = (8.0 / 18.0, 5.0 / 18.0);
        let h = 0.5 * grid.dx();
        let values = (0..grid.n_cells())
            .map(|j| {
                let c = grid.center(j);
                w0 * f(c) + w1 * (f(c - s * h) + f(c + s * h))
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn require_same_grid(&self, other: &GridFunction) -> Result<()> {
        if !self.grid.compatible(other.grid()) {
            return Err(Error::GridMismatch(format!(
                "left grid ({}, dx = {}, n = {}) vs right grid ({}, dx = {}, n = {})",
                self.grid.x_left(),
                self.grid.dx(),
                self.grid.n_cells(),
                other.grid.x_left(),
                other.grid.dx(),
                other.grid.n_cells()
            )));
        }
        Ok(())
    }

    /// Σ|f_j − g_j| Δx.
    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        self.require_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.dx())
    }

    /// (Σ|f_j − g_j|² Δx)^{1/2}.
    pub fn l2_distance(&self, other: &GridFunction) -> Result<f64> {
        self.require_same_grid(other)?;
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((sum * self.grid.dx()).sqrt())
    }

    /// Σ f_j² Δx.
    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()
    }

    /// Grid total variation Σ|f_{j+1} − f_j|.
    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Σ f_j Δx.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// Pointwise product with a window profile evaluated at cell centers.
    pub fn windowed(&self, window: &Window) -> GridFunction {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, &v)| v * window.eval(self.grid.center(j)))
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }

    /// Snapshot CSV: header "x,value", one row per cell, 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "x,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", self.grid.center(j), v)?;
        }
        Ok(())
    }

    pub fn read_csv(mut input: impl BufRead) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut line = String::new();
        input.read_line(&mut line)?;
        if line.trim() != "x,value" {
            return Err(Error::Validation(format!(
                "snapshot CSV must start with 'x,value', got '{}'",
                line.trim()
            )));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for row in input.lines() {
            let row = row?;
            if row.trim().is_empty() {
                continue;
            }
            let mut parts = row.splitn(2, ',');
            let x = parts
                .next()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Validation(format!("bad CSV row '{row}'")))?;
            let v = parts
                .next()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Validation(format!("bad CSV row '{row}'")))?;
            xs.push(x);
            vs.push(v);
        }
        Ok((xs, vs))
    }
}

/// Compactly supported multiplier: 1 on [plateau_left, plateau_right],
/// raised-cosine ramps of width `ramp` on both sides, 0 outside.
#[derive(Clone, Copy, Debug)]
pub struct Window {
    plateau_left: f64,
    plateau_right: f64,
    ramp: f64,
}

impl Window {
    pub fn new(plateau_left: f64, plateau_right: f64, ramp: f64) -> Result<Self> {
        if !(plateau_left < plateau_right) || !(ramp > 0.0) {
            return Err(Error::Validation(format!(
                "window requires plateau_left < plateau_right and ramp > 0 \
                 (got [{plateau_left}, {plateau_right}], ramp = {ramp})"
            )));
        }
        Ok(Self {
            plateau_left,
            plateau_right,
            ramp,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.plateau_left - self.ramp, self.plateau_right + self.ramp)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x >= self.plateau_left && x <= self.plateau_right {
            1.0
        } else if x <= self.plateau_left - self.ramp || x >= self.plateau_right + self.ramp {
            0.0
        } else if x < self.plateau_left {
            let s = (x - (self.plateau_left - self.ramp)) / self.ramp;
            0.5 * (1.0 - (std::f64::consts::PI * s).cos())
        } else {
            let s = ((self.plateau_right + self.ramp) - x) / self.ramp;
            0.5 * (1.0 - (std::f64::consts::PI * s).cos())
        }
    }
}
