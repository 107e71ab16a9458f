//! Initial-datum specifiers and their grid projections.
//!
//! Compact string forms are used in configs: "riemann:uL:uR",
//! "bump:center:width:height", "constant:c". All values must satisfy the
//! admissibility constraint 0 ≤ u₀ ≤ 1.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Datum {
    /// Step at x = 0: left value for x < 0, right value for x ≥ 0.
    Riemann { left: f64, right: f64 },
    /// Smooth compactly supported bump h·exp(1 − 1/(1 − s²)), s = 2(x−c)/w.
    Bump { center: f64, width: f64, height: f64 },
    Constant { value: f64 },
}

impl Datum {
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Validation(format!("bad number '{s}' in datum '{spec}'")))
        };
        let datum = match parts.as_slice() {
            ["riemann", l, r] => Datum::Riemann {
                left: num(l)?,
                right: num(r)?,
            },
            ["bump", c, w, h] => Datum::Bump {
                center: num(c)?,
                width: num(w)?,
                height: num(h)?,
            },
            ["constant", c] => Datum::Constant { value: num(c)? },
            _ => {
                return Err(Error::Validation(format!(
                    "unknown datum '{spec}' (expected riemann:uL:uR, bump:c:w:h or constant:c)"
                )))
            }
        };
        datum.validate()?;
        Ok(datum)
    }

    /// Enforce the admissibility constraint 0 ≤ u₀ ≤ 1 (and positive width).
    pub fn validate(&self) -> Result<()> {
        let check = |v: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::Validation(format!(
                    "datum value {v} violates the admissibility constraint 0 <= u0 <= 1"
                )));
            }
            Ok(())
        };
        match *self {
            Datum::Riemann { left, right } => {
                check(left)?;
                check(right)
            }
            Datum::Bump { width, height, .. } => {
                if !(width > 0.0) {
                    return Err(Error::Validation(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                check(height)
            }
            Datum::Constant { value } => check(value),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Datum::Riemann { left, right } => {
                if x < 0.0 {
                    left
                } else {
                    right
                }
            }
            Datum::Bump {
                center,
                width,
                height,
            } => {
                let s = 2.0 * (x - center) / width;
                if s.abs() < 1.0 {
                    height * (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
            Datum::Constant { value } => value,
        }
    }

    /// Cell averages on a grid. Riemann steps are averaged exactly (the jump
    /// cell gets its area fraction); smooth data use the 3-point Gauss rule.
    pub fn project(&self, grid: &Grid) -> Result<GridFunction> {
        match *self {
            Datum::Riemann { left, right } => {
                let values = (0..grid.n_cells())
                    .map(|j| {
                        let (a, b) = grid.cell(j);
                        if b <= 0.0 {
                            left
                        } else if a >= 0.0 {
                            right
                        } else {
                            (left * (0.0 - a) + right * b) / (b - a)
                        }
                    })
                    .collect();
                GridFunction::new(*grid, values)
            }
            _ => GridFunction::from_fn(*grid, |x| self.eval(x)),
        }
    }

    /// Total variation of the datum on the line.
    pub fn line_tv(&self) -> f64 {
        match *self {
            Datum::Riemann { left, right } => (right - left).abs(),
            Datum::Bump { height, .. } => 2.0 * height,
            Datum::Constant { .. } => 0.0,
        }
    }

    /// Extent [lo, hi] of the non-constant part (wave sources).
    pub fn active_extent(&self) -> (f64, f64) {
        match *self {
            Datum::Riemann { .. } => (0.0, 0.0),
            Datum::Bump { center, width, .. } => (center - width / 2.0, center + width / 2.0),
            Datum::Constant { .. } => (0.0, 0.0),
        }
    }

    /// Whether the datum is integrable on the line (compact support).
    pub fn is_compact(&self) -> bool {
        matches!(self, Datum::Bump { .. })
            || matches!(self, Datum::Constant { value } if *value == 0.0)
    }
}
