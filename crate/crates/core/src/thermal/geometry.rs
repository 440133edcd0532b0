//! Melt-pool extents from sampled temperature planes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MeltPoolGeometry, ThermalModel};
use crate::error::{Error, Result};

/// Sampling box in the beam frame, metres. Only `y >= 0` is sampled (both
/// fields are even in y) and only the substrate `z <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub z_min: f64,
    /// Samples per axis.
    pub samples: usize,
}

impl Default for GridSpec {
    /// Covers every pool of the default process window with margin.
    fn default() -> Self {
        Self {
            x_min: -5.0e-3,
            x_max: 2.0e-3,
            y_max: 2.0e-3,
            z_min: -2.0e-3,
            samples: 64,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 64 {
            return Err(Error::invalid(format!(
                "grid needs at least 64 samples per axis, got {}",
                self.samples
            )));
        }
        if !(self.x_min < self.x_max && self.y_max > 0.0 && self.z_min < 0.0) {
            return Err(Error::invalid(format!("degenerate grid extents {self:?}")));
        }
        Ok(())
    }

    /// Same box with twice the resolution (every other sample coincides).
    pub fn refined(&self) -> Self {
        Self {
            samples: 2 * self.samples - 1,
            ..self.clone()
        }
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let step = (hi - lo) / (n - 1) as f64;
        let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        v[n - 1] = hi;
        v
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x_min, self.x_max, self.samples)
    }

    pub fn ys(&self) -> Vec<f64> {
        Self::axis(0.0, self.y_max, self.samples)
    }

    pub fn zs(&self) -> Vec<f64> {
        Self::axis(self.z_min, 0.0, self.samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plane {
    /// Longitudinal section y = 0; second axis is z.
    Xz,
    /// Top surface z = 0; second axis is y.
    Xy,
}

/// Temperatures on one plane, `values[i * second.len() + j]` at
/// `(x[i], second[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureGrid {
    pub plane: Plane,
    pub x: Vec<f64>,
    pub second: Vec<f64>,
    pub values: Vec<f64>,
}

impl TemperatureGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.second.len() + j]
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let n = self.second.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Samples `model` on one plane of `grid`; rows are filled in parallel but
/// assembled in grid order.
pub fn temperature_plane<M: ThermalModel>(
    model: &M,
    input: &M::Input,
    plane: Plane,
    grid: &GridSpec,
) -> Result<TemperatureGrid> {
    grid.validate()?;
    let x = grid.xs();
    let second = match plane {
        Plane::Xz => grid.zs(),
        Plane::Xy => grid.ys(),
    };
    let rows: Vec<Vec<f64>> = x
        .par_iter()
        .map(|&xi| {
            second
                .iter()
                .map(|&s| {
                    let p = match plane {
                        Plane::Xz => [xi, 0.0, s],
                        Plane::Xy => [xi, s, 0.0],
                    };
                    model.temperature(p, input)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(TemperatureGrid {
        plane,
        x,
        second,
        values: rows.into_iter().flatten().collect(),
    })
}

/// Depth from the y = 0 section and full width from the top surface.
///
/// Each x column is scanned for the liquidus crossing, located by linear
/// interpolation between the bracketing samples; the column-wise extremum
/// is then refined with a parabola through its two neighbours.
pub fn melt_pool_geometry<M: ThermalModel>(
    model: &M,
    input: &M::Input,
    grid: &GridSpec,
) -> Result<MeltPoolGeometry> {
    let t_melt = model.material().liquidus_temperature;
    let xz = temperature_plane(model, input, Plane::Xz, grid)?;
    let depth = extent(&xz, t_melt, Direction::Down)?;
    let xy = temperature_plane(model, input, Plane::Xy, grid)?;
    let half_width = extent(&xy, t_melt, Direction::Out)?;
    if depth == 0.0 || half_width == 0.0 {
        // sub-sample pools resolve on one plane only; report no pool
        return Ok(MeltPoolGeometry::default());
    }
    Ok(MeltPoolGeometry {
        depth,
        width: 2.0 * half_width,
    })
}

#[derive(Clone, Copy)]
enum Direction {
    /// Second axis runs z_min..0, the pool hangs from the last sample.
    Down,
    /// Second axis runs 0..y_max, the pool starts at the first sample.
    Out,
}

fn extent(grid: &TemperatureGrid, t_melt: f64, dir: Direction) -> Result<f64> {
    let n = grid.second.len();
    let nx = grid.x.len();
    let s = &grid.second;
    for edge in [0, nx - 1] {
        if grid.column(edge).iter().any(|&t| t >= t_melt) {
            return Err(Error::GridTruncated(if edge == 0 {
                "trailing x"
            } else {
                "leading x"
            }));
        }
    }
    let mut per_column = vec![0.0; nx];
    for (i, slot) in per_column.iter_mut().enumerate() {
        let col = grid.column(i);
        *slot = match dir {
            Direction::Down => {
                let Some(k) = col.iter().position(|&t| t >= t_melt) else {
                    continue;
                };
                if k == 0 {
                    return Err(Error::GridTruncated("bottom z"));
                }
                let f = (t_melt - col[k - 1]) / (col[k] - col[k - 1]);
                -(s[k - 1] + f * (s[k] - s[k - 1]))
            }
            Direction::Out => {
                let Some(k) = col.iter().rposition(|&t| t >= t_melt) else {
                    continue;
                };
                if k == n - 1 {
                    return Err(Error::GridTruncated("lateral y"));
                }
                let f = (col[k] - t_melt) / (col[k] - col[k + 1]);
                s[k] + f * (s[k + 1] - s[k])
            }
        };
    }
    let (imax, &best) = per_column
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid has columns");
    if best <= 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = (per_column[imax - 1], per_column[imax + 1]);
    let curvature = 2.0 * best - lo - hi;
    if lo > 0.0 && hi > 0.0 && curvature > 0.0 {
        let lift = (hi - lo).powi(2) / (8.0 * curvature);
        // a parabola through three points never lifts by more than the
        // largest neighbour difference; anything else is a kink
        if lift <= (best - lo.min(hi)) {
            return Ok(best + lift);
        }
    }
    Ok(best)
}
