//! Scalar fields sampled on rectangular grids and the measures `dd^c` of them.

use serde::{Deserialize, Serialize};

use crate::cloud::compensated_sum;
use crate::measures::MeasureError;
use crate::{par, Complex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    fn is_valid(&self) -> bool {
        [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|x| x.is_finite())
            && self.re_min < self.re_max
            && self.im_min < self.im_max
    }
}

/// Node layout of a grid: `nx * ny` nodes spanning `rect` inclusively, stored
/// row-major with row 0 at `im_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(rect: Rect, nx: usize, ny: usize) -> Result<Self, MeasureError> {
        if nx < 2 || ny < 2 || !rect.is_valid() {
            return Err(MeasureError::InvalidGrid { nx, ny });
        }
        Ok(GridSpec { rect, nx, ny })
    }

    pub fn square(rect: Rect, n: usize) -> Result<Self, MeasureError> {
        GridSpec::new(rect, n, n)
    }

    pub fn hx(&self) -> f64 {
        (self.rect.re_max - self.rect.re_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.rect.im_max - self.rect.im_min) / (self.ny - 1) as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> Complex {
        Complex::new(
            self.rect.re_min + ix as f64 * self.hx(),
            self.rect.im_min + iy as f64 * self.hy(),
        )
    }

    #[inline]
    pub fn node_at(&self, index: usize) -> Complex {
        self.node(index % self.nx, index / self.nx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self, MeasureError> {
        if values.len() != spec.len() {
            return Err(MeasureError::ShapeMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MeasureError::NonFinite { index: i });
        }
        Ok(GridField { spec, values })
    }

    /// Samples `f` at every node (in parallel, order preserved).
    pub fn sample<F>(spec: GridSpec, f: F) -> Result<Self, MeasureError>
    where
        F: Fn(Complex) -> f64 + Sync + Send,
    {
        let values = par::map_range(spec.len(), |i| f(spec.node_at(i)));
        GridField::new(spec, values)
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.nx + ix]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    pub spec: GridSpec,
    pub cell_mass: Vec<f64>,
    /// Total mass after clipping.
    pub total_mass: f64,
    /// Signed mass before clipping.
    pub raw_mass: f64,
    /// Magnitude of the negative mass below `-CLIP_TOLERANCE` that was clipped.
    pub clipped_mass: f64,
    /// Cells whose mass was below the clipping tolerance.
    pub clipped_cells: usize,
}

impl GridMeasure {
    /// Mass of the cells whose node satisfies `pred`.
    pub fn mass_where<F: Fn(Complex) -> bool>(&self, pred: F) -> f64 {
        compensated_sum(
            self.cell_mass
                .iter()
                .enumerate()
                .filter(|(i, _)| pred(self.spec.node_at(*i)))
                .map(|(_, m)| *m),
        )
    }
}

/// Negative cell masses above this are treated as round-off.
pub const CLIP_TOLERANCE: f64 = 1e-9;
/// Clipped negative mass allowed as a fraction of the total.
pub const CLIP_EXCESS_FRACTION: f64 = 0.01;

/// Signed cell masses of the five-point `(1/2pi) Laplacian dx dy`, zero on
/// the boundary.
pub fn grid_laplacian_signed(field: &GridField) -> Vec<f64> {
    let spec = field.spec;
    let (nx, ny) = (spec.nx, spec.ny);
    let (hx, hy) = (spec.hx(), spec.hy());
    let (ax, ay) = (hy / hx, hx / hy);
    let norm = 1.0 / std::f64::consts::TAU;
    par::map_range(nx * ny, |i| {
        let (ix, iy) = (i % nx, i / nx);
        if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
            return 0.0;
        }
        let u = field.at(ix, iy);
        // (u_xx + u_yy) * hx * hy
        let lap = (field.at(ix + 1, iy) - 2.0 * u + field.at(ix - 1, iy)) * ax
            + (field.at(ix, iy + 1) - 2.0 * u + field.at(ix, iy - 1)) * ay;
        norm * lap
    })
}

/// Discrete `dd^c = (1/2pi) Laplacian dx dy` by the five-point stencil.
///
/// Boundary nodes carry no mass. Negative masses are set to zero; those below
/// `-CLIP_TOLERANCE` are counted in the clipping report, and if the clipped
/// negative mass exceeds 1% of the total the grid is declared under-resolved.
pub fn grid_laplacian_measure(field: &GridField) -> Result<GridMeasure, MeasureError> {
    let spec = field.spec;
    let raw = grid_laplacian_signed(field);
    let raw_mass = compensated_sum(raw.iter().copied());
    let mut clipped_mass = 0.0;
    let mut clipped_cells = 0;
    let cell_mass: Vec<f64> = raw
        .into_iter()
        .map(|m| {
            if m < 0.0 {
                if m < -CLIP_TOLERANCE {
                    clipped_mass += -m;
                    clipped_cells += 1;
                }
                0.0
            } else {
                m
            }
        })
        .collect();
    let total_mass = compensated_sum(cell_mass.iter().copied());
    if clipped_mass > CLIP_EXCESS_FRACTION * total_mass {
        return Err(MeasureError::ClippingExcess {
            clipped: clipped_mass,
            total: total_mass,
        });
    }
    Ok(GridMeasure {
        spec,
        cell_mass,
        total_mass,
        raw_mass,
        clipped_mass,
        clipped_cells,
    })
}

/// Cell-area-weighted mean of `|f1 - f2|` over the common grid.
pub fn potential_l1_distance(f1: &GridField, f2: &GridField) -> Result<f64, MeasureError> {
    if f1.spec != f2.spec {
        return Err(MeasureError::ShapeMismatch);
    }
    let area = f1.spec.cell_area();
    let total = compensated_sum(
        f1.values
            .iter()
            .zip(&f2.values)
            .map(|(a, b)| (a - b).abs() * area),
    );
    Ok(total / (area * f1.spec.len() as f64))
}
