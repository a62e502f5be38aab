use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported spatial dimension.
pub const MAX_DIMS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("spatial dimension {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("axis {axis}: {points} points is not a power of two >= 4")]
    BadPointCount { axis: usize, points: usize },
    #[error("axis {axis}: half width {half_width} must be positive and finite")]
    BadHalfWidth { axis: usize, half_width: f64 },
    #[error("expected {expected} per-axis values, got {got}")]
    AxisCount { expected: usize, got: usize },
}

/// Periodic box `[-W, W)^n` sampled uniformly, together with its frequency lattice.
///
/// Samples are stored row-major (last axis fastest). Spectral coefficients use
/// the FFT storage order: index `k < N/2` carries the signed wavenumber `k`,
/// index `k >= N/2` carries `k - N`. The frequency attached to wavenumber `j`
/// is `pi * j / W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    n_dims: usize,
    points: [usize; MAX_DIMS],
    half_width: [f64; MAX_DIMS],
}

impl SpectralGrid {
    /// Builds a grid. `points` and `half_width` either hold one value per axis
    /// or a single value that is broadcast to every axis.
    pub fn new(n_dims: usize, points: &[usize], half_width: &[f64]) -> Result<Self, GridError> {
        if !(1..=MAX_DIMS).contains(&n_dims) {
            return Err(GridError::UnsupportedDimension(n_dims));
        }
        let points = broadcast(points, n_dims, 1)?;
        let half_width = broadcast(half_width, n_dims, 1.0)?;
        for axis in 0..n_dims {
            let n = points[axis];
            if n < 4 || !n.is_power_of_two() {
                return Err(GridError::BadPointCount { axis, points: n });
            }
            let w = half_width[axis];
            if !(w.is_finite() && w > 0.0) {
                return Err(GridError::BadHalfWidth { axis, half_width: w });
            }
        }
        Ok(Self {
            n_dims,
            points,
            half_width,
        })
    }

    /// Same number of points and the same half width on every axis.
    pub fn uniform(n_dims: usize, points: usize, half_width: f64) -> Result<Self, GridError> {
        Self::new(n_dims, &[points], &[half_width])
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn points(&self) -> &[usize] {
        &self.points[..self.n_dims]
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_width[..self.n_dims]
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.points().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `2W/N` on `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_width[axis] / self.points[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.n_dims).map(|a| self.spacing(a)).product()
    }

    /// Volume of the periodic box, `(2W)^n`.
    pub fn box_volume(&self) -> f64 {
        self.half_widths().iter().map(|w| 2.0 * w).product()
    }

    /// Spacing of the frequency lattice on `axis`, `pi / W`.
    pub fn frequency_step(&self, axis: usize) -> f64 {
        PI / self.half_width[axis]
    }

    /// Physical coordinate of sample `j` on `axis`.
    pub fn coordinate(&self, axis: usize, j: usize) -> f64 {
        -self.half_width[axis] + j as f64 * self.spacing(axis)
    }

    /// Signed wavenumber stored at FFT index `k` on `axis`.
    pub fn wavenumber(&self, axis: usize, k: usize) -> i64 {
        let n = self.points[axis];
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// Frequency stored at FFT index `k` on `axis`.
    pub fn frequency(&self, axis: usize, k: usize) -> f64 {
        self.wavenumber(axis, k) as f64 * self.frequency_step(axis)
    }

    /// The frequency lattice on `axis`, sorted ascending.
    pub fn frequencies(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis] as i64;
        let step = self.frequency_step(axis);
        (-n / 2..n / 2).map(|j| j as f64 * step).collect()
    }

    /// FFT storage index of signed wavenumber `j` on `axis`.
    pub fn storage_index(&self, axis: usize, j: i64) -> usize {
        let n = self.points[axis] as i64;
        j.rem_euclid(n) as usize
    }

    /// Splits a flat row-major index into per-axis indices.
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIMS] {
        let mut idx = [0; MAX_DIMS];
        let mut rest = flat;
        for axis in (0..self.n_dims).rev() {
            idx[axis] = rest % self.points[axis];
            rest /= self.points[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        (0..self.n_dims).fold(0, |acc, a| acc * self.points[a] + idx[a])
    }

    /// Physical position of the flat sample index.
    pub fn position(&self, flat: usize) -> [f64; MAX_DIMS] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; MAX_DIMS];
        for a in 0..self.n_dims {
            x[a] = self.coordinate(a, idx[a]);
        }
        x
    }

    /// Frequency vector of the flat spectral index.
    pub fn xi(&self, flat: usize) -> [f64; MAX_DIMS] {
        let idx = self.multi_index(flat);
        let mut xi = [0.0; MAX_DIMS];
        for a in 0..self.n_dims {
            xi[a] = self.frequency(a, idx[a]);
        }
        xi
    }

    /// Signed wavenumber vector of the flat spectral index.
    pub fn wavenumbers(&self, flat: usize) -> [i64; MAX_DIMS] {
        let idx = self.multi_index(flat);
        let mut j = [0; MAX_DIMS];
        for a in 0..self.n_dims {
            j[a] = self.wavenumber(a, idx[a]);
        }
        j
    }

    pub fn xi_norm_sq(&self, flat: usize) -> f64 {
        self.xi(flat)[..self.n_dims].iter().map(|x| x * x).sum()
    }

    /// True when the mode sits on the Nyquist frequency of any axis.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.n_dims).any(|a| idx[a] == self.points[a] / 2)
    }

    /// Spectral index of `-xi` for the mode at `flat`.
    pub fn mirror_index(&self, flat: usize) -> usize {
        let idx = self.multi_index(flat);
        let mut m = [0; MAX_DIMS];
        for a in 0..self.n_dims {
            let n = self.points[a];
            m[a] = (n - idx[a]) % n;
        }
        self.flat_index(&m)
    }

    /// Keep-mask of the two-thirds rule: a mode survives when `3|j| < N` on every axis.
    pub fn dealias_mask(&self) -> Vec<bool> {
        (0..self.len())
            .map(|flat| {
                let j = self.wavenumbers(flat);
                (0..self.n_dims).all(|a| 3 * j[a].unsigned_abs() < self.points[a] as u64)
            })
            .collect()
    }

    /// Same box, each axis refined by `factor` (a power of two).
    pub fn refined(&self, factor: usize) -> Result<Self, GridError> {
        let pts: Vec<usize> = self.points().iter().map(|p| p * factor).collect();
        Self::new(self.n_dims, &pts, self.half_widths())
    }
}

fn broadcast<T: Copy>(values: &[T], n: usize, fill: T) -> Result<[T; MAX_DIMS], GridError> {
    let mut out = [fill; MAX_DIMS];
    match values.len() {
        1 => out[..n].iter_mut().for_each(|o| *o = values[0]),
        len if len == n => out[..n].copy_from_slice(values),
        got => return Err(GridError::AxisCount { expected: n, got }),
    }
    Ok(out)
}
