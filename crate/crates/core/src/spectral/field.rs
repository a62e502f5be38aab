use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grid::{SpectralGrid, MAX_DIMS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("field is on the {found:?} side, operation needs {expected:?}")]
    SideMismatch { expected: Side, found: Side },
    #[error("fields live on different grids or component counts")]
    ShapeMismatch,
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("field needs at least one component")]
    NoComponents,
}

/// Samples of a `C^N`-valued function on a [`SpectralGrid`].
///
/// Values are component-major: component `c` occupies
/// `values[c * grid.len()..(c + 1) * grid.len()]`, row-major inside.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: SpectralGrid,
    components: usize,
    side: Side,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: SpectralGrid, components: usize, side: Side) -> Self {
        assert!(components >= 1, "field needs at least one component");
        Self {
            grid,
            components,
            side,
            values: vec![Complex64::new(0.0, 0.0); components * grid.len()],
        }
    }

    pub fn from_values(
        grid: SpectralGrid,
        components: usize,
        side: Side,
        values: Vec<Complex64>,
    ) -> Result<Self, FieldError> {
        if components == 0 {
            return Err(FieldError::NoComponents);
        }
        let expected = components * grid.len();
        if values.len() != expected {
            return Err(FieldError::SampleCount {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            components,
            side,
            values,
        })
    }

    /// Physical-side field from a closure `(x, component) -> value`.
    pub fn from_fn<F>(grid: SpectralGrid, components: usize, f: F) -> Self
    where
        F: Fn(&[f64], usize) -> Complex64,
    {
        let n = grid.len();
        let d = grid.n_dims();
        let mut values = Vec::with_capacity(components * n);
        for c in 0..components {
            for flat in 0..n {
                let x = grid.position(flat);
                values.push(f(&x[..d], c));
            }
        }
        Self {
            grid,
            components,
            side: Side::Physical,
            values,
        }
    }

    /// Real-valued physical field from `(x, component) -> value`.
    pub fn from_real_fn<F>(grid: SpectralGrid, components: usize, f: F) -> Self
    where
        F: Fn(&[f64], usize) -> f64,
    {
        Self::from_fn(grid, components, |x, c| Complex64::new(f(x, c), 0.0))
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.grid == other.grid && self.components == other.components
    }

    pub fn ensure_same_shape(&self, other: &Field) -> Result<(), FieldError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(FieldError::ShapeMismatch)
        }
    }

    pub fn ensure_side(&self, expected: Side) -> Result<(), FieldError> {
        if self.side == expected {
            Ok(())
        } else {
            Err(FieldError::SideMismatch {
                expected,
                found: self.side,
            })
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn scaled(&self, alpha: f64) -> Field {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Field, beta: f64) -> Result<Field, FieldError> {
        self.ensure_same_shape(other)?;
        if self.side != other.side {
            return Err(FieldError::SideMismatch {
                expected: self.side,
                found: other.side,
            });
        }
        let mut out = self.clone();
        for (o, b) in out.values.iter_mut().zip(&other.values) {
            *o = *o * alpha + *b * beta;
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Drops imaginary parts (physical side only makes sense for real data).
    pub fn real_part(&self) -> Field {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| v.im = 0.0);
        out
    }

    pub fn transform(&self, direction: Direction) -> Result<Field, FieldError> {
        match direction {
            Direction::Forward => self.forward(),
            Direction::Inverse => self.inverse(),
        }
    }

    /// Physical samples to unitary spectral coefficients.
    pub fn forward(&self) -> Result<Field, FieldError> {
        self.ensure_side(Side::Physical)?;
        let mut out = self.clone();
        for c in 0..self.components {
            fft_nd(&self.grid, out.component_mut(c), Direction::Forward);
        }
        out.side = Side::Spectral;
        Ok(out)
    }

    /// Unitary spectral coefficients back to physical samples.
    pub fn inverse(&self) -> Result<Field, FieldError> {
        self.ensure_side(Side::Spectral)?;
        let mut out = self.clone();
        for c in 0..self.components {
            fft_nd(&self.grid, out.component_mut(c), Direction::Inverse);
        }
        out.side = Side::Physical;
        Ok(out)
    }

    /// Multiplies every spectral mode of every component by `m(flat)`.
    pub fn apply_multiplier<F>(&self, m: F) -> Result<Field, FieldError>
    where
        F: Fn(usize) -> f64,
    {
        self.ensure_side(Side::Spectral)?;
        let n = self.grid.len();
        let factors: Vec<f64> = (0..n).map(m).collect();
        let mut out = self.clone();
        for c in 0..self.components {
            for (v, f) in out.component_mut(c).iter_mut().zip(&factors) {
                *v *= *f;
            }
        }
        Ok(out)
    }

    /// Two-thirds-rule truncation of a spectral field.
    pub fn dealiased(&self) -> Result<Field, FieldError> {
        self.ensure_side(Side::Spectral)?;
        let mask = self.grid.dealias_mask();
        let mut out = self.clone();
        let zero = Complex64::new(0.0, 0.0);
        for c in 0..self.components {
            for (v, keep) in out.component_mut(c).iter_mut().zip(&mask) {
                if !keep {
                    *v = zero;
                }
            }
        }
        Ok(out)
    }

    /// Largest relative violation of `u_hat(-xi) = conj(u_hat(xi))` over non-Nyquist modes.
    ///
    /// Zero for the spectrum of real physical data, up to round-off.
    pub fn conjugate_symmetry_defect(&self) -> Result<f64, FieldError> {
        self.ensure_side(Side::Spectral)?;
        let scale = self.max_abs();
        if scale == 0.0 {
            return Ok(0.0);
        }
        let mut worst: f64 = 0.0;
        for c in 0..self.components {
            let v = self.component(c);
            for flat in 0..self.grid.len() {
                if self.grid.is_nyquist(flat) {
                    continue;
                }
                let m = self.grid.mirror_index(flat);
                worst = worst.max((v[m] - v[flat].conj()).norm());
            }
        }
        Ok(worst / scale)
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(len: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().expect("fft planner poisoned");
    match direction {
        Direction::Forward => p.plan_fft_forward(len),
        Direction::Inverse => p.plan_fft_inverse(len),
    }
}

/// In-place unitary transform of one component.
///
/// Per axis the forward map is `u_hat(xi_k) = (h / sqrt(2W)) sum_j u(x_j) e^{-i xi_k x_j}`
/// with `x_j = -W + j h`; the shift by `-W` contributes the sign `(-1)^k`.
fn fft_nd(grid: &SpectralGrid, data: &mut [Complex64], direction: Direction) {
    let d = grid.n_dims();
    let pts = grid.points();
    let mut stride = 1;
    let mut strides = [0usize; MAX_DIMS];
    for axis in (0..d).rev() {
        strides[axis] = stride;
        stride *= pts[axis];
    }
    let total = grid.len();
    for axis in 0..d {
        let n = pts[axis];
        let s = strides[axis];
        let fft = plan(n, direction);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let h = grid.spacing(axis);
        let w = grid.half_widths()[axis];
        let scale = match direction {
            Direction::Forward => h / (2.0 * w).sqrt(),
            Direction::Inverse => 1.0 / (2.0 * w).sqrt(),
        };
        let block = n * s;
        for outer in (0..total).step_by(block) {
            for inner in 0..s {
                let base = outer + inner;
                for (k, l) in line.iter_mut().enumerate() {
                    *l = data[base + k * s];
                }
                if direction == Direction::Inverse {
                    apply_shift_sign(grid, axis, &mut line);
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                if direction == Direction::Forward {
                    apply_shift_sign(grid, axis, &mut line);
                }
                for (k, l) in line.iter().enumerate() {
                    data[base + k * s] = *l * scale;
                }
            }
        }
    }
}

fn apply_shift_sign(grid: &SpectralGrid, axis: usize, line: &mut [Complex64]) {
    for (k, v) in line.iter_mut().enumerate() {
        if grid.wavenumber(axis, k).rem_euclid(2) == 1 {
            *v = -*v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: SpectralGrid, comps: usize, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..comps * grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::from_values(grid, comps, Side::Physical, values).unwrap()
    }

    /// Direct evaluation of the unitary sum, independent of the FFT path.
    fn direct_dft(field: &Field) -> Vec<Complex64> {
        let g = *field.grid();
        let d = g.n_dims();
        let norm: f64 = (0..d)
            .map(|a| g.spacing(a) / (2.0 * g.half_widths()[a]).sqrt())
            .product();
        (0..g.len())
            .map(|kf| {
                let xi = g.xi(kf);
                let mut acc = Complex64::new(0.0, 0.0);
                for jf in 0..g.len() {
                    let x = g.position(jf);
                    let phase: f64 = (0..d).map(|a| xi[a] * x[a]).sum();
                    acc += field.values()[jf] * Complex64::from_polar(1.0, -phase);
                }
                acc * norm
            })
            .collect()
    }

    #[test]
    fn matches_direct_summation() {
        let g = SpectralGrid::new(2, &[8, 4], &[PI, 1.3]).unwrap();
        let f = random_field(g, 1, 3);
        let fast = f.forward().unwrap();
        let slow = direct_dft(&f);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let g = SpectralGrid::uniform(2, 8, 2.0).unwrap();
        let f = Field::from_real_fn(g, 1, |_, _| 3.0);
        let s = f.forward().unwrap();
        for (k, v) in s.values().iter().enumerate() {
            if k == 0 {
                assert!(v.norm() > 1.0);
            } else {
                assert!(v.norm() < 1e-13, "mode {k}: {v}");
            }
        }
    }

    #[test]
    fn pure_mode_hits_one_coefficient() {
        let g = SpectralGrid::uniform(1, 8, PI).unwrap();
        let f = Field::from_fn(g, 1, |x, _| Complex64::from_polar(1.0, x[0]));
        let s = f.forward().unwrap();
        let direct = direct_dft(&f);
        let k1 = g.storage_index(0, 1);
        for k in 0..8 {
            assert!((s.values()[k] - direct[k]).norm() < 1e-13);
            if k == k1 {
                assert!((s.values()[k].norm() - (2.0 * PI).sqrt()).abs() < 1e-12);
            } else {
                assert!(s.values()[k].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for (d, n) in [(1, 64), (2, 16), (3, 8)] {
            let g = SpectralGrid::uniform(d, n, 1.7).unwrap();
            let f = random_field(g, 2, 11);
            let s = f.forward().unwrap();
            let back = s.inverse().unwrap();
            let scale = f.max_abs();
            assert!(f.max_abs_diff(&back) < 1e-12 * scale);
            let phys: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_volume();
            let spec: f64 = s.values().iter().map(|v| v.norm_sqr()).sum();
            assert!((phys - spec).abs() < 1e-12 * phys);
        }
    }

    #[test]
    fn side_mismatch_is_rejected() {
        let g = SpectralGrid::uniform(1, 8, 1.0).unwrap();
        let f = Field::zeros(g, 1, Side::Spectral);
        assert!(matches!(
            f.forward(),
            Err(FieldError::SideMismatch { .. })
        ));
        let p = Field::zeros(g, 1, Side::Physical);
        assert!(p.inverse().is_err());
    }

    #[test]
    fn real_data_has_conjugate_symmetric_spectrum() {
        let g = SpectralGrid::uniform(2, 16, 3.0).unwrap();
        let f = random_field(g, 1, 5).real_part();
        let s = f.forward().unwrap();
        assert!(s.conjugate_symmetry_defect().unwrap() < 1e-12);
    }
}
