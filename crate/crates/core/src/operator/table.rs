use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use super::kernels::{cos_sin_matrix, cosine_scalar, sine_scalar, CMatrix, KernelError, ModeOperator};
use super::OperatorSpec;
use crate::spectral::{EllipticForm, SpectralGrid, MAX_DIMS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("kernel failed at xi = {xi:?}: {source}")]
    Kernel {
        xi: Vec<f64>,
        #[source]
        source: KernelError,
    },
    #[error("elliptic form has dimension {form}, grid has {grid}")]
    DimensionMismatch { form: usize, grid: usize },
    #[error("tabulation time must be finite and >= 0, got {0}")]
    BadTime(f64),
}

/// Which per-mode kernel to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `C(t)`.
    Cos,
    /// `S(t)`.
    Sin,
    /// `dC/dt = -A_xi S(t)`.
    CosRate,
}

#[derive(Debug, Clone)]
enum ModeKernels {
    Scalar {
        frozen: Vec<f64>,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    Matrix {
        n: usize,
        frozen: Vec<CMatrix>,
        cos: Vec<CMatrix>,
        sin: Vec<CMatrix>,
        cos_rate: Vec<CMatrix>,
    },
}

/// Cosine and sine kernels of `A_xi` at a fixed time for every lattice mode,
/// plus `r(xi) = 1 / (1 + L(xi))`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: SpectralGrid,
    dt: f64,
    r: Vec<f64>,
    kernels: ModeKernels,
}

fn xi_vec(grid: &SpectralGrid, flat: usize) -> [f64; MAX_DIMS] {
    grid.xi(flat)
}

/// Tabulates `C(dt)`, `S(dt)` and `r` for every mode of `grid`.
pub fn build_kernel_table(
    a: &OperatorSpec,
    form: &EllipticForm,
    grid: &SpectralGrid,
    dt: f64,
) -> Result<KernelTable, TableError> {
    KernelTable::build(a, form, grid, dt)
}

impl KernelTable {
    pub fn build(
        a: &OperatorSpec,
        form: &EllipticForm,
        grid: &SpectralGrid,
        dt: f64,
    ) -> Result<Self, TableError> {
        Self::build_inner(a, form, grid, dt, true)
    }

    fn build_inner(
        a: &OperatorSpec,
        form: &EllipticForm,
        grid: &SpectralGrid,
        dt: f64,
        parallel: bool,
    ) -> Result<Self, TableError> {
        if form.dims() != grid.n_dims() {
            return Err(TableError::DimensionMismatch {
                form: form.dims(),
                grid: grid.n_dims(),
            });
        }
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(TableError::BadTime(dt));
        }
        let d = grid.n_dims();
        let n_modes = grid.len();
        let r: Vec<f64> = (0..n_modes)
            .map(|k| 1.0 / (1.0 + form.symbol_unchecked(&xi_vec(grid, k)[..d])))
            .collect();
        let kernels = match a {
            OperatorSpec::Symbol(sym) => {
                let frozen: Vec<f64> = (0..n_modes)
                    .map(|k| r[k] * sym.eval(&xi_vec(grid, k)[..d]))
                    .collect();
                if let Some(k) = frozen.iter().position(|v| !v.is_finite()) {
                    return Err(TableError::Kernel {
                        xi: xi_vec(grid, k)[..d].to_vec(),
                        source: KernelError::NonFinite,
                    });
                }
                let cos = frozen.iter().map(|&m| cosine_scalar(m, dt)).collect();
                let sin = frozen.iter().map(|&m| sine_scalar(m, dt)).collect();
                ModeKernels::Scalar { frozen, cos, sin }
            }
            OperatorSpec::Matrix(m) => {
                let one = |k: usize| -> Result<(CMatrix, CMatrix, CMatrix, CMatrix), TableError> {
                    let f = m * Complex64::new(r[k], 0.0);
                    let (c, s) = cos_sin_matrix(&f, dt).map_err(|source| TableError::Kernel {
                        xi: xi_vec(grid, k)[..d].to_vec(),
                        source,
                    })?;
                    let rate = -(&f * &s);
                    Ok((f, c, s, rate))
                };
                let rows: Vec<_> = if parallel {
                    (0..n_modes).into_par_iter().map(one).collect::<Result<_, _>>()?
                } else {
                    (0..n_modes).map(one).collect::<Result<_, _>>()?
                };
                let mut frozen = Vec::with_capacity(n_modes);
                let mut cos = Vec::with_capacity(n_modes);
                let mut sin = Vec::with_capacity(n_modes);
                let mut cos_rate = Vec::with_capacity(n_modes);
                for (f, c, s, rt) in rows {
                    frozen.push(f);
                    cos.push(c);
                    sin.push(s);
                    cos_rate.push(rt);
                }
                ModeKernels::Matrix {
                    n: m.nrows(),
                    frozen,
                    cos,
                    sin,
                    cos_rate,
                }
            }
        };
        Ok(Self {
            grid: *grid,
            dt,
            r,
            kernels,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn components(&self) -> usize {
        match &self.kernels {
            ModeKernels::Scalar { .. } => 1,
            ModeKernels::Matrix { n, .. } => *n,
        }
    }

    /// `1 / (1 + L(xi))` at every mode.
    pub fn resolvent_factor(&self) -> &[f64] {
        &self.r
    }

    pub fn frozen(&self, mode: usize) -> ModeOperator {
        match &self.kernels {
            ModeKernels::Scalar { frozen, .. } => ModeOperator::Scalar(frozen[mode]),
            ModeKernels::Matrix { frozen, .. } => ModeOperator::Matrix(frozen[mode].clone()),
        }
    }

    pub fn cos(&self, mode: usize) -> ModeOperator {
        match &self.kernels {
            ModeKernels::Scalar { cos, .. } => ModeOperator::Scalar(cos[mode]),
            ModeKernels::Matrix { cos, .. } => ModeOperator::Matrix(cos[mode].clone()),
        }
    }

    pub fn sin(&self, mode: usize) -> ModeOperator {
        match &self.kernels {
            ModeKernels::Scalar { sin, .. } => ModeOperator::Scalar(sin[mode]),
            ModeKernels::Matrix { sin, .. } => ModeOperator::Matrix(sin[mode].clone()),
        }
    }

    /// `out += coeff * K(mode) * input` on every mode, component-major layout.
    pub fn accumulate(&self, kernel: Kernel, coeff: f64, input: &[Complex64], out: &mut [Complex64]) {
        let n_modes = self.grid.len();
        match &self.kernels {
            ModeKernels::Scalar { frozen, cos, sin } => {
                for m in 0..n_modes {
                    let k = match kernel {
                        Kernel::Cos => cos[m],
                        Kernel::Sin => sin[m],
                        Kernel::CosRate => -frozen[m] * sin[m],
                    };
                    out[m] += input[m] * (coeff * k);
                }
            }
            ModeKernels::Matrix {
                n,
                cos,
                sin,
                cos_rate,
                ..
            } => {
                let table = match kernel {
                    Kernel::Cos => cos,
                    Kernel::Sin => sin,
                    Kernel::CosRate => cos_rate,
                };
                for m in 0..n_modes {
                    let k = &table[m];
                    for i in 0..*n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for j in 0..*n {
                            acc += k[(i, j)] * input[j * n_modes + m];
                        }
                        out[i * n_modes + m] += acc * coeff;
                    }
                }
            }
        }
    }
}

/// Kernel tables at the uniform times `0, dt, 2 dt, ..., steps * dt`,
/// each tabulated directly at its own time.
#[derive(Debug, Clone)]
pub struct PropagatorSet {
    dt: f64,
    tables: Vec<KernelTable>,
}

impl PropagatorSet {
    pub fn build(
        a: &OperatorSpec,
        form: &EllipticForm,
        grid: &SpectralGrid,
        dt: f64,
        steps: usize,
    ) -> Result<Self, TableError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TableError::BadTime(dt));
        }
        let tables = (0..=steps)
            .into_par_iter()
            .map(|j| KernelTable::build_inner(a, form, grid, j as f64 * dt, false))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { dt, tables })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.tables.len() - 1
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.tables[0].grid()
    }

    pub fn components(&self) -> usize {
        self.tables[0].components()
    }

    /// Table at time `j * dt`.
    pub fn at(&self, j: usize) -> &KernelTable {
        &self.tables[j]
    }
}
