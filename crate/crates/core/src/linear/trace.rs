use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LinearError;
use crate::spectral::{Field, NormSpec, Side, SpectralGrid, StateNorms};

/// Norms of `u` and `u_t` at one stored time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceNorms {
    pub u: StateNorms,
    pub ut: StateNorms,
}

/// Time-indexed states `u(t_k)`, velocities `u_t(t_k)` and their norms.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    grid: SpectralGrid,
    components: usize,
    spec: NormSpec,
    times: Vec<f64>,
    states: Vec<Field>,
    velocities: Vec<Field>,
    spectra: Vec<Field>,
    norms: Vec<TraceNorms>,
}

impl SolutionTrace {
    /// Assembles a trace from per-time physical fields and the spectra of `u`.
    pub(crate) fn assemble(
        spec: NormSpec,
        times: Vec<f64>,
        states: Vec<Field>,
        velocities: Vec<Field>,
        spectra: Vec<Field>,
    ) -> Result<Self, LinearError> {
        let first = states.first().ok_or(LinearError::EmptyTrace)?;
        let grid = *first.grid();
        let components = first.components();
        let norms = (0..times.len())
            .into_par_iter()
            .map(|k| {
                Ok(TraceNorms {
                    u: StateNorms::compute(&states[k], Some(&spectra[k]), spec)?,
                    ut: StateNorms::compute(&velocities[k], None, spec)?,
                })
            })
            .collect::<Result<Vec<_>, LinearError>>()?;
        Ok(Self {
            grid,
            components,
            spec,
            times,
            states,
            velocities,
            spectra,
            norms,
        })
    }

    /// Trace built from physical fields only; spectra are computed here.
    pub fn from_fields(
        spec: NormSpec,
        times: Vec<f64>,
        states: Vec<Field>,
        velocities: Vec<Field>,
    ) -> Result<Self, LinearError> {
        if times.is_empty() || times.len() != states.len() || times.len() != velocities.len() {
            return Err(LinearError::EmptyTrace);
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LinearError::TimesNotIncreasing);
        }
        for f in states.iter().chain(&velocities) {
            f.ensure_side(Side::Physical)?;
            f.ensure_same_shape(&states[0])?;
        }
        let spectra = states
            .par_iter()
            .map(|u| u.forward())
            .collect::<Result<Vec<_>, _>>()?;
        Self::assemble(spec, times, states, velocities, spectra)
    }

    /// Identically zero trace on the given times.
    pub fn zeros(grid: SpectralGrid, components: usize, spec: NormSpec, times: Vec<f64>) -> Self {
        let n = times.len();
        let zero = Field::zeros(grid, components, Side::Physical);
        let zero_hat = Field::zeros(grid, components, Side::Spectral);
        Self {
            grid,
            components,
            spec,
            times,
            states: vec![zero.clone(); n],
            velocities: vec![zero; n],
            spectra: vec![zero_hat; n],
            norms: vec![TraceNorms::default(); n],
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn norm_spec(&self) -> NormSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, k: usize) -> &Field {
        &self.states[k]
    }

    pub fn velocity(&self, k: usize) -> &Field {
        &self.velocities[k]
    }

    /// Spectrum of `u(t_k)`.
    pub fn spectrum(&self, k: usize) -> &Field {
        &self.spectra[k]
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn velocities(&self) -> &[Field] {
        &self.velocities
    }

    pub fn norms(&self) -> &[TraceNorms] {
        &self.norms
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trace is never empty")
    }

    pub fn last_state(&self) -> &Field {
        self.states.last().expect("trace is never empty")
    }

    pub fn last_velocity(&self) -> &Field {
        self.velocities.last().expect("trace is never empty")
    }

    /// Monitored size `||u||_{Y} + ||u||_inf + ||u_t||_{Y} + ||u_t||_inf` at time index `k`.
    pub fn monitor(&self, k: usize) -> f64 {
        let n = &self.norms[k];
        n.u.ysp + n.u.xinf + n.ut.ysp + n.ut.xinf
    }

    /// Appends `other` shifted by `offset`, dropping its first sample (the seam,
    /// which must coincide with the current last sample).
    pub fn append_window(&mut self, other: SolutionTrace, offset: f64) -> Result<(), LinearError> {
        if other.grid != self.grid || other.components != self.components {
            return Err(LinearError::GridMismatch);
        }
        let base = self.last_time();
        for (k, ((((t, u), ut), uh), n)) in other
            .times
            .into_iter()
            .zip(other.states)
            .zip(other.velocities)
            .zip(other.spectra)
            .zip(other.norms)
            .enumerate()
        {
            if k == 0 {
                continue;
            }
            let t = offset + t;
            if t <= base {
                return Err(LinearError::TimesNotIncreasing);
            }
            self.times.push(t);
            self.states.push(u);
            self.velocities.push(ut);
            self.spectra.push(uh);
            self.norms.push(n);
        }
        Ok(())
    }

    /// Keeps the first `len` samples.
    pub fn truncate(&mut self, len: usize) {
        let len = len.max(1);
        self.times.truncate(len);
        self.states.truncate(len);
        self.velocities.truncate(len);
        self.spectra.truncate(len);
        self.norms.truncate(len);
    }

    /// Sample-wise difference `self - other` with recomputed norms.
    pub fn difference(&self, other: &SolutionTrace) -> Result<SolutionTrace, LinearError> {
        if self.grid != other.grid
            || self.components != other.components
            || self.times.len() != other.times.len()
        {
            return Err(LinearError::GridMismatch);
        }
        let states = pairwise(&self.states, &other.states)?;
        let velocities = pairwise(&self.velocities, &other.velocities)?;
        let spectra = pairwise(&self.spectra, &other.spectra)?;
        Self::assemble(self.spec, self.times.clone(), states, velocities, spectra)
    }

    /// Largest relative mismatch between stored norms and a fresh recomputation.
    pub fn norm_consistency_defect(&self) -> Result<f64, LinearError> {
        let mut worst: f64 = 0.0;
        for k in 0..self.len() {
            let u = StateNorms::compute(&self.states[k], None, self.spec)?;
            let ut = StateNorms::compute(&self.velocities[k], None, self.spec)?;
            let stored = &self.norms[k];
            for (a, b) in [
                (u.x1, stored.u.x1),
                (u.xp, stored.u.xp),
                (u.xinf, stored.u.xinf),
                (u.ysp, stored.u.ysp),
                (ut.x1, stored.ut.x1),
                (ut.xp, stored.ut.xp),
                (ut.xinf, stored.ut.xinf),
                (ut.ysp, stored.ut.ysp),
            ] {
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        Ok(worst)
    }
}

fn pairwise(a: &[Field], b: &[Field]) -> Result<Vec<Field>, LinearError> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.combine(1.0, y, -1.0).map_err(LinearError::from))
        .collect()
}
