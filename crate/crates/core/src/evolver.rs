//! Strang split-step Fourier integrator for `i Q_t + Q_xx + 2 Q Q^dagger Q = 0`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{total_power, SpatialGrid, SpinorField};
use crate::linalg::{exp_i_hermitian, Mat2, C64};
use crate::spectral::Spectral;

/// Snapshots of an evolution together with the power at each stored time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: SpatialGrid,
    pub times: Vec<f64>,
    pub snapshots: Vec<SpinorField>,
    pub power: Vec<f64>,
}

impl Trajectory {
    /// Largest relative deviation of the stored power from its initial value.
    pub fn max_power_drift(&self) -> f64 {
        let p0 = self.power.first().copied().unwrap_or(0.0);
        let scale = p0.abs().max(f64::MIN_POSITIVE);
        self.power.iter().map(|p| (p - p0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &SpinorField {
        self.snapshots.last().expect("trajectory always holds the initial snapshot")
    }

    /// Writes one CSV per snapshot plus `manifest.json`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>, runtime_s: f64) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.snapshots.len());
        for (i, snap) in self.snapshots.iter().enumerate() {
            let name = format!("snapshot_{i:05}.csv");
            snap.write_csv(dir.join(&name))?;
            files.push(name);
        }
        let manifest = Manifest {
            times: &self.times,
            power: &self.power,
            files,
            max_power_drift: self.max_power_drift(),
            runtime_s,
        };
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    /// Reads a trajectory written by [`Trajectory::write_outputs`].
    pub fn read_outputs(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: StoredManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.files.is_empty() || manifest.files.len() != manifest.times.len() {
            return Err(Error::InvalidInput("manifest lists no snapshots or mismatched times".into()));
        }
        let snapshots = manifest
            .files
            .iter()
            .map(|f| SpinorField::read_csv(dir.join(f)))
            .collect::<Result<Vec<_>>>()?;
        let grid = snapshots[0].grid;
        Ok(Self { grid, times: manifest.times, snapshots, power: manifest.power })
    }
}

#[derive(Deserialize)]
struct StoredManifest {
    times: Vec<f64>,
    power: Vec<f64>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    times: &'a [f64],
    power: &'a [f64],
    files: Vec<String>,
    max_power_drift: f64,
    runtime_s: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Time step; must lie in `(0, MAX_DT]`.
    pub dt: f64,
    pub store_every: usize,
    /// Two-thirds rule after each nonlinear step. Breaks exact power conservation.
    pub dealias: bool,
    pub blowup_threshold: f64,
    pub drift_tol: f64,
}

/// Largest admissible time step.
pub const MAX_DT: f64 = 1e-2;

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { dt: 1e-3, store_every: 100, dealias: false, blowup_threshold: 1e6, drift_tol: 1e-6 }
    }
}

/// `exp(2 i tau Q Q^dagger) Q`, the exact flow of `i Q_t + 2 Q Q^dagger Q = 0`.
pub fn exact_nonlinear_step(q: &Mat2, tau: f64) -> Mat2 {
    exp_i_hermitian(&(q * q.adjoint()), 2.0 * tau) * q
}

/// Reusable split-step propagator for a fixed grid and signed step.
pub struct SplitStep {
    spectral: Spectral,
    dt: f64,
    half: Vec<C64>,
    full: Vec<C64>,
    mask: Option<Vec<f64>>,
}

impl SplitStep {
    pub fn new(grid: &SpatialGrid, dt: f64, dealias: bool) -> Self {
        let spectral = Spectral::new(grid);
        let k = spectral.wavenumbers();
        let half = k.iter().map(|xi| C64::from_polar(1.0, -xi * xi * dt * 0.5)).collect();
        let full = k.iter().map(|xi| C64::from_polar(1.0, -xi * xi * dt)).collect();
        let mask = dealias.then(|| {
            let cut = k.iter().fold(0.0f64, |a, x| a.max(x.abs())) * 2.0 / 3.0;
            k.iter().map(|xi| if xi.abs() > cut { 0.0 } else { 1.0 }).collect()
        });
        Self { spectral, dt, half, full, mask }
    }

    fn linear(&self, comp: &mut [C64], phase: &[C64]) {
        self.spectral.forward(comp);
        for (z, p) in comp.iter_mut().zip(phase) {
            *z *= p;
        }
        if let Some(mask) = &self.mask {
            for (z, w) in comp.iter_mut().zip(mask) {
                *z *= w;
            }
        }
        self.spectral.inverse(comp);
    }

    fn nonlinear(&self, field: &mut SpinorField) {
        for m in 0..field.grid.n_points() {
            let q = exact_nonlinear_step(&field.matrix_at(m), self.dt);
            field.q1[m] = q[(0, 0)];
            field.q0[m] = q[(0, 1)];
            field.qm1[m] = q[(1, 1)];
        }
    }

    /// Advances `steps` Strang steps, calling `check` after every nonlinear substep.
    pub fn advance_checked(
        &self,
        field: &mut SpinorField,
        steps: usize,
        mut check: impl FnMut(usize, &SpinorField) -> Result<()>,
    ) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        for comp in [&mut field.q1, &mut field.q0, &mut field.qm1] {
            self.linear(comp, &self.half);
        }
        for s in 0..steps {
            self.nonlinear(field);
            check(s, field)?;
            let phase = if s + 1 == steps { &self.half } else { &self.full };
            for comp in [&mut field.q1, &mut field.q0, &mut field.qm1] {
                self.linear(comp, phase);
            }
        }
        Ok(())
    }

    pub fn advance(&self, field: &mut SpinorField, steps: usize) {
        self.advance_checked(field, steps, |_, _| Ok(())).expect("unchecked advance cannot fail");
    }
}

/// Evolves `q0` to `t_end` with step `dt`, storing every `store_every` steps.
pub fn evolve(q0: &SpinorField, t_end: f64, dt: f64, store_every: usize) -> Result<Trajectory> {
    evolve_with(q0, t_end, &EvolveOptions { dt, store_every, ..EvolveOptions::default() })
}

pub fn evolve_with(q0: &SpinorField, t_end: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    let dt = opts.dt;
    if !(dt > 0.0 && dt.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("need dt > 0 and t_end > 0 (dt = {dt}, t_end = {t_end})")));
    }
    if dt > MAX_DT {
        return Err(Error::InvalidInput(format!("dt = {dt} exceeds the limit {MAX_DT}")));
    }
    if opts.store_every == 0 {
        return Err(Error::InvalidInput("store_every must be at least 1".into()));
    }
    let ratio = t_end / dt;
    let steps = ratio.round() as usize;
    if steps == 0 || (ratio - steps as f64).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!("t_end = {t_end} is not a multiple of dt = {dt}")));
    }
    let max0 = q0.boundary_max();
    if max0 > crate::field::DEFAULT_DECAY_TOL {
        return Err(Error::BoundaryDecay { max: max0, tol: crate::field::DEFAULT_DECAY_TOL });
    }

    let stepper = SplitStep::new(&q0.grid, dt, opts.dealias);
    let p0 = total_power(q0);
    let scale = p0.max(f64::MIN_POSITIVE);
    let mut field = q0.clone();
    let mut traj = Trajectory { grid: q0.grid, times: vec![0.0], snapshots: vec![q0.clone()], power: vec![p0] };
    let mut done = 0usize;
    while done < steps {
        let chunk = opts.store_every.min(steps - done);
        let start = done;
        stepper.advance_checked(&mut field, chunk, |s, f| {
            let time = (start + s + 1) as f64 * dt;
            let max = f.max_abs();
            if !max.is_finite() || max > opts.blowup_threshold {
                return Err(Error::BlowUp { time, max });
            }
            let drift = (total_power(f) - p0).abs() / scale;
            if drift > opts.drift_tol {
                return Err(Error::PowerDrift { time, drift, tol: opts.drift_tol });
            }
            Ok(())
        })?;
        done += chunk;
        traj.times.push(done as f64 * dt);
        traj.power.push(total_power(&field));
        traj.snapshots.push(field.clone());
    }
    Ok(traj)
}
