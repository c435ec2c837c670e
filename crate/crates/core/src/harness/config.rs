use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolver::{EvolveOptions, MAX_DT};
use crate::field::{SpatialGrid, SpinorField};
use crate::linalg::{frob, Mat2, C64};
use crate::scattering::SearchBox;
use crate::soliton::{is_full_rank, soliton_field, ConeSpec, Pole, SolitonData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Solitonless,
    OneSoliton,
    TwoSoliton,
    Mixed,
}

/// `amplitude * exp(-((x - center) / width)^2) * exp(i (wavenumber x + phase))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianProfile {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub wavenumber: f64,
    pub phase: f64,
}

impl Default for GaussianProfile {
    fn default() -> Self {
        Self { amplitude: 0.0, center: 0.0, width: 1.0, wavenumber: 0.0, phase: 0.0 }
    }
}

impl GaussianProfile {
    pub fn new(amplitude: f64) -> Self {
        Self { amplitude, ..Self::default() }
    }

    pub fn value(&self, x: f64) -> C64 {
        if self.amplitude == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let s = (x - self.center) / self.width;
        C64::from_polar(self.amplitude * (-s * s).exp(), self.wavenumber * x + self.phase)
    }

    fn validate(&self, name: &str) -> Result<()> {
        let finite = [self.amplitude, self.center, self.width, self.wavenumber, self.phase].iter().all(|v| v.is_finite());
        if !finite || !(self.width > 0.0) {
            return Err(Error::Config(format!("{name}: parameters must be finite with width > 0")));
        }
        Ok(())
    }
}

/// Named initial-condition family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialCondition {
    Gaussian {
        #[serde(default)]
        q1: GaussianProfile,
        #[serde(default)]
        q0: GaussianProfile,
        #[serde(default)]
        qm1: GaussianProfile,
    },
}

impl InitialCondition {
    pub fn gaussian(q1: GaussianProfile, q0: GaussianProfile, qm1: GaussianProfile) -> Self {
        Self::Gaussian { q1, q0, qm1 }
    }

    pub fn value(&self, x: f64) -> [C64; 3] {
        match self {
            Self::Gaussian { q1, q0, qm1 } => [q1.value(x), q0.value(x), qm1.value(x)],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { q1, q0, qm1 } => {
                q1.validate("q1")?;
                q0.validate("q0")?;
                qm1.validate("qm1")
            }
        }
    }
}

/// The three Gaussian data sets used for the scattering identities.
pub fn gaussian_corpus() -> Vec<InitialCondition> {
    let g = |amplitude, center, width, wavenumber, phase| GaussianProfile { amplitude, center, width, wavenumber, phase };
    vec![
        InitialCondition::gaussian(GaussianProfile::default(), GaussianProfile::new(0.3), GaussianProfile::default()),
        InitialCondition::gaussian(GaussianProfile::new(0.25), g(0.15, 0.0, 1.0, 0.0, 0.5), GaussianProfile::new(0.25)),
        InitialCondition::gaussian(g(0.2, 0.5, 1.0, 0.0, 0.0), g(0.15, 0.0, 1.2, 0.3, 0.0), g(0.1, -0.5, 0.8, 0.0, 1.0)),
    ]
}

/// A discrete eigenvalue `k` and symmetric norming constant `[[f11, f12], [f12, f22]]`;
/// complex numbers are `[re, im]` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    pub k: [f64; 2],
    #[serde(default)]
    pub f11: [f64; 2],
    #[serde(default)]
    pub f12: [f64; 2],
    #[serde(default)]
    pub f22: [f64; 2],
}

impl PoleSpec {
    pub fn to_pole(&self) -> Pole {
        let c = |v: [f64; 2]| C64::new(v[0], v[1]);
        let f12 = c(self.f12);
        Pole { k: c(self.k), f: Mat2::new(c(self.f11), f12, f12, c(self.f22)) }
    }

    pub fn from_pole(p: &Pole) -> Self {
        let pair = |z: C64| [z.re, z.im];
        Self { k: pair(p.k), f11: pair(p.f[(0, 0)]), f12: pair(p.f[(0, 1)]), f22: pair(p.f[(1, 1)]) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl KGrid {
    pub fn points(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.min + h * i as f64).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) || self.n < 4 {
            return Err(Error::Config(format!("{name}: need finite min < max and n >= 4")));
        }
        Ok(())
    }
}

/// Experiment description. Lengths and times are in the dimensionless units of
/// `i Q_t + Q_xx + 2 Q Q^dagger Q = 0`; spectral parameters are in inverse length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Evolution domain `[x_min, x_max]`.
    pub domain: [f64; 2],
    pub n_points: usize,
    pub dt: f64,
    pub t_end: f64,
    pub store_every: usize,
    pub dealias: bool,
    /// Times at which predictions are compared with the evolution.
    pub sample_times: Vec<f64>,
    pub initial_condition: Option<InitialCondition>,
    pub solitons: Vec<PoleSpec>,
    /// Domain and resolution for direct scattering.
    pub scatter_domain: [f64; 2],
    pub scatter_n_points: usize,
    /// Real grid on which the reflection coefficient is sampled.
    pub k_grid: KGrid,
    /// Real grid for the scattering identities.
    pub identity_grid: KGrid,
    /// `[re_min, re_max, im_min, im_max]` for the discrete-spectrum search.
    pub search_box: [f64; 4],
    /// Rays `x = xi t` probed when no cone is given.
    pub rays: Vec<f64>,
    pub cone: Option<ConeSpec>,
    /// Times of the cone-localization measurement.
    pub cone_times: Vec<f64>,
    /// Node spacing for sup-norms over cone cross-sections of closed-form fields.
    pub cone_spacing: f64,
    /// Data sets for the scattering identities; empty means the built-in corpus.
    pub corpus: Vec<InitialCondition>,
    pub positivity_trials: usize,
    pub pcf_samples: usize,
    /// Time step of the central difference used for the closed-form PDE residual.
    pub residual_dt: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Solitonless,
            domain: [-40.0, 40.0],
            n_points: 2048,
            dt: 1e-3,
            t_end: 5.0,
            store_every: 100,
            dealias: false,
            sample_times: Vec::new(),
            initial_condition: None,
            solitons: Vec::new(),
            scatter_domain: [-40.0, 40.0],
            scatter_n_points: 2048,
            k_grid: KGrid { min: -6.0, max: 6.0, n: 2401 },
            identity_grid: KGrid { min: -8.0, max: 8.0, n: 401 },
            search_box: [-4.0, 4.0, 1e-3, 4.0],
            rays: vec![-1.0, 0.0, 1.0],
            cone: None,
            cone_times: vec![10.0, 20.0],
            cone_spacing: 0.05,
            corpus: Vec::new(),
            positivity_trials: 100,
            pcf_samples: 200,
            residual_dt: 2e-5,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Largest admissible `2 |Im k| max|x|` for the scattering grid.
const DEPTH_LIMIT: f64 = 700.0;
/// Fewest sample times accepted by the decay fit.
pub const MIN_FIT_SAMPLES: usize = 5;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.domain[0], self.domain[1], self.n_points)
    }

    pub fn scatter_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.scatter_domain[0], self.scatter_domain[1], self.scatter_n_points)
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions { dt: self.dt, store_every: self.store_every, dealias: self.dealias, ..EvolveOptions::default() }
    }

    pub fn search(&self) -> SearchBox {
        let [re_min, re_max, im_min, im_max] = self.search_box;
        SearchBox { re_min, re_max, im_min, im_max }
    }

    pub fn soliton_data(&self) -> Result<SolitonData> {
        SolitonData::new(self.solitons.iter().map(PoleSpec::to_pole).collect())
    }

    pub fn identity_corpus(&self) -> Vec<InitialCondition> {
        if self.corpus.is_empty() {
            gaussian_corpus()
        } else {
            self.corpus.clone()
        }
    }

    /// Initial datum on `grid`: the soliton slice at `t = 0` plus the radiation profile.
    pub fn initial_field(&self, grid: SpatialGrid) -> Result<SpinorField> {
        let mut field = if self.solitons.is_empty() {
            SpinorField::zeros(grid)
        } else {
            soliton_field(&self.soliton_data()?, &grid, 0.0)?
        };
        if let Some(ic) = &self.initial_condition {
            for m in 0..grid.n_points() {
                let [a, b, c] = ic.value(grid.x(m));
                field.q1[m] += a;
                field.q0[m] += b;
                field.qm1[m] += c;
            }
        }
        SpinorField::new(grid, field.q1, field.q0, field.qm1)
    }

    /// Times stored by the evolution: every `store_every` steps and at `t_end`.
    pub fn stored_times(&self) -> Vec<f64> {
        let steps = (self.t_end / self.dt).round() as usize;
        let mut out: Vec<f64> = (0..steps).step_by(self.store_every.max(1)).map(|s| s as f64 * self.dt).collect();
        out.push(steps as f64 * self.dt);
        out
    }

    /// Position of `t` among the stored times.
    pub fn snapshot_index(&self, t: f64) -> Option<usize> {
        self.stored_times().iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// Checks every parameter against the guards of the modules it feeds.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.grid().map_err(|e| Error::Config(format!("domain/n_points: {e}")))?;
        let sgrid = self.scatter_grid().map_err(|e| Error::Config(format!("scatter_domain: {e}")))?;
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return bad(format!("dt = {} must lie in (0, {MAX_DT}]", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        let ratio = self.t_end / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return bad(format!("t_end = {} is not a multiple of dt = {}", self.t_end, self.dt));
        }
        if self.store_every == 0 {
            return bad("store_every must be at least 1".into());
        }
        if self.sample_times.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("sample_times must be strictly increasing".into());
        }
        for &t in &self.sample_times {
            if !(t > 0.0 && t <= self.t_end) || self.snapshot_index(t).is_none() {
                return bad(format!("sample time {t} is not a stored snapshot time in (0, t_end]"));
            }
        }
        self.k_grid.validate("k_grid")?;
        self.identity_grid.validate("identity_grid")?;
        let [re_min, re_max, im_min, im_max] = self.search_box;
        if !(re_min < re_max && im_min > 0.0 && im_min < im_max) {
            return bad("search_box needs re_min < re_max and 0 < im_min < im_max".into());
        }
        if !(self.cone_spacing > 0.0) {
            return bad("cone_spacing must be positive".into());
        }
        if !(self.residual_dt > 0.0 && self.residual_dt < 1e-2) {
            return bad("residual_dt must lie in (0, 1e-2)".into());
        }
        if let Some(ic) = &self.initial_condition {
            ic.validate()?;
        }
        for ic in &self.corpus {
            ic.validate()?;
        }
        if let Some(cone) = &self.cone {
            ConeSpec::new(cone.x1, cone.x2, cone.v1, cone.v2).map_err(|e| Error::Config(e.to_string()))?;
        }
        let data = self.soliton_data().map_err(|e| Error::Config(e.to_string()))?;
        let reach = sgrid.x_min().abs().max(sgrid.x_max().abs());
        for p in &data.poles {
            if 2.0 * p.k.im * reach > DEPTH_LIMIT {
                return bad(format!("pole {} too deep for the scattering domain", p.k));
            }
            if frob(&p.f) == 0.0 {
                return bad(format!("pole {} has a zero norming constant", p.k));
            }
        }
        let n = data.len();
        let needs_rank_one = matches!(self.scenario, Scenario::OneSoliton | Scenario::Mixed);
        if needs_rank_one && data.poles.iter().any(|p| is_full_rank(&p.f)) {
            return bad("scattered scenarios need rank-one norming constants (simple zeros of det a)".into());
        }
        match self.scenario {
            Scenario::Solitonless => {
                if n != 0 || self.initial_condition.is_none() {
                    return bad("solitonless needs an initial_condition and no solitons".into());
                }
                if self.rays.is_empty() {
                    return bad("solitonless needs at least one ray".into());
                }
                if self.sample_times.len() < MIN_FIT_SAMPLES {
                    return bad(format!("solitonless needs at least {MIN_FIT_SAMPLES} sample_times"));
                }
                if self.pcf_samples == 0 {
                    return bad("pcf_samples must be positive".into());
                }
            }
            Scenario::OneSoliton | Scenario::TwoSoliton => {
                let want = if self.scenario == Scenario::OneSoliton { 1 } else { 2 };
                if n != want || self.initial_condition.is_some() {
                    return bad(format!("{:?} needs exactly {want} solitons and no initial_condition", self.scenario));
                }
                if self.scenario == Scenario::TwoSoliton && self.positivity_trials == 0 {
                    return bad("positivity_trials must be positive".into());
                }
            }
            Scenario::Mixed => {
                if n == 0 || self.initial_condition.is_none() {
                    return bad("mixed needs solitons and an initial_condition".into());
                }
                if self.cone.is_none() {
                    return bad("mixed needs a cone around the solitons".into());
                }
                if self.sample_times.len() < MIN_FIT_SAMPLES {
                    return bad(format!("mixed needs at least {MIN_FIT_SAMPLES} sample_times"));
                }
            }
        }
        if self.cone.is_some() && self.cone_times.windows(2).any(|w| !(w[1] > w[0] && w[0] > 0.0)) {
            return bad("cone_times must be positive and increasing".into());
        }
        Ok(())
    }
}
