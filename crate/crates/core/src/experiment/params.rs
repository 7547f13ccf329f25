//! Parameter schemas for each command. Every struct rejects unknown keys.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::FieldError;
use crate::planar::SolveSettings;

/// Accumulates field-level validation messages.
#[derive(Default)]
pub(crate) struct Checks(Vec<FieldError>);

impl Checks {
    fn require(&mut self, ok: bool, field: &str, message: impl Into<String>) {
        if !ok {
            self.0.push(FieldError::new(format!("params.{field}"), message));
        }
    }

    fn positive(&mut self, field: &str, v: f64) {
        self.require(v > 0.0 && v.is_finite(), field, format!("must be positive and finite, got {v}"));
    }

    fn finite(&mut self, field: &str, v: &[f64]) {
        self.require(v.iter().all(|x| x.is_finite()), field, "must be finite");
    }

    fn within(&mut self, field: &str, v: f64, lo: f64, hi: f64) {
        self.require((lo..=hi).contains(&v), field, format!("must lie in [{lo}, {hi}], got {v}"));
    }

    fn done(self) -> Vec<FieldError> {
        self.0
    }
}

/// Radial profile read from `<dir>/<stem>.csv` and `<dir>/<stem>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSource {
    pub dir: PathBuf,
    #[serde(default = "default_profile_stem")]
    pub stem: String,
}

fn default_profile_stem() -> String {
    "profile".into()
}

/// Square grid `[-half_width, half_width]^2` for sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub half_width: f64,
    pub spacing: f64,
    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

fn one() -> f64 {
    1.0
}

impl SampleSpec {
    fn check(&self, c: &mut Checks, field: &str) {
        c.positive(&format!("{field}.half_width"), self.half_width);
        c.positive(&format!("{field}.spacing"), self.spacing);
        c.positive(&format!("{field}.epsilon"), self.epsilon);
        c.finite(&format!("{field}.center"), &self.center);
        c.require(
            self.spacing <= self.half_width,
            &format!("{field}.spacing"),
            "must not exceed half_width",
        );
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRadialParams {
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_decay_window")]
    pub decay_window: [f64; 2],
    /// Also write the sampled vortex as a snapshot.
    #[serde(default)]
    pub sample: Option<SampleSpec>,
}

fn default_r_max() -> f64 {
    20.0
}

fn default_tol() -> f64 {
    1e-8
}

fn default_decay_window() -> [f64; 2] {
    [8.0, 16.0]
}

impl SolveRadialParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        c.require(self.r_max >= 10.0 && self.r_max.is_finite(), "r_max", format!("must be finite and >= 10, got {}", self.r_max));
        c.within("tol", self.tol, 1e-14, 1e-2);
        let [lo, hi] = self.decay_window;
        c.require(5.0 <= lo && lo < hi && hi <= self.r_max, "decay_window", "must satisfy 5 <= lo < hi <= r_max");
        if let Some(s) = &self.sample {
            s.check(&mut c, "sample");
        }
        c.done()
    }
}

/// Initial data for the planar solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlanarInit {
    /// Vortex trace on the boundary, degree-one vacuum inside.
    VortexTrace,
    /// Sampled vortex plus a smooth random perturbation vanishing near the faces.
    PerturbedVortex {
        amplitude: f64,
        #[serde(default = "default_bumps")]
        bumps: usize,
        #[serde(default = "default_bump_width")]
        width: f64,
        #[serde(default = "default_bump_margin")]
        margin: f64,
    },
    /// A stored snapshot on the same grid.
    Snapshot { path: PathBuf },
}

fn default_bumps() -> usize {
    6
}

fn default_bump_width() -> f64 {
    1.0
}

fn default_bump_margin() -> f64 {
    1.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvePlanarParams {
    #[serde(default = "one")]
    pub epsilon: f64,
    pub half_width: f64,
    pub spacing: f64,
    pub init: PlanarInit,
    #[serde(default)]
    pub settings: SolveSettings,
    /// Radius of the bulk disc where the radial oracle is compared;
    /// defaults to three quarters of the half width.
    #[serde(default)]
    pub bulk_radius: Option<f64>,
}

impl SolvePlanarParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        c.positive("epsilon", self.epsilon);
        c.positive("half_width", self.half_width);
        c.positive("spacing", self.spacing);
        c.require(self.spacing * 2.0 <= self.half_width, "spacing", "grid needs at least 5 nodes per axis");
        if let PlanarInit::PerturbedVortex { amplitude, bumps, width, margin } = &self.init {
            c.require(amplitude.is_finite() && *amplitude >= 0.0, "init.amplitude", "must be finite and >= 0");
            c.require(*bumps > 0, "init.bumps", "must be positive");
            c.positive("init.width", *width);
            c.positive("init.margin", *margin);
        }
        if let Err(e) = self.settings.validate() {
            c.require(false, "settings", e.to_string());
        }
        if let Some(r) = self.bulk_radius {
            c.require(r > 0.0 && r <= self.half_width, "bulk_radius", "must lie in (0, half_width]");
        }
        c.done()
    }
}

/// The graph `h` over the tangential ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSource {
    /// `h(y) = amplitude (sin y_1, 0)`.
    Sine {
        amplitude: f64,
        #[serde(default = "one_usize")]
        tangential_dim: usize,
        #[serde(default = "default_half_pi")]
        half_width: f64,
        spacing: f64,
        #[serde(default = "one")]
        tau: f64,
    },
    /// A chart CSV with its JSON descriptor.
    File { csv: PathBuf, descriptor: PathBuf },
}

fn one_usize() -> usize {
    1
}

fn default_half_pi() -> f64 {
    std::f64::consts::FRAC_PI_2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildAnsatzParams {
    pub epsilon: f64,
    pub chart: ChartSource,
    pub normal_spacing: f64,
    /// Defaults to `max |h| + 8 eps |log eps|` plus two normal cells.
    #[serde(default)]
    pub normal_half_width: Option<f64>,
    #[serde(default)]
    pub profile: Option<ProfileSource>,
    /// Also evaluate the residual and its projection on the zero modes.
    #[serde(default = "yes")]
    pub residual: bool,
}

fn yes() -> bool {
    true
}

impl BuildAnsatzParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        c.require(self.epsilon > 0.0 && self.epsilon <= 0.2, "epsilon", format!("must lie in (0, 0.2], got {}", self.epsilon));
        c.positive("normal_spacing", self.normal_spacing);
        if let Some(w) = self.normal_half_width {
            c.positive("normal_half_width", w);
        }
        if let ChartSource::Sine { amplitude, tangential_dim, half_width, spacing, tau } = &self.chart {
            c.require(amplitude.is_finite(), "chart.amplitude", "must be finite");
            c.require((1..=3).contains(tangential_dim), "chart.tangential_dim", "must be 1, 2 or 3");
            c.positive("chart.half_width", *half_width);
            c.positive("chart.spacing", *spacing);
            c.positive("chart.tau", *tau);
        }
        c.done()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzStudyParams {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub profile: Option<ProfileSource>,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

impl AnsatzStudyParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        c.require(self.epsilons.len() >= 2, "epsilons", "need at least two values for a slope");
        for (k, &e) in self.epsilons.iter().enumerate() {
            c.require(e > 0.0 && e <= 0.2, &format!("epsilons[{k}]"), format!("must lie in (0, 0.2], got {e}"));
        }
        let mut sorted = self.epsilons.clone();
        sorted.sort_by(f64::total_cmp);
        c.require(sorted.windows(2).all(|w| w[0] < w[1]), "epsilons", "values must be distinct");
        c.done()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcessParams {
    pub snapshot: PathBuf,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Spanning vectors of the comparison plane.
    pub plane: Vec<Vec<f64>>,
}

impl ExcessParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        c.finite("center", &self.center);
        c.positive("radius", self.radius);
        c.require(!self.plane.is_empty(), "plane", "needs at least one spanning vector");
        for (k, v) in self.plane.iter().enumerate() {
            c.require(v.len() == self.center.len(), &format!("plane[{k}]"), "length must match center");
            c.finite(&format!("plane[{k}]"), v);
        }
        c.done()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    pub snapshot: PathBuf,
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
}

impl DensityParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        c.finite("center", &self.center);
        c.require(!self.radii.is_empty(), "radii", "must not be empty");
        for (k, &r) in self.radii.iter().enumerate() {
            c.positive(&format!("radii[{k}]"), r);
        }
        c.done()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodalParams {
    pub snapshot: PathBuf,
    /// Largest normal distance between zeros on one slice; slices with a
    /// wider spread are rejected as non-graphical.
    #[serde(default)]
    pub spread: Option<f64>,
    /// Hölder exponent of the curvature seminorm.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Skip the graph fit and export only the zero points.
    #[serde(default)]
    pub points_only: bool,
}

fn default_alpha() -> f64 {
    0.5
}

impl NodalParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        if let Some(s) = self.spread {
            c.positive("spread", s);
        }
        c.require(self.alpha > 0.0 && self.alpha < 1.0, "alpha", "must lie in (0, 1)");
        c.done()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsetParams {
    pub snapshot: PathBuf,
    pub level: f64,
}

impl LevelsetParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        c.require(self.level > 0.0 && self.level < 1.0, "level", format!("must lie in (0, 1), got {}", self.level));
        c.done()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSpec {
    #[serde(default = "default_eigen_count")]
    pub count: usize,
    #[serde(default = "default_eigen_tol")]
    pub tol: f64,
    #[serde(default = "default_eigen_iterations")]
    pub max_iterations: usize,
}

fn default_eigen_count() -> usize {
    5
}

fn default_eigen_tol() -> f64 {
    1e-6
}

fn default_eigen_iterations() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinopsParams {
    #[serde(default = "default_lin_half_width")]
    pub half_width: f64,
    #[serde(default = "default_lin_spacing")]
    pub spacing: f64,
    /// Number of random perturbations in the decomposition check.
    #[serde(default = "default_perturbations")]
    pub perturbations: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_bumps")]
    pub bumps: usize,
    #[serde(default = "default_bump_width")]
    pub width: f64,
    #[serde(default = "default_bump_margin")]
    pub margin: f64,
    #[serde(default)]
    pub eigen: Option<EigenSpec>,
    #[serde(default)]
    pub profile: Option<ProfileSource>,
}

fn default_lin_half_width() -> f64 {
    8.0
}

fn default_lin_spacing() -> f64 {
    0.2
}

fn default_perturbations() -> usize {
    20
}

fn default_delta() -> f64 {
    1e-4
}

impl LinopsParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        c.positive("half_width", self.half_width);
        c.positive("spacing", self.spacing);
        c.require(self.spacing * 4.0 <= self.half_width, "spacing", "grid needs at least 9 nodes per axis");
        c.within("delta", self.delta, 1e-7, 1e-2);
        c.require(self.bumps > 0, "bumps", "must be positive");
        c.positive("width", self.width);
        c.positive("margin", self.margin);
        if let Some(e) = &self.eigen {
            c.require(e.count > 0, "eigen.count", "must be positive");
            c.positive("eigen.tol", e.tol);
            c.require(e.max_iterations > 0, "eigen.max_iterations", "must be positive");
        }
        c.done()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    pub snapshot: PathBuf,
    /// Each check passes when its value is at most `constant * (h / eps)^2`.
    #[serde(default = "default_constant")]
    pub constant: f64,
    /// Nodes within this many cells of a face are excluded.
    #[serde(default = "default_margin_cells")]
    pub margin_cells: usize,
}

fn default_constant() -> f64 {
    5.0
}

fn default_margin_cells() -> usize {
    2
}

impl VerifyParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut c = Checks::default();
        c.positive("constant", self.constant);
        c.require(self.margin_cells >= 1, "margin_cells", "must be at least 1");
        c.done()
    }
}
