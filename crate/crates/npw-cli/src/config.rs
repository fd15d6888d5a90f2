//! JSON run configuration: strict schema (unknown keys rejected) plus
//! construction of the library objects it describes.

use npw::convergence::NetSplitting;
use npw::{BaseManifold, MetricAssembly, Mollifier, Profile, RegularizationNet, SplitChart};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// "euclidean:<n>" or "warped_line".
    pub manifold: String,
    pub lambda: f64,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub net: Option<NetSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub splitting: SplittingTols,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
    #[serde(default)]
    pub split: Option<SplitSpec>,
    #[serde(default)]
    pub geodesic: Option<GeodesicSpec>,
    #[serde(default)]
    pub cauchy: Option<CauchySpec>,
    #[serde(default)]
    pub converge: Option<ConvergeSpec>,
}

fn default_seed() -> u64 {
    42
}
fn default_quad_tol() -> f64 {
    1e-10
}
fn default_root_tol() -> f64 {
    1e-10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingTols {
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_root_tol")]
    pub root_tol: f64,
}

impl Default for SplittingTols {
    fn default() -> Self {
        SplittingTols {
            quad_tol: default_quad_tol(),
            root_tol: default_root_tol(),
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    #[serde(default)]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: String,
    #[serde(default)]
    pub params: ProfileParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    /// Limit profile kind ("heaviside", "x_ramp_heaviside", or any
    /// closed-form kind used as a smooth limit).
    pub kind: String,
    #[serde(default)]
    pub params: ProfileParams,
    /// Mollification scales for sweeps (decreasing).
    #[serde(default)]
    pub mollifier_epsilons: Vec<f64>,
    /// Scale used when a single profile is needed (verify, split,
    /// geodesic, cauchy).
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_range")]
    pub range: f64,
    #[serde(default = "default_pullback_tol")]
    pub max_pullback_residual: f64,
}

fn default_samples() -> usize {
    50
}
fn default_range() -> f64 {
    2.0
}
fn default_pullback_tol() -> f64 {
    1e-6
}

/// lo, hi, points.
pub type AxisSpec = (f64, f64, usize);

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub t: AxisSpec,
    #[serde(default)]
    pub x: Vec<AxisSpec>,
    pub u: AxisSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicSpec {
    #[serde(default)]
    pub x: Vec<f64>,
    pub u: f64,
    pub v: f64,
    #[serde(default)]
    pub xi: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub span: (f64, f64),
    #[serde(default = "default_ode_tol")]
    pub tol: f64,
}

fn default_ode_tol() -> f64 {
    1e-10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchySpec {
    pub count: usize,
    pub ks: Vec<f64>,
    pub span: (f64, f64),
    #[serde(default = "default_crossing_tol")]
    pub tol: f64,
    #[serde(default = "default_range")]
    pub position_range: f64,
    #[serde(default = "default_tau_window")]
    pub tau_window: (f64, f64),
}

fn default_crossing_tol() -> f64 {
    1e-8
}
fn default_tau_window() -> (f64, f64) {
    (-2.5, -1.2)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    pub quantity: String,
    /// Box bounds per axis, quantity layout (x…, then the quantity's
    /// own axes). Defaults to the unit box.
    #[serde(default)]
    pub r#box: Vec<(f64, f64)>,
    #[serde(default = "default_panels")]
    pub panels: usize,
}

fn default_panels() -> usize {
    12
}

/// A schema violation or inconsistent configuration (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lambda > 0.0) {
            return Err(ConfigError("lambda must be positive".into()));
        }
        if !(self.splitting.quad_tol > 0.0 && self.splitting.root_tol > 0.0) {
            return Err(ConfigError("tolerances must be positive".into()));
        }
        match (&self.profile, &self.net) {
            (Some(_), Some(_)) => Err(ConfigError(
                "give either profile or net, not both".into(),
            )),
            (None, None) => Err(ConfigError("one of profile or net is required".into())),
            _ => Ok(()),
        }
    }

    pub fn base(&self) -> Result<BaseManifold, ConfigError> {
        BaseManifold::by_name(&self.manifold).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn regularization_net(&self) -> Result<RegularizationNet, ConfigError> {
        let spec = self
            .net
            .as_ref()
            .ok_or_else(|| ConfigError("net section required".into()))?;
        let limit = npw::make_profile(&spec.kind, spec.params.amplitude, self.lambda)
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok(RegularizationNet::new(limit, Mollifier::default()))
    }

    /// The single working profile: the named closed form, or the net
    /// mollified at its `epsilon`.
    pub fn working_profile(&self) -> Result<Profile, ConfigError> {
        if let Some(p) = &self.profile {
            return npw::make_profile(&p.kind, p.params.amplitude, self.lambda)
                .map_err(|e| ConfigError(e.to_string()));
        }
        let spec = self.net.as_ref().expect("validated");
        let eps = spec.epsilon.ok_or_else(|| {
            ConfigError("net.epsilon required when the subcommand needs one profile".into())
        })?;
        self.regularization_net()?
            .at(eps)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn assembly(&self) -> Result<MetricAssembly, ConfigError> {
        MetricAssembly::new(self.base()?, self.working_profile()?)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn split_chart(&self) -> Result<SplitChart, ConfigError> {
        Ok(SplitChart::with_tolerances(
            self.assembly()?,
            self.splitting.quad_tol,
            self.splitting.root_tol,
        ))
    }

    pub fn net_splitting(&self) -> Result<NetSplitting, ConfigError> {
        NetSplitting::with_tolerances(
            self.base()?,
            self.regularization_net()?,
            self.splitting.quad_tol,
            self.splitting.root_tol,
        )
        .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn epsilons(&self, cli_override: Option<&[f64]>) -> Result<Vec<f64>, ConfigError> {
        if let Some(eps) = cli_override {
            return Ok(eps.to_vec());
        }
        let spec = self
            .net
            .as_ref()
            .ok_or_else(|| ConfigError("net section required".into()))?;
        if spec.mollifier_epsilons.is_empty() {
            return Err(ConfigError("net.mollifier_epsilons required".into()));
        }
        Ok(spec.mollifier_epsilons.clone())
    }
}
