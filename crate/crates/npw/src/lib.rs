//! Construction and verification of the globally hyperbolic metric
//! splitting for wave-type spacetimes M = N × ℝ² carrying the metric
//! π*(h) + 2 du dv − a(·,u) du².
//!
//! The crate covers the smooth construction (temporal function, gradient
//! flow, split metric, geodesics and Cauchy-crossing certification) and
//! its behavior under regularization of non-smooth profile functions
//! (mollification, L¹ convergence diagnostics, moderateness exponents,
//! and the bi-Lipschitz splitting for Lipschitz profiles).

pub mod convergence;
pub mod error;
pub mod geodesic;
pub mod manifold;
pub mod metric;
pub mod numeric;
pub mod profile;
pub mod region;
pub mod splitting;

pub use error::{Error, Result};
pub use manifold::BaseManifold;
pub use metric::{CausalClass, MetricAssembly, SpacetimePoint, TangentVector, TimeOrientation};
pub use profile::{make_profile, Mollifier, Profile, RegularizationNet};
pub use region::Region;
pub use splitting::{SplitChart, SplitMetricValue};
