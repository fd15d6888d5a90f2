//! The Riemannian base (N, h): metric, Christoffel symbols, gradients and
//! (for the built-ins) the distance function.
//!
//! Two built-in instances are shipped — flat ℝⁿ and a warped line with
//! h(x) = 1 + tanh²(x). Both have metrics bounded below by the identity,
//! which is the completeness surrogate the splitting construction relies
//! on. User-supplied manifolds declare completeness; it is trusted, not
//! checked.

use crate::error::{Error, Result};
use crate::numeric::quad;
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

type MetricFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type ChristoffelFn = dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync;
type DistanceFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// Evaluation interface for the base manifold.
///
/// `christoffel_at` returns one symmetric matrix per upper index k, so
/// `Γ^k_{ij} = christoffel_at(x)[k][(i, j)]`.
#[derive(Clone)]
pub struct BaseManifold {
    dim: usize,
    complete: bool,
    name: String,
    /// Uniform lower bound c with h_x ≥ c·I on the whole chart (built-ins).
    metric_floor: f64,
    metric: Arc<MetricFn>,
    christoffel: Arc<ChristoffelFn>,
    distance: Option<Arc<DistanceFn>>,
}

impl fmt::Debug for BaseManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseManifold")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("complete", &self.complete)
            .finish()
    }
}

impl BaseManifold {
    /// Flat ℝⁿ with the Euclidean metric.
    pub fn euclidean(n: usize) -> Self {
        BaseManifold {
            dim: n,
            complete: true,
            name: format!("euclidean:{n}"),
            metric_floor: 1.0,
            metric: Arc::new(move |_x| DMatrix::identity(n, n)),
            christoffel: Arc::new(move |_x| vec![DMatrix::zeros(n, n); n]),
            distance: Some(Arc::new(|x, y| {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })),
        }
    }

    /// One-dimensional line with h(x) = 1 + tanh²(x).
    ///
    /// h ≥ 1 everywhere, so the line is complete; Γ¹₁₁ = h'/(2h).
    pub fn warped_line() -> Self {
        let h = |x: f64| 1.0 + x.tanh().powi(2);
        BaseManifold {
            dim: 1,
            complete: true,
            name: "warped_line".to_string(),
            metric_floor: 1.0,
            metric: Arc::new(move |x: &[f64]| DMatrix::from_element(1, 1, h(x[0]))),
            christoffel: Arc::new(move |x: &[f64]| {
                let t = x[0].tanh();
                // h' = 2 tanh(x) sech²(x) = 2 t (1 - t²)
                let gamma = t * (1.0 - t * t) / (1.0 + t * t);
                vec![DMatrix::from_element(1, 1, gamma)]
            }),
            distance: Some(Arc::new(move |x: &[f64], y: &[f64]| {
                quad::adaptive(|s| h(s).sqrt(), x[0], y[0], 1e-12)
                    .map(f64::abs)
                    .unwrap_or_else(|_| (x[0] - y[0]).abs())
            })),
        }
    }

    /// User-supplied manifold on a single global chart ℝⁿ. Completeness is
    /// declared by the caller and trusted.
    pub fn custom(
        dim: usize,
        name: impl Into<String>,
        complete: bool,
        metric_floor: f64,
        metric: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        christoffel: impl Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
        distance: Option<Arc<DistanceFn>>,
    ) -> Self {
        BaseManifold {
            dim,
            complete,
            name: name.into(),
            metric_floor,
            metric: Arc::new(metric),
            christoffel: Arc::new(christoffel),
            distance,
        }
    }

    /// Select a built-in by name: `euclidean:<n>` or `warped_line`.
    pub fn by_name(name: &str) -> Result<Self> {
        if name == "warped_line" {
            return Ok(Self::warped_line());
        }
        if let Some(n) = name.strip_prefix("euclidean:") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::Unsupported(format!("bad manifold name {name:?}")))?;
            return Ok(Self::euclidean(n));
        }
        Err(Error::Unsupported(format!("unknown manifold {name:?}")))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Documented uniform lower bound c with h_x ≥ c·I.
    pub fn metric_floor(&self) -> f64 {
        self.metric_floor
    }

    /// Local matrix h_x of the metric.
    pub fn metric_at(&self, x: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (self.metric)(x)
    }

    /// Γ^k_{ij}, one matrix per upper index k.
    pub fn christoffel_at(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        debug_assert_eq!(x.len(), self.dim);
        (self.christoffel)(x)
    }

    /// Metric gradient: h_x⁻¹ · df for a covector df.
    pub fn gradient(&self, df: &[f64], x: &[f64]) -> Result<DVector<f64>> {
        if df.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: df.len(),
            });
        }
        if self.dim == 0 {
            return Ok(DVector::zeros(0));
        }
        let h = self.metric_at(x);
        let rhs = DVector::from_column_slice(df);
        h.cholesky()
            .map(|ch| ch.solve(&rhs))
            .ok_or(Error::SingularMetric)
    }

    /// Riemannian inner product h_x(v, w).
    pub fn inner(&self, x: &[f64], v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        (self.metric_at(x) * w).dot(v)
    }

    /// Riemannian distance (built-ins only).
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match &self.distance {
            Some(d) => Ok(d(x, y)),
            None => Err(Error::Unsupported(
                "distance not provided for this manifold".into(),
            )),
        }
    }
}
