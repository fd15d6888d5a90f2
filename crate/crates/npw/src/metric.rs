//! The wave-type metric l = π*(h) + 2 du dv − a(·,u) du² on M = N × ℝ²:
//! matrix assembly, eigenvalues, causal classification, Christoffel
//! symbols and the temporal function τ_λ = λu − v.
//!
//! Coordinates are ordered (x¹, …, xⁿ, u, v) throughout, with the
//! Riemannian block in the upper-left corner.

use crate::error::{Error, Result};
use crate::manifold::BaseManifold;
use crate::profile::Profile;
use nalgebra::{DMatrix, DVector};

/// A point (x, u, v) ∈ N × ℝ².
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimePoint {
    pub x: DVector<f64>,
    pub u: f64,
    pub v: f64,
}

impl SpacetimePoint {
    pub fn new(x: impl Into<Vec<f64>>, u: f64, v: f64) -> Self {
        SpacetimePoint {
            x: DVector::from_vec(x.into()),
            u,
            v,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len() + 2
    }
}

/// A tangent vector (ξ, α, β) with ξ the N-component, α the u̇ and β the
/// v̇ component.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub xi: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl TangentVector {
    pub fn new(xi: impl Into<Vec<f64>>, alpha: f64, beta: f64) -> Self {
        TangentVector {
            xi: DVector::from_vec(xi.into()),
            alpha,
            beta,
        }
    }

    /// ∂_v at any point.
    pub fn d_v(n: usize) -> Self {
        TangentVector {
            xi: DVector::zeros(n),
            alpha: 0.0,
            beta: 1.0,
        }
    }

    /// Euclidean norm squared of the raw components.
    pub fn sq_norm(&self) -> f64 {
        self.xi.norm_squared() + self.alpha * self.alpha + self.beta * self.beta
    }

    pub fn scale(&self, c: f64) -> Self {
        TangentVector {
            xi: c * &self.xi,
            alpha: c * self.alpha,
            beta: c * self.beta,
        }
    }
}

/// Causal character of a tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalClass {
    Timelike,
    Null,
    Spacelike,
}

/// Time orientation of a causal vector; ∂_v is past-directed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeOrientation {
    Future,
    Past,
}

/// Eigenvalues of the metric matrix: the closed-form pair μ₁ > 0 > μ₂
/// from the u-v block and the positive spectrum of h_x.
#[derive(Debug, Clone)]
pub struct MetricEigenvalues {
    pub mu1: f64,
    pub mu2: f64,
    pub nu: Vec<f64>,
}

impl MetricEigenvalues {
    pub fn all_sorted(&self) -> Vec<f64> {
        let mut v = self.nu.clone();
        v.push(self.mu1);
        v.push(self.mu2);
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Full Christoffel table Γ^σ_{μν}, one symmetric matrix per upper index.
#[derive(Debug, Clone)]
pub struct ChristoffelTable {
    /// `gamma[sigma][(mu, nu)]` in the (x…, u, v) ordering.
    pub gamma: Vec<DMatrix<f64>>,
}

/// The base manifold, profile and bound λ assembled into a metric.
#[derive(Debug, Clone)]
pub struct MetricAssembly {
    base: BaseManifold,
    profile: Profile,
    lambda: f64,
}

/// Scale-aware tolerance band declaring a vector null.
pub const NULL_TOL: f64 = 1e-9;

impl MetricAssembly {
    /// λ is taken from the profile; the profile range is spot-checked at
    /// the base dimension.
    pub fn new(base: BaseManifold, profile: Profile) -> Result<Self> {
        profile.validate_sampled(base.dim())?;
        let lambda = profile.lambda();
        Ok(MetricAssembly {
            base,
            profile,
            lambda,
        })
    }

    pub fn base(&self) -> &BaseManifold {
        &self.base
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.base.dim() + 2
    }

    fn check_point(&self, p: &SpacetimePoint) -> Result<()> {
        if p.x.len() != self.base.dim() {
            return Err(Error::Dimension {
                expected: self.base.dim(),
                got: p.x.len(),
            });
        }
        Ok(())
    }

    /// a(x, u) at the point.
    pub fn profile_at(&self, p: &SpacetimePoint) -> f64 {
        self.profile.eval(p.x.as_slice(), p.u)
    }

    /// Coordinate matrix of l: [h_x | 0; 0 | (−a, 1; 1, 0)].
    pub fn metric_matrix(&self, p: &SpacetimePoint) -> DMatrix<f64> {
        let n = self.base.dim();
        let mut l = DMatrix::zeros(n + 2, n + 2);
        if n > 0 {
            l.view_mut((0, 0), (n, n))
                .copy_from(&self.base.metric_at(p.x.as_slice()));
        }
        let a = self.profile_at(p);
        l[(n, n)] = -a;
        l[(n, n + 1)] = 1.0;
        l[(n + 1, n)] = 1.0;
        // l[(n+1, n+1)] stays 0
        l
    }

    /// Closed-form inverse: [h⁻¹ | 0; 0 | (0, 1; 1, a)].
    pub fn inverse_metric_matrix(&self, p: &SpacetimePoint) -> Result<DMatrix<f64>> {
        let n = self.base.dim();
        let mut inv = DMatrix::zeros(n + 2, n + 2);
        if n > 0 {
            let h = self.base.metric_at(p.x.as_slice());
            let hinv = h
                .clone()
                .try_inverse()
                .ok_or(Error::SingularMetric)?;
            inv.view_mut((0, 0), (n, n)).copy_from(&hinv);
        }
        let a = self.profile_at(p);
        inv[(n, n + 1)] = 1.0;
        inv[(n + 1, n)] = 1.0;
        inv[(n + 1, n + 1)] = a;
        Ok(inv)
    }

    /// l(w₁, w₂) = h(ξ₁, ξ₂) + α₁β₂ + α₂β₁ − a α₁α₂.
    pub fn inner(&self, p: &SpacetimePoint, w1: &TangentVector, w2: &TangentVector) -> f64 {
        let h_part = self.base.inner(p.x.as_slice(), &w1.xi, &w2.xi);
        let a = self.profile_at(p);
        h_part + w1.alpha * w2.beta + w2.alpha * w1.beta - a * w1.alpha * w2.alpha
    }

    /// Closed-form spectrum: μ_{1,2} = −a/2 ± √(a²/4 + 1) plus the
    /// eigenvalues of h_x.
    pub fn eigenvalues(&self, p: &SpacetimePoint) -> MetricEigenvalues {
        let a = self.profile_at(p);
        let disc = (a * a / 4.0 + 1.0).sqrt();
        let nu = if self.base.dim() > 0 {
            self.base
                .metric_at(p.x.as_slice())
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect()
        } else {
            Vec::new()
        };
        MetricEigenvalues {
            mu1: -a / 2.0 + disc,
            mu2: -a / 2.0 - disc,
            nu,
        }
    }

    /// Infimum of μ₁ over profiles bounded by λ: −λ/2 + √(λ²/4 + 1).
    pub fn mu1_lower_bound(lambda: f64) -> f64 {
        -lambda / 2.0 + (lambda * lambda / 4.0 + 1.0).sqrt()
    }

    /// Variant μ₁ bound −λ/2 + √(λ²/2 + 1). Exceeds the attainable
    /// infimum for a near λ, so it is reported as a flagged comparison
    /// and never asserted.
    pub fn mu1_lower_bound_variant(lambda: f64) -> f64 {
        -lambda / 2.0 + (lambda * lambda / 2.0 + 1.0).sqrt()
    }

    /// Causal character of w with the scale-aware null band
    /// |l(w,w)| ≤ NULL_TOL · (1 + ‖w‖²), plus time orientation for
    /// causal vectors.
    pub fn classify(
        &self,
        p: &SpacetimePoint,
        w: &TangentVector,
    ) -> Result<(CausalClass, Option<TimeOrientation>)> {
        self.check_point(p)?;
        if w.sq_norm() == 0.0 {
            return Err(Error::ZeroVector);
        }
        let q = self.inner(p, w, w);
        let band = NULL_TOL * (1.0 + w.sq_norm());
        let class = if q.abs() <= band {
            CausalClass::Null
        } else if q < 0.0 {
            CausalClass::Timelike
        } else {
            CausalClass::Spacelike
        };
        let orientation = match class {
            CausalClass::Spacelike => None,
            _ => {
                // l(∂_v, w) = α; future-directed causal vectors have α > 0.
                // Null vectors with α = 0 are multiples of ∂_v, which is
                // past-directed, so β > 0 means past.
                if w.alpha > 0.0 {
                    Some(TimeOrientation::Future)
                } else if w.alpha < 0.0 {
                    Some(TimeOrientation::Past)
                } else if w.beta > 0.0 {
                    Some(TimeOrientation::Past)
                } else {
                    Some(TimeOrientation::Future)
                }
            }
        };
        Ok((class, orientation))
    }

    /// The non-vanishing Christoffel symbols:
    /// Γ^k_{ij} (base), Γ^v_{uj} = −½ ∂a/∂xʲ, Γ^k_{uu} = ½ (h⁻¹∇ₓa)^k,
    /// Γ^v_{uu} = −½ ∂a/∂u. Everything else is exactly zero.
    pub fn christoffels(&self, p: &SpacetimePoint) -> Result<ChristoffelTable> {
        self.check_point(p)?;
        let n = self.base.dim();
        let dim = n + 2;
        let u_idx = n;
        let v_idx = n + 1;
        let mut gamma = vec![DMatrix::zeros(dim, dim); dim];

        let x = p.x.as_slice();
        if n > 0 {
            let base_gamma = self.base.christoffel_at(x);
            for k in 0..n {
                gamma[k].view_mut((0, 0), (n, n)).copy_from(&base_gamma[k]);
            }

            let grad_a = self.profile.grad_x(x, p.u);
            let grad_up = self.base.gradient(&grad_a, x)?;
            for k in 0..n {
                gamma[k][(u_idx, u_idx)] = 0.5 * grad_up[k];
            }
            for (j, da) in grad_a.iter().enumerate() {
                gamma[v_idx][(u_idx, j)] = -0.5 * da;
                gamma[v_idx][(j, u_idx)] = -0.5 * da;
            }
        }
        gamma[v_idx][(u_idx, u_idx)] = -0.5 * self.profile.du(x, p.u);

        Ok(ChristoffelTable { gamma })
    }

    /// τ_λ(x, u, v) = λu − v.
    pub fn tau(&self, p: &SpacetimePoint) -> f64 {
        self.lambda * p.u - p.v
    }

    /// grad τ_λ = −∂_u + (λ − a) ∂_v, with l(grad τ, grad τ) = a − 2λ.
    pub fn grad_tau(&self, p: &SpacetimePoint) -> TangentVector {
        let a = self.profile_at(p);
        TangentVector {
            xi: DVector::zeros(self.base.dim()),
            alpha: -1.0,
            beta: self.lambda - a,
        }
    }
}
