//! The metric splitting M ≅ ℝ × S built from the flow of the normalized
//! gradient of τ_λ.
//!
//! Everything reduces to the strictly increasing primitive
//! F_x(u) = ∫₀ᵘ (2λ − a(x,s)) ds and its inverse: the flow translate
//! K_x(t,u) = F_x⁻¹(t + F_x(u)), the chart maps Φ and Ψ between ℝ × S
//! and M, the split metric −θ dt² + H_t, and the uniform Riemannian
//! lower bound for regularization nets.
//!
//! F evaluations are anchored on a per-x ladder of cached cumulative
//! integrals, so inversions only ever integrate short segments. Ladder
//! anchors are built outward from 0 in a fixed order; cached values do
//! not depend on query order.

use crate::error::{Error, Result};
use crate::metric::{MetricAssembly, SpacetimePoint};
use crate::numeric::quad;
use crate::numeric::roots;
use crate::region::Region;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::collections::HashMap;
use std::sync::Mutex;

const ANCHOR_SPACING: f64 = 0.5;
const MAX_ANCHORS: usize = 100_000;

#[derive(Default)]
struct Ladder {
    /// F(kδ) for k = 1, 2, …
    up: Vec<f64>,
    /// F(−kδ) for k = 1, 2, …
    down: Vec<f64>,
}

/// Derivatives of K at (x, t, u): ∂K/∂t = 1/(2λ−A),
/// ∂K/∂u = (2λ−a)/(2λ−A), ∇ₓK = (1/(2λ−A)) ∫ᵤᴷ ∇ₓa(x,s) ds.
#[derive(Debug, Clone)]
pub struct KDerivatives {
    pub dt: f64,
    pub du: f64,
    pub grad_x: DVector<f64>,
}

/// Pointwise value of the split metric g = −θ dt² + H_t on ℝ × S, with
/// H over the slice coordinates (x¹, …, xⁿ, u).
#[derive(Debug, Clone)]
pub struct SplitMetricValue {
    pub theta: f64,
    pub h: DMatrix<f64>,
}

/// Which Jacobian enters the pullback check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Analytic,
    FiniteDifference,
}

/// Evaluator for the splitting of one assembled metric.
pub struct SplitChart {
    ma: MetricAssembly,
    quad_tol: f64,
    root_tol: f64,
    cache: Mutex<HashMap<Vec<u64>, Ladder>>,
}

impl std::fmt::Debug for SplitChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitChart")
            .field("ma", &self.ma)
            .field("quad_tol", &self.quad_tol)
            .field("root_tol", &self.root_tol)
            .finish()
    }
}

/// Bracket containing F⁻¹(z): [z/(2λ), z/λ] for z ≥ 0, mirrored for z < 0.
pub fn inverse_bracket(z: f64, lambda: f64) -> (f64, f64) {
    let a = z / (2.0 * lambda);
    let b = z / lambda;
    (a.min(b), a.max(b))
}

impl SplitChart {
    pub fn new(ma: MetricAssembly) -> Self {
        Self::with_tolerances(ma, 1e-10, 1e-10)
    }

    pub fn with_tolerances(ma: MetricAssembly, quad_tol: f64, root_tol: f64) -> Self {
        assert!(quad_tol > 0.0 && root_tol > 0.0);
        SplitChart {
            ma,
            quad_tol,
            root_tol,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn assembly(&self) -> &MetricAssembly {
        &self.ma
    }

    pub fn lambda(&self) -> f64 {
        self.ma.lambda()
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn root_tol(&self) -> f64 {
        self.root_tol
    }

    fn integrand_splits(&self) -> Vec<f64> {
        self.ma.profile().u_split_hints()
    }

    /// ∫_a^b (2λ − a(x,s)) ds: through the profile's exact partial
    /// integral when one exists, otherwise adaptive quadrature split at
    /// the profile's breakpoints.
    fn segment(&self, x: &[f64], a: f64, b: f64) -> Result<f64> {
        let lambda = self.ma.lambda();
        let profile = self.ma.profile();
        if let Some(int_a) = profile.integral_u(x, a, b) {
            return Ok(2.0 * lambda * (b - a) - int_a);
        }
        let splits = self.integrand_splits();
        quad::adaptive_split(
            |s| 2.0 * lambda - profile.eval(x, s),
            a,
            b,
            &splits,
            self.quad_tol,
        )
    }

    /// F_x(u) = ∫₀ᵘ (2λ − a(x,s)) ds. Strictly increasing with
    /// λ < F′ ≤ 2λ, so λu < F(u) ≤ 2λu on the increasing branch.
    pub fn f_at(&self, x: &[f64], u: f64) -> Result<f64> {
        let k = (u / ANCHOR_SPACING).trunc() as i64;
        let anchor_value = if k == 0 {
            0.0
        } else {
            self.anchor(x, k)?
        };
        let anchor_u = k as f64 * ANCHOR_SPACING;
        Ok(anchor_value + self.segment(x, anchor_u, u)?)
    }

    /// Cumulative F at anchor kδ, building missing anchors outward from 0.
    fn anchor(&self, x: &[f64], k: i64) -> Result<f64> {
        let steps = k.unsigned_abs() as usize;
        if steps > MAX_ANCHORS {
            return Err(Error::Unsupported(format!(
                "u = {} too far from 0 for the anchor ladder",
                k as f64 * ANCHOR_SPACING
            )));
        }
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        let mut cache = self.cache.lock().expect("ladder lock");
        let ladder = cache.entry(key).or_default();
        let (list, sign) = if k > 0 {
            (&mut ladder.up, 1.0)
        } else {
            (&mut ladder.down, -1.0)
        };
        while list.len() < steps {
            let j = list.len() as f64;
            let from = sign * j * ANCHOR_SPACING;
            let to = sign * (j + 1.0) * ANCHOR_SPACING;
            let prev = if list.is_empty() {
                0.0
            } else {
                *list.last().unwrap()
            };
            let inc = self.segment(x, from, to)?;
            list.push(prev + inc);
        }
        Ok(list[steps - 1])
    }

    /// F_x⁻¹(z) to |F(result) − z| ≤ root_tol · (1 + |z|), seeded from
    /// the analytic bracket.
    pub fn f_inverse(&self, x: &[f64], z: f64) -> Result<f64> {
        self.invert_seeded(x, z, &[])
    }

    /// Root of F(x, ·) = z. `known` holds already-evaluated pairs
    /// (w, F(w) − z); F is increasing, so negative residuals sit below
    /// the root.
    fn invert_seeded(&self, x: &[f64], z: f64, known: &[(f64, f64)]) -> Result<f64> {
        let lambda = self.ma.lambda();
        let f_tol = self.root_tol * (1.0 + z.abs());
        let (blo, bhi) = inverse_bracket(z, lambda);

        let mut neg: Option<(f64, f64)> = None;
        let mut pos: Option<(f64, f64)> = None;
        let mut take = |w: f64, g: f64, neg: &mut Option<(f64, f64)>, pos: &mut Option<(f64, f64)>| {
            if g <= 0.0 && neg.map_or(true, |(pw, _)| w > pw) {
                *neg = Some((w, g));
            }
            if g >= 0.0 && pos.map_or(true, |(pw, _)| w < pw) {
                *pos = Some((w, g));
            }
        };

        for &(w, g) in known {
            if g.abs() <= f_tol {
                return Ok(w);
            }
            take(w, g, &mut neg, &mut pos);
        }
        if neg.is_none() {
            let g = self.f_at(x, blo)? - z;
            if g.abs() <= f_tol {
                return Ok(blo);
            }
            take(blo, g, &mut neg, &mut pos);
        }
        if pos.is_none() {
            let g = self.f_at(x, bhi)? - z;
            if g.abs() <= f_tol {
                return Ok(bhi);
            }
            take(bhi, g, &mut neg, &mut pos);
        }
        let (Some(neg), Some(pos)) = (neg, pos) else {
            return Err(Error::Bracket { lo: blo, hi: bhi });
        };

        let mut failure: Option<Error> = None;
        let result = roots::illinois_from(
            |w| match self.f_at(x, w) {
                Ok(v) => v - z,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            neg,
            pos,
            f_tol,
        );
        match (result, failure) {
            (_, Some(e)) => Err(e),
            (r, None) => r,
        }
    }

    /// K_x(t, u) = F_x⁻¹(t + F_x(u)).
    pub fn k_at(&self, x: &[f64], t: f64, u: f64) -> Result<f64> {
        let fu = self.f_at(x, u)?;
        let z = t + fu;
        // F(u) − z = −t for free; a first-order predictor seeds the far side
        let mut known = vec![(u, -t)];
        if t != 0.0 {
            let a_u = self.ma.profile().eval(x, u);
            let predictor = u + t / (2.0 * self.ma.lambda() - a_u);
            let (blo, bhi) = inverse_bracket(z, self.ma.lambda());
            if predictor >= blo && predictor <= bhi && predictor != u {
                let gp = self.f_at(x, predictor)? - z;
                known.push((predictor, gp));
            }
        }
        self.invert_seeded(x, z, &known)
    }

    /// ∂K/∂t, ∂K/∂u and ∇ₓK by implicit differentiation of
    /// F(x, K) = t + F(x, u).
    pub fn k_derivatives(&self, x: &[f64], t: f64, u: f64) -> Result<KDerivatives> {
        let k = self.k_at(x, t, u)?;
        let lambda = self.ma.lambda();
        let profile = self.ma.profile();
        let cap_a = profile.eval(x, k);
        let a_u = profile.eval(x, u);
        let denom = 2.0 * lambda - cap_a;

        let n = x.len();
        let mut grad = DVector::zeros(n);
        let splits = self.integrand_splits();
        for i in 0..n {
            let integral = quad::adaptive_split(
                |s| profile.grad_x(x, s)[i],
                u,
                k,
                &splits,
                self.quad_tol,
            )?;
            grad[i] = integral / denom;
        }

        Ok(KDerivatives {
            dt: 1.0 / denom,
            du: (2.0 * lambda - a_u) / denom,
            grad_x: grad,
        })
    }

    /// Variant expression −(1/(2λ−A)) ∫₀ᵘ ∇ₓa ds. It differs from the
    /// implicit-differentiation gradient whenever K ≠ u and is exposed
    /// for comparison only.
    pub fn grad_x_k_variant(&self, x: &[f64], t: f64, u: f64) -> Result<DVector<f64>> {
        let k = self.k_at(x, t, u)?;
        let lambda = self.ma.lambda();
        let profile = self.ma.profile();
        let denom = 2.0 * lambda - profile.eval(x, k);
        let n = x.len();
        let mut grad = DVector::zeros(n);
        let splits = self.integrand_splits();
        for i in 0..n {
            let integral = quad::adaptive_split(
                |s| profile.grad_x(x, s)[i],
                0.0,
                u,
                &splits,
                self.quad_tol,
            )?;
            grad[i] = -integral / denom;
        }
        Ok(grad)
    }

    /// Time-t flow of the normalized gradient of τ_λ:
    /// (x, u, v) ↦ (x, K, v − λu − t + λK). Shifts τ_λ by exactly t.
    pub fn flow(&self, t: f64, p: &SpacetimePoint) -> Result<SpacetimePoint> {
        let k = self.k_at(p.x.as_slice(), t, p.u)?;
        let lambda = self.ma.lambda();
        // v − λu − t + λK grouped as λ(K − u) to avoid cancellation for
        // small shifts (and make flow(0, ·) = id exact)
        Ok(SpacetimePoint {
            x: p.x.clone(),
            u: k,
            v: p.v - t + lambda * (k - p.u),
        })
    }

    /// Chart map Φ(t, x, u) = (x, K, −t + λK) from ℝ × S into M, where S
    /// is the graph {v = λu} identified with N × ℝ.
    pub fn phi(&self, t: f64, x: &[f64], u: f64) -> Result<SpacetimePoint> {
        let k = self.k_at(x, t, u)?;
        Ok(SpacetimePoint {
            x: DVector::from_column_slice(x),
            u: k,
            v: -t + self.ma.lambda() * k,
        })
    }

    /// Inverse chart Ψ(p) = (τ_λ(p), x, K(x, v − λu, u)).
    pub fn psi(&self, p: &SpacetimePoint) -> Result<(f64, DVector<f64>, f64)> {
        let t = self.ma.tau(p);
        let u_s = self.k_at(p.x.as_slice(), -t, p.u)?;
        Ok((t, p.x.clone(), u_s))
    }

    /// θ = 1/(2λ − A) and the slice metric H_t at (t, x, u), with
    /// A = a(x, K). 1/(2λ) ≤ θ ≤ 1/λ and H_t is positive definite.
    pub fn split_metric(&self, t: f64, x: &[f64], u: f64) -> Result<SplitMetricValue> {
        let lambda = self.ma.lambda();
        let profile = self.ma.profile();
        let derivs = self.k_derivatives(x, t, u)?;
        let k = self.k_at(x, t, u)?;
        let cap_a = profile.eval(x, k);
        let a_u = profile.eval(x, u);
        let ca = 2.0 * lambda - cap_a;
        let cu = 2.0 * lambda - a_u;

        let n = x.len();
        let mut h = DMatrix::zeros(n + 1, n + 1);
        if n > 0 {
            let hx = self.ma.base().metric_at(x);
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] = hx[(i, j)] + ca * derivs.grad_x[i] * derivs.grad_x[j];
                }
                h[(i, n)] = cu * derivs.grad_x[i];
                h[(n, i)] = h[(i, n)];
            }
        }
        h[(n, n)] = cu * cu / ca;

        Ok(SplitMetricValue {
            theta: 1.0 / ca,
            h,
        })
    }

    /// Matrix of g = −θ dt² + H_t in the chart ordering (x¹…xⁿ, t, u).
    pub fn split_metric_matrix(&self, t: f64, x: &[f64], u: f64) -> Result<DMatrix<f64>> {
        let v = self.split_metric(t, x, u)?;
        let n = x.len();
        let mut g = DMatrix::zeros(n + 2, n + 2);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = v.h[(i, j)];
            }
            g[(i, n + 1)] = v.h[(i, n)];
            g[(n + 1, i)] = v.h[(i, n)];
        }
        g[(n, n)] = -v.theta;
        g[(n + 1, n + 1)] = v.h[(n, n)];
        Ok(g)
    }

    /// Tangent map of Φ: rows are the M coordinates (x…, u, v), columns
    /// the chart coordinates (x…, t, u).
    pub fn tangent_map(&self, t: f64, x: &[f64], u: f64) -> Result<DMatrix<f64>> {
        let derivs = self.k_derivatives(x, t, u)?;
        let lambda = self.ma.lambda();
        let n = x.len();
        let mut j = DMatrix::zeros(n + 2, n + 2);
        for i in 0..n {
            j[(i, i)] = 1.0;
            j[(n, i)] = derivs.grad_x[i];
            j[(n + 1, i)] = lambda * derivs.grad_x[i];
        }
        j[(n, n)] = derivs.dt;
        j[(n, n + 1)] = derivs.du;
        j[(n + 1, n)] = -1.0 + lambda * derivs.dt;
        j[(n + 1, n + 1)] = lambda * derivs.du;
        Ok(j)
    }

    /// Tangent map by central differences of Φ (relative step 1e-5).
    pub fn tangent_map_fd(&self, t: f64, x: &[f64], u: f64) -> Result<DMatrix<f64>> {
        let n = x.len();
        let mut j = DMatrix::zeros(n + 2, n + 2);
        let phi_flat = |chart: &[f64]| -> Result<DVector<f64>> {
            let (xc, tu) = chart.split_at(n);
            let p = self.phi(tu[0], xc, tu[1])?;
            let mut out = DVector::zeros(n + 2);
            for i in 0..n {
                out[i] = p.x[i];
            }
            out[n] = p.u;
            out[n + 1] = p.v;
            Ok(out)
        };
        let mut chart: Vec<f64> = x.to_vec();
        chart.push(t);
        chart.push(u);
        for col in 0..n + 2 {
            let step = 1e-5 * (1.0 + chart[col].abs());
            let mut cp = chart.clone();
            cp[col] += step;
            let fp = phi_flat(&cp)?;
            cp[col] = chart[col] - step;
            let fm = phi_flat(&cp)?;
            let d = (fp - fm) / (2.0 * step);
            j.set_column(col, &d);
        }
        Ok(j)
    }

    /// ‖Jᵀ l_{Φ(t,x,u)} J − g_{(t,x,u)}‖_max, the pointwise isometry
    /// defect of the splitting.
    pub fn pullback_residual(&self, t: f64, x: &[f64], u: f64, mode: JacobianMode) -> Result<f64> {
        let j = match mode {
            JacobianMode::Analytic => self.tangent_map(t, x, u)?,
            JacobianMode::FiniteDifference => self.tangent_map_fd(t, x, u)?,
        };
        let image = self.phi(t, x, u)?;
        let l = self.ma.metric_matrix(&image);
        let g = self.split_metric_matrix(t, x, u)?;
        let pulled = j.transpose() * l * j;
        Ok((pulled - g).abs().max())
    }
}

/// Result of the uniform lower-bound construction for H_t.
#[derive(Debug, Clone)]
pub struct RiemannBound {
    /// min(α/2, α/(16 d²), λ/16); the d-branch is dropped when d = 0.
    pub constant: f64,
    /// Minimal sampled eigenvalue of h_x over the region.
    pub alpha: f64,
    /// Sampled sup of |∇ₓK| over region × [−T, T] × charts.
    pub grad_sup: f64,
    /// Per-chart gradient sups, in input order.
    pub per_chart_sup: Vec<f64>,
    /// Violations of H_t(v,v) ≥ c|v|² found during verification.
    pub violations: usize,
}

/// Uniform Riemannian lower bound c with (H_t)(v, v) ≥ c |v|² over the
/// region × [−T, T], across all supplied charts (one per ε).
///
/// `region` spans the slice coordinates (x…, u); sups are sampled on a
/// `grid_pts`-per-axis grid crossed with a t-grid, then verified on
/// `verify_samples` random draws.
pub fn riemann_lower_bound<R: Rng>(
    charts: &[&SplitChart],
    horizon: f64,
    region: &Region,
    grid_pts: usize,
    verify_samples: usize,
    rng: &mut R,
) -> Result<RiemannBound> {
    assert!(!charts.is_empty());
    let lambda = charts[0].lambda();
    let n = region.dim() - 1;

    let t_grid: Vec<f64> = (0..grid_pts)
        .map(|i| -horizon + 2.0 * horizon * i as f64 / (grid_pts - 1) as f64)
        .collect();

    let mut alpha = f64::INFINITY;
    let mut per_chart_sup = vec![0.0f64; charts.len()];
    for q in region.grid(grid_pts) {
        let (x, u) = q.split_at(n);
        if n > 0 {
            let min_eig = charts[0]
                .assembly()
                .base()
                .metric_at(x)
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            alpha = alpha.min(min_eig);
        }
        for (ci, chart) in charts.iter().enumerate() {
            for &t in &t_grid {
                let d = chart.k_derivatives(x, t, u[0])?;
                per_chart_sup[ci] = per_chart_sup[ci].max(d.grad_x.norm());
            }
        }
    }
    let grad_sup = per_chart_sup.iter().copied().fold(0.0, f64::max);

    // no stabilization across the net: sup keeps growing chart over chart
    if charts.len() >= 3 {
        let first = per_chart_sup.first().copied().unwrap_or(0.0);
        let last = per_chart_sup.last().copied().unwrap_or(0.0);
        let monotone = per_chart_sup.windows(2).all(|w| w[1] > w[0] * 1.5);
        if monotone && last > 8.0 * first.max(1e-12) {
            return Err(Error::UnboundedGradient(per_chart_sup));
        }
    }

    let mut candidates = vec![lambda / 16.0];
    if n > 0 && alpha.is_finite() {
        candidates.push(alpha / 2.0);
        if grad_sup > 1e-12 {
            // |w| ≤ 4d|ṽ| case is empty when d = 0, so the branch is dropped
            candidates.push(alpha / (16.0 * grad_sup * grad_sup));
        }
    }
    let constant = candidates.iter().copied().fold(f64::INFINITY, f64::min);

    let mut violations = 0;
    for _ in 0..verify_samples {
        let q = region.sample(rng);
        let (x, u) = q.split_at(n);
        let t = rng.gen_range(-horizon..horizon);
        let chart = charts[rng.gen_range(0..charts.len())];
        let sm = chart.split_metric(t, x, u[0])?;
        let v = DVector::from_iterator(n + 1, (0..n + 1).map(|_| rng.gen_range(-1.0..1.0)));
        let quad_form = (&sm.h * &v).dot(&v);
        if quad_form - constant * v.norm_squared() < -1e-10 {
            violations += 1;
        }
    }

    Ok(RiemannBound {
        constant,
        alpha,
        grad_sup,
        per_chart_sup,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::BaseManifold;
    use crate::profile::{Mollifier, Profile, RegularizationNet};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn chart(n: usize, p: Profile) -> SplitChart {
        SplitChart::new(MetricAssembly::new(BaseManifold::euclidean(n), p).unwrap())
    }

    fn heaviside_chart() -> SplitChart {
        chart(0, Profile::heaviside(1.0, 1.0).unwrap())
    }

    #[test]
    fn f_constant_profile() {
        let sc = chart(0, Profile::zero(1.0).unwrap());
        assert_abs_diff_eq!(sc.f_at(&[], 3.0).unwrap(), 6.0, epsilon = 1e-10);
    }

    #[test]
    fn f_heaviside_piecewise() {
        // F₀(u) = 2u for u ≤ 0, u for u > 0
        let sc = heaviside_chart();
        assert_abs_diff_eq!(sc.f_at(&[], -1.0).unwrap(), -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sc.f_at(&[], 2.0).unwrap(), 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sc.f_at(&[], 0.0).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn f_sine_closed_form() {
        // ∫₀^π (2 − sin²) = 2π − π/2
        let sc = chart(0, Profile::sine(1.0, 1.0).unwrap());
        assert_abs_diff_eq!(sc.f_at(&[], PI).unwrap(), 1.5 * PI, epsilon = 1e-9);
    }

    #[test]
    fn f_monotone_with_derivative_bounds() {
        let sc = chart(0, Profile::sine(1.0, 1.0).unwrap());
        let lambda = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let u1: f64 = rng.gen_range(-4.0..4.0);
            let du: f64 = rng.gen_range(1e-4..0.5);
            let f1 = sc.f_at(&[], u1).unwrap();
            let f2 = sc.f_at(&[], u1 + du).unwrap();
            let slope = (f2 - f1) / du;
            assert!(f2 > f1);
            assert!(slope > lambda - 1e-6 && slope <= 2.0 * lambda + 1e-6);
        }
    }

    #[test]
    fn f_inverse_simple_and_heaviside() {
        let sc = chart(0, Profile::zero(1.0).unwrap());
        assert_abs_diff_eq!(sc.f_inverse(&[], 6.0).unwrap(), 3.0, epsilon = 1e-9);

        let hs = heaviside_chart();
        assert_abs_diff_eq!(hs.f_inverse(&[], 1.0).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hs.f_inverse(&[], -2.0).unwrap(), -1.0, epsilon = 1e-9);
    }

    #[test]
    fn f_round_trip() {
        let sc = chart(0, Profile::sine(1.0, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let u: f64 = rng.gen_range(-3.0..3.0);
            let z = sc.f_at(&[], u).unwrap();
            let back = sc.f_inverse(&[], z).unwrap();
            assert!((back - u).abs() <= 1e-9, "u={u} back={back}");
        }
    }

    #[test]
    fn k_constant_profile_shift() {
        let sc = chart(0, Profile::zero(1.0).unwrap());
        assert_abs_diff_eq!(sc.k_at(&[], 4.0, 1.0).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn k_heaviside_value() {
        let sc = heaviside_chart();
        // t + F₀(−1) = 3 − 2 = 1, F₀⁻¹(1) = 1
        assert_abs_diff_eq!(sc.k_at(&[], 3.0, -1.0).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn k_flow_additivity() {
        let sc = chart(0, Profile::sine(1.0, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let u: f64 = rng.gen_range(-2.0..2.0);
            let s: f64 = rng.gen_range(-2.0..2.0);
            let t: f64 = rng.gen_range(-2.0..2.0);
            let a = sc.k_at(&[], s, sc.k_at(&[], t, u).unwrap()).unwrap();
            let b = sc.k_at(&[], s + t, u).unwrap();
            assert!((a - b).abs() <= 1e-8, "additivity defect {}", (a - b).abs());
        }
    }

    #[test]
    fn k_identity_at_zero_time() {
        let sc = chart(1, Profile::bump(1.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = [rng.gen_range(-2.0..2.0)];
            let u: f64 = rng.gen_range(-2.0..2.0);
            let k = sc.k_at(&x, 0.0, u).unwrap();
            assert_eq!(k, u); // the zero-shift candidate is exact
        }
    }

    #[test]
    fn k_bounds_both_signs() {
        let sc = chart(0, Profile::sine(1.0, 1.5).unwrap());
        let lambda = 1.5;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let t: f64 = rng.gen_range(-4.0..4.0);
            let u: f64 = rng.gen_range(-2.0..2.0);
            let z = t + sc.f_at(&[], u).unwrap();
            let k = sc.k_at(&[], t, u).unwrap();
            let (lo, hi) = inverse_bracket(z, lambda);
            assert!(k >= lo - 1e-8 && k <= hi + 1e-8, "k={k} outside [{lo},{hi}]");
        }
    }

    #[test]
    fn k_derivatives_constant_profile() {
        let sc = chart(1, Profile::constant(0.5, 1.0).unwrap());
        let d = sc.k_derivatives(&[0.3], 1.0, 0.2).unwrap();
        assert_abs_diff_eq!(d.dt, 1.0 / 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(d.du, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d.grad_x[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn k_derivatives_match_finite_differences() {
        let sc = chart(1, Profile::bump(1.0, 1.0).unwrap());
        let (x, t, u) = ([1.0], 1.0, 0.0);
        let d = sc.k_derivatives(&x, t, u).unwrap();

        let h = 1e-4;
        let fd_t =
            (sc.k_at(&x, t + h, u).unwrap() - sc.k_at(&x, t - h, u).unwrap()) / (2.0 * h);
        let fd_u =
            (sc.k_at(&x, t, u + h).unwrap() - sc.k_at(&x, t, u - h).unwrap()) / (2.0 * h);
        let fd_x = (sc.k_at(&[x[0] + h], t, u).unwrap() - sc.k_at(&[x[0] - h], t, u).unwrap())
            / (2.0 * h);
        assert_abs_diff_eq!(d.dt, fd_t, epsilon = 1e-5);
        assert_abs_diff_eq!(d.du, fd_u, epsilon = 1e-5);
        assert_abs_diff_eq!(d.grad_x[0], fd_x, epsilon = 1e-5);
    }

    #[test]
    fn grad_x_variant_differs_off_zero_time() {
        // at t = 0 both expressions integrate over an empty interval for
        // x-independent u-integrals; off zero they disagree in general
        let sc = chart(1, Profile::bump(1.0, 1.0).unwrap());
        let implicit = sc.k_derivatives(&[1.0], 1.0, 0.5).unwrap().grad_x;
        let variant = sc.grad_x_k_variant(&[1.0], 1.0, 0.5).unwrap();
        assert!((implicit[0] - variant[0]).abs() > 1e-4);
    }

    #[test]
    fn flow_zero_profile_formula() {
        let sc = chart(1, Profile::zero(1.0).unwrap());
        let p = SpacetimePoint::new(vec![0.7], 0.4, -0.2);
        let q = sc.flow(1.0, &p).unwrap();
        assert_abs_diff_eq!(q.u, 0.9, epsilon = 1e-9);
        assert_abs_diff_eq!(q.v, -0.7, epsilon = 1e-9);
        assert_eq!(q.x, p.x);
    }

    #[test]
    fn flow_is_identity_at_zero() {
        let sc = chart(1, Profile::bump(1.0, 2.0).unwrap());
        let p = SpacetimePoint::new(vec![0.3], -1.2, 0.8);
        let q = sc.flow(0.0, &p).unwrap();
        assert_eq!(q.u, p.u);
        assert_eq!(q.v, p.v);
    }

    #[test]
    fn flow_shifts_tau_and_composes() {
        let sc = chart(1, Profile::bump(1.0, 2.0).unwrap());
        let ma = sc.assembly();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p = SpacetimePoint::new(
                vec![rng.gen_range(-2.0..2.0)],
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let s: f64 = rng.gen_range(-1.5..1.5);
            let t: f64 = rng.gen_range(-1.5..1.5);
            let q = sc.flow(t, &p).unwrap();
            assert_abs_diff_eq!(ma.tau(&q), ma.tau(&p) + t, epsilon = 1e-8);
            let two_step = sc.flow(s, &q).unwrap();
            let one_step = sc.flow(s + t, &p).unwrap();
            assert!((two_step.u - one_step.u).abs() <= 1e-8);
            assert!((two_step.v - one_step.v).abs() <= 1e-8);
        }
    }

    #[test]
    fn phi_zero_profile() {
        let sc = chart(1, Profile::zero(1.0).unwrap());
        let p = sc.phi(1.0, &[0.5], 0.2).unwrap();
        assert_abs_diff_eq!(p.u, 0.7, epsilon = 1e-9);
        assert_abs_diff_eq!(p.v, -0.3, epsilon = 1e-9);
    }

    #[test]
    fn psi_first_component_is_tau() {
        let sc = chart(1, Profile::sine(1.0, 1.0).unwrap());
        let p = SpacetimePoint::new(vec![0.0], 2.0, 3.0);
        let (t, _, _) = sc.psi(&p).unwrap();
        assert_eq!(t, -1.0);
    }

    #[test]
    fn phi_fixes_the_zero_slice() {
        let sc = chart(1, Profile::bump(1.0, 2.0).unwrap());
        let lambda = sc.lambda();
        for u in [-1.0, 0.0, 0.7] {
            let p = sc.phi(0.0, &[0.4], u).unwrap();
            assert_eq!(p.u, u);
            assert_abs_diff_eq!(p.v, lambda * u, epsilon = 1e-12);
        }
    }

    #[test]
    fn phi_psi_round_trips() {
        let sc = chart(1, Profile::bump(1.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let (t, x, u) = (
                rng.gen_range(-2.0..2.0),
                [rng.gen_range(-2.0..2.0)],
                rng.gen_range(-2.0..2.0),
            );
            let p = sc.phi(t, &x, u).unwrap();
            let (t2, x2, u2) = sc.psi(&p).unwrap();
            assert!((t2 - t).abs() <= 1e-8);
            assert!((u2 - u).abs() <= 1e-8);
            assert_eq!(x2.as_slice(), &x);

            let q = SpacetimePoint::new(
                vec![rng.gen_range(-2.0..2.0)],
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let (tq, xq, uq) = sc.psi(&q).unwrap();
            let back = sc.phi(tq, xq.as_slice(), uq).unwrap();
            assert!((back.u - q.u).abs() <= 1e-8);
            assert!((back.v - q.v).abs() <= 1e-8);
        }
    }

    #[test]
    fn split_metric_zero_profile() {
        let sc = chart(1, Profile::zero(1.0).unwrap());
        let v = sc.split_metric(0.7, &[0.1], -0.4).unwrap();
        assert_abs_diff_eq!(v.theta, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v.h[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.h[(1, 1)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.h[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn split_metric_constant_profile() {
        let c = 0.8;
        let lambda = 1.0;
        let sc = chart(0, Profile::constant(c, lambda).unwrap());
        let v = sc.split_metric(0.3, &[], 0.9).unwrap();
        assert_abs_diff_eq!(v.theta, 1.0 / (2.0 * lambda - c), epsilon = 1e-12);
        assert_abs_diff_eq!(v.h[(0, 0)], 2.0 * lambda - c, epsilon = 1e-12);
    }

    #[test]
    fn split_metric_positive_definite_and_theta_bounded() {
        let sc = chart(1, Profile::bump(1.0, 1.0).unwrap());
        let lambda = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let (t, x, u) = (
                rng.gen_range(-2.0..2.0),
                [rng.gen_range(-2.0..2.0)],
                rng.gen_range(-2.0..2.0),
            );
            let v = sc.split_metric(t, &x, u).unwrap();
            assert!(v.theta >= 1.0 / (2.0 * lambda) - 1e-12);
            assert!(v.theta <= 1.0 / lambda + 1e-12);
            for _ in 0..5 {
                let w = DVector::from_vec(vec![
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]);
                if w.norm_squared() == 0.0 {
                    continue;
                }
                assert!((&v.h * &w).dot(&w) > 0.0);
            }
        }
    }

    #[test]
    fn pullback_residual_closed_forms() {
        let zero = chart(1, Profile::zero(1.0).unwrap());
        assert!(zero
            .pullback_residual(0.4, &[0.2], -0.3, JacobianMode::Analytic)
            .unwrap()
            < 1e-12);
        let constant = chart(1, Profile::constant(1.0, 2.0).unwrap());
        assert!(constant
            .pullback_residual(-0.7, &[1.1], 0.5, JacobianMode::Analytic)
            .unwrap()
            < 1e-10);
    }

    #[test]
    fn pullback_residual_sine_bump() {
        let sc = chart(1, Profile::sine_bump(1.0, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (t, x, u) = (
                rng.gen_range(-1.5..1.5),
                [rng.gen_range(-1.5..1.5)],
                rng.gen_range(-1.5..1.5),
            );
            let r = sc.pullback_residual(t, &x, u, JacobianMode::Analytic).unwrap();
            assert!(r <= 1e-6, "analytic residual {r}");
        }
        let r = sc
            .pullback_residual(0.9, &[0.3], -0.6, JacobianMode::FiniteDifference)
            .unwrap();
        assert!(r <= 1e-4, "fd residual {r}");
    }

    #[test]
    fn warped_base_pullback() {
        let ma = MetricAssembly::new(
            BaseManifold::warped_line(),
            Profile::sine_bump(1.0, 1.0).unwrap(),
        )
        .unwrap();
        let sc = SplitChart::new(ma);
        let r = sc
            .pullback_residual(0.8, &[0.4], 0.3, JacobianMode::Analytic)
            .unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }

    #[test]
    fn riemann_bound_zero_profile() {
        // α = 1, d = 0: the d-branch is vacuous and c = min(1/2, λ/16)
        let sc = chart(1, Profile::zero(1.0).unwrap());
        let region = Region::new(vec![(-1.0, 1.0), (-1.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b = riemann_lower_bound(&[&sc], 2.0, &region, 5, 200, &mut rng).unwrap();
        assert_abs_diff_eq!(b.constant, 1.0 / 16.0, epsilon = 1e-12);
        assert_eq!(b.violations, 0);
        assert_eq!(b.grad_sup, 0.0);
    }

    #[test]
    fn riemann_bound_x_independent_profile() {
        let sc = chart(1, Profile::sine(1.0, 2.0).unwrap());
        let region = Region::new(vec![(-1.0, 1.0), (-1.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b = riemann_lower_bound(&[&sc], 1.0, &region, 5, 100, &mut rng).unwrap();
        assert_eq!(b.grad_sup, 0.0);
        assert_abs_diff_eq!(b.constant, 2.0 / 16.0, epsilon = 1e-12);
        assert_eq!(b.violations, 0);
    }

    #[test]
    fn riemann_bound_bump_profile_sampling() {
        let sc = chart(1, Profile::bump(1.0, 2.0).unwrap());
        let region = Region::new(vec![(-1.5, 1.5), (-1.5, 1.5)]);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let b = riemann_lower_bound(&[&sc], 2.0, &region, 7, 2000, &mut rng).unwrap();
        assert!(b.constant > 0.0);
        assert_eq!(b.violations, 0, "c = {}", b.constant);
    }

    #[test]
    fn riemann_bound_across_net() {
        let net = RegularizationNet::new(
            Profile::heaviside(0.5, 1.0).unwrap(),
            Mollifier::default(),
        );
        let charts: Vec<SplitChart> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| {
                SplitChart::new(
                    MetricAssembly::new(BaseManifold::euclidean(0), net.at(e).unwrap()).unwrap(),
                )
            })
            .collect();
        let refs: Vec<&SplitChart> = charts.iter().collect();
        let region = Region::new(vec![(-1.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let b = riemann_lower_bound(&refs, 1.0, &region, 5, 300, &mut rng).unwrap();
        assert_abs_diff_eq!(b.constant, 1.0 / 16.0, epsilon = 1e-12);
        assert_eq!(b.violations, 0);
    }
}
