//! Profile functions a(x, u) and their regularizations.
//!
//! A [`Profile`] is an evaluator for a together with its first
//! derivatives and the uniform bound λ. Smooth closed forms carry
//! analytic derivatives; non-smooth profiles carry their breakpoints in
//! u and are consumed either directly (piecewise quadrature) or through
//! a [`RegularizationNet`], which smooths them by convolution with a
//! scaled bump mollifier in the u variable.

use crate::error::{Error, Result};
use crate::numeric::quad;
use crate::region::Region;
use std::fmt;
use std::sync::Arc;

type ScalarField = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type CovectorField = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;
type Modulus = dyn Fn(f64) -> f64 + Send + Sync;
type PartialIntegral = dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync;

/// Tolerance used for the mollification quadrature itself. Kept below the
/// splitting quadrature tolerance so that the outer adaptivity never
/// chases convolution noise.
const MOLLIFY_TOL: f64 = 1e-12;

/// A profile function with bound data and derivative access.
#[derive(Clone)]
pub struct Profile {
    eval: Arc<ScalarField>,
    grad_x: Arc<CovectorField>,
    du: Arc<ScalarField>,
    lambda: f64,
    sup: f64,
    smooth: bool,
    /// Jump/kink locations in u for non-smooth profiles (quadrature is
    /// split exactly there).
    u_breakpoints: Vec<f64>,
    /// Soft split hints in u (steep but smooth features, e.g. the edges
    /// of a smeared jump).
    refine_points: Vec<f64>,
    /// Kink locations in x per axis, when known.
    x_breakpoints: Vec<f64>,
    /// Lipschitz modulus c(s) with |a(x,s) - a(y,s)| <= c(s) d(x,y).
    x_lipschitz: Option<Arc<Modulus>>,
    /// Exact ∫ₐᵇ a(x, s) ds when a closed (or semi-closed) form exists;
    /// quadrature-heavy callers use it instead of integrating eval.
    integral_u: Option<Arc<PartialIntegral>>,
    name: String,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile")
            .field("name", &self.name)
            .field("lambda", &self.lambda)
            .field("sup", &self.sup)
            .field("smooth", &self.smooth)
            .finish()
    }
}

impl Profile {
    /// Build a smooth profile from closures. `sup` is the declared
    /// supremum of a; it must not exceed `lambda`, and a sampled spot
    /// check of the range [0, λ] runs at construction.
    pub fn smooth(
        name: impl Into<String>,
        lambda: f64,
        sup: f64,
        eval: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        grad_x: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
        du: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let p = Profile {
            eval: Arc::new(eval),
            grad_x: Arc::new(grad_x),
            du: Arc::new(du),
            lambda,
            sup,
            smooth: true,
            u_breakpoints: Vec::new(),
            refine_points: Vec::new(),
            x_breakpoints: Vec::new(),
            x_lipschitz: None,
            integral_u: None,
            name: name.into(),
        };
        p.validate_declared()?;
        Ok(p)
    }

    /// Non-smooth profile a₀ given by direct evaluation plus breakpoint
    /// data. Derivatives are the a.e. ones away from breakpoints.
    #[allow(clippy::too_many_arguments)]
    pub fn non_smooth(
        name: impl Into<String>,
        lambda: f64,
        sup: f64,
        eval: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        grad_x: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
        du: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        u_breakpoints: Vec<f64>,
        x_breakpoints: Vec<f64>,
        x_lipschitz: Option<Arc<Modulus>>,
    ) -> Result<Self> {
        let p = Profile {
            eval: Arc::new(eval),
            grad_x: Arc::new(grad_x),
            du: Arc::new(du),
            lambda,
            sup,
            smooth: false,
            u_breakpoints,
            refine_points: Vec::new(),
            x_breakpoints,
            x_lipschitz,
            integral_u: None,
            name: name.into(),
        };
        p.validate_declared()?;
        Ok(p)
    }

    fn validate_declared(&self) -> Result<()> {
        // λ = ‖a‖∞ is tolerated (the construction stays monotone there);
        // anything above is rejected.
        if !(self.lambda > 0.0) || self.sup > self.lambda || self.sup < 0.0 {
            return Err(Error::ProfileBound {
                sup: self.sup,
                lambda: self.lambda,
            });
        }
        Ok(())
    }

    /// Sampled range check 0 ≤ a ≤ λ over a grid of the given base
    /// dimension. Run when the profile is attached to a manifold.
    pub fn validate_sampled(&self, dim: usize) -> Result<()> {
        let region = Region::centered_cube(dim + 1, 3.0);
        for q in region.grid(if dim == 0 { 13 } else { 7 }) {
            let (x, u) = q.split_at(dim);
            let v = (self.eval)(x, u[0]);
            if !(v >= -1e-10 && v <= self.lambda + 1e-10) {
                return Err(Error::ProfileRange {
                    x: x.to_vec(),
                    u: u[0],
                    value: v,
                    lambda: self.lambda,
                });
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], u: f64) -> f64 {
        (self.eval)(x, u)
    }

    pub fn grad_x(&self, x: &[f64], u: f64) -> Vec<f64> {
        (self.grad_x)(x, u)
    }

    pub fn du(&self, x: &[f64], u: f64) -> f64 {
        (self.du)(x, u)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Declared supremum of a.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn u_breakpoints(&self) -> &[f64] {
        &self.u_breakpoints
    }

    pub fn x_breakpoints(&self) -> &[f64] {
        &self.x_breakpoints
    }

    /// All u locations where quadrature should split: hard breakpoints
    /// plus soft refinement hints.
    pub fn u_split_hints(&self) -> Vec<f64> {
        let mut v = self.u_breakpoints.clone();
        v.extend_from_slice(&self.refine_points);
        v
    }

    /// Width of the narrowest feature in u (smallest gap between split
    /// hints), e.g. the smearing scale of a mollified profile. None when
    /// the profile has no localized features.
    pub fn feature_scale(&self) -> Option<f64> {
        let mut pts = self.u_split_hints();
        if pts.len() < 2 {
            return None;
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.windows(2)
            .map(|w| w[1] - w[0])
            .filter(|g| *g > 0.0)
            .min_by(f64::total_cmp)
    }

    pub fn x_lipschitz(&self) -> Option<&Arc<Modulus>> {
        self.x_lipschitz.as_ref()
    }

    /// Exact partial integral ∫ₐᵇ a(x, s) ds, when available.
    pub fn integral_u(&self, x: &[f64], a: f64, b: f64) -> Option<f64> {
        self.integral_u.as_ref().map(|f| f(x, a, b))
    }

    /// Attach a closed-form partial integral of a in u.
    pub fn with_integral_u(
        mut self,
        f: impl Fn(&[f64], f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.integral_u = Some(Arc::new(f));
        self
    }

    // ---- named closed forms -------------------------------------------

    /// a ≡ 0.
    pub fn zero(lambda: f64) -> Result<Self> {
        Self::constant(0.0, lambda)
    }

    /// a ≡ c.
    pub fn constant(c: f64, lambda: f64) -> Result<Self> {
        Ok(Self::smooth(
            format!("constant:{c}"),
            lambda,
            c,
            move |_x, _u| c,
            |x, _u| vec![0.0; x.len()],
            |_x, _u| 0.0,
        )?
        .with_integral_u(move |_x, a, b| c * (b - a)))
    }

    /// a(x, u) = A sin²(u).
    pub fn sine(amplitude: f64, lambda: f64) -> Result<Self> {
        // ∫ sin² = u/2 − sin(2u)/4
        let anti = move |u: f64| amplitude * (0.5 * u - 0.25 * (2.0 * u).sin());
        Ok(Self::smooth(
            format!("sine:{amplitude}"),
            lambda,
            amplitude,
            move |_x, u| amplitude * u.sin().powi(2),
            |x, _u| vec![0.0; x.len()],
            move |_x, u| amplitude * (2.0 * u).sin(),
        )?
        .with_integral_u(move |_x, a, b| anti(b) - anti(a)))
    }

    /// a(x, u) = A / (1 + |x|² + u²).
    pub fn bump(amplitude: f64, lambda: f64) -> Result<Self> {
        let denom = |x: &[f64], u: f64| 1.0 + x.iter().map(|v| v * v).sum::<f64>() + u * u;
        let p = Self::smooth(
            format!("bump:{amplitude}"),
            lambda,
            amplitude,
            move |x, u| amplitude / denom(x, u),
            move |x, u| {
                let d = denom(x, u);
                x.iter().map(|&xi| -2.0 * amplitude * xi / (d * d)).collect()
            },
            move |x, u| {
                let d = denom(x, u);
                -2.0 * amplitude * u / (d * d)
            },
        )?
        .with_integral_u(move |x: &[f64], a, b| {
            // ∫ du /(s² + u²) = atan(u/s)/s with s² = 1 + |x|²
            let s = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
            amplitude * ((b / s).atan() - (a / s).atan()) / s
        });
        Ok(p)
    }

    /// a(x, u) = A sin²(u) / (1 + |x|²).
    pub fn sine_bump(amplitude: f64, lambda: f64) -> Result<Self> {
        let denom = |x: &[f64]| 1.0 + x.iter().map(|v| v * v).sum::<f64>();
        let p = Self::smooth(
            format!("sine_bump:{amplitude}"),
            lambda,
            amplitude,
            move |x, u| amplitude * u.sin().powi(2) / denom(x),
            move |x, u| {
                let d = denom(x);
                let s = amplitude * u.sin().powi(2);
                x.iter().map(|&xi| -2.0 * s * xi / (d * d)).collect()
            },
            move |x, u| amplitude * (2.0 * u).sin() / denom(x),
        )?
        .with_integral_u(move |x: &[f64], a, b| {
            let anti = |u: f64| 0.5 * u - 0.25 * (2.0 * u).sin();
            amplitude * (anti(b) - anti(a)) / denom(x)
        });
        Ok(p)
    }

    /// a₀(x, u) = c · H(u) with the jump at u = 0 (value c/2 at 0).
    pub fn heaviside(c: f64, lambda: f64) -> Result<Self> {
        Ok(Self::non_smooth(
            format!("heaviside:{c}"),
            lambda,
            c,
            move |_x, u| c * heaviside(u),
            |x, _u| vec![0.0; x.len()],
            |_x, _u| 0.0,
            vec![0.0],
            Vec::new(),
            Some(Arc::new(|_s| 0.0)),
        )?
        .with_integral_u(move |_x, a, b| c * (b.max(0.0) - a.max(0.0))))
    }

    /// a₀(x, u) = min(1, |x|) · H(u) on a one-dimensional base; Lipschitz
    /// in x with modulus c(s) = H(s).
    pub fn x_ramp_heaviside(lambda: f64) -> Result<Self> {
        Ok(Self::non_smooth(
            "x_ramp_heaviside",
            lambda,
            1.0,
            |x, u| x[0].abs().min(1.0) * heaviside(u),
            |x, u| {
                let g = if x[0].abs() < 1.0 { x[0].signum() } else { 0.0 };
                vec![g * heaviside(u)]
            },
            |_x, _u| 0.0,
            vec![0.0],
            vec![-1.0, 0.0, 1.0],
            Some(Arc::new(heaviside)),
        )?
        .with_integral_u(|x: &[f64], a, b| x[0].abs().min(1.0) * (b.max(0.0) - a.max(0.0))))
    }
}

fn heaviside(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Construct a named closed-form profile (the CLI entry point).
///
/// Kinds: `zero`, `constant`, `sine`, `bump`, `sine_bump` (smooth) and
/// `heaviside`, `x_ramp_heaviside` (non-smooth). `amplitude` defaults
/// to 1.
pub fn make_profile(kind: &str, amplitude: Option<f64>, lambda: f64) -> Result<Profile> {
    let a = amplitude.unwrap_or(1.0);
    let p = match kind {
        "zero" => Profile::zero(lambda),
        "constant" => Profile::constant(a, lambda),
        "sine" => Profile::sine(a, lambda),
        "bump" => Profile::bump(a, lambda),
        "sine_bump" => Profile::sine_bump(a, lambda),
        "heaviside" => Profile::heaviside(a, lambda),
        "x_ramp_heaviside" => Profile::x_ramp_heaviside(lambda),
        other => return Err(Error::Unsupported(format!("unknown profile kind {other:?}"))),
    }?;
    p.validate_sampled(1)?;
    Ok(p)
}

/// Default λ for a declared sup: 1.5·sup plus a machine floor so that
/// λ > 0 holds even for the zero profile.
pub fn default_lambda(sup: f64) -> f64 {
    1.5 * sup + f64::EPSILON
}

/// Sup of |a| over a uniform grid on the region (x axes first, u last).
pub fn sup_norm(p: &Profile, region: &Region, pts_per_axis: usize) -> f64 {
    region
        .grid(pts_per_axis)
        .iter()
        .map(|q| {
            let (x, u) = q.split_at(q.len() - 1);
            p.eval(x, u[0]).abs()
        })
        .fold(0.0, f64::max)
}

// ---- mollifier ---------------------------------------------------------

/// The standard normalized bump exp(-1/(1-s²)) on (-1, 1).
#[derive(Clone)]
pub struct Mollifier {
    norm: f64,
}

impl fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mollifier").field("norm", &self.norm).finish()
    }
}

impl Default for Mollifier {
    fn default() -> Self {
        Self::standard_bump()
    }
}

impl Mollifier {
    pub fn standard_bump() -> Self {
        let raw = |s: f64| {
            if s.abs() < 1.0 {
                (-1.0 / (1.0 - s * s)).exp()
            } else {
                0.0
            }
        };
        let (mass, _) = quad::adaptive_best(raw, -1.0, 1.0, 1e-15);
        Mollifier { norm: 1.0 / mass }
    }

    /// ρ(s), unit mass, even, supported in [-1, 1].
    pub fn rho(&self, s: f64) -> f64 {
        if s.abs() < 1.0 {
            self.norm * (-1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    }

    pub fn drho(&self, s: f64) -> f64 {
        if s.abs() < 1.0 {
            let w = -2.0 * s / (1.0 - s * s).powi(2);
            self.rho(s) * w
        } else {
            0.0
        }
    }

    pub fn d2rho(&self, s: f64) -> f64 {
        if s.abs() < 1.0 {
            let q = 1.0 - s * s;
            let w = -2.0 * s / (q * q);
            let dw = -2.0 * (1.0 + 3.0 * s * s) / (q * q * q);
            self.rho(s) * (w * w + dw)
        } else {
            0.0
        }
    }

    /// Scaled derivative ρ_ε^(l)(s) = ρ^(l)(s/ε) / ε^(l+1) for l ≤ 2.
    pub fn scaled_deriv(&self, order: usize, eps: f64, s: f64) -> f64 {
        let t = s / eps;
        match order {
            0 => self.rho(t) / eps,
            1 => self.drho(t) / (eps * eps),
            2 => self.d2rho(t) / (eps * eps * eps),
            _ => panic!("mollifier derivatives implemented up to order 2"),
        }
    }
}

// ---- regularization net -------------------------------------------------

/// An ε-indexed family a_ε = a₀ * ρ_ε of smooth profiles approximating a
/// non-smooth limit a₀. Convolution acts in u; for flat bases an optional
/// product mollifier also smears the x variables.
#[derive(Clone, Debug)]
pub struct RegularizationNet {
    limit: Profile,
    mollifier: Mollifier,
    smear_x: bool,
}

impl RegularizationNet {
    pub fn new(limit: Profile, mollifier: Mollifier) -> Self {
        RegularizationNet {
            limit,
            mollifier,
            smear_x: false,
        }
    }

    /// Heaviside-in-u net, the canonical non-smooth example.
    pub fn heaviside(c: f64, lambda: f64) -> Result<Self> {
        Ok(Self::new(Profile::heaviside(c, lambda)?, Mollifier::default()))
    }

    /// Additionally smear the x variables with a product mollifier
    /// (flat ℝⁿ only).
    pub fn with_x_smearing(mut self) -> Self {
        self.smear_x = true;
        self
    }

    pub fn limit(&self) -> &Profile {
        &self.limit
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    /// u-derivative of order l of a_ε at (x, u), computed by convolving
    /// a₀ against the corresponding mollifier derivative.
    pub fn u_derivative(&self, eps: f64, order: usize, x: &[f64], u: f64) -> f64 {
        assert!(eps > 0.0 && eps <= 1.0);
        let splits = self.u_conv_splits(eps, u);
        let (v, _) = quad::adaptive_split_best(
            |s| self.limit.eval(x, u - s) * self.mollifier.scaled_deriv(order, eps, s),
            -eps,
            eps,
            &splits,
            MOLLIFY_TOL,
        );
        v
    }

    fn u_conv_splits(&self, eps: f64, u: f64) -> Vec<f64> {
        // a₀(x, u - s) jumps at s = u - b for each breakpoint b
        self.limit
            .u_breakpoints
            .iter()
            .map(|b| u - b)
            .filter(|s| s.abs() < eps)
            .collect()
    }

    fn x_smeared_eval(&self, eps: f64, x: &[f64], u: f64, u_order: usize) -> f64 {
        // product mollifier: iterate the convolution over every x axis,
        // then over u
        fn recurse(
            net: &RegularizationNet,
            eps: f64,
            x: &[f64],
            u: f64,
            u_order: usize,
            axis: usize,
            shifted: &mut Vec<f64>,
        ) -> f64 {
            if axis == x.len() {
                return net.u_derivative_at_shifted(eps, u_order, shifted, u);
            }
            let splits: Vec<f64> = net
                .limit
                .x_breakpoints
                .iter()
                .map(|b| x[axis] - b)
                .filter(|s| s.abs() < eps)
                .collect();
            let (v, _) = quad::adaptive_split_best(
                |y| {
                    shifted[axis] = x[axis] - y;
                    recurse(net, eps, x, u, u_order, axis + 1, shifted)
                        * net.mollifier.scaled_deriv(0, eps, y)
                },
                -eps,
                eps,
                &splits,
                MOLLIFY_TOL,
            );
            v
        }
        let mut shifted = x.to_vec();
        recurse(self, eps, x, u, u_order, 0, &mut shifted)
    }

    fn u_derivative_at_shifted(&self, eps: f64, order: usize, x: &[f64], u: f64) -> f64 {
        let splits = self.u_conv_splits(eps, u);
        let (v, _) = quad::adaptive_split_best(
            |s| self.limit.eval(x, u - s) * self.mollifier.scaled_deriv(order, eps, s),
            -eps,
            eps,
            &splits,
            MOLLIFY_TOL,
        );
        v
    }

    /// The mollified profile a_ε = a₀ * ρ_ε for ε ∈ (0, 1].
    ///
    /// Derivatives fall on the mollifier (∂a_ε = a₀ * ρ_ε'); the x
    /// gradient convolves the a.e. gradient of a₀ when u-only smearing
    /// is active. A spot check of the convolution quadrature runs before
    /// the profile is returned.
    pub fn at(&self, eps: f64) -> Result<Profile> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Unsupported(format!(
                "mollification scale {eps} outside (0, 1]"
            )));
        }
        // convergence probe near each breakpoint
        for &b in self.limit.u_breakpoints.iter().chain([0.0].iter()) {
            for du in [-0.5 * eps, 0.0, 0.5 * eps] {
                let splits = self.u_conv_splits(eps, b + du);
                let (_, achieved) = quad::adaptive_split_best(
                    |s| self.limit.eval(&[0.0], b + du - s) * self.mollifier.scaled_deriv(0, eps, s),
                    -eps,
                    eps,
                    &splits,
                    MOLLIFY_TOL,
                );
                if achieved > MOLLIFY_TOL {
                    return Err(Error::Quadrature {
                        requested: MOLLIFY_TOL,
                        achieved,
                    });
                }
            }
        }

        let refine_points: Vec<f64> = self
            .limit
            .u_breakpoints
            .iter()
            .flat_map(|&b| [b - eps, b, b + eps])
            .collect();

        let net_eval = self.clone();
        let net_du = self.clone();
        let net_grad = self.clone();
        let smear_x = self.smear_x;

        let eval = move |x: &[f64], u: f64| -> f64 {
            if smear_x {
                net_eval.x_smeared_eval(eps, x, u, 0)
            } else {
                net_eval.u_derivative(eps, 0, x, u)
            }
        };
        let du = move |x: &[f64], u: f64| -> f64 {
            if smear_x {
                net_du.x_smeared_eval(eps, x, u, 1)
            } else {
                net_du.u_derivative(eps, 1, x, u)
            }
        };
        let grad_x = move |x: &[f64], u: f64| -> Vec<f64> {
            if x.is_empty() {
                return Vec::new();
            }
            if smear_x {
                // differentiate the eval through central differences of the
                // smeared field; the smearing scale sets the feature size
                let h = 1e-4_f64.max(1e-3 * eps);
                let mut g = Vec::with_capacity(x.len());
                let mut xp = x.to_vec();
                for i in 0..x.len() {
                    xp[i] = x[i] + h;
                    let fp = net_grad.x_smeared_eval(eps, &xp, u, 0);
                    xp[i] = x[i] - h;
                    let fm = net_grad.x_smeared_eval(eps, &xp, u, 0);
                    xp[i] = x[i];
                    g.push((fp - fm) / (2.0 * h));
                }
                g
            } else {
                // ∇ₓ(a₀ * ρ_ε) = (∇ₓ a₀) * ρ_ε with the a.e. gradient
                let splits = net_grad.u_conv_splits(eps, u);
                let mut g = vec![0.0; x.len()];
                for (i, gi) in g.iter_mut().enumerate() {
                    let (v, _) = quad::adaptive_split_best(
                        |s| {
                            net_grad.limit.grad_x(x, u - s)[i]
                                * net_grad.mollifier.scaled_deriv(0, eps, s)
                        },
                        -eps,
                        eps,
                        &splits,
                        MOLLIFY_TOL,
                    );
                    *gi = v;
                }
                g
            }
        };

        let mut p = Profile::smooth(
            format!("{}*rho_{eps}", self.limit.name),
            self.limit.lambda,
            self.limit.sup,
            eval,
            grad_x,
            du,
        )?;
        p.refine_points = refine_points;
        p.x_lipschitz = self.limit.x_lipschitz.clone();
        if !smear_x && self.limit.integral_u.is_some() {
            // ∫ₐᵇ a_ε(x, s) ds = ∫ ρ_ε(σ) [A₀(x, b−σ) − A₀(x, a−σ)] dσ
            // with A₀ the exact partial integral of the limit
            let net = self.clone();
            p.integral_u = Some(Arc::new(move |x: &[f64], a: f64, b: f64| {
                let splits: Vec<f64> = net
                    .limit
                    .u_breakpoints
                    .iter()
                    .flat_map(|&bp| [a - bp, b - bp])
                    .filter(|s| s.abs() < eps)
                    .collect();
                let limit_int = net.limit.integral_u.as_ref().expect("checked above");
                let (v, _) = quad::adaptive_split_best(
                    |s| {
                        limit_int(x, a - s, b - s) * net.mollifier.scaled_deriv(0, eps, s)
                    },
                    -eps,
                    eps,
                    &splits,
                    MOLLIFY_TOL,
                );
                v
            }));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_du(p: &Profile, x: &[f64], u: f64, h: f64) -> f64 {
        (p.eval(x, u + h) - p.eval(x, u - h)) / (2.0 * h)
    }

    fn fd_grad(p: &Profile, x: &[f64], u: f64, h: f64) -> Vec<f64> {
        let mut g = Vec::new();
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let fp = p.eval(&xp, u);
            xp[i] = x[i] - h;
            let fm = p.eval(&xp, u);
            xp[i] = x[i];
            g.push((fp - fm) / (2.0 * h));
        }
        g
    }

    #[test]
    fn zero_profile_is_zero() {
        let p = Profile::zero(1.0).unwrap();
        assert_eq!(p.eval(&[0.3], 0.7), 0.0);
        assert_eq!(p.du(&[0.3], 0.7), 0.0);
        assert_eq!(p.grad_x(&[0.3], 0.7), vec![0.0]);
    }

    #[test]
    fn sine_attains_amplitude() {
        let p = Profile::sine(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(
            p.eval(&[5.0], std::f64::consts::FRAC_PI_2),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn bump_gradient_matches_finite_differences() {
        let p = Profile::bump(1.0, 2.0).unwrap();
        let g = p.grad_x(&[1.0], 0.0);
        let fd = fd_grad(&p, &[1.0], 0.0, 1e-6);
        assert_abs_diff_eq!(g[0], fd[0], epsilon = 1e-6);
    }

    #[test]
    fn smooth_profile_derivatives_agree_with_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [
            Profile::sine(1.0, 2.0).unwrap(),
            Profile::bump(1.0, 2.0).unwrap(),
            Profile::sine_bump(1.0, 2.0).unwrap(),
        ] {
            for _ in 0..30 {
                let x = [rng.gen_range(-2.0..2.0)];
                let u = rng.gen_range(-2.0..2.0);
                assert_abs_diff_eq!(p.du(&x, u), fd_du(&p, &x, u, 1e-6), epsilon = 1e-5);
                let g = p.grad_x(&x, u);
                let fd = fd_grad(&p, &x, u, 1e-6);
                assert_abs_diff_eq!(g[0], fd[0], epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn bound_violation_rejected() {
        assert!(Profile::sine(3.0, 2.0).is_err());
        assert!(Profile::constant(-0.5, 1.0).is_err());
    }

    #[test]
    fn mollifier_has_unit_mass_and_symmetry() {
        let m = Mollifier::default();
        let mass = quad::adaptive(|s| m.rho(s), -1.0, 1.0, 1e-13).unwrap();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.rho(0.4), m.rho(-0.4), epsilon = 1e-16);
        assert_eq!(m.rho(1.0), 0.0);
        // derivative identities against finite differences
        for s in [-0.8, -0.3, 0.0, 0.5, 0.9] {
            let h = 1e-6;
            let fd = (m.rho(s + h) - m.rho(s - h)) / (2.0 * h);
            assert_abs_diff_eq!(m.drho(s), fd, epsilon = 1e-7);
            let fd2 = (m.drho(s + h) - m.drho(s - h)) / (2.0 * h);
            assert_abs_diff_eq!(m.d2rho(s), fd2, epsilon = 1e-6);
        }
    }

    #[test]
    fn constant_profile_mollifies_to_itself() {
        let net =
            RegularizationNet::new(Profile::constant(0.7, 1.0).unwrap(), Mollifier::default());
        for eps in [1.0, 0.3, 0.05] {
            let p = net.at(eps).unwrap();
            for u in [-1.0, 0.0, 2.5] {
                assert_abs_diff_eq!(p.eval(&[], u), 0.7, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn heaviside_mollification_pointwise_values() {
        let net = RegularizationNet::heaviside(1.0, 1.0).unwrap();
        let p = net.at(0.1).unwrap();
        // even mollifier: half height at the jump
        assert_abs_diff_eq!(p.eval(&[], 0.0), 0.5, epsilon = 1e-10);
        // outside the smeared region the step is exact
        assert_abs_diff_eq!(p.eval(&[], 0.2), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.eval(&[], -0.2), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn heaviside_derivative_is_scaled_mollifier() {
        // (H * ρ_ε)' = ρ_ε
        let net = RegularizationNet::heaviside(1.0, 1.0).unwrap();
        let m = net.mollifier().clone();
        for eps in [0.1, 0.05] {
            let p = net.at(eps).unwrap();
            for u in [-0.08, -0.02, 0.0, 0.03, 0.09] {
                assert_abs_diff_eq!(
                    p.du(&[], u),
                    m.scaled_deriv(0, eps, u),
                    epsilon = 1e-9 / eps
                );
            }
        }
    }

    #[test]
    fn derivative_sup_scales_inversely_with_eps() {
        let net = RegularizationNet::heaviside(1.0, 1.0).unwrap();
        let sup = |eps: f64| {
            let p = net.at(eps).unwrap();
            (-400..=400)
                .map(|i| p.du(&[], i as f64 * eps / 400.0).abs())
                .fold(0.0, f64::max)
        };
        let ratio = sup(0.05) / sup(0.1);
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn sup_norm_on_grid() {
        let zero = Profile::zero(1.0).unwrap();
        let region = Region::new(vec![(-1.0, 1.0), (0.0, std::f64::consts::PI)]);
        assert_eq!(sup_norm(&zero, &region, 11), 0.0);

        let sine = Profile::sine(1.0, 2.0).unwrap();
        let s = sup_norm(&sine, &region, 201);
        assert!((s - 1.0).abs() < 1e-4);
    }

    #[test]
    fn convolution_monotone_and_bounded() {
        let m = Mollifier::default();
        let lo = RegularizationNet::new(Profile::heaviside(0.5, 1.0).unwrap(), m.clone());
        let hi = RegularizationNet::new(Profile::heaviside(0.9, 1.0).unwrap(), m);
        let pl = lo.at(0.2).unwrap();
        let ph = hi.at(0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let u = rng.gen_range(-1.0..1.0);
            let (a, b) = (pl.eval(&[], u), ph.eval(&[], u));
            assert!(a <= b + 1e-12);
            assert!(a >= -1e-12 && b <= 0.9 + 1e-12);
        }
    }

    #[test]
    fn x_independent_limit_stays_x_independent() {
        let net = RegularizationNet::heaviside(1.0, 1.0).unwrap();
        let p = net.at(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let u = rng.gen_range(-0.3..0.3);
            let a = p.eval(&[rng.gen_range(-5.0..5.0)], u);
            let b = p.eval(&[rng.gen_range(-5.0..5.0)], u);
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn x_ramp_gradient_mollifies() {
        let net = RegularizationNet::new(
            Profile::x_ramp_heaviside(2.0).unwrap(),
            Mollifier::default(),
        );
        let p = net.at(0.1).unwrap();
        // away from breakpoints the gradient is H(u)·sign(x) mollified in u
        let g = p.grad_x(&[0.5], 0.5);
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-10);
        let g = p.grad_x(&[0.5], -0.5);
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn x_smearing_smooths_the_ramp() {
        let net = RegularizationNet::new(
            Profile::x_ramp_heaviside(2.0).unwrap(),
            Mollifier::default(),
        )
        .with_x_smearing();
        let p = net.at(0.2).unwrap();
        // at the former x-kink the smeared value interpolates
        let v = p.eval(&[0.0], 1.0);
        assert!(v > 0.0 && v < 0.2, "smeared kink value {v}");
        // far from all kinks the ramp value is reproduced
        assert_abs_diff_eq!(p.eval(&[0.6], 1.0), 0.6, epsilon = 1e-9);
    }

    #[test]
    fn mollified_sup_norm_bounded_by_limit_sup() {
        let net = RegularizationNet::heaviside(1.0, 1.0).unwrap();
        let region = Region::new(vec![(-1.0, 1.0)]);
        for eps in [0.4, 0.2, 0.1, 0.05] {
            let p = net.at(eps).unwrap();
            let s = sup_norm(&p, &region, 301);
            assert!(s <= 1.0 + 1e-10, "eps {eps}: sup {s}");
        }
    }

    #[test]
    fn partial_integrals_match_quadrature() {
        // the closed forms behind integral_u must agree with adaptive
        // quadrature of eval
        let net = RegularizationNet::heaviside(1.0, 1.0).unwrap();
        let profiles = vec![
            Profile::constant(0.7, 1.0).unwrap(),
            Profile::sine(1.0, 2.0).unwrap(),
            Profile::bump(1.0, 2.0).unwrap(),
            Profile::sine_bump(1.0, 2.0).unwrap(),
            Profile::heaviside(1.0, 1.0).unwrap(),
            Profile::x_ramp_heaviside(2.0).unwrap(),
            net.at(0.1).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for p in &profiles {
            for _ in 0..10 {
                let x = [rng.gen_range(-2.0..2.0)];
                let a = rng.gen_range(-2.0..2.0);
                let b = rng.gen_range(-2.0..2.0);
                let exact = p.integral_u(&x, a, b).expect("integral form present");
                let splits = p.u_split_hints();
                let quad = quad::adaptive_split(|s| p.eval(&x, s), a, b, &splits, 1e-12)
                    .unwrap();
                assert_abs_diff_eq!(exact, quad, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn make_profile_kinds() {
        assert!(make_profile("sine", Some(1.0), 2.0).is_ok());
        assert!(make_profile("nope", None, 1.0).is_err());
        assert!(make_profile("zero", None, 1.0).is_ok());
    }

    #[test]
    fn default_lambda_positive_for_zero_sup() {
        assert!(default_lambda(0.0) > 0.0);
        assert_eq!(default_lambda(2.0), 3.0 + f64::EPSILON);
    }
}
