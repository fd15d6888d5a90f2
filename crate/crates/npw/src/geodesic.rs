//! Geodesics of the wave-type metric: the right-hand side generated from
//! the Christoffel table, adaptive integration with conserved-quantity
//! monitors, and certification that causal geodesics cross the graphs
//! {v = λu − k} exactly once.

use crate::error::{Error, Result};
use crate::metric::{CausalClass, MetricAssembly, SpacetimePoint, TangentVector, TimeOrientation};
use crate::numeric::ode::{self, OdeOptions, OdeSolution};
use nalgebra::DVector;
use rand::Rng;

/// Position and velocity along a geodesic.
#[derive(Debug, Clone)]
pub struct GeodesicState {
    pub point: SpacetimePoint,
    pub velocity: TangentVector,
}

impl GeodesicState {
    pub fn new(point: SpacetimePoint, velocity: TangentVector) -> Self {
        GeodesicState { point, velocity }
    }

    fn to_vector(&self) -> DVector<f64> {
        let n = self.point.x.len();
        let mut y = DVector::zeros(2 * n + 4);
        for i in 0..n {
            y[i] = self.point.x[i];
            y[n + 2 + i] = self.velocity.xi[i];
        }
        y[n] = self.point.u;
        y[n + 1] = self.point.v;
        y[2 * n + 2] = self.velocity.alpha;
        y[2 * n + 3] = self.velocity.beta;
        y
    }

    fn from_vector(n: usize, y: &DVector<f64>) -> Self {
        GeodesicState {
            point: SpacetimePoint {
                x: DVector::from_iterator(n, (0..n).map(|i| y[i])),
                u: y[n],
                v: y[n + 1],
            },
            velocity: TangentVector {
                xi: DVector::from_iterator(n, (0..n).map(|i| y[n + 2 + i])),
                alpha: y[2 * n + 2],
                beta: y[2 * n + 3],
            },
        }
    }
}

/// Geodesic acceleration ẍ^σ = −Γ^σ_{μν} ẋ^μ ẋ^ν from the Christoffel
/// table. For x-independent profiles this reduces to ξ̈ = −Γ^(N)(ξ̇,ξ̇),
/// α̈ = 0, β̈ = ½ α̇² ∂a/∂u.
pub fn geodesic_rhs(ma: &MetricAssembly, s: &GeodesicState) -> Result<TangentVector> {
    let n = ma.base().dim();
    let table = ma.christoffels(&s.point)?.gamma;

    let mut vel = DVector::zeros(n + 2);
    for i in 0..n {
        vel[i] = s.velocity.xi[i];
    }
    vel[n] = s.velocity.alpha;
    vel[n + 1] = s.velocity.beta;

    let mut acc = DVector::zeros(n + 2);
    for sigma in 0..n + 2 {
        acc[sigma] = -(&table[sigma] * &vel).dot(&vel);
    }

    Ok(TangentVector {
        xi: DVector::from_iterator(n, (0..n).map(|i| acc[i])),
        alpha: acc[n],
        beta: acc[n + 1],
    })
}

/// One recorded sample of a trajectory with its conserved monitors:
/// Q₀ = l(γ̇, γ̇), Q₁ = l(γ̇, ∂_v) = α̇, Q₂ = l(γ̇, ∂_u) = β̇ − a α̇
/// (conserved when a is u-independent), and τ_λ.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: GeodesicState,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub tau: f64,
}

/// An integrated geodesic over [t_min, t_max] ∋ 0 with dense output.
#[derive(Debug)]
pub struct Trajectory {
    n: usize,
    forward: OdeSolution,
    backward: Option<OdeSolution>,
    pub samples: Vec<TrajectorySample>,
    pub tol: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn span(&self) -> (f64, f64) {
        let lo = self
            .backward
            .as_ref()
            .and_then(|b| b.ts.last().copied())
            .unwrap_or(0.0);
        let hi = self.forward.ts.last().copied().unwrap_or(0.0);
        (lo, hi)
    }

    /// Dense state anywhere in the span.
    pub fn state_at(&self, t: f64) -> GeodesicState {
        let y = match (&self.backward, t < 0.0) {
            (Some(b), true) => b.eval(t),
            _ => self.forward.eval(t),
        };
        GeodesicState::from_vector(self.n, &y)
    }

    pub fn initial_state(&self) -> GeodesicState {
        GeodesicState::from_vector(self.n, &self.forward.ys[0])
    }

    /// Largest drift of each monitor from its initial value.
    pub fn monitor_drift(&self) -> (f64, f64, f64) {
        let first = &self.samples[0];
        let mut d = (0.0f64, 0.0f64, 0.0f64);
        for s in &self.samples {
            d.0 = d.0.max((s.q0 - first.q0).abs());
            d.1 = d.1.max((s.q1 - first.q1).abs());
            d.2 = d.2.max((s.q2 - first.q2).abs());
        }
        d
    }

    /// Largest deviation of α(t) from the straight line through the
    /// span endpoints.
    pub fn alpha_affinity_defect(&self) -> f64 {
        let (t0, t1) = self.span();
        if t1 == t0 {
            return 0.0;
        }
        let u0 = self.state_at(t0).point.u;
        let u1 = self.state_at(t1).point.u;
        self.samples
            .iter()
            .map(|s| {
                let line = u0 + (u1 - u0) * (s.t - t0) / (t1 - t0);
                (s.state.point.u - line).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn monitors(ma: &MetricAssembly, state: &GeodesicState) -> (f64, f64, f64, f64) {
    let q0 = ma.inner(&state.point, &state.velocity, &state.velocity);
    let q1 = state.velocity.alpha;
    let a = ma.profile_at(&state.point);
    let q2 = state.velocity.beta - a * state.velocity.alpha;
    let tau = ma.tau(&state.point);
    (q0, q1, q2, tau)
}

/// Integrate the geodesic through `initial` over `span` (which must
/// contain 0, the parameter of the initial state).
pub fn integrate(
    ma: &MetricAssembly,
    initial: &GeodesicState,
    span: (f64, f64),
    tol: f64,
) -> Result<Trajectory> {
    assert!(tol > 0.0);
    let (t_min, t_max) = span;
    assert!(t_min <= 0.0 && t_max >= 0.0, "span must contain 0");
    let n = ma.base().dim();
    let y0 = initial.to_vector();

    let rhs = |_t: f64, y: &DVector<f64>| -> DVector<f64> {
        let s = GeodesicState::from_vector(n, y);
        let acc = geodesic_rhs(ma, &s).expect("geodesic rhs");
        let mut dy = DVector::zeros(2 * n + 4);
        for i in 0..n {
            dy[i] = s.velocity.xi[i];
            dy[n + 2 + i] = acc.xi[i];
        }
        dy[n] = s.velocity.alpha;
        dy[n + 1] = s.velocity.beta;
        dy[2 * n + 2] = acc.alpha;
        dy[2 * n + 3] = acc.beta;
        dy
    };

    // α̇ is constant, so u sweeps features at a known rate; cap the step
    // so localized profile features cannot slip between stage points
    let max_step = ma.profile().feature_scale().map(|scale| {
        let rate = initial.velocity.alpha.abs().max(0.25);
        (0.5 * scale / rate).max(1e-4)
    });
    let opts = OdeOptions {
        abs_tol: tol,
        rel_tol: tol,
        max_step,
        ..OdeOptions::default()
    };
    let forward = ode::integrate(&rhs, 0.0, y0.clone(), t_max, &opts)?;
    let backward = if t_min < 0.0 {
        Some(ode::integrate(&rhs, 0.0, y0, t_min, &opts)?)
    } else {
        None
    };

    let mut samples = Vec::new();
    if let Some(b) = &backward {
        for (t, y) in b.ts.iter().zip(&b.ys).skip(1).rev() {
            let state = GeodesicState::from_vector(n, y);
            let (q0, q1, q2, tau) = monitors(ma, &state);
            samples.push(TrajectorySample {
                t: *t,
                state,
                q0,
                q1,
                q2,
                tau,
            });
        }
    }
    for (t, y) in forward.ts.iter().zip(&forward.ys) {
        let state = GeodesicState::from_vector(n, y);
        let (q0, q1, q2, tau) = monitors(ma, &state);
        samples.push(TrajectorySample {
            t: *t,
            state,
            q0,
            q1,
            q2,
            tau,
        });
    }

    let steps = forward.steps_accepted + backward.as_ref().map_or(0, |b| b.steps_accepted);
    Ok(Trajectory {
        n,
        forward,
        backward,
        samples,
        tol,
        steps,
    })
}

/// Outcome of a crossing search for τ_λ ∘ γ = k.
#[derive(Debug, Clone)]
pub enum CrossingOutcome {
    Crossed {
        t_star: f64,
        /// |β(t*) − λα(t*) + k| after refinement.
        residual: f64,
        /// Sign changes of τ∘γ − k found over the whole span; 1 certifies
        /// uniqueness within the span.
        crossings: usize,
    },
    /// No sign change in the integrated span; retry with the suggested
    /// (doubled) span.
    NotYetCrossed {
        tau_range: (f64, f64),
        suggested_span: f64,
    },
}

/// Locate the parameter where the trajectory meets {v = λu − k}.
///
/// τ_λ is strictly monotone along causal geodesics, so at most one sign
/// change can occur; the count of observed sign changes is returned as
/// the uniqueness certificate.
pub fn cauchy_crossing(
    ma: &MetricAssembly,
    traj: &Trajectory,
    k: f64,
    tol: f64,
) -> Result<CrossingOutcome> {
    let g = |s: &TrajectorySample| s.tau - k;

    let mut crossings = 0usize;
    let mut bracket: Option<(usize, usize)> = None;
    for w in 0..traj.samples.len().saturating_sub(1) {
        let (a, b) = (&traj.samples[w], &traj.samples[w + 1]);
        if g(a) == 0.0 {
            crossings += 1;
            bracket.get_or_insert((w, w));
        } else if g(a) * g(b) < 0.0 {
            crossings += 1;
            bracket.get_or_insert((w, w + 1));
        }
    }
    if let Some(last) = traj.samples.last() {
        if g(last) == 0.0 {
            crossings += 1;
            let i = traj.samples.len() - 1;
            bracket.get_or_insert((i, i));
        }
    }

    let Some((ia, ib)) = bracket else {
        let taus: Vec<f64> = traj.samples.iter().map(|s| s.tau).collect();
        let lo = taus.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (t0, t1) = traj.span();
        return Ok(CrossingOutcome::NotYetCrossed {
            tau_range: (lo, hi),
            suggested_span: 2.0 * (t1 - t0).abs().max(1.0),
        });
    };

    let lambda = ma.lambda();
    let residual_at = |state: &GeodesicState| {
        (state.point.v - lambda * state.point.u + k).abs()
    };

    let mut t_star;
    if ia == ib {
        t_star = traj.samples[ia].t;
    } else {
        // bisection on the dense interpolant
        let (mut ta, mut tb) = (traj.samples[ia].t, traj.samples[ib].t);
        let tau_of = |t: f64| ma.tau(&traj.state_at(t).point) - k;
        let (mut ga, _) = (tau_of(ta), tau_of(tb));
        for _ in 0..80 {
            let tm = 0.5 * (ta + tb);
            let gm = tau_of(tm);
            if gm == 0.0 || (tb - ta).abs() < 1e-15 * (1.0 + tm.abs()) {
                ta = tm;
                tb = tm;
                break;
            }
            if ga * gm < 0.0 {
                tb = tm;
            } else {
                ta = tm;
                ga = gm;
            }
        }
        t_star = 0.5 * (ta + tb);
    }

    // certify by re-integrating from the nearest recorded state
    let refine = |t_guess: f64| -> Result<GeodesicState> {
        let base = traj
            .samples
            .iter()
            .min_by(|a, b| {
                (a.t - t_guess)
                    .abs()
                    .total_cmp(&(b.t - t_guess).abs())
            })
            .expect("samples nonempty");
        if (t_guess - base.t).abs() < 1e-14 {
            return Ok(base.state.clone());
        }
        let local = integrate(
            ma,
            &base.state,
            if t_guess > base.t {
                (0.0, t_guess - base.t)
            } else {
                (t_guess - base.t, 0.0)
            },
            traj.tol,
        )?;
        Ok(local.state_at(t_guess - base.t))
    };

    let mut state = refine(t_star)?;
    for _ in 0..4 {
        if residual_at(&state) <= tol {
            break;
        }
        // Newton step on g(t) = τ(γ(t)) − k with g′ = λα̇ − β̇
        let gval = ma.tau(&state.point) - k;
        let gdot = lambda * state.velocity.alpha - state.velocity.beta;
        if gdot == 0.0 {
            break;
        }
        t_star -= gval / gdot;
        state = refine(t_star)?;
    }

    let residual = residual_at(&state);
    if residual > tol {
        return Err(Error::RootTolerance { residual, tol });
    }
    Ok(CrossingOutcome::Crossed {
        t_star,
        residual,
        crossings,
    })
}

/// Certificate that one geodesic crosses one graph exactly once.
#[derive(Debug, Clone)]
pub struct CrossingCertificate {
    pub k: f64,
    pub t_star: f64,
    pub residual: f64,
    pub unique: bool,
    pub span_doublings: usize,
}

/// Integrate with span doubling (up to `max_doublings`) until the
/// crossing with {v = λu − k} is bracketed, then certify it.
pub fn certify_crossing(
    ma: &MetricAssembly,
    initial: &GeodesicState,
    k: f64,
    base_span: f64,
    max_doublings: usize,
    tol: f64,
) -> Result<CrossingCertificate> {
    let mut half = base_span;
    let mut doublings = 0;
    loop {
        let traj = integrate(ma, initial, (-half, half), tol)?;
        match cauchy_crossing(ma, &traj, k, tol.max(1e-9))? {
            CrossingOutcome::Crossed {
                t_star,
                residual,
                crossings,
            } => {
                return Ok(CrossingCertificate {
                    k,
                    t_star,
                    residual,
                    unique: crossings == 1,
                    span_doublings: doublings,
                });
            }
            CrossingOutcome::NotYetCrossed { .. } => {
                if doublings >= max_doublings {
                    return Err(Error::Unsupported(format!(
                        "no crossing with k = {k} within span {half} after {doublings} doublings"
                    )));
                }
                half *= 2.0;
                doublings += 1;
            }
        }
    }
}

/// Strict monotonicity report for τ_λ along a trajectory.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    /// Expected direction: +1 along future-directed causal curves.
    pub direction: f64,
    pub violations: Vec<(f64, f64)>,
    pub checked_pairs: usize,
}

impl MonotonicityReport {
    pub fn strictly_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check that τ_λ is strictly monotone along the sampled trajectory
/// (increasing for future-directed causal data, decreasing for
/// past-directed).
pub fn tau_monotonicity(ma: &MetricAssembly, traj: &Trajectory) -> Result<MonotonicityReport> {
    let init = traj.initial_state();
    let (class, orientation) = ma.classify(&init.point, &init.velocity)?;
    if class == CausalClass::Spacelike {
        return Err(Error::Unsupported(
            "monotonicity of the time function applies to causal curves".into(),
        ));
    }
    let direction = match orientation {
        Some(TimeOrientation::Future) => 1.0,
        Some(TimeOrientation::Past) => -1.0,
        None => 1.0,
    };
    let mut violations = Vec::new();
    let mut checked = 0;
    for w in traj.samples.windows(2) {
        checked += 1;
        if direction * (w[1].tau - w[0].tau) <= 0.0 {
            violations.push((w[1].t, w[1].tau));
        }
    }
    Ok(MonotonicityReport {
        direction,
        violations,
        checked_pairs: checked,
    })
}

/// Random null future-directed initial data: α̇ > 0 and β̇ solved from
/// l(γ̇, γ̇) = 0.
pub fn random_null_state<R: Rng>(
    ma: &MetricAssembly,
    rng: &mut R,
    position_range: f64,
    tau_offset: (f64, f64),
) -> GeodesicState {
    let n = ma.base().dim();
    let lambda = ma.lambda();
    let x = DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-position_range..position_range)));
    let u = rng.gen_range(-position_range..position_range);
    // place τ(p) inside the requested window
    let tau0 = rng.gen_range(tau_offset.0..tau_offset.1);
    let v = lambda * u - tau0;
    let point = SpacetimePoint { x, u, v };

    let xi = DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-1.0..1.0)));
    let alpha: f64 = rng.gen_range(0.5..1.5);
    let a = ma.profile_at(&point);
    let h_xi = ma.base().inner(point.x.as_slice(), &xi, &xi);
    let beta = (a * alpha * alpha - h_xi) / (2.0 * alpha);
    GeodesicState {
        point,
        velocity: TangentVector { xi, alpha, beta },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::BaseManifold;
    use crate::profile::Profile;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assembly(n: usize, p: Profile) -> MetricAssembly {
        MetricAssembly::new(BaseManifold::euclidean(n), p).unwrap()
    }

    #[test]
    fn rhs_vanishes_for_zero_profile() {
        let ma = assembly(2, Profile::zero(1.0).unwrap());
        let s = GeodesicState::new(
            SpacetimePoint::new(vec![0.1, -0.4], 0.3, 0.9),
            TangentVector::new(vec![1.0, 2.0], 0.5, -0.7),
        );
        let acc = geodesic_rhs(&ma, &s).unwrap();
        assert_eq!(acc.xi.as_slice(), &[0.0, 0.0]);
        assert_eq!((acc.alpha, acc.beta), (0.0, 0.0));
    }

    #[test]
    fn rhs_beta_for_u_only_profile() {
        // a = sin²(u), n = 0: β̈ = ½ α̇² a′(u); at u = π/4, α̇ = 1 this is ½
        let ma = assembly(0, Profile::sine(1.0, 2.0).unwrap());
        let s = GeodesicState::new(
            SpacetimePoint::new(Vec::<f64>::new(), std::f64::consts::FRAC_PI_4, 0.0),
            TangentVector::new(Vec::<f64>::new(), 1.0, 0.0),
        );
        let acc = geodesic_rhs(&ma, &s).unwrap();
        assert_abs_diff_eq!(acc.beta, 0.5, epsilon = 1e-14);
        assert_eq!(acc.alpha, 0.0);
    }

    #[test]
    fn rhs_matches_euler_lagrange_sign() {
        // spatial acceleration is −½ α̇² ∇ₓa for flat N
        let ma = assembly(1, Profile::bump(1.0, 2.0).unwrap());
        let p = SpacetimePoint::new(vec![0.7], 0.2, 0.0);
        let s = GeodesicState::new(p.clone(), TangentVector::new(vec![0.0], 1.0, 0.0));
        let acc = geodesic_rhs(&ma, &s).unwrap();
        let grad = ma.profile().grad_x(p.x.as_slice(), p.u);
        assert_abs_diff_eq!(acc.xi[0], -0.5 * grad[0], epsilon = 1e-14);
    }

    #[test]
    fn straight_lines_for_zero_profile() {
        let ma = assembly(1, Profile::zero(1.0).unwrap());
        let init = GeodesicState::new(
            SpacetimePoint::new(vec![0.0], 0.0, 0.0),
            TangentVector::new(vec![0.3], 1.0, -0.5),
        );
        let traj = integrate(&ma, &init, (0.0, 1.0), 1e-10).unwrap();
        for s in &traj.samples {
            assert_abs_diff_eq!(s.state.point.x[0], 0.3 * s.t, epsilon = 1e-10);
            assert_abs_diff_eq!(s.state.point.u, s.t, epsilon = 1e-10);
            assert_abs_diff_eq!(s.state.point.v, -0.5 * s.t, epsilon = 1e-10);
        }
    }

    #[test]
    fn null_data_stays_null() {
        let ma = assembly(1, Profile::bump(1.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let init = random_null_state(&ma, &mut rng, 1.0, (-1.0, 1.0));
            let traj = integrate(&ma, &init, (0.0, 1.0), 1e-10).unwrap();
            let (dq0, _, _) = traj.monitor_drift();
            assert!(dq0 <= 1e-8, "null defect {dq0}");
        }
    }

    #[test]
    fn q2_conserved_for_u_independent_profile() {
        // a = A/(1+x²) has ∂a/∂u = 0, so l(γ̇, ∂_u) is a Killing monitor
        let profile = Profile::smooth(
            "x_bump",
            2.0,
            1.0,
            |x: &[f64], _u| 1.0 / (1.0 + x[0] * x[0]),
            |x: &[f64], _u| {
                let d = 1.0 + x[0] * x[0];
                vec![-2.0 * x[0] / (d * d)]
            },
            |_x, _u| 0.0,
        )
        .unwrap();
        let ma = assembly(1, profile);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..5 {
            let init = random_null_state(&ma, &mut rng, 1.0, (-1.0, 1.0));
            let traj = integrate(&ma, &init, (0.0, 1.0), 1e-10).unwrap();
            let (_, _, dq2) = traj.monitor_drift();
            assert!(dq2 <= 1e-8, "q2 drift {dq2}");
        }
    }

    #[test]
    fn alpha_is_affine() {
        let ma = assembly(1, Profile::sine_bump(1.0, 2.0).unwrap());
        let init = GeodesicState::new(
            SpacetimePoint::new(vec![0.2], -0.3, 0.1),
            TangentVector::new(vec![0.4], 0.9, 0.2),
        );
        let traj = integrate(&ma, &init, (-1.0, 1.0), 1e-10).unwrap();
        assert!(traj.alpha_affinity_defect() <= 1e-9);
    }

    #[test]
    fn v_translation_symmetry() {
        let ma = assembly(1, Profile::bump(1.0, 2.0).unwrap());
        let base = GeodesicState::new(
            SpacetimePoint::new(vec![0.1], 0.2, 0.3),
            TangentVector::new(vec![0.5], 1.0, -0.2),
        );
        let mut shifted = base.clone();
        shifted.point.v += 2.5;
        let t1 = integrate(&ma, &base, (0.0, 1.0), 1e-12).unwrap();
        let t2 = integrate(&ma, &shifted, (0.0, 1.0), 1e-12).unwrap();
        for t in [0.25, 0.5, 0.99] {
            let a = t1.state_at(t);
            let b = t2.state_at(t);
            assert_abs_diff_eq!(a.point.x[0], b.point.x[0], epsilon = 1e-10);
            assert_abs_diff_eq!(a.point.u, b.point.u, epsilon = 1e-10);
            assert_abs_diff_eq!(a.point.v + 2.5, b.point.v, epsilon = 1e-10);
        }
    }

    #[test]
    fn crossing_null_line_2d() {
        // a ≡ 0, λ = 1, straight null line u = u₀, v̇ = 1: τ = u₀ − v hits 0
        // at v = u₀, i.e. t* = u₀ − v₀
        let ma = assembly(0, Profile::zero(1.0).unwrap());
        let u0 = 0.8;
        let init = GeodesicState::new(
            SpacetimePoint::new(Vec::<f64>::new(), u0, 0.0),
            TangentVector::new(Vec::<f64>::new(), 0.0, 1.0),
        );
        let traj = integrate(&ma, &init, (-2.0, 2.0), 1e-10).unwrap();
        match cauchy_crossing(&ma, &traj, 0.0, 1e-9).unwrap() {
            CrossingOutcome::Crossed { t_star, residual, crossings } => {
                assert_abs_diff_eq!(t_star, u0, epsilon = 1e-8);
                assert!(residual <= 1e-9);
                assert_eq!(crossings, 1);
            }
            other => panic!("expected crossing, got {other:?}"),
        }
    }

    #[test]
    fn crossing_constant_profile_closed_form() {
        // a ≡ c = 1, λ = 1, null with β̇ = c/2·α̇, α(t) = t: crossing of
        // τ = 0 from β(0) = 1 happens at t* = 2
        let ma = assembly(0, Profile::constant(1.0, 1.0).unwrap());
        let init = GeodesicState::new(
            SpacetimePoint::new(Vec::<f64>::new(), 0.0, 1.0),
            TangentVector::new(Vec::<f64>::new(), 1.0, 0.5),
        );
        let traj = integrate(&ma, &init, (-1.0, 4.0), 1e-10).unwrap();
        match cauchy_crossing(&ma, &traj, 0.0, 1e-9).unwrap() {
            CrossingOutcome::Crossed { t_star, .. } => {
                assert_abs_diff_eq!(t_star, 2.0, epsilon = 1e-8)
            }
            other => panic!("expected crossing, got {other:?}"),
        }
    }

    #[test]
    fn not_yet_crossed_reports_extension() {
        let ma = assembly(0, Profile::zero(1.0).unwrap());
        let init = GeodesicState::new(
            SpacetimePoint::new(Vec::<f64>::new(), 0.0, 5.0),
            TangentVector::new(Vec::<f64>::new(), 1.0, 0.0),
        );
        let traj = integrate(&ma, &init, (0.0, 0.5), 1e-10).unwrap();
        match cauchy_crossing(&ma, &traj, 0.0, 1e-9).unwrap() {
            CrossingOutcome::NotYetCrossed { suggested_span, .. } => {
                assert!(suggested_span > 0.5)
            }
            other => panic!("expected not-yet-crossed, got {other:?}"),
        }
    }

    #[test]
    fn certify_crossing_extends_span() {
        let ma = assembly(0, Profile::zero(1.0).unwrap());
        let init = GeodesicState::new(
            SpacetimePoint::new(Vec::<f64>::new(), 0.0, 6.0),
            TangentVector::new(Vec::<f64>::new(), 1.0, 0.0),
        );
        // τ₀ = −6 and τ advances at rate λα̇ − β̇ = 1, so t* = 6
        let cert = certify_crossing(&ma, &init, 0.0, 1.0, 6, 1e-9).unwrap();
        assert!(cert.unique);
        assert_eq!(cert.span_doublings, 3);
        assert_abs_diff_eq!(cert.t_star, 6.0, epsilon = 1e-7);
    }

    #[test]
    fn tau_monotone_future_and_past() {
        let ma = assembly(1, Profile::bump(1.0, 2.0).unwrap());
        let future = GeodesicState::new(
            SpacetimePoint::new(vec![0.0], 0.0, 0.0),
            TangentVector::new(vec![0.0], 1.0, -1.0),
        );
        let traj = integrate(&ma, &future, (0.0, 2.0), 1e-10).unwrap();
        let rep = tau_monotonicity(&ma, &traj).unwrap();
        assert_eq!(rep.direction, 1.0);
        assert!(rep.strictly_monotone());

        let past = GeodesicState::new(
            SpacetimePoint::new(vec![0.0], 0.0, 0.0),
            TangentVector::new(vec![0.0], -1.0, 1.0),
        );
        let traj = integrate(&ma, &past, (0.0, 2.0), 1e-10).unwrap();
        let rep = tau_monotonicity(&ma, &traj).unwrap();
        assert_eq!(rep.direction, -1.0);
        assert!(rep.strictly_monotone());
    }

    #[test]
    fn random_null_states_have_zero_norm() {
        let ma = assembly(1, Profile::bump(1.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let s = random_null_state(&ma, &mut rng, 2.0, (-3.0, -1.0));
            let q = ma.inner(&s.point, &s.velocity, &s.velocity);
            assert_abs_diff_eq!(q, 0.0, epsilon = 1e-12);
            assert!(s.velocity.alpha > 0.0);
            let tau = ma.tau(&s.point);
            assert!(tau >= -3.0 && tau <= -1.0);
        }
    }
}
