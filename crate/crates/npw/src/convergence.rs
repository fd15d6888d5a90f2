//! Quantitative behavior of regularization nets: L¹ errors of a, F, G,
//! K, Φ, Ψ against their non-smooth limits, log–log convergence slopes,
//! moderateness exponents, the two-dimensional Hölder error of Φ, and
//! the bi-Lipschitz splitting for Lipschitz limit profiles.
//!
//! Limit objects (ε = 0) are built directly from a₀ through the same
//! splitting machinery in non-smooth direct mode, so every comparison is
//! against an independently constructed target rather than a
//! small-ε member of the net.

use crate::error::{Error, Result};
use crate::manifold::BaseManifold;
use crate::metric::{MetricAssembly, SpacetimePoint};
use crate::numeric::{ols_slope, quad};
use crate::profile::RegularizationNet;
use crate::region::Region;
use crate::splitting::SplitChart;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Default ε sweep: halvings chosen so that even the slowest (order-ε)
/// L¹ error is below 1e-3 at the smallest scale.
pub const DEFAULT_EPSILONS: [f64; 7] = [
    0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625,
];

/// Net quantities whose convergence is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    A,
    F,
    G,
    K,
    Phi,
    Psi,
}

impl Quantity {
    pub const ALL: [Quantity; 6] = [
        Quantity::A,
        Quantity::F,
        Quantity::G,
        Quantity::K,
        Quantity::Phi,
        Quantity::Psi,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Quantity::A),
            "f" => Ok(Quantity::F),
            "g" => Ok(Quantity::G),
            "k" => Ok(Quantity::K),
            "phi" => Ok(Quantity::Phi),
            "psi" => Ok(Quantity::Psi),
            other => Err(Error::Unsupported(format!("unknown quantity {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::A => "a",
            Quantity::F => "F",
            Quantity::G => "G",
            Quantity::K => "K",
            Quantity::Phi => "Phi",
            Quantity::Psi => "Psi",
        }
    }

    /// Dimension of the quantity's domain box for base dimension n.
    /// Layouts: a, F over (x…, u); G over (x…, z); K over (x…, t, u);
    /// Φ over (x…, t, u); Ψ over (x…, u, v).
    pub fn domain_dim(&self, n: usize) -> usize {
        match self {
            Quantity::A | Quantity::F | Quantity::G => n + 1,
            Quantity::K | Quantity::Phi | Quantity::Psi => n + 2,
        }
    }
}

/// Which norm a convergence report measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L1Box,
    SupBox,
    Holder(f64),
}

/// Per-ε errors with a fitted log–log slope.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub quantity: Quantity,
    pub epsilons: Vec<f64>,
    pub errors: Vec<f64>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub norm_kind: NormKind,
    /// Errors non-increasing within a 5% tolerance band. A false value
    /// flags the sweep; it is not fatal.
    pub monotone: bool,
}

// 5-point Gauss–Legendre panel rule.
const GL5_NODES: [f64; 5] = [
    -0.906179845938663992797626878299,
    -0.538469310105683091036314420700,
    0.0,
    0.538469310105683091036314420700,
    0.906179845938663992797626878299,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236926885056189087514264040720,
    0.478628670499366468041291514836,
    0.568888888888888888888888888889,
    0.478628670499366468041291514836,
    0.236926885056189087514264040720,
];

fn axis_nodes(lo: f64, hi: f64, splits: &[f64], panels: usize) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = vec![lo];
    let mut interior: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|s| *s > lo && *s < hi)
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    cuts.extend(interior);
    cuts.push(hi);

    let mut nodes = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        for p in 0..panels {
            let pa = a + (b - a) * p as f64 / panels as f64;
            let pb = a + (b - a) * (p + 1) as f64 / panels as f64;
            let mid = 0.5 * (pa + pb);
            let half = 0.5 * (pb - pa);
            for (xi, wi) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
                nodes.push((mid + half * xi, half * wi));
            }
        }
    }
    nodes
}

/// Tensor-grid quadrature over the region: composite 5-point
/// Gauss–Legendre with `panels` panels per axis between the supplied
/// per-axis split points.
pub fn box_integral<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    region: &Region,
    axis_splits: &[Vec<f64>],
    panels: usize,
) -> f64 {
    assert!(panels >= 1);
    let dim = region.dim();
    assert_eq!(axis_splits.len(), dim);
    let per_axis: Vec<Vec<(f64, f64)>> = region
        .bounds()
        .iter()
        .zip(axis_splits)
        .map(|(&(lo, hi), splits)| axis_nodes(lo, hi, splits, panels))
        .collect();

    let mut point = vec![0.0; dim];
    fn recurse<F: FnMut(&[f64]) -> f64>(
        f: &mut F,
        per_axis: &[Vec<(f64, f64)>],
        axis: usize,
        point: &mut Vec<f64>,
    ) -> f64 {
        if axis == per_axis.len() {
            return f(point);
        }
        let mut total = 0.0;
        for &(x, w) in &per_axis[axis] {
            point[axis] = x;
            total += w * recurse(f, per_axis, axis + 1, point);
        }
        total
    }
    recurse(&mut f, &per_axis, 0, &mut point)
}

/// ∫_box |f − g| by tensor-grid quadrature (unweighted coordinates).
pub fn l1_error<F, G>(
    f: F,
    g: G,
    region: &Region,
    axis_splits: &[Vec<f64>],
    panels: usize,
) -> f64
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    box_integral(|p| (f(p) - g(p)).abs(), region, axis_splits, panels)
}

/// Moderateness fit: sup-norm growth of a derivative across the net,
/// modeled as sup ~ C ε^(−p).
#[derive(Debug, Clone)]
pub struct ModeratenessFit {
    pub exponent: f64,
    pub residual: f64,
    pub sups: Vec<f64>,
}

/// Sup and Hölder-seminorm error of Φ_ε against Φ₀ on a 2D box.
#[derive(Debug, Clone)]
pub struct HolderReport {
    pub sup: f64,
    pub seminorm: f64,
}

impl HolderReport {
    pub fn total(&self) -> f64 {
        self.sup + self.seminorm
    }
}

/// Empirical bi-Lipschitz data of the non-smooth splitting.
#[derive(Debug)]
pub struct LipschitzSplitting {
    limit_chart: Arc<SplitChart>,
    /// Largest sampled |F₀(x₁,s) − F₀(x₂,s)| / d(x₁, x₂).
    pub f0_x_constant: f64,
    /// Largest sampled |F₀(x,s₁) − F₀(x,s₂)| / |s₁ − s₂|.
    pub f0_u_constant: f64,
    /// Joint constant against d(x₁,x₂) + |s₁ − s₂|.
    pub f0_joint_constant: f64,
    /// Sampling-free cap max(C, 2λ) with C = max_s |∫₀ˢ c|.
    pub f0_bound: f64,
    pub k0_joint_constant: f64,
    pub phi0_joint_constant: f64,
    pub psi0_joint_constant: f64,
    /// Largest Ψ₀∘Φ₀ / Φ₀∘Ψ₀ identity defect over the sampled box.
    pub round_trip_residual: f64,
}

impl LipschitzSplitting {
    pub fn k0(&self, x: &[f64], t: f64, u: f64) -> Result<f64> {
        self.limit_chart.k_at(x, t, u)
    }

    pub fn phi0(&self, t: f64, x: &[f64], u: f64) -> Result<SpacetimePoint> {
        self.limit_chart.phi(t, x, u)
    }

    pub fn psi0(&self, p: &SpacetimePoint) -> Result<(f64, nalgebra::DVector<f64>, f64)> {
        self.limit_chart.psi(p)
    }
}

/// Splitting charts for every member of a regularization net, including
/// the ε = 0 limit in non-smooth direct mode.
pub struct NetSplitting {
    base: BaseManifold,
    net: RegularizationNet,
    quad_tol: f64,
    root_tol: f64,
    limit_chart: Arc<SplitChart>,
    charts: Mutex<HashMap<u64, Arc<SplitChart>>>,
}

impl std::fmt::Debug for NetSplitting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NetSplitting")
            .field("base", &self.base)
            .field("net", &self.net)
            .finish()
    }
}

impl NetSplitting {
    pub fn new(base: BaseManifold, net: RegularizationNet) -> Result<Self> {
        Self::with_tolerances(base, net, 1e-10, 1e-10)
    }

    pub fn with_tolerances(
        base: BaseManifold,
        net: RegularizationNet,
        quad_tol: f64,
        root_tol: f64,
    ) -> Result<Self> {
        let limit_ma = MetricAssembly::new(base.clone(), net.limit().clone())?;
        let limit_chart = Arc::new(SplitChart::with_tolerances(limit_ma, quad_tol, root_tol));
        Ok(NetSplitting {
            base,
            net,
            quad_tol,
            root_tol,
            limit_chart,
            charts: Mutex::new(HashMap::new()),
        })
    }

    pub fn base(&self) -> &BaseManifold {
        &self.base
    }

    pub fn net(&self) -> &RegularizationNet {
        &self.net
    }

    pub fn lambda(&self) -> f64 {
        self.net.limit().lambda()
    }

    /// Chart for a_ε; ε = 0 selects the non-smooth limit chart.
    pub fn chart(&self, eps: f64) -> Result<Arc<SplitChart>> {
        if eps == 0.0 {
            return Ok(self.limit_chart.clone());
        }
        let key = eps.to_bits();
        {
            let charts = self.charts.lock().expect("chart lock");
            if let Some(c) = charts.get(&key) {
                return Ok(c.clone());
            }
        }
        let profile = self.net.at(eps)?;
        let ma = MetricAssembly::new(self.base.clone(), profile)?;
        let chart = Arc::new(SplitChart::with_tolerances(ma, self.quad_tol, self.root_tol));
        let mut charts = self.charts.lock().expect("chart lock");
        Ok(charts.entry(key).or_insert(chart).clone())
    }

    /// G_ε(x, z) = F_{ε,x}⁻¹(z); ε = 0 gives the limit inverse.
    pub fn g_inverse(&self, eps: f64, x: &[f64], z: f64) -> Result<f64> {
        self.chart(eps)?.f_inverse(x, z)
    }

    fn n(&self) -> usize {
        self.base.dim()
    }

    /// √det h_x, the volume density used for L¹ integrals on N × ℝ.
    fn density(&self, x: &[f64]) -> f64 {
        if x.is_empty() {
            1.0
        } else {
            self.base.metric_at(x).determinant().sqrt()
        }
    }

    /// u-axis split hints for boxes containing the smeared breakpoints.
    fn u_hints(&self, eps: f64) -> Vec<f64> {
        self.net
            .limit()
            .u_breakpoints()
            .iter()
            .flat_map(|&b| [b - eps, b, b + eps])
            .collect()
    }

    fn axis_splits(&self, quantity: Quantity, eps: f64) -> Result<Vec<Vec<f64>>> {
        let n = self.n();
        let x_splits = self.net.limit().x_breakpoints().to_vec();
        let u = self.u_hints(eps);
        let mut splits = vec![x_splits; n];
        match quantity {
            Quantity::A | Quantity::F => splits.push(u),
            Quantity::G => {
                // image of the smeared region under F₀ at a reference x
                let x0 = vec![0.0; n];
                let mut z_hints = Vec::new();
                for &s in &u {
                    z_hints.push(self.limit_chart.f_at(&x0, s)?);
                }
                splits.push(z_hints);
            }
            Quantity::K | Quantity::Phi => {
                splits.push(Vec::new()); // t axis
                splits.push(u);
            }
            Quantity::Psi => {
                splits.push(u);
                splits.push(Vec::new()); // v axis
            }
        }
        Ok(splits)
    }

    /// Pointwise deviation |q_ε − q₀| at a domain point of the quantity.
    fn deviation(&self, quantity: Quantity, eps: f64, point: &[f64]) -> Result<f64> {
        let n = self.n();
        let chart = self.chart(eps)?;
        let limit = &self.limit_chart;
        let (x, rest) = point.split_at(n);
        Ok(match quantity {
            Quantity::A => {
                let u = rest[0];
                (chart.assembly().profile().eval(x, u)
                    - limit.assembly().profile().eval(x, u))
                .abs()
            }
            Quantity::F => {
                let u = rest[0];
                (chart.f_at(x, u)? - limit.f_at(x, u)?).abs()
            }
            Quantity::G => {
                let z = rest[0];
                (chart.f_inverse(x, z)? - limit.f_inverse(x, z)?).abs()
            }
            Quantity::K => {
                let (t, u) = (rest[0], rest[1]);
                (chart.k_at(x, t, u)? - limit.k_at(x, t, u)?).abs()
            }
            Quantity::Phi => {
                let (t, u) = (rest[0], rest[1]);
                let p_eps = chart.phi(t, x, u)?;
                let p_lim = limit.phi(t, x, u)?;
                ((p_eps.u - p_lim.u).powi(2) + (p_eps.v - p_lim.v).powi(2)).sqrt()
            }
            Quantity::Psi => {
                let (u, v) = (rest[0], rest[1]);
                let p = SpacetimePoint::new(x.to_vec(), u, v);
                let (t1, _, u1) = chart.psi(&p)?;
                let (t2, _, u2) = limit.psi(&p)?;
                ((t1 - t2).powi(2) + (u1 - u2).powi(2)).sqrt()
            }
        })
    }

    /// Weighted L¹ distance of the quantity to its limit over the region.
    pub fn l1_error_quantity(
        &self,
        quantity: Quantity,
        eps: f64,
        region: &Region,
        panels: usize,
    ) -> Result<f64> {
        if region.dim() != quantity.domain_dim(self.n()) {
            return Err(Error::Dimension {
                expected: quantity.domain_dim(self.n()),
                got: region.dim(),
            });
        }
        let splits = self.axis_splits(quantity, eps)?;
        let n = self.n();
        let mut failure = None;
        let value = box_integral(
            |p| match self.deviation(quantity, eps, p) {
                Ok(d) => d * self.density(&p[..n]),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            region,
            &splits,
            panels,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    /// Per-ε L¹ errors against the limit, with the OLS slope of
    /// log error against log ε (errors within 10× of the quadrature
    /// floor are excluded from the fit).
    pub fn convergence_sweep(
        &self,
        quantity: Quantity,
        region: &Region,
        epsilons: &[f64],
        panels: usize,
    ) -> Result<ConvergenceReport> {
        if epsilons.len() < 4 {
            return Err(Error::Unsupported(
                "a sweep needs at least 4 epsilon values".into(),
            ));
        }
        if !epsilons.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::Unsupported(
                "epsilons must be strictly decreasing".into(),
            ));
        }
        let mut errors = Vec::with_capacity(epsilons.len());
        for &eps in epsilons {
            errors.push(self.l1_error_quantity(quantity, eps, region, panels)?);
        }

        const QUAD_FLOOR: f64 = 1e-12;
        let fit: Vec<(f64, f64)> = epsilons
            .iter()
            .zip(&errors)
            .filter(|(_, &e)| e > 10.0 * QUAD_FLOOR)
            .map(|(&eps, &e)| (eps.ln(), e.ln()))
            .collect();
        let (fitted_slope, slope_stderr) = if fit.len() >= 2 {
            let xs: Vec<f64> = fit.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = fit.iter().map(|p| p.1).collect();
            let (s, _, se) = ols_slope(&xs, &ys);
            (s, se)
        } else {
            (0.0, 0.0)
        };

        let monotone = errors.windows(2).all(|w| w[1] <= 1.05 * w[0]);

        Ok(ConvergenceReport {
            quantity,
            epsilons: epsilons.to_vec(),
            errors,
            fitted_slope,
            slope_stderr,
            norm_kind: NormKind::L1Box,
            monotone,
        })
    }

    /// Fit sup |∂ᵘ_l a_ε| ~ C ε^(−p) over the box (x…, u). The sup
    /// sampling combines a uniform grid with refined grids inside each
    /// smeared breakpoint, where the extrema live.
    pub fn moderateness_exponent(
        &self,
        order: usize,
        region: &Region,
        epsilons: &[f64],
        grid_pts: usize,
    ) -> Result<ModeratenessFit> {
        let n = self.n();
        if region.dim() != n + 1 {
            return Err(Error::Dimension {
                expected: n + 1,
                got: region.dim(),
            });
        }
        let (u_lo, u_hi) = region.bounds()[n];
        let x_region = Region::new(region.bounds()[..n].to_vec());
        let x_grid = if n == 0 {
            vec![Vec::new()]
        } else {
            x_region.grid(grid_pts.min(9))
        };

        let mut sups = Vec::with_capacity(epsilons.len());
        for &eps in epsilons {
            let mut u_samples: Vec<f64> = (0..grid_pts)
                .map(|i| u_lo + (u_hi - u_lo) * i as f64 / (grid_pts - 1) as f64)
                .collect();
            for &b in self.net.limit().u_breakpoints() {
                for i in 0..=800 {
                    let s = b + eps * (-1.0 + 2.0 * i as f64 / 800.0);
                    if s >= u_lo && s <= u_hi {
                        u_samples.push(s);
                    }
                }
            }
            let mut sup = 0.0f64;
            for x in &x_grid {
                for &u in &u_samples {
                    sup = sup.max(self.net.u_derivative(eps, order, x, u).abs());
                }
            }
            sups.push(sup);
        }

        let xs: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = sups.iter().map(|s| s.max(1e-300).ln()).collect();
        let (slope, _, se) = ols_slope(&xs, &ys);
        Ok(ModeratenessFit {
            exponent: -slope,
            residual: se,
            sups,
        })
    }

    /// Sup and α-Hölder seminorm of Φ_ε − Φ₀ over a (t, u) box in the
    /// two-dimensional case. Pairs are all grid neighbors plus
    /// `random_pairs` seeded draws.
    pub fn holder_error_2d(
        &self,
        eps: f64,
        alpha: f64,
        region: &Region,
        grid_pts: usize,
        random_pairs: usize,
        seed: u64,
    ) -> Result<HolderReport> {
        if self.n() != 0 {
            return Err(Error::Dimension {
                expected: 0,
                got: self.n(),
            });
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Unsupported(format!(
                "Holder exponent {alpha} outside (0, 1)"
            )));
        }
        if region.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: region.dim(),
            });
        }

        let chart = self.chart(eps)?;
        let delta = |t: f64, u: f64| -> Result<(f64, f64)> {
            let p_eps = chart.phi(t, &[], u)?;
            let p_lim = self.limit_chart.phi(t, &[], u)?;
            Ok((p_eps.u - p_lim.u, p_eps.v - p_lim.v))
        };

        // sup over the grid (with breakpoint-refined u values)
        let (t_lo, t_hi) = region.bounds()[0];
        let (u_lo, u_hi) = region.bounds()[1];
        let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (grid_pts - 1) as f64;
        let mut grid: Vec<(f64, f64)> = Vec::new();
        for i in 0..grid_pts {
            for j in 0..grid_pts {
                grid.push((lin(t_lo, t_hi, i), lin(u_lo, u_hi, j)));
            }
        }
        let mut sup = 0.0f64;
        let mut values: Vec<(f64, f64)> = Vec::with_capacity(grid.len());
        for &(t, u) in &grid {
            let d = delta(t, u)?;
            sup = sup.max((d.0 * d.0 + d.1 * d.1).sqrt());
            values.push(d);
        }

        let mut seminorm = 0.0f64;
        let mut consider = |p: (f64, f64), dp: (f64, f64), q: (f64, f64), dq: (f64, f64)| {
            let dist = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
            if dist == 0.0 {
                return;
            }
            let dv = ((dp.0 - dq.0).powi(2) + (dp.1 - dq.1).powi(2)).sqrt();
            seminorm = seminorm.max(dv / dist.powf(alpha));
        };
        // neighbor pairs along both grid axes
        for i in 0..grid_pts {
            for j in 0..grid_pts {
                let idx = i * grid_pts + j;
                if j + 1 < grid_pts {
                    consider(grid[idx], values[idx], grid[idx + 1], values[idx + 1]);
                }
                if i + 1 < grid_pts {
                    let down = idx + grid_pts;
                    consider(grid[idx], values[idx], grid[down], values[down]);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random_pairs {
            let p = (rng.gen_range(t_lo..t_hi), rng.gen_range(u_lo..u_hi));
            let q = (rng.gen_range(t_lo..t_hi), rng.gen_range(u_lo..u_hi));
            let dp = delta(p.0, p.1)?;
            let dq = delta(q.0, q.1)?;
            consider(p, dp, q, dq);
        }

        Ok(HolderReport { sup, seminorm })
    }

    /// Build the non-smooth splitting for a Lipschitz limit profile and
    /// measure its empirical bi-Lipschitz constants on the (x…, u) box.
    pub fn lipschitz_splitting(
        &self,
        region: &Region,
        samples: usize,
        seed: u64,
    ) -> Result<LipschitzSplitting> {
        let limit = self.net.limit();
        let Some(modulus) = limit.x_lipschitz() else {
            return Err(Error::Unsupported(
                "limit profile carries no Lipschitz modulus c(s)".into(),
            ));
        };
        let n = self.n();
        if region.dim() != n + 1 {
            return Err(Error::Dimension {
                expected: n + 1,
                got: region.dim(),
            });
        }
        let lambda = self.lambda();
        let chart = &self.limit_chart;

        // cap max(C, 2λ) with C = max_s |∫₀ˢ c(τ) dτ| over the u-range
        let (u_lo, u_hi) = region.bounds()[n];
        let c_upper = quad::adaptive_split(
            |s| modulus(s),
            0.0,
            u_hi.max(0.0),
            limit.u_breakpoints(),
            1e-10,
        )?;
        let c_lower = quad::adaptive_split(
            |s| modulus(s),
            u_lo.min(0.0),
            0.0,
            limit.u_breakpoints(),
            1e-10,
        )?;
        let cap_c = c_upper.abs().max(c_lower.abs());
        let f0_bound = cap_c.max(2.0 * lambda);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f0_x = 0.0f64;
        let mut f0_u = 0.0f64;
        let mut f0_joint = 0.0f64;
        let mut k0_joint = 0.0f64;
        let mut phi0_joint = 0.0f64;
        let mut psi0_joint = 0.0f64;
        let mut round_trip = 0.0f64;

        let x_of = |q: &[f64]| q[..n].to_vec();
        for _ in 0..samples {
            let p1 = region.sample(&mut rng);
            let p2 = region.sample(&mut rng);
            let (x1, u1) = (x_of(&p1), p1[n]);
            let (x2, u2) = (x_of(&p2), p2[n]);
            let dx = if n == 0 {
                0.0
            } else {
                self.base.distance(&x1, &x2)?
            };

            let f11 = chart.f_at(&x1, u1)?;
            // same u, varying x
            if dx > 1e-9 {
                let f21 = chart.f_at(&x2, u1)?;
                f0_x = f0_x.max((f11 - f21).abs() / dx);
            }
            // same x, varying u
            if (u1 - u2).abs() > 1e-9 {
                let f12 = chart.f_at(&x1, u2)?;
                f0_u = f0_u.max((f11 - f12).abs() / (u1 - u2).abs());
            }
            let joint_dist = dx + (u1 - u2).abs();
            if joint_dist > 1e-9 {
                let f22 = chart.f_at(&x2, u2)?;
                f0_joint = f0_joint.max((f11 - f22).abs() / joint_dist);
            }

            // K₀, Φ₀, Ψ₀ over the box with t drawn from the u-range
            let t1 = rng.gen_range(u_lo..u_hi);
            let t2 = rng.gen_range(u_lo..u_hi);
            let chart_dist = (t1 - t2).abs() + joint_dist;
            if chart_dist > 1e-9 {
                let k1 = chart.k_at(&x1, t1, u1)?;
                let k2 = chart.k_at(&x2, t2, u2)?;
                k0_joint = k0_joint.max((k1 - k2).abs() / chart_dist);

                let q1 = chart.phi(t1, &x1, u1)?;
                let q2 = chart.phi(t2, &x2, u2)?;
                let range_dist = dx + (q1.u - q2.u).abs() + (q1.v - q2.v).abs();
                phi0_joint = phi0_joint.max(range_dist / chart_dist);

                let (s1, _, w1) = chart.psi(&q1)?;
                let (s2, _, w2) = chart.psi(&q2)?;
                let psi_dist = (s1 - s2).abs() + dx + (w1 - w2).abs();
                if range_dist > 1e-9 {
                    psi0_joint = psi0_joint.max(psi_dist / range_dist);
                }
            }

            // round trip Ψ₀ ∘ Φ₀ = id
            let q = chart.phi(t1, &x1, u1)?;
            let (tb, xb, ub) = chart.psi(&q)?;
            let defect = (tb - t1).abs()
                + if n == 0 {
                    0.0
                } else {
                    self.base.distance(xb.as_slice(), &x1)?
                }
                + (ub - u1).abs();
            round_trip = round_trip.max(defect);
        }

        Ok(LipschitzSplitting {
            limit_chart: chart.clone(),
            f0_x_constant: f0_x,
            f0_u_constant: f0_u,
            f0_joint_constant: f0_joint,
            f0_bound,
            k0_joint_constant: k0_joint,
            phi0_joint_constant: phi0_joint,
            psi0_joint_constant: psi0_joint,
            round_trip_residual: round_trip,
        })
    }
}
