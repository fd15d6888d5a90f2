//! Shared numerical machinery: quadrature, root bracketing, ODE stepping,
//! and small statistics helpers.

pub mod ode;
pub mod quad;
pub mod roots;

/// Ordinary least-squares slope of y against x. Returns (slope, intercept,
/// residual standard error of the slope).
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let dof = (x.len().max(3) - 2) as f64;
    let se = (ss_res / dof / sxx).sqrt();
    (slope, intercept, se)
}
