//! Finite-difference stencils, Richardson order estimates and log-log fits.

/// Smallest spatial step used by automatic halving.
pub const STEP_FLOOR: f64 = 1e-5;
/// Default relative spatial step.
pub const DEFAULT_REL_STEP: f64 = 1e-3;

/// `(f(h) - f(-h)) / 2h`, componentwise.
pub fn central(plus: &[f64], minus: &[f64], h: f64) -> Vec<f64> {
    plus.iter().zip(minus).map(|(p, m)| (p - m) / (2.0 * h)).collect()
}

/// Fourth-order first derivative from samples at `-2h, -h, h, 2h`.
pub fn five_point_first(f: [&[f64]; 4], h: f64) -> Vec<f64> {
    let [m2, m1, p1, p2] = f;
    (0..m2.len())
        .map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h))
        .collect()
}

/// Fourth-order second derivative from samples at `-2h, -h, 0, h, 2h`.
pub fn five_point_second(f: [&[f64]; 5], h: f64) -> Vec<f64> {
    let [m2, m1, z, p1, p2] = f;
    (0..m2.len())
        .map(|i| (-m2[i] + 16.0 * m1[i] - 30.0 * z[i] + 16.0 * p1[i] - p2[i]) / (12.0 * h * h))
        .collect()
}

/// Observed order from errors at steps `h` and `h/2`. Returns `None` when
/// either error is zero or not finite.
pub fn observed_order(err_h: f64, err_half: f64) -> Option<f64> {
    if err_h > 0.0 && err_half > 0.0 && err_h.is_finite() && err_half.is_finite() {
        Some((err_h / err_half).log2())
    } else {
        None
    }
}

/// Observed order from three successive estimates at `h, h/2, h/4` without a
/// reference value.
pub fn richardson_order(d_h: f64, d_half: f64, d_quarter: f64) -> Option<f64> {
    observed_order((d_h - d_half).abs(), (d_half - d_quarter).abs())
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> LogLogFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    LogLogFit {
        slope,
        intercept,
        residual,
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_on_polynomials() {
        let f = |x: f64| vec![x.powi(4) - 2.0 * x.powi(3) + x];
        let (x, h) = (0.7, 0.1);
        let d1 = five_point_first([&f(x - 2.0 * h), &f(x - h), &f(x + h), &f(x + 2.0 * h)], h);
        assert!((d1[0] - (4.0 * x.powi(3) - 6.0 * x * x + 1.0)).abs() < 1e-12);
        let d2 = five_point_second([&f(x - 2.0 * h), &f(x - h), &f(x), &f(x + h), &f(x + 2.0 * h)], h);
        assert!((d2[0] - (12.0 * x * x - 12.0 * x)).abs() < 1e-10);
    }

    #[test]
    fn central_difference_is_second_order() {
        let est = |h: f64| central(&[(1.0 + h).exp()], &[(1.0 - h).exp()], h)[0];
        let e = 1f64.exp();
        let order = observed_order((est(1e-2) - e).abs(), (est(5e-3) - e).abs()).unwrap();
        assert!((order - 2.0).abs() < 0.01);
        let rich = richardson_order(est(1e-2), est(5e-3), est(2.5e-3)).unwrap();
        assert!((rich - 2.0).abs() < 0.01);
    }

    #[test]
    fn fit_recovers_power_law() {
        let x = log_spaced(10.0, 100.0, 8);
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r.powf(-2.5)).collect();
        let fit = loglog_fit(&x, &y);
        assert!((fit.slope + 2.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }
}
