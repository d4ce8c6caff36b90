//! Ordinary least-squares fits on log-log data.

use serde::{Deserialize, Serialize};

/// Values at or below this are treated as numerically zero and left out of fits.
pub const FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for exactly two points.
    pub stderr: f64,
    pub points: usize,
}

/// Least-squares line through `(x, y)`; `None` with fewer than two points or
/// degenerate abscissae.
pub fn fit_line(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit {
        slope,
        intercept,
        stderr,
        points: n,
    })
}

/// Fits `log value` against `log scale`, skipping values at or below [`FLOOR`].
pub fn fit_loglog(data: &[(f64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = data
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > FLOOR && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    fit_line(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let data: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 3.0 * (i as f64).powf(-1.5))).collect();
        let fit = fit_loglog(&data).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        assert_eq!(fit.points, 9);
    }

    #[test]
    fn floor_values_are_dropped() {
        let data = [(1.0, 1.0), (2.0, 0.5), (3.0, 1e-20), (4.0, 0.25)];
        assert_eq!(fit_loglog(&data).unwrap().points, 3);
        assert!(fit_loglog(&[(1.0, 0.0), (2.0, 1.0)]).is_none());
    }

    #[test]
    fn noisy_line_has_positive_stderr() {
        let pts = [(0.0, 0.0), (1.0, 1.1), (2.0, 1.9), (3.0, 3.05)];
        let fit = fit_line(&pts).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05);
        assert!(fit.stderr > 0.0);
    }
}
