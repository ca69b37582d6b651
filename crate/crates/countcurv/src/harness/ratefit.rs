//! Rate fits: log-log slopes of error vs mesh scale and the two-parameter
//! envelope `C1 a/r + C2 r`.

use serde::{Deserialize, Serialize};

/// Per-mesh-level error statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelStat {
    pub h: f64,
    pub cells: usize,
    /// Radius chosen by the policy at this level.
    pub r_policy: u32,
    /// Median over centers of |estimate - oracle| at the policy radius
    /// (window-averaged estimates).
    pub median_err: f64,
    pub max_err: f64,
    /// Swept radius with the smallest median error.
    pub argmin_r: u32,
    pub median_err_at_argmin: f64,
}

/// Fit summary of one convergence experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    pub levels: Vec<LevelStat>,
    /// Log-log slope of median error vs h.
    pub slope: f64,
    pub intercept: f64,
    /// Per-level residuals of the log-log fit.
    pub residuals: Vec<f64>,
    /// Envelope constants of `C1 a/r + C2 r`, fitted on the coarsest level.
    pub c1: f64,
    pub c2: f64,
    /// Fraction of finer-level records below the 1.5x-inflated envelope.
    pub envelope_coverage: f64,
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn fit_loglog_slope(hs: &[f64], errs: &[f64]) -> (f64, f64, Vec<f64>) {
    assert_eq!(hs.len(), errs.len());
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.max(1e-300).ln()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (slope * x + intercept))
        .collect();
    (slope, intercept, residuals)
}

/// Nonnegative least squares for `err ~ C1 * (a/r) + C2 * r` over records
/// `(a_over_r, r, err)`. Two-variable active-set: solve the normal
/// equations, clamp a negative coefficient to zero and refit the other.
pub fn fit_envelope(records: &[(f64, f64, f64)]) -> (f64, f64) {
    let mut s11 = 0.0;
    let mut s12 = 0.0;
    let mut s22 = 0.0;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &(x1, x2, y) in records {
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    let (mut c1, mut c2) = if det.abs() > 1e-300 {
        ((s22 * b1 - s12 * b2) / det, (s11 * b2 - s12 * b1) / det)
    } else {
        (0.0, if s22 > 0.0 { b2 / s22 } else { 0.0 })
    };
    if c1 < 0.0 {
        c1 = 0.0;
        c2 = if s22 > 0.0 { (b2 / s22).max(0.0) } else { 0.0 };
    } else if c2 < 0.0 {
        c2 = 0.0;
        c1 = if s11 > 0.0 { (b1 / s11).max(0.0) } else { 0.0 };
    }
    (c1, c2)
}

/// Fraction of records with `err <= inflation * (C1 a/r + C2 r)`.
pub fn envelope_coverage(records: &[(f64, f64, f64)], c1: f64, c2: f64, inflation: f64) -> f64 {
    if records.is_empty() {
        return 1.0;
    }
    let hits = records
        .iter()
        .filter(|&&(x1, x2, y)| y <= inflation * (c1 * x1 + c2 * x2))
        .count();
    hits as f64 / records.len() as f64
}

/// Median of a slice (moves a copy; NaNs sort last).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn slope_of_exact_power_law() {
        let hs = [0.04f64, 0.02, 0.01, 0.005];
        let errs: Vec<f64> = hs.iter().map(|h| 3.0 * h.sqrt()).collect();
        let (slope, intercept, residuals) = fit_loglog_slope(&hs, &errs);
        assert_relative_eq!(slope, 0.5, epsilon = 1e-12);
        assert_relative_eq!(intercept, 3.0f64.ln(), epsilon = 1e-12);
        assert!(residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn envelope_recovers_generating_constants() {
        let mut records = Vec::new();
        for r in [2.0f64, 4.0, 8.0, 16.0] {
            for a in [0.04f64, 0.02] {
                let x1 = a / r;
                let x2 = r * a; // physical radius
                records.push((x1, x2, 1.5 * x1 + 0.3 * x2));
            }
        }
        let (c1, c2) = fit_envelope(&records);
        assert_relative_eq!(c1, 1.5, epsilon = 1e-9);
        assert_relative_eq!(c2, 0.3, epsilon = 1e-9);
        assert_eq!(envelope_coverage(&records, c1, c2, 1.0 + 1e-9), 1.0);
    }

    #[test]
    fn envelope_clamps_negative_coefficients() {
        // Data explained by the r term alone, with noise pushing C1 < 0.
        let records = vec![
            (0.1, 1.0, 0.28),
            (0.05, 2.0, 0.61),
            (0.025, 4.0, 1.22),
            (0.0125, 8.0, 2.4),
        ];
        let (c1, c2) = fit_envelope(&records);
        assert!(c1 >= 0.0 && c2 > 0.0);
    }

    #[test]
    fn median_behaviour() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
