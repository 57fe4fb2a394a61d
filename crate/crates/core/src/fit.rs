//! Straight-line least squares shared by the envelope, correlation and
//! scaling fits.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root-mean-square of the (unweighted) residuals.
    pub residual_rms: f64,
    pub points: usize,
}

/// Fits `y = intercept + slope * x`, optionally with per-point weights.
pub fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    if x.len() != y.len() || weights.is_some_and(|w| w.len() != x.len()) {
        return Err(Error::InsufficientData("mismatched fit inputs".into()));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "a line needs at least 2 points, got {}",
            x.len()
        )));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..x.len()).map(w).sum();
    if !(sw > 0.0) {
        return Err(Error::DegenerateFit("weights sum to zero".into()));
    }
    let mx = (0..x.len()).map(|i| w(i) * x[i]).sum::<f64>() / sw;
    let my = (0..x.len()).map(|i| w(i) * y[i]).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += w(i) * dx * dx;
        sxy += w(i) * dx * dy;
        syy += w(i) * dy * dy;
    }
    let spread = x.iter().fold(0.0f64, |m, &v| m.max((v - mx).abs()));
    if !(sxx > 0.0) || spread <= 1e-12 * mx.abs() {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res_w = 0.0;
    let mut ss_res = 0.0;
    for i in 0..x.len() {
        let r = y[i] - intercept - slope * x[i];
        ss_res_w += w(i) * r * r;
        ss_res += r * r;
    }
    let r_squared = if syy > 0.0 { 1.0 - ss_res_w / syy } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        residual_rms: (ss_res / x.len() as f64).sqrt(),
        points: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y, None).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-15);
        assert!((f.intercept - 2.0).abs() < 1e-15);
        assert!((f.r_squared - 1.0).abs() < 1e-15);
        assert!(f.residual_rms < 1e-15);
    }

    #[test]
    fn hand_computed_noisy_line() {
        // Points (0,0), (1,1), (2,1): slope 1/2, intercept 1/6, R^2 = 3/4.
        let f = fit_line(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0], None).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-15);
        assert!((f.intercept - 1.0 / 6.0).abs() < 1e-15);
        assert!((f.r_squared - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_drops_point() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 100.0];
        let f = fit_line(&x, &y, Some(&[1.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_line(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0], None),
            Err(Error::DegenerateFit(_))
        ));
        assert!(fit_line(&[1.0], &[1.0], None).is_err());
        assert!(fit_line(&[1.0, 2.0], &[1.0], None).is_err());
    }
}
