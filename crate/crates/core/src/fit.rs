//! Least-squares decay fits.

use crate::error::{GiemError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Abscissa {
    N,
    SqrtN,
}

/// Fit of `ln y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual in log space.
    pub residual: f64,
    pub points: usize,
}

/// Fits `ln y_n` against `n` or `√n`. Nonpositive values are skipped.
pub fn fit_decay(series: &[(usize, f64)], abscissa: Abscissa) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, y)| *y > 0.0 && y.is_finite())
        .map(|&(n, y)| {
            let x = match abscissa {
                Abscissa::N => n as f64,
                Abscissa::SqrtN => (n as f64).sqrt(),
            };
            (x, y.ln())
        })
        .collect();
    if pts.len() < 4 {
        return Err(GiemError::TooFewPoints(pts.len()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(GiemError::Degenerate("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual =
        (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(DecayFit { slope, intercept, residual, points: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential() {
        let s: Vec<(usize, f64)> = (1..12).map(|n| (n, 3.0 * (-0.7 * n as f64).exp())).collect();
        let f = fit_decay(&s, Abscissa::N).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn sqrt_abscissa_and_skips() {
        let mut s: Vec<(usize, f64)> =
            (1..10).map(|n| (n, (-2.0 * (n as f64).sqrt()).exp())).collect();
        s.push((20, 0.0));
        s.push((21, -1.0));
        let f = fit_decay(&s, Abscissa::SqrtN).unwrap();
        assert_eq!(f.points, 9);
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!(matches!(fit_decay(&s[..3], Abscissa::N), Err(GiemError::TooFewPoints(3))));
    }
}
