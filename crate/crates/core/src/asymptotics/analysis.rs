use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::scalar::Scalar;

/// Least-squares fit of `ln |v - b|` against `ln r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the fit residuals in `ln |v - b|`.
    pub residual: f64,
    /// `-(β - 2)/(β - 1) + 0.05`.
    pub threshold: f64,
    pub pass: bool,
    pub window: [f64; 2],
    pub samples: usize,
}

/// Slack added to the decay exponent bound.
pub const DECAY_SLACK: f64 = 0.05;

/// `-(β - 2)/(β - 1)`, the decay exponent the remainder must beat.
pub fn decay_bound(beta: f64) -> f64 {
    -(beta - 2.0) / (beta - 1.0)
}

/// Ordinary least squares `y ≈ a + s x`; returns `(s, a, rms)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let s = sxy / sxx;
    let a = my - s * mx;
    let rms = (x.iter().zip(y).map(|(&p, &q)| (q - a - s * p).powi(2)).sum::<f64>() / n).sqrt();
    (s, a, rms)
}

/// Fits the decay of `|v - b|` over nodes with radius in `window`.
///
/// Fails when the window holds fewer than three nodes or when `|v - b|`
/// drops below `noise_floor` there (typically ten times the solver tolerance).
pub fn fit_decay<T: Scalar>(
    radii: &[T],
    v: &[T],
    b: T,
    beta: f64,
    window: [f64; 2],
    noise_floor: f64,
) -> Result<DecayFit, AnalysisError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&r, &val) in radii.iter().zip(v) {
        let r = r.as_f64();
        if r < window[0] || r > window[1] {
            continue;
        }
        let d = (val - b).abs().as_f64();
        if !(d > noise_floor) {
            return Err(AnalysisError::BelowNoiseFloor { floor: noise_floor });
        }
        xs.push(r.ln());
        ys.push(d.ln());
    }
    if xs.len() < 3 {
        return Err(AnalysisError::Precondition(format!(
            "decay window [{}, {}] holds {} nodes, need 3",
            window[0],
            window[1],
            xs.len()
        )));
    }
    let (slope, intercept, residual) = linear_fit(&xs, &ys);
    let threshold = decay_bound(beta) + DECAY_SLACK;
    Ok(DecayFit { slope, intercept, residual, threshold, pass: slope <= threshold, window, samples: xs.len() })
}

/// Far-field constant from an annulus average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub value: f64,
    /// Largest deviation from the mean on the annulus plus the tail correction.
    pub uncertainty: f64,
    /// Constant of the fit `v ≈ b + c r^{-(β-2)}` on the annulus.
    pub extrapolated: f64,
}

/// Averages `v` over `r_in <= |x| <= r_out` with the quadrature `weights`.
///
/// Requires `r_out <= R/2` and `r_in >= 4 r0`, so the annulus sits in the
/// region where the singular data have their far-field form.
#[allow(clippy::too_many_arguments)]
pub fn extract_bbeta<T: Scalar>(
    radii: &[T],
    weights: &[T],
    v: &[T],
    annulus: [f64; 2],
    r_max: f64,
    r0: f64,
    beta: f64,
) -> Result<FarField, AnalysisError> {
    let [r_in, r_out] = annulus;
    if !(r_in < r_out) || r_out > 0.5 * r_max || r_in < 4.0 * r0 {
        return Err(AnalysisError::AnnulusOutsideGrid { r_in, r_out, r_max });
    }
    let picked: Vec<(f64, f64, f64)> = radii
        .iter()
        .zip(weights)
        .zip(v)
        .map(|((&r, &w), &x)| (r.as_f64(), w.as_f64(), x.as_f64()))
        .filter(|&(r, _, _)| r >= r_in && r <= r_out)
        .collect();
    if picked.is_empty() {
        return Err(AnalysisError::AnnulusOutsideGrid { r_in, r_out, r_max });
    }
    let total: f64 = picked.iter().map(|p| p.1).sum();
    let value = picked.iter().map(|p| p.1 * p.2).sum::<f64>() / total;
    let spread = picked.iter().map(|p| (p.2 - value).abs()).fold(0.0, f64::max);
    let extrapolated = if picked.len() >= 2 {
        let kappa = beta - 2.0;
        let xs: Vec<f64> = picked.iter().map(|p| p.0.powf(-kappa)).collect();
        let ys: Vec<f64> = picked.iter().map(|p| p.2).collect();
        let distinct = xs.iter().any(|&x| (x - xs[0]).abs() > 1e-15 * xs[0]);
        if distinct {
            linear_fit(&xs, &ys).1
        } else {
            value
        }
    } else {
        value
    };
    Ok(FarField { value, uncertainty: spread + (value - extrapolated).abs(), extrapolated })
}
