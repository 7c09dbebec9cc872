//! Instance-level statistics: coupler density, coupler moments and
//! histograms, frustration misfit, and coefficient normalization.

use serde::{Deserialize, Serialize};

use crate::poly::Polynomial;
use crate::{Error, Result};

/// Fraction of realized couplings per degree, averaged over degrees 2..=k.
///
/// For each degree d with E_d stored terms out of C(N, d) possible, the
/// density contribution is E_d / C(N, d); the total is the mean over the
/// k - 1 degrees from 2 to k. Linear terms and the constant are excluded.
pub fn density(poly: &Polynomial) -> Result<f64> {
    let k = poly.degree();
    if k < 2 {
        return Err(Error::invalid(format!("density needs degree >= 2, got {k}")));
    }
    let n = poly.num_vars();
    let counts = poly.term_counts_by_degree();
    let mut acc = 0.0;
    for (d, &count) in counts.iter().enumerate().take(k + 1).skip(2) {
        acc += count as f64 / binomial(n, d);
    }
    Ok(acc / (k - 1) as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 1..=k {
        acc *= (n - k + i) as f64 / i as f64;
    }
    acc
}

/// Histogram with explicit bin edges (len = counts.len() + 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Moments of the non-constant coefficients of a polynomial.
///
/// `kurtosis` is the moment ratio m4 / m2^2 (not excess, not
/// bias-corrected); it is `None` when the coefficients have zero variance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplerStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub kurtosis: Option<f64>,
    pub histogram: Histogram,
}

pub fn coupler_stats(poly: &Polynomial) -> Result<CouplerStats> {
    let values: Vec<f64> = poly.terms().map(|(_, c)| c).collect();
    if values.is_empty() {
        return Err(Error::invalid("coupler statistics need at least one non-constant term"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let kurtosis = if m2 > 0.0 { Some(m4 / (m2 * m2)) } else { None };
    Ok(CouplerStats {
        count: values.len(),
        mean,
        std: m2.sqrt(),
        kurtosis,
        histogram: freedman_diaconis(&values),
    })
}

/// Freedman-Diaconis binning: width 2*IQR*n^(-1/3). Degenerate spreads
/// collapse to a single bin. Deterministic in the data alone.
pub fn freedman_diaconis(values: &[f64]) -> Histogram {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = sorted[0];
    let hi = *sorted.last().unwrap();
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
    if width <= 0.0 || hi <= lo {
        return Histogram { edges: vec![lo, hi.max(lo)], counts: vec![sorted.len() as u64] };
    }
    let nbins = (((hi - lo) / width).ceil() as usize).clamp(1, 100_000);
    let width = (hi - lo) / nbins as f64;
    let edges: Vec<f64> = (0..=nbins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; nbins];
    for &v in &sorted {
        let idx = (((v - lo) / width) as usize).min(nbins - 1);
        counts[idx] += 1;
    }
    Histogram { edges, counts }
}

/// Linear-interpolation quantile of pre-sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}

/// Frustration misfit of an energy e0 against the ideal coupling range.
///
/// mu0 = (e0 - E_min_ideal) / (E_max_ideal - E_min_ideal) where the ideal
/// extremes assume every term reaches its best (worst) value at once:
/// E_min_ideal = constant - sum|c_i|, E_max_ideal = constant + sum|c_i|.
/// Zero means unfrustrated.
pub fn misfit(poly: &Polynomial, e0: f64) -> Result<f64> {
    let sum_abs = poly.sum_abs_coeff();
    if sum_abs == 0.0 {
        return Err(Error::invalid("misfit undefined: no non-constant terms"));
    }
    let e_min = poly.constant() - sum_abs;
    let e_max = poly.constant() + sum_abs;
    let slack = 1e-9 * (e_max - e_min);
    if e0 < e_min - slack || e0 > e_max + slack {
        return Err(Error::invalid(format!(
            "energy {e0} outside ideal range [{e_min}, {e_max}]"
        )));
    }
    Ok((e0 - e_min) / (e_max - e_min))
}

/// Divide all coefficients (constant included) by max |c_i| over
/// non-constant terms. Returns the scaled polynomial and the divisor.
pub fn normalize(poly: &Polynomial) -> Result<(Polynomial, f64)> {
    let scale = poly.max_abs_coeff();
    if scale == 0.0 {
        return Err(Error::invalid("cannot normalize a constant polynomial"));
    }
    let mut out = poly.clone();
    out.scale(1.0 / scale);
    Ok((out, scale))
}
