//! Small numerically careful scalar helpers.

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Negative log-likelihood of `ones` choices of option 1 and `twos` of option 2
/// when option 1 has logit `logit`.
pub fn binomial_nll(logit: f64, ones: f64, twos: f64) -> f64 {
    let mut nll = 0.0;
    if ones > 0.0 {
        nll += ones * softplus(-logit);
    }
    if twos > 0.0 {
        nll += twos * softplus(logit);
    }
    nll
}

/// Same as [`binomial_nll`] but from a probability, clamped away from 0 and 1.
pub fn binomial_nll_from_probability(p: f64, ones: f64, twos: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    let mut nll = 0.0;
    if ones > 0.0 {
        nll -= ones * p.ln();
    }
    if twos > 0.0 {
        nll -= twos * (1.0 - p).ln();
    }
    nll
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}
