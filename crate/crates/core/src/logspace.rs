//! Log-space reductions.
//!
//! `logsumexp(x) = m + ln(sum_i exp(x_i - m))` with `m = max_i x_i`, summed
//! sequentially in input order. An all-`-inf` input yields `-inf`.

pub fn log_sum_exp(values: &[f64]) -> f64 {
    log_sum_exp_iter(values.iter().copied())
}

pub fn log_sum_exp_iter<I>(values: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Normalized probabilities from log weights. Returns the log normalizer.
pub fn softmax_into(log_weights: &[f64], out: &mut Vec<f64>) -> f64 {
    let norm = log_sum_exp(log_weights);
    out.clear();
    out.extend(log_weights.iter().map(|&w| (w - norm).exp()));
    norm
}

/// Shannon entropy in nats, skipping zero entries.
pub fn entropy_nats(probs: &[f64]) -> f64 {
    let h: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    h.max(0.0)
}
