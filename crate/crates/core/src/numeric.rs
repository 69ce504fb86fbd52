//! Log-domain arithmetic.

/// `ln(e^a + e^b)` without overflow; `-inf` is the additive identity.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}` by pairwise reduction, so the summation order is fixed by
/// the slice order alone.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NEG_INFINITY,
        1 => xs[0],
        n => {
            let (left, right) = xs.split_at(n / 2);
            log_add_exp(log_sum_exp(left), log_sum_exp(right))
        }
    }
}

/// `(e^a - e^b) / (e^a + e^b)` for log-weights of the two spin values.
pub fn spin_mean(log_plus: f64, log_minus: f64) -> f64 {
    match (log_plus == f64::NEG_INFINITY, log_minus == f64::NEG_INFINITY) {
        (true, true) => f64::NAN,
        (false, true) => 1.0,
        (true, false) => -1.0,
        (false, false) => ((log_plus - log_minus) / 2.0).tanh(),
    }
}

/// `|a - b| <= tol * max(|a|, |b|)`, with exact equality always accepted.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}
