//! Small numeric helpers used throughout: log-sum-exp, masked softmax,
//! log-factorial. All weight bookkeeping in this crate lives in the log
//! domain, so these are the only places exp/ln appear in anger.

/// log(sum_i exp(x_i)) with the usual max shift. Empty input gives -inf.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// log(exp(a) + exp(b)) without building a slice.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log(sum over alive of exp(x_i)); dead entries are skipped entirely.
pub fn log_sum_exp_masked(xs: &[f64], alive: &[bool]) -> f64 {
    debug_assert_eq!(xs.len(), alive.len());
    let m = xs
        .iter()
        .zip(alive)
        .filter(|(_, &a)| a)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs
        .iter()
        .zip(alive)
        .filter(|(_, &a)| a)
        .map(|(&x, _)| (x - m).exp())
        .sum();
    m + s.ln()
}

/// Normalized exponential of `log_w` restricted to alive entries; dead
/// entries come out exactly 0.0. Panics if nothing is alive.
pub fn softmax_masked(log_w: &[f64], alive: &[bool]) -> Vec<f64> {
    debug_assert_eq!(log_w.len(), alive.len());
    let m = log_w
        .iter()
        .zip(alive)
        .filter(|(_, &a)| a)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(m > f64::NEG_INFINITY, "softmax over an empty alive set");
    let mut out = vec![0.0; log_w.len()];
    let mut sum = 0.0;
    for i in 0..log_w.len() {
        if alive[i] {
            let e = (log_w[i] - m).exp();
            out[i] = e;
            sum += e;
        }
    }
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// ln(n!) as a sum of logs. Exact enough for weight initialization and
/// comparator counts (n here is at most a few thousand).
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Inner product; lengths must agree.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.0, (2.0f64).ln(), (3.0f64).ln()];
        assert!((log_sum_exp(&xs) - 6.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_large_shift() {
        // naive exp would overflow; shifted version must not
        let xs = [1000.0, 1000.0];
        let got = log_sum_exp(&xs);
        assert!((got - (1000.0 + 2.0f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn log_sum_exp_empty_is_neg_inf() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn log_add_exp_agrees_with_slice_version() {
        let a = -3.2;
        let b = 1.7;
        assert!((log_add_exp(a, b) - log_sum_exp(&[a, b])).abs() < 1e-14);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, b), b);
    }

    #[test]
    fn softmax_masked_zeroes_dead() {
        let log_w = [0.0, 0.0, 5.0];
        let alive = [true, true, false];
        let p = softmax_masked(&log_w, &alive);
        assert_eq!(p[2], 0.0);
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120.0f64.ln()).abs() < 1e-12);
        // ln(19!) cross-checked against lgamma(20)
        assert!((ln_factorial(19) - 39.339884187199495).abs() < 1e-9);
    }
}
