//! High-precision evaluation of alternating binomial sums
//! `sum_k (-1)^k C(l, k) (a - k b)_+^power`.
//!
//! The terms can exceed the result by hundreds of orders of magnitude, so
//! they are accumulated in binary floating point with enough bits to cover
//! the largest term plus a fixed margin. Term sizes are first estimated in
//! `f64` log space; terms too small to matter at the working precision are
//! skipped.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;

pub(crate) type Big = FBig<HalfEven, 2>;

/// Extra bits carried below the largest term.
const MARGIN_BITS: usize = 192;

fn big(v: f64, prec: usize) -> Big {
    Big::try_from(v)
        .expect("finite")
        .with_precision(prec)
        .value()
}

/// Returns the sum and the working precision used. `(t)_+^0` is taken as
/// `1` for `t > 0` and `0` otherwise.
pub(crate) fn alternating_binomial_sum(l: u64, a: f64, b: f64, power: u64) -> (Big, usize) {
    debug_assert!(a.is_finite() && b > 0.0);
    // f64 log-magnitudes of the terms
    let mut logs: Vec<f64> = Vec::new();
    let mut ln_binom = 0.0f64;
    for k in 0..=l {
        let base = a - k as f64 * b;
        if base <= 0.0 {
            break;
        }
        logs.push(ln_binom + power as f64 * base.ln());
        ln_binom += ((l - k) as f64).ln() - ((k + 1) as f64).ln();
    }
    let max_log = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top_bits = if max_log.is_finite() {
        (max_log / std::f64::consts::LN_2).ceil().max(0.0) as usize
    } else {
        0
    };
    let prec = top_bits + MARGIN_BITS;
    let cutoff = max_log - (prec as f64 + 64.0) * std::f64::consts::LN_2;

    let a_big = big(a, prec + 128);
    let b_big = big(b, prec + 128);
    let zero = Big::ZERO.with_precision(prec).value();
    let mut sum = zero.clone();
    let mut binom = Big::ONE.with_precision(prec).value();
    // a few extra k past the f64 estimate, in case rounding hid a positive base
    for k in 0..=l.min(logs.len() as u64 + 1) {
        let base = &a_big - &b_big * Big::from(k);
        if base <= zero {
            break;
        }
        let significant = logs.get(k as usize).is_none_or(|&lg| lg >= cutoff);
        if significant {
            let term = if power == 0 {
                binom.clone()
            } else {
                base.with_precision(prec).value().powi(IBig::from(power)) * &binom
            };
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        binom = binom * Big::from(l - k) / Big::from(k + 1);
    }
    (sum, prec)
}

pub(crate) fn to_f64(v: &Big) -> f64 {
    v.to_f64().value()
}

/// `(m)!` at the given precision.
pub(crate) fn factorial(m: u64, prec: usize) -> Big {
    let mut f = Big::ONE.with_precision(prec).value();
    for i in 2..=m {
        f *= Big::from(i);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sums_match_direct_evaluation() {
        // l = 3, a = 1, b = 0.3, power = 2: 1 - 3*0.49 + 3*0.16 - 0.01
        let (s, _) = alternating_binomial_sum(3, 1.0, 0.3, 2);
        assert!((to_f64(&s) - (1.0 - 1.47 + 0.48 - 0.01)).abs() < 1e-15);
    }

    #[test]
    fn zero_power_counts_positive_bases() {
        let (s, _) = alternating_binomial_sum(1, 0.5, 1.0, 0);
        assert_eq!(to_f64(&s), 1.0);
        let (s, _) = alternating_binomial_sum(1, 1.0, 1.0, 0);
        assert_eq!(to_f64(&s), 1.0);
    }

    #[test]
    fn massive_cancellation() {
        // sum_k (-1)^k C(l, k) (1 - k/l')^(l-1) for large l stays in [0, 1]
        let l = 2000u64;
        let x = ((l as f64 / (l as f64).ln()).ln() - 1.0) / l as f64;
        let (s, prec) = alternating_binomial_sum(l, 1.0, x, l - 1);
        let v = to_f64(&s);
        assert!(prec > 200);
        assert!((0.0..1e-3).contains(&v), "{v}");
    }

    #[test]
    fn factorials() {
        assert_eq!(to_f64(&factorial(0, 64)), 1.0);
        assert_eq!(to_f64(&factorial(10, 64)), 3628800.0);
    }
}
