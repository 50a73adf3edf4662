#![allow(dead_code)]

use constrained_matching::analytic::rank_integrand;

/// Tensor midpoint rule on `[0,1]^4` with `m` points per axis.
pub fn midpoint_4d(f: &dyn Fn(&[f64; 4]) -> f64, m: usize) -> f64 {
    let h = 1.0 / m as f64;
    let mid = |i: usize| (i as f64 + 0.5) * h;
    let mut total = 0.0;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    total += f(&[mid(a), mid(b), mid(c), mid(d)]);
                }
            }
        }
    }
    total * h.powi(4)
}

/// Midpoint rule with Richardson extrapolation over successive halvings of
/// the step, stopping once two extrapolated values differ by less than `tol`
/// relative. Returns the value and the last difference.
pub fn quadrature_4d(f: &dyn Fn(&[f64; 4]) -> f64, tol: f64) -> (f64, f64) {
    let mut m = 2;
    let mut coarse = midpoint_4d(f, m);
    let mut prev: Option<f64> = None;
    loop {
        m *= 2;
        let fine = midpoint_4d(f, m);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        if let Some(p) = prev {
            let diff = (extrapolated - p).abs();
            if diff <= tol * extrapolated.abs() || m >= 128 {
                return (extrapolated, diff);
            }
        }
        prev = Some(extrapolated);
        coarse = fine;
    }
}

/// Integrand of the partial rank-refined probability for `l = 2`, evaluated
/// through the library's coefficient expansion.
pub fn partial_integrand_l2(n: usize, p: f64, k: usize) -> impl Fn(&[f64; 4]) -> f64 {
    move |v: &[f64; 4]| {
        let (x, y) = ([v[0], v[1]], [v[2], v[3]]);
        let poly = rank_integrand(&x, &y, p).unwrap();
        let outside: f64 = x.iter().chain(&y).map(|t| 1.0 - p * t).product();
        let extra = (n - 2) as i32;
        p * p * (1.0 - p).powi(extra * extra) * poly.coefficient(k - 2) * outside.powi(extra)
    }
}

/// Binomial standard error of an observed frequency.
pub fn binomial_se(f: f64, trials: u64) -> f64 {
    (f * (1.0 - f) / trials as f64).sqrt()
}

/// Total variation distance between two count vectors.
pub fn tvd(a: &[u64], b: &[u64]) -> f64 {
    let (ta, tb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    0.5 * (0..len)
        .map(|i| (get(a, i) / ta - get(b, i) / tb).abs())
        .sum::<f64>()
}

/// Largest gap between the empirical CDF of `sample` and `cdf`.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Half-width of the DKW band at confidence `1 - alpha`.
pub fn dkw_epsilon(samples: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * samples as f64)).sqrt()
}
