//! Uniform spacings of `[0, 1]` and the distributions built from them.
//!
//! `l - 1` independent uniform points cut `[0, 1]` into `l` intervals with
//! lengths `L_1..L_l`. Sampling uses normalized unit exponentials.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::precise::{alternating_binomial_sum, factorial, to_f64};
use crate::rng::StreamSpec;
use crate::stats::{chunked_reduce, neumaier_sum, MCEstimate, Merge, Moments};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingsSample {
    pub lengths: Vec<f64>,
    /// Largest spacing, `L+`.
    pub max: f64,
    /// `U = sum_j L_j^2`.
    pub sum_squares: f64,
}

fn check_len(ell: usize) -> Result<()> {
    if ell == 0 {
        return Err(Error::InvalidParameter("l must be at least 1".into()));
    }
    Ok(())
}

/// Fills `buf` with `ell` spacings and returns `(max, sum of squares)`.
fn fill<R: Rng + ?Sized>(ell: usize, rng: &mut R, buf: &mut Vec<f64>) -> (f64, f64) {
    buf.clear();
    buf.extend((0..ell).map(|_| rng.sample::<f64, _>(Exp1)));
    let total = neumaier_sum(buf.iter().copied());
    let mut max = 0.0f64;
    for v in buf.iter_mut() {
        *v /= total;
        max = max.max(*v);
    }
    (max, neumaier_sum(buf.iter().map(|v| v * v)))
}

pub fn sample_spacings<R: Rng + ?Sized>(ell: usize, rng: &mut R) -> Result<SpacingsSample> {
    check_len(ell)?;
    let mut lengths = Vec::with_capacity(ell);
    let (max, sum_squares) = fill(ell, rng, &mut lengths);
    Ok(SpacingsSample {
        lengths,
        max,
        sum_squares,
    })
}

/// `P(L+ <= x)` by inclusion-exclusion,
/// `sum_k (-1)^k C(l, k) (1 - k x)_+^(l-1)`.
pub fn max_spacing_cdf(ell: usize, x: f64) -> Result<f64> {
    check_len(ell)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "x = {x} must lie in [0, 1]"
        )));
    }
    Ok(cdf_unchecked(ell, x))
}

fn cdf_unchecked(ell: usize, x: f64) -> f64 {
    if x >= 1.0 {
        return 1.0;
    }
    if x * ell as f64 <= 1.0 {
        return 0.0;
    }
    // The spacings are negatively associated, so the CDF is at most
    // P(L_1 <= x)^l. Skip the expensive sum once that underflows.
    let ln_bound = ell as f64 * (-(1.0 - x).powi(ell as i32 - 1)).ln_1p();
    if ln_bound < -746.0 {
        return 0.0;
    }
    let (sum, _) = alternating_binomial_sum(ell as u64, 1.0, x, ell as u64 - 1);
    to_f64(&sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityMode {
    /// Irwin-Hall inclusion-exclusion.
    Exact,
    /// `s^(l-1)/(l-1)! * P(L+ <= 1/s)` with the probability estimated from
    /// sampled spacings. For `s > l - 1` the event is rare; sampling is then
    /// restricted to the sub-simplex that contains it.
    MaxSpacing { samples: u64, spec: StreamSpec },
}

/// Density at `s` of the sum of `l` independent uniforms.
pub fn sum_uniform_density(ell: usize, s: f64, mode: DensityMode) -> Result<MCEstimate> {
    check_len(ell)?;
    if !(0.0..=ell as f64).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "s = {s} must lie in [0, {ell}]"
        )));
    }
    match mode {
        DensityMode::Exact => {
            let (sum, prec) = alternating_binomial_sum(ell as u64, s, 1.0, ell as u64 - 1);
            let value = to_f64(&(sum / factorial(ell as u64 - 1, prec)));
            Ok(MCEstimate::exact(value.max(0.0), 1))
        }
        DensityMode::MaxSpacing { samples, spec } => {
            if samples < 2 {
                return Err(Error::InvalidParameter("need at least 2 samples".into()));
            }
            let envelope = density_envelope(ell, s);
            let x = if s == 0.0 { f64::INFINITY } else { 1.0 / s };
            // {L+ <= x} forces every L_j >= t = 1 - (l-1)x. Conditioned on
            // that, the spacings are t + (1 - l t) times fresh spacings, and
            // the conditioning event has probability (1 - l t)^(l-1).
            let t = (1.0 - (ell as f64 - 1.0) * x).max(0.0);
            if ell == 1 {
                return Ok(MCEstimate::exact(if x >= 1.0 { 1.0 } else { 0.0 }, samples));
            }
            let room = 1.0 - ell as f64 * t;
            if room <= 0.0 {
                return Ok(MCEstimate::exact(0.0, samples));
            }
            let cut = (x - t) / room;
            let hits = chunked_reduce(samples, |chunk, range| {
                let mut rng = spec.child(chunk).stream();
                let mut buf = Vec::with_capacity(ell);
                range
                    .map(|_| {
                        let (max, _) = fill(ell, &mut rng, &mut buf);
                        if max <= cut {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect::<Moments>()
            })
            .expect("samples > 0");
            Ok(hits.estimate().scale(envelope * room.powi(ell as i32 - 1)))
        }
    }
}

/// `s^(l-1)/(l-1)!`, which dominates the density for every `s`.
pub fn density_envelope(ell: usize, s: f64) -> f64 {
    (1..ell).fold(1.0, |acc, i| acc * s / i as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub ell: usize,
    pub trials: u64,
    /// `(ln(l / ln l) - rho) / l`
    pub lower_threshold: f64,
    /// `ln(l ln l) / l`
    pub upper_threshold: f64,
    pub fraction_below_lower: f64,
    pub fraction_below_upper: f64,
    /// Exact `P(L+ <= lower_threshold)`.
    pub exact_below_lower: f64,
    /// Exact `P(L+ <= upper_threshold)`.
    pub exact_below_upper: f64,
    /// Mean of `l U / 2`.
    pub mean_scaled_u: MCEstimate,
    /// Fraction of trials with `|l U / 2 - 1| >= l^(-delta)`.
    pub fraction_u_deviating: f64,
}

#[derive(Default)]
struct Tally {
    below_lower: u64,
    below_upper: u64,
    deviating: u64,
    scaled_u: Moments,
}

impl Merge for Tally {
    fn merge(self, other: Self) -> Self {
        Tally {
            below_lower: self.below_lower + other.below_lower,
            below_upper: self.below_upper + other.below_upper,
            deviating: self.deviating + other.deviating,
            scaled_u: self.scaled_u.merge(other.scaled_u),
        }
    }
}

/// Empirical frequencies of the events concerning `L+` and `U`, with the
/// exact finite-`l` probabilities of the `L+` events for comparison. Trial
/// `t` draws from `spec.child(t)`.
pub fn lemma2_check(
    ell: usize,
    trials: u64,
    rho: f64,
    delta: f64,
    spec: StreamSpec,
) -> Result<Lemma2Report> {
    if ell < 10 || trials < 100 {
        return Err(Error::InvalidParameter(
            "need l >= 10 and trials >= 100".into(),
        ));
    }
    if rho.is_nan() || rho <= 0.0 || !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::InvalidParameter(
            "need rho > 0 and 0 < delta < 1/3".into(),
        ));
    }
    let lf = ell as f64;
    let ln = lf.ln();
    let lower = ((lf / ln).ln() - rho) / lf;
    let upper = (lf * ln).ln() / lf;
    let band = lf.powf(-delta);

    let tally = chunked_reduce(trials, |_, range| {
        let mut buf = Vec::with_capacity(ell);
        let mut acc = Tally::default();
        for t in range {
            let mut rng = spec.child(t).stream();
            let (max, u) = fill(ell, &mut rng, &mut buf);
            let scaled = lf * u / 2.0;
            acc.below_lower += u64::from(max <= lower);
            acc.below_upper += u64::from(max <= upper);
            acc.deviating += u64::from((scaled - 1.0).abs() >= band);
            acc.scaled_u.push(scaled);
        }
        acc
    })
    .expect("trials > 0");

    let frac = |c: u64| c as f64 / trials as f64;
    Ok(Lemma2Report {
        ell,
        trials,
        lower_threshold: lower,
        upper_threshold: upper,
        fraction_below_lower: frac(tally.below_lower),
        fraction_below_upper: frac(tally.below_upper),
        exact_below_lower: cdf_unchecked(ell, lower.clamp(0.0, 1.0)),
        exact_below_upper: cdf_unchecked(ell, upper.clamp(0.0, 1.0)),
        mean_scaled_u: tally.scaled_u.estimate(),
        fraction_u_deviating: frac(tally.deviating),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use proptest::prelude::*;

    #[test]
    fn single_spacing() {
        let s = sample_spacings(1, &mut derive_stream(1, 0)).unwrap();
        assert_eq!(s.lengths, vec![1.0]);
        assert_eq!((s.max, s.sum_squares), (1.0, 1.0));
        assert!(sample_spacings(0, &mut derive_stream(1, 0)).is_err());
    }

    #[test]
    fn mean_scaled_square_sum() {
        let ell = 100;
        let mut rng = derive_stream(2, 0);
        let m: Moments = (0..10_000)
            .map(|_| ell as f64 * sample_spacings(ell, &mut rng).unwrap().sum_squares)
            .collect();
        assert!(m
            .estimate()
            .within(2.0 * ell as f64 / (ell as f64 + 1.0), 3.0));
    }

    #[test]
    fn cdf_edges() {
        assert_eq!(max_spacing_cdf(5, 1.0).unwrap(), 1.0);
        assert_eq!(max_spacing_cdf(5, 0.19).unwrap(), 0.0);
        assert_eq!(max_spacing_cdf(1, 0.5).unwrap(), 0.0);
        assert!((max_spacing_cdf(2, 0.75).unwrap() - 0.5).abs() < 1e-15);
        assert!(max_spacing_cdf(2, 1.5).is_err());
        assert!(max_spacing_cdf(0, 0.5).is_err());
    }

    #[test]
    fn cdf_three_spacings() {
        // 1 - 3(1-x)^2 + 3(1-2x)^2 for x in [1/3, 1/2]
        let x = 0.4f64;
        let want = 1.0 - 3.0 * (1.0 - x).powi(2) + 3.0 * (1.0 - 2.0 * x).powi(2);
        assert!((max_spacing_cdf(3, x).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_empirical_within_dkw() {
        let ell = 50;
        let n = 10_000;
        let mut rng = derive_stream(3, 0);
        let mut maxima: Vec<f64> = (0..n)
            .map(|_| sample_spacings(ell, &mut rng).unwrap().max)
            .collect();
        maxima.sort_by(f64::total_cmp);
        let eps = ((2.0f64 / 0.001).ln() / (2.0 * n as f64)).sqrt();
        let worst = maxima
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = max_spacing_cdf(ell, x).unwrap();
                (f - i as f64 / n as f64)
                    .abs()
                    .max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(worst <= eps, "{worst} > {eps}");
    }

    #[test]
    fn density_closed_forms() {
        let d = |ell, s| {
            sum_uniform_density(ell, s, DensityMode::Exact)
                .unwrap()
                .mean
        };
        assert_eq!(d(1, 0.5), 1.0);
        assert!((d(2, 1.5) - 0.5).abs() < 1e-15);
        assert!((d(3, 1.5) - 0.75).abs() < 1e-15);
        assert!(sum_uniform_density(2, 2.5, DensityMode::Exact).is_err());
        // envelope times the exact CDF
        let via_cdf = density_envelope(2, 1.5) * max_spacing_cdf(2, 1.0 / 1.5).unwrap();
        assert!((via_cdf - 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_from_max_spacing() {
        let spec = StreamSpec::new(4, 0);
        let mode = DensityMode::MaxSpacing {
            samples: 1_000_000,
            spec,
        };
        let exact = sum_uniform_density(5, 2.5, DensityMode::Exact)
            .unwrap()
            .mean;
        let est = sum_uniform_density(5, 2.5, mode).unwrap();
        assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
        assert!(est.mean <= density_envelope(5, 2.5));
    }

    #[test]
    fn density_near_the_top_of_the_range() {
        // P(L+ <= 1/4.9) is about 2e-7 for five spacings
        let spec = StreamSpec::new(6, 0);
        let mode = DensityMode::MaxSpacing {
            samples: 200_000,
            spec,
        };
        let exact = sum_uniform_density(5, 4.9, DensityMode::Exact)
            .unwrap()
            .mean;
        let est = sum_uniform_density(5, 4.9, mode).unwrap();
        assert!(est.se > 0.0 && est.within(exact, 3.0), "{est:?} vs {exact}");
        let top = sum_uniform_density(4, 4.0, mode).unwrap();
        assert_eq!(top.mean, 0.0);
        let one = sum_uniform_density(1, 0.5, mode).unwrap();
        assert_eq!(one.mean, 1.0);
    }

    #[test]
    fn lemma2_preconditions() {
        let spec = StreamSpec::new(5, 0);
        assert!(lemma2_check(9, 100, 1.0, 0.25, spec).is_err());
        assert!(lemma2_check(10, 99, 1.0, 0.25, spec).is_err());
        assert!(lemma2_check(10, 100, 0.0, 0.25, spec).is_err());
        assert!(lemma2_check(10, 100, 1.0, 0.4, spec).is_err());
        let r = lemma2_check(1000, 200, 1.0, 0.25, spec).unwrap();
        assert!(r.exact_below_lower < r.exact_below_upper);
        assert!((0.99..=1.01).contains(&r.mean_scaled_u.mean), "{r:?}");
    }

    proptest! {
        #[test]
        fn sample_invariants(ell in 1usize..300, seed: u64) {
            let s = sample_spacings(ell, &mut derive_stream(seed, 0)).unwrap();
            let total = neumaier_sum(s.lengths.iter().copied());
            let lf = ell as f64;
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(s.lengths.iter().all(|&v| v >= 0.0));
            prop_assert!(s.max >= 1.0 / lf - 1e-12 && s.max <= 1.0);
            prop_assert!(s.sum_squares <= s.max + 1e-12);
            prop_assert!(s.sum_squares >= 1.0 / lf - 1e-12);
        }

        #[test]
        fn cdf_monotone(ell in 2usize..60, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (flo, fhi) = (max_spacing_cdf(ell, lo).unwrap(), max_spacing_cdf(ell, hi).unwrap());
            prop_assert!((0.0..=1.0).contains(&flo));
            prop_assert!(flo <= fhi + 1e-12);
        }
    }
}
