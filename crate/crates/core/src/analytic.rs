//! Monte Carlo evaluation of the stability integrals.
//!
//! Conditioned on the partner scores `x_i` (man `i` for wife `i`) and `y_j`
//! (woman `j` for husband `j`), the diagonal matching of `[n]` is stable with
//! probability `p^n prod_{i != j} (1 - p x_i y_j)`. Averaging over uniform
//! `x, y` gives `P_n`, and `E[S_n] = n! P_n`. Replacing each factor by
//! `1 - p x_i (1 - z + z y_j)` turns the product into a generating function of
//! the total wife rank.
//!
//! All estimators with the same `StreamSpec` and dimension consume identical
//! `(x, y)` samples, so identities between them hold sample by sample.

use rand::Rng;
use rand_distr::Open01;
use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::rng::StreamSpec;
use crate::stats::{chunked_reduce, neumaier_sum, MCEstimate, Moments};

/// Largest `n` accepted by the rank-refined estimators.
pub const MAX_RANK_N: usize = 8;

/// Coefficients of a polynomial in the marking variable, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankPolynomial {
    pub coeffs: Vec<f64>,
}

impl RankPolynomial {
    pub fn coefficient(&self, degree: usize) -> f64 {
        self.coeffs.get(degree).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    /// Value at `z = 1`, summed with compensation.
    pub fn total(&self) -> f64 {
        neumaier_sum(self.coeffs.iter().copied())
    }
}

/// `prod_{i != j} (1 - p x_i (1 - z + z y_j))` expanded in `z`.
pub fn rank_integrand(x: &[f64], y: &[f64], p: f64) -> Result<RankPolynomial> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(
            "x and y must have equal length".into(),
        ));
    }
    check_probability(p)?;
    if x.iter().chain(y).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter("scores must lie in [0, 1]".into()));
    }
    let mut coeffs = Vec::with_capacity(x.len() * x.len());
    rank_product(x, y, p, &mut coeffs);
    Ok(RankPolynomial { coeffs })
}

/// Each factor is `a + b z` with `a = 1 - p x_i`, `b = p x_i (1 - y_j)`, both
/// nonnegative, so no coefficient ever cancels.
fn rank_product(x: &[f64], y: &[f64], p: f64, coeffs: &mut Vec<f64>) {
    coeffs.clear();
    coeffs.push(1.0);
    for (i, &xi) in x.iter().enumerate() {
        let a = 1.0 - p * xi;
        for (j, &yj) in y.iter().enumerate() {
            if i == j {
                continue;
            }
            let b = p * xi * (1.0 - yj);
            coeffs.push(0.0);
            for d in (1..coeffs.len()).rev() {
                coeffs[d] = a * coeffs[d] + b * coeffs[d - 1];
            }
            coeffs[0] *= a;
        }
    }
}

fn plain_product(x: &[f64], y: &[f64], p: f64) -> f64 {
    let mut prod = 1.0;
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            if i != j {
                prod *= 1.0 - p * xi * yj;
            }
        }
    }
    prod
}

/// `(prod_i (1 - p x_i) * prod_j (1 - p y_j))^power`
fn outside_factor(x: &[f64], y: &[f64], p: f64, power: usize) -> f64 {
    if power == 0 {
        return 1.0;
    }
    let base: f64 = x.iter().chain(y).map(|v| 1.0 - p * v).product();
    base.powi(power as i32)
}

/// Runs `f` on `samples` draws of `(x, y)` in `[0,1]^dim x [0,1]^dim`,
/// accumulating `width` statistics.
fn integrate<F>(dim: usize, width: usize, samples: u64, spec: StreamSpec, f: F) -> Vec<MCEstimate>
where
    F: Fn(&[f64], &[f64], &mut Vec<f64>) + Sync,
{
    let moments = chunked_reduce(samples, |chunk, range| {
        let mut rng = spec.child(chunk).stream();
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        let mut out = Vec::with_capacity(width);
        let mut acc = vec![Moments::new(); width];
        for _ in range {
            x.iter_mut().for_each(|v| *v = rng.sample(Open01));
            y.iter_mut().for_each(|v| *v = rng.sample(Open01));
            f(&x, &y, &mut out);
            for (m, &v) in acc.iter_mut().zip(out.iter()) {
                m.push(v);
            }
        }
        acc
    });
    moments
        .expect("samples > 0")
        .iter()
        .map(Moments::estimate)
        .collect()
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    Ok(())
}

fn factorial(m: usize) -> f64 {
    (2..=m).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PnEstimate {
    /// Probability that the diagonal matching is stable.
    pub p_n: MCEstimate,
    /// `n! * p_n`: expected number of complete stable matchings.
    pub expected_complete: MCEstimate,
}

pub fn mc_pn(n: usize, p: f64, samples: u64, spec: StreamSpec) -> Result<PnEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    check_probability(p)?;
    check_samples(samples)?;
    let scale = p.powi(n as i32);
    let p_n = integrate(n, 1, samples, spec, |x, y, out| {
        out.clear();
        out.push(scale * plain_product(x, y, p));
    })[0];
    Ok(PnEstimate {
        p_n,
        expected_complete: p_n.scale(factorial(n)),
    })
}

fn check_rank_args(n: usize, ell: usize) -> Result<()> {
    if n == 0 || ell > n {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= l <= n, n >= 1 (n = {n}, l = {ell})"
        )));
    }
    if ell > MAX_RANK_N {
        return Err(Error::InvalidParameter(format!(
            "rank polynomials limited to {MAX_RANK_N} dimensions"
        )));
    }
    Ok(())
}

/// Probability that the diagonal matching of two copies of `[l]` is the
/// stable matching of an `n x n` instance with total wife rank `k`, for every
/// `k` in `l ..= l^2` (index `k - l`). For `l = 0` the only entry is `k = 0`.
pub fn mc_pnk_partial_all(
    n: usize,
    ell: usize,
    p: f64,
    samples: u64,
    spec: StreamSpec,
) -> Result<Vec<MCEstimate>> {
    check_rank_args(n, ell)?;
    check_probability(p)?;
    check_samples(samples)?;
    let outside = (n - ell) * (n - ell);
    let scale = p.powi(ell as i32) * (1.0 - p).powi(outside as i32);
    if ell == 0 {
        return Ok(vec![MCEstimate::exact(scale, samples)]);
    }
    let width = ell * ell - ell + 1;
    Ok(integrate(ell, width, samples, spec, |x, y, out| {
        rank_product(x, y, p, out);
        let w = scale * outside_factor(x, y, p, n - ell);
        out.iter_mut().for_each(|c| *c *= w);
    }))
}

pub fn mc_pnk_partial(
    n: usize,
    ell: usize,
    p: f64,
    k: usize,
    samples: u64,
    spec: StreamSpec,
) -> Result<MCEstimate> {
    check_rank_args(n, ell)?;
    let valid = if ell == 0 {
        k == 0
    } else {
        (ell..=ell * ell).contains(&k)
    };
    if !valid {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside the rank range for l = {ell}"
        )));
    }
    Ok(mc_pnk_partial_all(n, ell, p, samples, spec)?[k - ell])
}

/// `P(diagonal matching stable, Q_n = k)` for `k = n ..= n^2` (index `k - n`).
pub fn mc_pnk_all(n: usize, p: f64, samples: u64, spec: StreamSpec) -> Result<Vec<MCEstimate>> {
    mc_pnk_partial_all(n, n, p, samples, spec)
}

pub fn mc_pnk(n: usize, p: f64, k: usize, samples: u64, spec: StreamSpec) -> Result<MCEstimate> {
    mc_pnk_partial(n, n, p, k, samples, spec)
}

/// Upper bounds on the probability that the proposal algorithm matches
/// exactly `l` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialBound {
    /// Union bound keeping the factors for pairs with one unmatched member.
    pub full: MCEstimate,
    /// `(1-p)^((n-l)^2) C(n,l)^2 E[S_l]`, which drops those factors.
    pub loose: MCEstimate,
}

pub fn partial_bound(
    n: usize,
    ell: usize,
    p: f64,
    samples: u64,
    spec: StreamSpec,
) -> Result<PartialBound> {
    if n == 0 || ell > n {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= l <= n (n = {n}, l = {ell})"
        )));
    }
    check_probability(p)?;
    check_samples(samples)?;
    let outside = (n - ell) * (n - ell);
    let counting = (1.0 - p).powi(outside as i32) * binomial(n, ell).powi(2) * factorial(ell);
    if ell == 0 {
        let exact = MCEstimate::exact(counting, samples);
        return Ok(PartialBound {
            full: exact,
            loose: exact,
        });
    }
    let weight = p.powi(ell as i32);
    let est = integrate(ell, 2, samples, spec, |x, y, out| {
        let base = weight * plain_product(x, y, p);
        out.clear();
        out.push(base * outside_factor(x, y, p, n - ell));
        out.push(base);
    });
    Ok(PartialBound {
        full: est[0].scale(counting),
        loose: est[1].scale(counting),
    })
}

/// Closed-form reference quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// `(ln n)^2 / n`, the critical admissibility probability.
    PThreshold,
    /// `n H_n`, the bound on the expected number of proposals at `p = 1`.
    HarmonicBound,
    /// `e^{-1} n ln n`, asymptotic `E[S_n]` at `p = 1`.
    KnuthAsymptotic,
    /// `n^{1 - sqrt(c)} / (ln n)^2`, unmatched count below threshold `c < 1`.
    DeltaN(f64),
    /// `sqrt(p n^3)`, scale of the total rank below threshold.
    RankScale(f64),
}

pub fn reference_value(n: usize, which: Reference) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "reference values need n >= 2".into(),
        ));
    }
    let nf = n as f64;
    let ln = nf.ln();
    Ok(match which {
        Reference::PThreshold => ln * ln / nf,
        Reference::HarmonicBound => nf * neumaier_sum((1..=n).map(|j| 1.0 / j as f64)),
        Reference::KnuthAsymptotic => nf * ln / std::f64::consts::E,
        Reference::DeltaN(c) => {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "c = {c} must lie in (0, 1)"
                )));
            }
            nf.powf(1.0 - c.sqrt()) / (ln * ln)
        }
        Reference::RankScale(p) => {
            check_probability(p)?;
            (p * nf.powi(3)).sqrt()
        }
    })
}
