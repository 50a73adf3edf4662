use rand::Rng;
use rand_distr::Open01;

use crate::error::{check_probability, Error, Result};
use crate::rng::StreamSpec;

/// A fully materialized instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseInstance {
    n: usize,
    p: f64,
    /// Row-major by man.
    adm: Vec<bool>,
    /// Row-major by man.
    x: Vec<f64>,
    /// Column-major: `y[w * n + m]`, so each woman's scores are contiguous.
    y: Vec<f64>,
}

impl DenseInstance {
    /// Builds an instance from explicit matrices, indexed `[man][woman]`.
    pub fn from_matrices(
        p: f64,
        adm: Vec<Vec<bool>>,
        x: Vec<Vec<f64>>,
        y: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_probability(p)?;
        let n = adm.len();
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        let square = |lens: Vec<usize>| lens.len() == n && lens.iter().all(|&l| l == n);
        let lens = |m: &[Vec<f64>]| m.iter().map(Vec::len).collect::<Vec<_>>();
        if !square(adm.iter().map(Vec::len).collect()) || !square(lens(&x)) || !square(lens(&y)) {
            return Err(Error::InvalidParameter("matrices must all be n x n".into()));
        }
        let mut yt = vec![0.0; n * n];
        for (m, row) in y.iter().enumerate() {
            for (w, &v) in row.iter().enumerate() {
                yt[w * n + m] = v;
            }
        }
        let inst = DenseInstance {
            n,
            p,
            adm: adm.into_iter().flatten().collect(),
            x: x.into_iter().flatten().collect(),
            y: yt,
        };
        inst.check_scores()?;
        Ok(inst)
    }

    /// Builds an instance from preference lists instead of scores. Each list
    /// names the opposite side in order of decreasing preference.
    pub fn from_preferences(
        p: f64,
        adm: Vec<Vec<bool>>,
        men: &[Vec<usize>],
        women: &[Vec<usize>],
    ) -> Result<Self> {
        let n = adm.len();
        let score = |pos: usize| (pos + 1) as f64 / (n + 1) as f64;
        let mut x = vec![vec![0.0; n]; n];
        let mut y = vec![vec![0.0; n]; n];
        for (m, list) in men.iter().enumerate() {
            for (pos, &w) in list.iter().enumerate() {
                x[m][w] = score(pos);
            }
        }
        for (w, list) in women.iter().enumerate() {
            for (pos, &m) in list.iter().enumerate() {
                y[m][w] = score(pos);
            }
        }
        Self::from_matrices(p, adm, x, y)
    }

    fn check_scores(&self) -> Result<()> {
        let n = self.n;
        if self.x.iter().chain(&self.y).any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::InvalidParameter("scores must lie in (0, 1)".into()));
        }
        for i in 0..n {
            let row = &self.adm[i * n..(i + 1) * n];
            if has_tie(&self.x[i * n..(i + 1) * n], |w| row[w])
                || has_tie(&self.y[i * n..(i + 1) * n], |m| self.admissible(m, i))
            {
                return Err(Error::InvalidParameter(
                    "tied scores in a preference list".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn admissible(&self, man: usize, woman: usize) -> bool {
        self.adm[man * self.n + woman]
    }

    /// Man-side score; lower is better for the man.
    #[inline]
    pub fn x(&self, man: usize, woman: usize) -> f64 {
        self.x[man * self.n + woman]
    }

    /// Woman-side score; lower is better for the woman.
    #[inline]
    pub fn y(&self, man: usize, woman: usize) -> f64 {
        self.y[woman * self.n + man]
    }

    pub fn admissible_count(&self) -> usize {
        self.adm.iter().filter(|&&a| a).count()
    }

    /// Admissible women of `man`, best first.
    pub fn men_list(&self, man: usize) -> Vec<u32> {
        let row = &self.x[man * self.n..(man + 1) * self.n];
        let adm = &self.adm[man * self.n..(man + 1) * self.n];
        sorted_admissible(row, |w| adm[w])
    }

    /// Admissible men of `woman`, best first.
    pub fn women_list(&self, woman: usize) -> Vec<u32> {
        let col = &self.y[woman * self.n..(woman + 1) * self.n];
        sorted_admissible(col, |m| self.admissible(m, woman))
    }
}

fn sorted_admissible(scores: &[f64], adm: impl Fn(usize) -> bool) -> Vec<u32> {
    let mut keyed: Vec<(u64, u32)> = scores
        .iter()
        .enumerate()
        .filter(|&(j, _)| adm(j))
        .map(|(j, &s)| (s.to_bits(), j as u32))
        .collect();
    // positive floats order like their bit patterns
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, j)| j).collect()
}

/// Ties only matter between admissible entries.
fn has_tie(block: &[f64], adm: impl Fn(usize) -> bool) -> bool {
    let mut bits: Vec<u64> = (0..block.len())
        .filter(|&j| adm(j))
        .map(|j| block[j].to_bits())
        .collect();
    bits.sort_unstable();
    bits.windows(2).any(|w| w[0] == w[1])
}

fn fill_distinct<R: Rng>(rng: &mut R, out: &mut [f64], adm: impl Fn(usize) -> bool) {
    loop {
        for v in out.iter_mut() {
            *v = rng.sample(Open01);
        }
        if !has_tie(out, &adm) {
            return;
        }
    }
}

/// Draws an instance: the `n^2` admissibility coins row by row, then the man
/// scores row by row, then the woman scores column by column. A row (column)
/// with a repeated score among its admissible entries is redrawn as a whole.
pub fn generate_dense(n: usize, p: f64, spec: StreamSpec) -> Result<DenseInstance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    check_probability(p)?;
    let mut rng = spec.stream();
    let adm: Vec<bool> = (0..n * n).map(|_| rng.random_bool(p)).collect();
    let mut x = vec![0.0; n * n];
    for (m, row) in x.chunks_mut(n).enumerate() {
        fill_distinct(&mut rng, row, |w| adm[m * n + w]);
    }
    let mut y = vec![0.0; n * n];
    for (w, col) in y.chunks_mut(n).enumerate() {
        fill_distinct(&mut rng, col, |m| adm[m * n + w]);
    }
    Ok(DenseInstance { n, p, adm, x, y })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair_certain() {
        let inst = generate_dense(1, 1.0, StreamSpec::new(3, 0)).unwrap();
        assert!(inst.admissible(0, 0));
        assert!(inst.x(0, 0) > 0.0 && inst.x(0, 0) < 1.0);
        assert!(inst.y(0, 0) > 0.0 && inst.y(0, 0) < 1.0);
    }

    #[test]
    fn zero_probability_forbids_everything() {
        let inst = generate_dense(2, 0.0, StreamSpec::new(3, 0)).unwrap();
        assert_eq!(inst.admissible_count(), 0);
    }

    #[test]
    fn rejects_empty() {
        assert!(generate_dense(0, 0.5, StreamSpec::new(1, 1)).is_err());
        assert!(generate_dense(3, 1.5, StreamSpec::new(1, 1)).is_err());
    }

    #[test]
    fn admissible_count_in_binomial_band() {
        // Binomial(10^4, 0.3): mean 3000, sd 45.8, 4 sd = 183
        let inst = generate_dense(100, 0.3, StreamSpec::new(42, 0)).unwrap();
        let c = inst.admissible_count() as i64;
        assert!((c - 3000).abs() <= 183, "count {c}");
    }

    #[test]
    fn reproducible() {
        let a = generate_dense(20, 0.4, StreamSpec::new(9, 4)).unwrap();
        let b = generate_dense(20, 0.4, StreamSpec::new(9, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_dense(20, 0.4, StreamSpec::new(9, 5)).unwrap());
    }

    #[test]
    fn lists_are_sorted_and_admissible() {
        let inst = generate_dense(30, 0.5, StreamSpec::new(1, 2)).unwrap();
        for m in 0..30 {
            let list = inst.men_list(m);
            assert!(list.iter().all(|&w| inst.admissible(m, w as usize)));
            assert!(list
                .windows(2)
                .all(|p| inst.x(m, p[0] as usize) < inst.x(m, p[1] as usize)));
        }
        for w in 0..30 {
            let list = inst.women_list(w);
            assert!(list
                .windows(2)
                .all(|p| inst.y(p[0] as usize, w) < inst.y(p[1] as usize, w)));
        }
    }

    #[test]
    fn from_matrices_rejects_ties() {
        let adm = vec![vec![true; 2]; 2];
        let x = vec![vec![0.5, 0.5], vec![0.1, 0.2]];
        let y = vec![vec![0.1, 0.2], vec![0.3, 0.4]];
        assert!(DenseInstance::from_matrices(1.0, adm, x, y).is_err());
    }
}
