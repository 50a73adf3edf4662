//! On-demand instances for large `n`.
//!
//! Nothing is drawn up front. Each proposer owns a sparse Fisher-Yates cursor
//! over the opposite side, admissibility coins are flipped the first time a
//! pair needs one, and receiver scores are drawn when a proposal arrives.
//! Memory therefore grows with the number of proposals, never with `n^2`.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Open01};
use rustc_hash::FxHashMap;

use super::DenseInstance;
use crate::error::{check_probability, Error, Result};
use crate::matching::Side;
use crate::rng::{Stream, StreamSpec};

/// How a lazy run meets inadmissible pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LazyStrategy {
    /// A proposer jumps straight to his next admissible candidate. The number
    /// of skipped (inadmissible) list positions is geometric and still counts
    /// towards the proposal total. Work is proportional to admissible
    /// proposals, which is what makes `n = 10^5` runs cheap.
    #[default]
    GeometricSkip,
    /// Every list position is visited. The receiver's score is compared first
    /// and the admissibility coin is flipped only when she would accept; a
    /// rejection on preference leaves the pair's coin undetermined.
    CoinOnAcceptance,
}

/// Partially generated uniform permutation of the opposite side.
#[derive(Debug, Clone, Default)]
pub(crate) struct Cursor {
    /// List positions used, including skipped inadmissible ones.
    pub(crate) consumed: u32,
    /// Candidates actually identified so far.
    pub(crate) drawn: u32,
    /// Sparse Fisher-Yates state: position -> candidate, identity elsewhere.
    swaps: FxHashMap<u32, u32>,
}

impl Cursor {
    #[inline]
    fn at(&self, pos: u32) -> u32 {
        self.swaps.get(&pos).copied().unwrap_or(pos)
    }

    fn draw(&mut self, n: u32, rng: &mut Stream) -> u32 {
        let d = self.drawn;
        let r = rng.random_range(d..n);
        let chosen = self.at(r);
        if r != d {
            let displaced = self.at(d);
            self.swaps.insert(r, displaced);
        }
        self.swaps.insert(d, chosen);
        self.drawn += 1;
        chosen
    }

    /// Candidate identified at the `index`-th draw.
    pub(crate) fn drawn_at(&self, index: u32) -> u32 {
        self.at(index)
    }

    /// A scratch copy used to look past the end of the run.
    pub(crate) fn fork(&self) -> Cursor {
        self.clone()
    }
}

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug)]
pub struct LazyInstance {
    pub(crate) n: usize,
    pub(crate) p: f64,
    spec: StreamSpec,
    pub(crate) strategy: LazyStrategy,
    pub(crate) rng: Stream,
    gap: Geometric,
    /// Proposal cursors, indexed by side then person.
    pub(crate) cursors: [Vec<Cursor>; 2],
    /// Resolved admissibility coins keyed by `man * n + woman`.
    coins: FxHashMap<u64, bool>,
    /// Receiver-side score of every proposal made, keyed like `coins`.
    pub(crate) scores: FxHashMap<u64, f64>,
    /// Current partner of each receiver, or [`NONE`].
    pub(crate) holder: Vec<u32>,
    /// Receiver's score of her current partner (lower is better).
    pub(crate) holder_score: Vec<f64>,
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Men => 0,
        Side::Women => 1,
    }
}

impl LazyInstance {
    pub fn new(n: usize, p: f64, spec: StreamSpec) -> Result<Self> {
        Self::with_strategy(n, p, spec, LazyStrategy::default())
    }

    pub fn with_strategy(
        n: usize,
        p: f64,
        spec: StreamSpec,
        strategy: LazyStrategy,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if n >= NONE as usize {
            return Err(Error::InvalidParameter(format!("n = {n} is too large")));
        }
        check_probability(p)?;
        Ok(LazyInstance {
            n,
            p,
            spec,
            strategy,
            rng: spec.stream(),
            gap: Geometric::new(p).expect("p checked"),
            cursors: [Vec::new(), Vec::new()],
            coins: FxHashMap::default(),
            scores: FxHashMap::default(),
            holder: vec![NONE; n],
            holder_score: vec![f64::INFINITY; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn spec(&self) -> StreamSpec {
        self.spec
    }

    pub fn strategy(&self) -> LazyStrategy {
        self.strategy
    }

    #[inline]
    pub(crate) fn key(&self, man: usize, woman: usize) -> u64 {
        (man * self.n + woman) as u64
    }

    pub(crate) fn cursor(&self, side: Side, person: usize) -> Option<&Cursor> {
        self.cursors[side_index(side)].get(person)
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.n {
            Ok(())
        } else {
            Err(Error::OutOfRange { index, n: self.n })
        }
    }

    /// Next entry of `person`'s preference list: a uniformly random member of
    /// the opposite side not yet returned for them. `None` once all `n` have
    /// been returned.
    pub fn next_unproposed(&mut self, side: Side, person: usize) -> Result<Option<usize>> {
        self.check_index(person)?;
        let n = self.n as u32;
        let cursor = cursor_in(&mut self.cursors, self.n, side, person);
        let out = if cursor.consumed >= n || cursor.drawn >= n {
            None
        } else {
            cursor.consumed += 1;
            Some(cursor.draw(n, &mut self.rng) as usize)
        };
        Ok(out)
    }

    /// Advances `person`'s list to the next admissible candidate.
    ///
    /// Returns the candidate (or `None` when the list runs out) together with
    /// the number of list positions used, skipped ones included. The pair is
    /// logged as admissible.
    pub fn next_admissible(&mut self, side: Side, person: usize) -> Result<(Option<usize>, u64)> {
        self.check_index(person)?;
        let n = self.n as u32;
        let gap = self.gap.sample(&mut self.rng);
        let cursor = cursor_in(&mut self.cursors, self.n, side, person);
        let left = (n - cursor.consumed) as u64;
        let out = if gap >= left {
            cursor.consumed = n;
            (None, left)
        } else {
            cursor.consumed += gap as u32 + 1;
            (Some(cursor.draw(n, &mut self.rng) as usize), gap + 1)
        };
        if let Some(c) = out.0 {
            let (m, w) = side.orient(person, c);
            let key = self.key(m, w);
            self.coins.insert(key, true);
        }
        Ok(out)
    }

    /// Continues `cursor` (a fork of a real one) to its next admissible
    /// candidate without touching any logged state.
    pub(crate) fn peek_admissible(&mut self, cursor: &mut Cursor) -> Option<u32> {
        let n = self.n as u32;
        let gap = self.gap.sample(&mut self.rng);
        let left = (n - cursor.consumed) as u64;
        if gap >= left {
            cursor.consumed = n;
            None
        } else {
            cursor.consumed += gap as u32 + 1;
            Some(cursor.draw(n, &mut self.rng))
        }
    }

    /// Admissibility of `(man, woman)`. The first call flips a Bernoulli(p)
    /// coin; later calls return the logged outcome.
    pub fn flip_admissible(&mut self, man: usize, woman: usize) -> Result<bool> {
        self.check_index(man)?;
        self.check_index(woman)?;
        let key = self.key(man, woman);
        if let Some(&c) = self.coins.get(&key) {
            return Ok(c);
        }
        let c = self.rng.random_bool(self.p);
        self.coins.insert(key, c);
        Ok(c)
    }

    /// Logged coin, if the pair has been resolved.
    pub fn coin(&self, man: usize, woman: usize) -> Option<bool> {
        self.coins.get(&self.key(man, woman)).copied()
    }

    pub fn resolved_coins(&self) -> usize {
        self.coins.len()
    }

    pub(crate) fn draw_score(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    /// Number of stored hash-map entries plus per-person slots: a proxy for
    /// heap usage that is independent of allocator details.
    pub fn stored_entries(&self) -> usize {
        let cursor_entries: usize = self
            .cursors
            .iter()
            .flat_map(|side| side.iter().map(|c| c.swaps.len() + 1))
            .sum();
        cursor_entries + self.coins.len() + self.scores.len() + 2 * self.n
    }

    /// Freezes the current state into a dense instance (small `n` only).
    ///
    /// Each proposer's list starts with the candidates he has drawn, in draw
    /// order, followed by everyone else in index order. Known coins and
    /// scores are kept. Unresolved coins become admissible when
    /// `unresolved_admissible` is set and are flipped otherwise; unknown
    /// receiver scores are drawn fresh. Under [`LazyStrategy::GeometricSkip`]
    /// a proposer whose list ran out skipped only inadmissible candidates, so
    /// his undrawn pairs are inadmissible.
    pub fn materialize(
        &mut self,
        proposer: Side,
        unresolved_admissible: bool,
    ) -> Result<DenseInstance> {
        let n = self.n;
        if n > 2000 {
            return Err(Error::InvalidParameter(format!(
                "refusing to materialize n = {n}"
            )));
        }
        let mut prop_score = vec![vec![0.0; n]; n];
        let mut recv_score = vec![vec![0.0; n]; n];
        let mut adm = vec![vec![false; n]; n];
        let unit = |pos: usize| (pos + 1) as f64 / (n + 1) as f64;
        for a in 0..n {
            let (drawn, exhausted) = match self.cursor(proposer, a) {
                Some(c) => (
                    (0..c.drawn)
                        .map(|i| c.drawn_at(i) as usize)
                        .collect::<Vec<_>>(),
                    c.consumed as usize == n,
                ),
                None => (Vec::new(), false),
            };
            let mut seen = vec![false; n];
            for &b in &drawn {
                seen[b] = true;
            }
            let order = drawn.iter().copied().chain((0..n).filter(|&b| !seen[b]));
            for (pos, b) in order.enumerate() {
                prop_score[a][b] = unit(pos);
                let (m, w) = proposer.orient(a, b);
                let key = self.key(m, w);
                recv_score[a][b] = match self.scores.get(&key) {
                    Some(&s) => s,
                    None => self.draw_score(),
                };
                adm[a][b] = match self.coins.get(&key) {
                    Some(&c) => c,
                    None if !seen[b]
                        && exhausted
                        && self.strategy == LazyStrategy::GeometricSkip =>
                    {
                        false
                    }
                    None if unresolved_admissible => true,
                    None => self.flip_admissible(m, w)?,
                };
            }
        }
        // reorient to [man][woman]
        let (adm, x, y) = match proposer {
            Side::Men => (adm, prop_score, recv_score),
            Side::Women => (
                transpose(&adm),
                transpose(&recv_score),
                transpose(&prop_score),
            ),
        };
        DenseInstance::from_matrices(self.p, adm, x, y)
    }
}

fn cursor_in(cursors: &mut [Vec<Cursor>; 2], n: usize, side: Side, person: usize) -> &mut Cursor {
    let list = &mut cursors[side_index(side)];
    if list.is_empty() {
        list.resize_with(n, Cursor::default);
    }
    &mut list[person]
}

fn transpose<T: Copy>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = m.len();
    (0..n).map(|j| (0..n).map(|i| m[i][j]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lazy(n: usize, p: f64, seed: u64) -> LazyInstance {
        LazyInstance::new(n, p, StreamSpec::new(seed, 0)).unwrap()
    }

    #[test]
    fn single_remaining_candidate() {
        // find a stream where the first two draws for man 0 are {0, 2}
        for seed in 0.. {
            let mut l = lazy(3, 0.5, seed);
            let a = l.next_unproposed(Side::Men, 0).unwrap().unwrap();
            let b = l.next_unproposed(Side::Men, 0).unwrap().unwrap();
            if a.min(b) == 0 && a.max(b) == 2 {
                assert_eq!(l.next_unproposed(Side::Men, 0).unwrap(), Some(1));
                return;
            }
        }
    }

    #[test]
    fn exhausts_after_n_calls() {
        let mut l = lazy(4, 0.5, 1);
        let mut got: Vec<usize> = (0..4)
            .map(|_| l.next_unproposed(Side::Men, 2).unwrap().unwrap())
            .collect();
        got.sort();
        assert_eq!(got, vec![0, 1, 2, 3]);
        assert_eq!(l.next_unproposed(Side::Men, 2).unwrap(), None);
        assert!(l.next_unproposed(Side::Men, 4).is_err());
    }

    #[test]
    fn first_candidate_is_uniform() {
        // 4 sd multinomial band: 4 * sqrt(0.25 * 0.75 / 1e5) = 0.0055
        let trials = 100_000;
        let mut counts = [0usize; 4];
        for t in 0..trials {
            let mut l = LazyInstance::new(4, 1.0, StreamSpec::new(11, t)).unwrap();
            counts[l.next_unproposed(Side::Men, 0).unwrap().unwrap()] += 1;
        }
        for c in counts {
            let f = c as f64 / trials as f64;
            assert!((f - 0.25).abs() <= 0.006, "{counts:?}");
        }
    }

    #[test]
    fn coins_are_logged() {
        let mut l = lazy(1000, 0.5, 5);
        let first: Vec<bool> = (0..50).map(|w| l.flip_admissible(3, w).unwrap()).collect();
        let again: Vec<bool> = (0..50).map(|w| l.flip_admissible(3, w).unwrap()).collect();
        assert_eq!(first, again);
        assert_eq!(l.resolved_coins(), 50);
    }

    #[test]
    fn degenerate_coins() {
        let mut one = lazy(10, 1.0, 2);
        let mut zero = lazy(10, 0.0, 2);
        for m in 0..10 {
            for w in 0..10 {
                assert!(one.flip_admissible(m, w).unwrap());
                assert!(!zero.flip_admissible(m, w).unwrap());
            }
        }
    }

    #[test]
    fn fair_coin_fraction() {
        // 4 sd binomial band at 1e5 flips: 4 * 0.5 / sqrt(1e5) = 0.0063
        let n = 400;
        let mut l = lazy(n, 0.5, 77);
        let mut hits = 0;
        for k in 0..100_000 {
            hits += l.flip_admissible(k / n, k % n).unwrap() as usize;
        }
        assert!((hits as f64 / 1e5 - 0.5).abs() <= 0.0063);
    }

    #[test]
    fn skip_with_zero_probability_exhausts_immediately() {
        let mut l = lazy(7, 0.0, 1);
        assert_eq!(l.next_admissible(Side::Men, 0).unwrap(), (None, 7));
        assert_eq!(l.next_admissible(Side::Men, 0).unwrap(), (None, 0));
    }

    #[test]
    fn skip_with_certain_admissibility_visits_everyone() {
        let mut l = lazy(5, 1.0, 1);
        let mut seen: Vec<usize> = (0..5)
            .map(|_| {
                let (w, used) = l.next_admissible(Side::Women, 1).unwrap();
                assert_eq!(used, 1);
                w.unwrap()
            })
            .collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        assert_eq!(l.coin(4, 1), Some(true));
        assert_eq!(l.next_admissible(Side::Women, 1).unwrap(), (None, 0));
    }
}
