//! Exhaustive enumeration of stable partial matchings for small instances.
//!
//! Men are placed in index order, each either single or given an unused
//! admissible woman. A branch is cut as soon as a pair whose woman already
//! has her final partner blocks; pairs with a single woman are checked at the
//! leaves.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{generate_dense, DenseInstance};
use crate::matching::{propose, total_ranks, Matching, Side, NONE};
use crate::rng::StreamSpec;
use crate::stats::{chunked_reduce, MCEstimate, Moments};

pub const DEFAULT_CAP: usize = 7;

/// Every stable partial matching of one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StableSet {
    pub n: usize,
    /// Wife of each man per stable matching (`u8::MAX` = single).
    #[serde(skip)]
    wives: Vec<Vec<u8>>,
    /// `(Q, R)` of each stable matching, in the same order.
    pub ranks: Vec<(u64, u64)>,
    /// Number of complete stable matchings.
    pub s_complete: usize,
    /// Men matched in the first stable matching (T1).
    pub matched_men: Vec<usize>,
    /// Women matched in the first stable matching (T2).
    pub matched_women: Vec<usize>,
    pub q_minus: u64,
    pub q_plus: u64,
    pub r_minus: u64,
    pub r_plus: u64,
}

impl StableSet {
    pub fn len(&self) -> usize {
        self.wives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wives.is_empty()
    }

    pub fn matching(&self, i: usize) -> Matching {
        let pairs: Vec<(usize, usize)> = self.wives[i]
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w != u8::MAX)
            .map(|(m, &w)| (m, w as usize))
            .collect();
        Matching::from_pairs(self.n, &pairs).expect("stored matchings are injective")
    }

    pub fn matchings(&self) -> impl Iterator<Item = Matching> + '_ {
        (0..self.len()).map(|i| self.matching(i))
    }

    pub fn contains(&self, m: &Matching) -> bool {
        self.matchings().any(|s| &s == m)
    }

    /// Whether every listed matching matches exactly T1 and T2.
    pub fn matched_sets_agree(&self) -> bool {
        self.matchings()
            .all(|m| m.matched_men() == self.matched_men && m.matched_women() == self.matched_women)
    }
}

pub fn enumerate_stable(inst: &DenseInstance) -> Result<StableSet> {
    enumerate_stable_capped(inst, DEFAULT_CAP)
}

pub fn enumerate_stable_capped(inst: &DenseInstance, cap: usize) -> Result<StableSet> {
    let n = inst.n();
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    if n >= u8::MAX as usize {
        return Err(Error::EnumerationCap {
            n,
            cap: u8::MAX as usize - 1,
        });
    }
    let mut search = Search {
        inst,
        wife: vec![NONE; n],
        husband: vec![NONE; n],
        found: Vec::new(),
    };
    search.place(0);

    let mut wives = search.found;
    wives.sort();
    let matchings: Vec<Matching> = wives
        .iter()
        .map(|w| {
            let pairs: Vec<_> = w
                .iter()
                .enumerate()
                .filter(|&(_, &x)| x != u8::MAX)
                .map(|(m, &x)| (m, x as usize))
                .collect();
            Matching::from_pairs(n, &pairs).expect("injective")
        })
        .collect();
    let ranks: Vec<(u64, u64)> = matchings
        .iter()
        .map(|m| total_ranks(inst, m).expect("same n"))
        .collect();
    // the empty instance still has the empty matching, so the list is never empty
    let first = &matchings[0];
    Ok(StableSet {
        n,
        s_complete: matchings.iter().filter(|m| m.is_complete()).count(),
        matched_men: first.matched_men(),
        matched_women: first.matched_women(),
        q_minus: ranks.iter().map(|r| r.0).min().unwrap_or(0),
        q_plus: ranks.iter().map(|r| r.0).max().unwrap_or(0),
        r_minus: ranks.iter().map(|r| r.1).min().unwrap_or(0),
        r_plus: ranks.iter().map(|r| r.1).max().unwrap_or(0),
        ranks,
        wives,
    })
}

struct Search<'a> {
    inst: &'a DenseInstance,
    wife: Vec<u32>,
    husband: Vec<u32>,
    found: Vec<Vec<u8>>,
}

impl Search<'_> {
    #[inline]
    fn man_wants(&self, man: usize, woman: usize) -> bool {
        let w = self.wife[man];
        w == NONE || self.inst.x(man, woman) < self.inst.x(man, w as usize)
    }

    /// Blocking pairs between the newly placed `man` and women whose
    /// partners are already final.
    fn locally_stable(&self, man: usize) -> bool {
        let inst = self.inst;
        for (w, &h) in self.husband.iter().enumerate() {
            if h == NONE || h as usize >= man {
                continue;
            }
            if inst.admissible(man, w)
                && self.man_wants(man, w)
                && inst.y(man, w) < inst.y(h as usize, w)
            {
                return false;
            }
        }
        if let Some(w) = (self.wife[man] != NONE).then(|| self.wife[man] as usize) {
            for earlier in 0..man {
                if inst.admissible(earlier, w)
                    && self.man_wants(earlier, w)
                    && inst.y(earlier, w) < inst.y(man, w)
                {
                    return false;
                }
            }
        }
        true
    }

    fn leaf_stable(&self) -> bool {
        let n = self.inst.n();
        for w in (0..n).filter(|&w| self.husband[w] == NONE) {
            for m in 0..n {
                if self.inst.admissible(m, w) && self.man_wants(m, w) {
                    return false;
                }
            }
        }
        true
    }

    fn place(&mut self, man: usize) {
        let n = self.inst.n();
        if man == n {
            if self.leaf_stable() {
                self.found.push(
                    self.wife
                        .iter()
                        .map(|&w| if w == NONE { u8::MAX } else { w as u8 })
                        .collect(),
                );
            }
            return;
        }
        if self.locally_stable(man) {
            self.place(man + 1);
        }
        for w in 0..n {
            if self.husband[w] != NONE || !self.inst.admissible(man, w) {
                continue;
            }
            self.wife[man] = w as u32;
            self.husband[w] = man as u32;
            if self.locally_stable(man) {
                self.place(man + 1);
            }
            self.wife[man] = NONE;
            self.husband[w] = NONE;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// Number of complete stable matchings.
    SComplete,
    /// Size of the stable matchings.
    Size,
    QMinus,
    QPlus,
    /// 1 when a complete stable matching exists.
    ExistsComplete,
}

impl Statistic {
    fn needs_enumeration(self) -> bool {
        !matches!(self, Statistic::Size | Statistic::ExistsComplete)
    }
}

/// Trial `t` uses the instance generated from `spec.child(t)`.
pub fn trial_instance(n: usize, p: f64, spec: StreamSpec, trial: u64) -> Result<DenseInstance> {
    generate_dense(n, p, spec.child(trial))
}

fn check_trials(n: usize, trials: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    Ok(())
}

/// Sample mean and standard error of `statistic` over independent instances.
pub fn empirical_expectation(
    n: usize,
    p: f64,
    trials: u64,
    spec: StreamSpec,
    statistic: Statistic,
) -> Result<MCEstimate> {
    check_trials(n, trials)?;
    crate::error::check_probability(p)?;
    if statistic.needs_enumeration() && n > DEFAULT_CAP {
        return Err(Error::EnumerationCap {
            n,
            cap: DEFAULT_CAP,
        });
    }
    let moments = chunked_reduce(trials, |_, range| {
        let mut m = Moments::new();
        for t in range {
            let inst = trial_instance(n, p, spec, t).expect("checked");
            let value = match statistic {
                Statistic::Size => propose(&inst, Side::Men).size as f64,
                Statistic::ExistsComplete => (propose(&inst, Side::Men).size == n) as u8 as f64,
                _ => {
                    let set = enumerate_stable(&inst).expect("checked");
                    match statistic {
                        Statistic::SComplete => set.s_complete as f64,
                        Statistic::QMinus => set.q_minus as f64,
                        Statistic::QPlus => set.q_plus as f64,
                        _ => unreachable!(),
                    }
                }
            };
            m.push(value);
        }
        m
    });
    Ok(moments.expect("trials > 0").estimate())
}

/// Per-instance number of complete stable matchings with total wife rank
/// `k`, for `k = n ..= n^2` (index `k - n`), averaged over instances.
pub fn complete_rank_counts(
    n: usize,
    p: f64,
    trials: u64,
    spec: StreamSpec,
) -> Result<Vec<MCEstimate>> {
    check_trials(n, trials)?;
    crate::error::check_probability(p)?;
    if n > DEFAULT_CAP {
        return Err(Error::EnumerationCap {
            n,
            cap: DEFAULT_CAP,
        });
    }
    let width = n * n - n + 1;
    let moments = chunked_reduce(trials, |_, range| {
        let mut acc = vec![Moments::new(); width];
        for t in range {
            let inst = trial_instance(n, p, spec, t).expect("checked");
            let set = enumerate_stable(&inst).expect("checked");
            let mut counts = vec![0u32; width];
            for (i, &(q, _)) in set.ranks.iter().enumerate() {
                if set.wives[i].iter().all(|&w| w != u8::MAX) {
                    counts[q as usize - n] += 1;
                }
            }
            for (m, c) in acc.iter_mut().zip(counts) {
                m.push(c as f64);
            }
        }
        acc
    });
    Ok(moments
        .expect("trials > 0")
        .iter()
        .map(Moments::estimate)
        .collect())
}
