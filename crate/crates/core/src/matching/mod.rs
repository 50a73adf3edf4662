//! Partial matchings, stability, partner ranks and the proposal algorithm.

mod dense;
mod lazy;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::DenseInstance;

pub use dense::propose;
pub use lazy::propose_lazy;

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Men,
    Women,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Men => Side::Women,
            Side::Women => Side::Men,
        }
    }

    /// Maps a (person on this side, person on the other side) pair to
    /// `(man, woman)`.
    #[inline]
    pub fn orient(self, mine: usize, theirs: usize) -> (usize, usize) {
        match self {
            Side::Men => (mine, theirs),
            Side::Women => (theirs, mine),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Men => "man",
            Side::Women => "woman",
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "men" | "man" | "m" => Ok(Side::Men),
            "women" | "woman" | "w" => Ok(Side::Women),
            other => Err(Error::Config(format!("unknown side {other:?}"))),
        }
    }
}

/// A partial matching, stored as two partner arrays.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    wife: Vec<u32>,
    husband: Vec<u32>,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Matching {
            wife: vec![NONE; n],
            husband: vec![NONE; n],
        }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut m = Matching::empty(n);
        for &(man, woman) in pairs {
            for idx in [man, woman] {
                if idx >= n {
                    return Err(Error::OutOfRange { index: idx, n });
                }
            }
            if m.wife[man] != NONE {
                return Err(Error::NotInjective { person: man });
            }
            if m.husband[woman] != NONE {
                return Err(Error::NotInjective { person: woman });
            }
            m.wife[man] = woman as u32;
            m.husband[woman] = man as u32;
        }
        Ok(m)
    }

    /// `holder[b]` is the proposer holding receiver `b`, or `NONE`.
    pub(crate) fn from_holders(proposer: Side, holder: &[u32]) -> Self {
        let n = holder.len();
        let mut m = Matching::empty(n);
        for (b, &a) in holder.iter().enumerate() {
            if a != NONE {
                let (man, woman) = proposer.orient(a as usize, b);
                m.wife[man] = woman as u32;
                m.husband[woman] = man as u32;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.wife.len()
    }

    pub fn size(&self) -> usize {
        self.wife.iter().filter(|&&w| w != NONE).count()
    }

    pub fn is_complete(&self) -> bool {
        self.wife.iter().all(|&w| w != NONE)
    }

    pub fn wife_of(&self, man: usize) -> Option<usize> {
        self.wife
            .get(man)
            .filter(|&&w| w != NONE)
            .map(|&w| w as usize)
    }

    pub fn husband_of(&self, woman: usize) -> Option<usize> {
        self.husband
            .get(woman)
            .filter(|&&m| m != NONE)
            .map(|&m| m as usize)
    }

    pub fn partner(&self, side: Side, person: usize) -> Option<usize> {
        match side {
            Side::Men => self.wife_of(person),
            Side::Women => self.husband_of(person),
        }
    }

    /// Matched pairs `(man, woman)` in man order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n())
            .filter_map(|m| self.wife_of(m).map(|w| (m, w)))
            .collect()
    }

    /// The matched men (T1).
    pub fn matched_men(&self) -> Vec<usize> {
        (0..self.n()).filter(|&m| self.wife[m] != NONE).collect()
    }

    /// The matched women (T2).
    pub fn matched_women(&self) -> Vec<usize> {
        (0..self.n()).filter(|&w| self.husband[w] != NONE).collect()
    }
}

/// Result of one run of the proposal algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub matching: Matching,
    /// Number of matched pairs.
    pub size: usize,
    /// Proposal count. Dense runs count proposals to admissible partners only;
    /// lazy runs count every list position visited. Not comparable across modes.
    pub proposals: u64,
    /// Total rank of wives among admissible women, over matched men.
    pub q: u64,
    /// Total rank of husbands among admissible men, over matched women.
    pub r: u64,
    pub proposer: Side,
}

/// Which of the three blocking configurations a pair realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Clause {
    /// (i) both matched, each prefers the other to their partner.
    BothMatched,
    /// (ii) the man is unmatched; the woman is unmatched or prefers him.
    ManUnmatched,
    /// (iii) the man is matched and prefers the woman, who is unmatched.
    WomanUnmatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockingPair {
    pub man: usize,
    pub woman: usize,
    pub clause: Clause,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BlockingReport {
    pub violations: Vec<BlockingPair>,
}

impl BlockingReport {
    pub fn is_stable(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_same_n(inst: &DenseInstance, matching: &Matching) -> Result<()> {
    if inst.n() == matching.n() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "matching has n = {}, instance has n = {}",
            matching.n(),
            inst.n()
        )))
    }
}

/// The blocking configuration of `(man, woman)` under `matching`, if any.
#[inline]
pub(crate) fn blocking_clause(
    inst: &DenseInstance,
    matching: &Matching,
    man: usize,
    woman: usize,
) -> Option<Clause> {
    if !inst.admissible(man, woman) {
        return None;
    }
    let wife = matching.wife_of(man);
    let husband = matching.husband_of(woman);
    if wife == Some(woman) {
        return None;
    }
    let man_wants = wife.is_none_or(|cur| inst.x(man, woman) < inst.x(man, cur));
    let woman_wants = husband.is_none_or(|cur| inst.y(man, woman) < inst.y(cur, woman));
    if !(man_wants && woman_wants) {
        return None;
    }
    Some(match (wife, husband) {
        (Some(_), Some(_)) => Clause::BothMatched,
        (None, _) => Clause::ManUnmatched,
        (Some(_), None) => Clause::WomanUnmatched,
    })
}

/// Lists every blocking pair of `matching`. An empty report means the
/// matching is stable.
pub fn verify_stable(inst: &DenseInstance, matching: &Matching) -> Result<BlockingReport> {
    check_same_n(inst, matching)?;
    for (man, woman) in matching.pairs() {
        if !inst.admissible(man, woman) {
            return Err(Error::InadmissiblePair { man, woman });
        }
    }
    let n = inst.n();
    let mut violations = Vec::new();
    for man in 0..n {
        for woman in 0..n {
            if let Some(clause) = blocking_clause(inst, matching, man, woman) {
                violations.push(BlockingPair { man, woman, clause });
            }
        }
    }
    Ok(BlockingReport { violations })
}

/// 1 + the number of admissible partners `person` strictly prefers to their
/// current partner.
pub fn partner_rank(
    inst: &DenseInstance,
    matching: &Matching,
    person: usize,
    side: Side,
) -> Result<u64> {
    check_same_n(inst, matching)?;
    let n = inst.n();
    if person >= n {
        return Err(Error::OutOfRange { index: person, n });
    }
    let partner = matching.partner(side, person).ok_or(Error::Unmatched {
        side: side.name(),
        person,
    })?;
    Ok(rank_of(inst, side, person, partner))
}

#[inline]
fn rank_of(inst: &DenseInstance, side: Side, person: usize, partner: usize) -> u64 {
    let n = inst.n();
    let better = match side {
        Side::Men => {
            let cut = inst.x(person, partner);
            (0..n)
                .filter(|&w| inst.admissible(person, w) && inst.x(person, w) < cut)
                .count()
        }
        Side::Women => {
            let cut = inst.y(partner, person);
            (0..n)
                .filter(|&m| inst.admissible(m, person) && inst.y(m, person) < cut)
                .count()
        }
    };
    1 + better as u64
}

/// `(Q, R)`: total partner rank over matched men and over matched women.
pub fn total_ranks(inst: &DenseInstance, matching: &Matching) -> Result<(u64, u64)> {
    check_same_n(inst, matching)?;
    let q = matching
        .pairs()
        .into_iter()
        .map(|(m, w)| rank_of(inst, Side::Men, m, w))
        .sum();
    let r = matching
        .pairs()
        .into_iter()
        .map(|(m, w)| rank_of(inst, Side::Women, w, m))
        .sum();
    Ok((q, r))
}
