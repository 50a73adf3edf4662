use super::{total_ranks, MatchOutcome, Matching, Side, NONE};
use crate::instance::DenseInstance;

/// Sequential proposal algorithm on a dense instance.
///
/// Proposers start in index order; a displaced proposer resumes at once,
/// before the next fresh proposer starts. Inadmissible candidates are skipped
/// without counting a proposal.
pub fn propose(inst: &DenseInstance, proposer: Side) -> MatchOutcome {
    let n = inst.n();
    let lists: Vec<Vec<u32>> = (0..n)
        .map(|a| match proposer {
            Side::Men => inst.men_list(a),
            Side::Women => inst.women_list(a),
        })
        .collect();
    // receiver's score of a proposer; lower is better
    let recv_score = |a: usize, b: usize| match proposer {
        Side::Men => inst.y(a, b),
        Side::Women => inst.x(b, a),
    };

    let mut next = vec![0usize; n];
    let mut holder = vec![NONE; n];
    let mut proposals = 0u64;
    for start in 0..n {
        let mut a = start;
        while let Some(&b) = lists[a].get(next[a]) {
            next[a] += 1;
            proposals += 1;
            let b = b as usize;
            let h = holder[b];
            if h == NONE {
                holder[b] = a as u32;
                break;
            }
            if recv_score(a, b) < recv_score(h as usize, b) {
                holder[b] = a as u32;
                a = h as usize;
            }
        }
    }

    let matching = Matching::from_holders(proposer, &holder);
    let (q, r) = total_ranks(inst, &matching).expect("same n");
    MatchOutcome {
        size: matching.size(),
        matching,
        proposals,
        q,
        r,
        proposer,
    }
}
