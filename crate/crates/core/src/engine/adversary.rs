use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::graph::NodeId;

/// One message competing for a capped budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub sender: NodeId,
    pub seq: u32,
    pub bits: u64,
}

/// Chooses which over-budget messages survive in adversarial mode.
pub trait AdversaryPolicy: Send + Sync {
    /// Returns indices into `candidates` of the retained messages; their
    /// total size must not exceed `cap`.
    fn retain(&self, cap: u64, candidates: &[Candidate], rng: &mut ChaCha8Rng) -> Vec<usize>;
}

/// Keeps the prefix in ascending `(sender, seq)` order that fits the cap,
/// so the lexicographically largest messages are dropped first.
#[derive(Clone, Copy, Debug, Default)]
pub struct DropLargestFirst;

impl AdversaryPolicy for DropLargestFirst {
    fn retain(&self, cap: u64, candidates: &[Candidate], _rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by_key(|&i| (candidates[i].sender, candidates[i].seq));
        take_prefix(cap, candidates, order)
    }
}

/// Keeps a fitting prefix of a seeded random permutation.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomDrop;

impl AdversaryPolicy for RandomDrop {
    fn retain(&self, cap: u64, candidates: &[Candidate], rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.shuffle(rng);
        take_prefix(cap, candidates, order)
    }
}

fn take_prefix(cap: u64, candidates: &[Candidate], order: Vec<usize>) -> Vec<usize> {
    let mut used = 0u64;
    let mut kept = Vec::new();
    for i in order {
        if used + candidates[i].bits > cap {
            break;
        }
        used += candidates[i].bits;
        kept.push(i);
    }
    kept.sort_unstable();
    kept
}

/// Applies `policy` to the messages competing at one node.
pub fn adversary_drop(
    policy: &dyn AdversaryPolicy,
    cap: u64,
    candidates: &[Candidate],
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    if candidates.iter().map(|c| c.bits).sum::<u64>() <= cap {
        return (0..candidates.len()).collect();
    }
    policy.retain(cap, candidates, rng)
}
