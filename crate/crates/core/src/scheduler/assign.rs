use std::collections::BTreeMap;

use crate::error::ScheduleError;
use crate::graph::NodeId;
use crate::skeleton::{HelperFamily, SkeletonGraph};

/// Which helper of each skeleton node simulates which algorithm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperAssignment {
    /// Helpers of every skeleton node in ascending id order.
    pub helpers: BTreeMap<NodeId, Vec<NodeId>>,
    pub k: usize,
    /// Algorithms per helper, `ceil(k / smallest helper set)`.
    pub ell: usize,
}

impl HelperAssignment {
    /// Helper of `u` that simulates algorithm `alg` (0-based).
    pub fn helper_for(&self, u: NodeId, alg: usize) -> Option<NodeId> {
        self.helpers.get(&u).and_then(|hs| hs.get(alg / self.ell).copied())
    }

    /// Algorithms (0-based) assigned to the `j`-th helper (0-based).
    pub fn algorithms_of(&self, j: usize) -> std::ops::Range<usize> {
        (j * self.ell).min(self.k)..((j + 1) * self.ell).min(self.k)
    }

    /// Number of helpers per skeleton node that get any work.
    pub fn helpers_in_use(&self) -> usize {
        self.k.div_ceil(self.ell)
    }
}

/// Block assignment: algorithm `a` goes to helper `a / ℓ` of every
/// skeleton node.
pub fn assign_algorithms(
    skeleton: &SkeletonGraph,
    family: &HelperFamily,
    k: usize,
) -> Result<HelperAssignment, ScheduleError> {
    let mut helpers = BTreeMap::new();
    for &u in skeleton.nodes() {
        let set = family.get(u).ok_or(ScheduleError::MissingHelperSet(u))?;
        if set.is_empty() {
            return Err(ScheduleError::EmptyHelperSet(u));
        }
        let mut set = set.to_vec();
        set.sort_unstable();
        helpers.insert(u, set);
    }
    let m = helpers.values().map(Vec::len).min().unwrap_or(1);
    let k = k.max(1);
    Ok(HelperAssignment { helpers, k, ell: k.div_ceil(m) })
}

/// The helpers simulating algorithm `alg` at the two ends of a skeleton
/// edge.
pub fn pair_helpers(assignment: &HelperAssignment, u: NodeId, v: NodeId, alg: usize) -> Option<(NodeId, NodeId)> {
    Some((assignment.helper_for(u, alg)?, assignment.helper_for(v, alg)?))
}
