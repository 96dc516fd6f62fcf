use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::graph::NodeId;

/// Bits one node moved in one round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NodeTally {
    pub global_sent: u64,
    pub global_recv: u64,
    pub local_sent: u64,
}

impl NodeTally {
    pub fn is_zero(&self) -> bool {
        self.global_sent == 0 && self.global_recv == 0 && self.local_sent == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    phase: usize,
    /// Sparse: only nodes with nonzero traffic, sorted by id.
    pub tallies: Vec<(NodeId, NodeTally)>,
}

/// Per-round, per-node record of local and global traffic, labelled by
/// pipeline phase.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundLedger {
    phases: Vec<String>,
    rows: Vec<RoundRecord>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PhaseSummary {
    pub rounds: u64,
    pub max_global_sent: u64,
    pub max_global_recv: u64,
    pub global_bits: u64,
    pub local_bits: u64,
}

impl RoundLedger {
    pub fn new() -> Self {
        Self::default()
    }

    fn phase_index(&mut self, phase: &str) -> usize {
        match self.phases.iter().position(|p| p == phase) {
            Some(i) => i,
            None => {
                self.phases.push(phase.to_string());
                self.phases.len() - 1
            }
        }
    }

    /// Appends one round. `dense` is indexed by node slot.
    pub(crate) fn push_dense(&mut self, phase: &str, dense: &[NodeTally]) {
        let tallies = dense
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_zero())
            .map(|(i, t)| (NodeId::from_index(i), *t))
            .collect();
        self.push_sparse(phase, tallies);
    }

    pub(crate) fn push_sparse(&mut self, phase: &str, tallies: Vec<(NodeId, NodeTally)>) {
        let phase = self.phase_index(phase);
        let round = self.rows.len() as u64 + 1;
        self.rows.push(RoundRecord { round, phase, tallies });
    }

    /// Appends `rounds` rows that carry no measured traffic. Used for costs
    /// that are charged by contract rather than executed message by message.
    pub fn charge(&mut self, phase: &str, rounds: u64) {
        for _ in 0..rounds {
            self.push_sparse(phase, Vec::new());
        }
    }

    pub fn rounds(&self) -> u64 {
        self.rows.len() as u64
    }

    pub fn rows(&self) -> &[RoundRecord] {
        &self.rows
    }

    pub fn phase_of(&self, row: &RoundRecord) -> &str {
        &self.phases[row.phase]
    }

    pub fn rounds_in_phase(&self, phase: &str) -> u64 {
        match self.phases.iter().position(|p| p == phase) {
            Some(i) => self.rows.iter().filter(|r| r.phase == i).count() as u64,
            None => 0,
        }
    }

    /// Rounds whose phase label starts with `prefix`.
    pub fn rounds_with_prefix(&self, prefix: &str) -> u64 {
        self.rows.iter().filter(|r| self.phases[r.phase].starts_with(prefix)).count() as u64
    }

    pub fn summaries(&self) -> BTreeMap<String, PhaseSummary> {
        let mut out: BTreeMap<String, PhaseSummary> = BTreeMap::new();
        for row in &self.rows {
            let s = out.entry(self.phases[row.phase].clone()).or_default();
            s.rounds += 1;
            for (_, t) in &row.tallies {
                s.max_global_sent = s.max_global_sent.max(t.global_sent);
                s.max_global_recv = s.max_global_recv.max(t.global_recv);
                s.global_bits += t.global_sent;
                s.local_bits += t.local_sent;
            }
        }
        out
    }

    pub fn max_global_sent(&self) -> u64 {
        self.rows.iter().flat_map(|r| r.tallies.iter()).map(|(_, t)| t.global_sent).max().unwrap_or(0)
    }

    pub fn max_global_recv(&self) -> u64 {
        self.rows.iter().flat_map(|r| r.tallies.iter()).map(|(_, t)| t.global_recv).max().unwrap_or(0)
    }

    pub fn total_global_sent(&self) -> u64 {
        self.rows.iter().flat_map(|r| r.tallies.iter()).map(|(_, t)| t.global_sent).sum()
    }

    pub fn total_global_recv(&self) -> u64 {
        self.rows.iter().flat_map(|r| r.tallies.iter()).map(|(_, t)| t.global_recv).sum()
    }

    /// CSV with columns `round, phase, node, global_sent_bits,
    /// global_recv_bits, local_bits`; one line per node with traffic.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "phase", "node", "global_sent_bits", "global_recv_bits", "local_bits"])?;
        for row in &self.rows {
            for (node, t) in &row.tallies {
                w.write_record([
                    row.round.to_string(),
                    self.phases[row.phase].clone(),
                    node.to_string(),
                    t.global_sent.to_string(),
                    t.global_recv.to_string(),
                    t.local_sent.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
