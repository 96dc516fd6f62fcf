use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::{Context, Engine, NodeProgram, Payload};
use crate::error::EngineError;
use crate::graph::{bit_length, log2_ceil, NodeId};
use crate::rng::{derived_rng, stream};

/// Constant of the round budget `C_TOK * max(1, sqrt(k / y)) * ceil(log2 n)^2`.
pub const C_TOK: f64 = 1.0;

/// A small item that every node must learn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub holder: NodeId,
    pub words: Vec<u64>,
}

impl Token {
    pub fn bits(&self) -> u64 {
        self.words.iter().map(|&w| bit_length(w) as u64).sum()
    }
}

/// Round budget for `k` tokens over `y` instances on `n` nodes.
pub fn token_budget(k: usize, y: usize, n: usize) -> u64 {
    let log = log2_ceil(n) as f64;
    (C_TOK * (k as f64 / y.max(1) as f64).sqrt().max(1.0) * log * log).ceil() as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisseminationReport {
    pub rounds: u64,
    pub instances: usize,
    /// Tokens handled by each instance.
    pub loads: Vec<usize>,
    /// Token indices each node ended up holding, sorted.
    pub known: Vec<Vec<usize>>,
}

impl DisseminationReport {
    pub fn max_load(&self) -> usize {
        self.loads.iter().copied().max().unwrap_or(0)
    }

    pub fn complete(&self, k: usize) -> bool {
        self.known.iter().all(|ks| ks.len() == k)
    }
}

/// Bits of one dissemination message for the given tokens and instances.
pub fn token_message_bits(engine: &Engine<'_>, tokens: &[Token], instances: usize) -> u64 {
    let max_token = tokens.iter().map(Token::bits).max().unwrap_or(1);
    engine.limits().header_bits + bit_length(instances as u64) as u64 + 2 + max_token
}

#[derive(Clone, Debug)]
enum Kind {
    Up(usize),
    UpDone,
    Down(usize),
    DownDone,
}

#[derive(Clone, Debug)]
struct TokenMsg {
    instance: usize,
    kind: Kind,
    bits: u64,
}

impl Payload for TokenMsg {
    fn payload_bits(&self) -> u64 {
        self.bits
    }
}

/// One node's role in one instance's tree.
#[derive(Clone, Debug, Default)]
struct Slot {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    /// Sends up only in rounds of this parity, so siblings never collide.
    parity: u64,
    up: VecDeque<usize>,
    children_done: usize,
    up_done: bool,
    down: [VecDeque<usize>; 2],
    down_closed: bool,
    child_closed: [bool; 2],
    finished: bool,
}

struct Disseminator {
    slots: Vec<Slot>,
    known: Vec<usize>,
    tag_bits: u64,
    /// Bits per piece.
    token_bits: Vec<u64>,
}

impl Disseminator {
    fn msg(&self, instance: usize, kind: Kind) -> TokenMsg {
        let token = match kind {
            Kind::Up(t) | Kind::Down(t) => self.token_bits[t],
            _ => 0,
        };
        TokenMsg { instance, kind, bits: self.tag_bits + 2 + token }
    }
}

impl NodeProgram for Disseminator {
    type Msg = TokenMsg;

    fn step(&mut self, ctx: &mut Context<'_, TokenMsg>) {
        for (_, m) in ctx.global_inbox() {
            let slot = &mut self.slots[m.instance];
            match m.kind {
                Kind::Up(t) => {
                    slot.up.push_back(t);
                    self.known.push(t);
                }
                Kind::UpDone => slot.children_done += 1,
                Kind::Down(t) => {
                    self.known.push(t);
                    for q in &mut slot.down {
                        q.push_back(t);
                    }
                }
                Kind::DownDone => slot.down_closed = true,
            }
        }
        let round = ctx.round();
        let mut out = Vec::new();
        for (i, slot) in self.slots.iter_mut().enumerate() {
            if slot.finished {
                continue;
            }
            if !slot.up_done {
                let all_in = slot.children_done == slot.children.len();
                match slot.parent {
                    Some(p) => {
                        if round % 2 == slot.parity {
                            if let Some(t) = slot.up.pop_front() {
                                out.push((p, i, Kind::Up(t)));
                            } else if all_in {
                                out.push((p, i, Kind::UpDone));
                                slot.up_done = true;
                            }
                        }
                    }
                    None if all_in => {
                        slot.up_done = true;
                        slot.down_closed = true;
                        let all: Vec<usize> = slot.up.drain(..).collect();
                        for q in &mut slot.down {
                            q.extend(all.iter().copied());
                        }
                    }
                    None => {}
                }
                if !slot.up_done {
                    continue;
                }
            }
            // Down phase: child c is served in rounds of parity c.
            let c = (round % 2) as usize;
            if let Some(&child) = slot.children.get(c).filter(|_| !slot.child_closed[c]) {
                if let Some(t) = slot.down[c].pop_front() {
                    out.push((child, i, Kind::Down(t)));
                } else if slot.down_closed {
                    out.push((child, i, Kind::DownDone));
                    slot.child_closed[c] = true;
                }
            }
            if slot.down_closed && (0..slot.children.len()).all(|c| slot.child_closed[c]) {
                slot.finished = true;
            }
        }
        for (to, i, kind) in out {
            let msg = self.msg(i, kind);
            ctx.send_global(to, msg);
        }
        if self.slots.iter().all(|s| s.finished) {
            ctx.halt();
        }
    }
}

/// Every node learns every token. Tokens are spread over `instances`
/// independent gather/broadcast passes, each on its own randomly permuted
/// balanced binary tree over all nodes and each with a `1 / instances`
/// share of γ; a token joins an instance chosen uniformly at random. Runs
/// in phase "kssp.tokens".
pub fn token_dissemination(
    engine: &mut Engine<'_>,
    tokens: &[Token],
    instances: usize,
    seed: u64,
) -> Result<DisseminationReport, EngineError> {
    let n = engine.graph().node_count();
    let y = instances.max(1);
    let mut rng = derived_rng(seed, &[stream::TOKENS]);
    let assignment: Vec<usize> = tokens.iter().map(|_| rng.gen_range(0..y)).collect();
    let mut loads = vec![0; y];
    for &a in &assignment {
        loads[a] += 1;
    }

    // Tokens wider than a message are cut into pieces that travel
    // separately through the token's instance.
    let limits = engine.limits();
    let tag_bits = bit_length(y as u64) as u64;
    let overhead = limits.header_bits + tag_bits + 2;
    let room = (limits.gamma / y as u64).saturating_sub(overhead);
    if room == 0 {
        return Err(EngineError::MessageTooLarge { bits: overhead + 1, cap: limits.gamma / y as u64 });
    }
    let mut piece_bits = Vec::new();
    let mut piece_token = Vec::new();
    for (t, token) in tokens.iter().enumerate() {
        let mut left = token.bits();
        while left > 0 {
            piece_bits.push(left.min(room));
            piece_token.push(t);
            left -= left.min(room);
        }
    }
    let mut programs: Vec<Disseminator> = (0..n)
        .map(|_| Disseminator {
            slots: vec![Slot::default(); y],
            known: Vec::new(),
            tag_bits,
            token_bits: piece_bits.clone(),
        })
        .collect();
    for inst in 0..y {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut derived_rng(seed, &[stream::INSTANCE, inst as u64]));
        for (pos, &v) in order.iter().enumerate() {
            let slot = &mut programs[v].slots[inst];
            slot.parent = (pos > 0).then(|| NodeId::from_index(order[(pos - 1) / 2]));
            slot.parity = ((pos + 1) % 2) as u64;
            slot.children =
                [2 * pos + 1, 2 * pos + 2].iter().filter(|&&c| c < n).map(|&c| NodeId::from_index(order[c])).collect();
        }
    }
    for (piece, &t) in piece_token.iter().enumerate() {
        let p = &mut programs[tokens[t].holder.index()];
        p.slots[assignment[t]].up.push_back(piece);
        p.known.push(piece);
    }

    let outer = engine.set_phase("kssp.tokens");
    let before = engine.ledger().rounds();
    let result = engine.run(programs);
    engine.set_phase(&outer);
    let done = result?;
    let rounds = engine.ledger().rounds() - before;
    let mut pieces_of = vec![0usize; tokens.len()];
    for &t in &piece_token {
        pieces_of[t] += 1;
    }
    let known = done
        .into_iter()
        .map(|p| {
            let mut held = vec![0usize; tokens.len()];
            let mut pieces = p.known;
            pieces.sort_unstable();
            pieces.dedup();
            for piece in pieces {
                held[piece_token[piece]] += 1;
            }
            (0..tokens.len()).filter(|&t| held[t] == pieces_of[t]).collect()
        })
        .collect();
    Ok(DisseminationReport { rounds, instances: y, loads, known })
}
