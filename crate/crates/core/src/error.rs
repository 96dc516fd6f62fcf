use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("empty weight range [{lo}, {hi}]")]
    EmptyWeightRange { lo: u64, hi: u64 },
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("self-loop at node {0}")]
    SelfLoop(u32),
    #[error("parallel edge {0}-{1}")]
    ParallelEdge(u32, u32),
    #[error("edge {u}-{v} has weight {weight} outside [1, {max}]")]
    WeightOutOfRange { u: u32, v: u32, weight: u64, max: u64 },
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("malformed edge list at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures raised by the round engine.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("round {round}: node {node} sent {bits} global bits, cap is {cap}")]
    GlobalSendCap { node: NodeId, round: u64, bits: u64, cap: u64 },
    #[error("round {round}: node {node} received {bits} global bits, cap is {cap}")]
    GlobalReceiveCap { node: NodeId, round: u64, bits: u64, cap: u64 },
    #[error("round {round}: edge {from}-{to} carried {bits} local bits, cap is {cap}")]
    LocalEdgeCap { from: NodeId, to: NodeId, round: u64, bits: u64, cap: u64 },
    #[error("round {round}: node {from} sent a local message to non-neighbor {to}")]
    NotANeighbor { from: NodeId, to: NodeId, round: u64 },
    #[error("round {round}: message addressed to unknown node {to}")]
    UnknownDestination { to: NodeId, round: u64 },
    #[error("a single {bits}-bit message can never fit the global cap of {cap} bits")]
    MessageTooLarge { bits: u64, cap: u64 },
    #[error("no termination within {max_rounds} rounds")]
    Timeout { max_rounds: u64 },
}

#[derive(Debug, Error)]
pub enum MinorError {
    #[error("operator {op} cannot combine value {value}")]
    DomainMismatch { op: &'static str, value: String },
    #[error("value {value} needs {bits} bits, cap is {cap}")]
    ValueTooWide { value: String, bits: u32, cap: u32 },
    #[error("missing aggregation value for cross edge {edge} at supernode side of node {node}")]
    MissingEdgeValue { edge: usize, node: NodeId },
    #[error("member set is not connected by the given edges")]
    DisconnectedMembers,
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum EulerError {
    #[error("node {0} has odd degree {1} in the target subgraph")]
    OddDegree(NodeId, usize),
    #[error("edge {0}-{1} is not an edge of the host graph")]
    NotAHostEdge(NodeId, NodeId),
    #[error("{count} virtual nodes exceed the bound {bound}")]
    TooManyVirtualNodes { count: usize, bound: usize },
    #[error("edge {0}-{1} appears twice")]
    DuplicateEdge(NodeId, NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum SkeletonError {
    #[error("sampling probability {0} outside (0, 1]")]
    BadProbability(f64),
    #[error("hop radius must be at least 1")]
    ZeroHopRadius,
    #[error("helper set for {node} reached only {size} of {mu} members within radius {mu}")]
    HelperShortfall { node: NodeId, size: usize, mu: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("skeleton node {0} has an empty helper set")]
    EmptyHelperSet(NodeId),
    #[error("skeleton node {0} has no helper set")]
    MissingHelperSet(NodeId),
    #[error("algorithm {algorithm} exceeded its round bound {bound}")]
    RoundBoundExceeded { algorithm: usize, bound: u64 },
    #[error("algorithm {algorithm} at {node} addressed {to}, which is not a skeleton neighbor")]
    NotASkeletonNeighbor { algorithm: usize, node: NodeId, to: NodeId },
    #[error("algorithm {algorithm} at {node} addressed {to}, which is not a skeleton node")]
    NotASkeletonNode { algorithm: usize, node: NodeId, to: NodeId },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum KsspError {
    #[error("source {0} is not a skeleton node")]
    SourceNotInSkeleton(NodeId),
    #[error("no skeleton node within {h} hops of source {source_node}; hop radius too small")]
    NoProxy { source_node: NodeId, h: u32 },
    #[error("pipeline precondition violated: {0}")]
    Precondition(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Minor(#[from] MinorError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Kssp(#[from] KsspError),
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
