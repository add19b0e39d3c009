use thiserror::Error;

/// Configuration problems with a network description.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("a network needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node label {label} is outside [1, {node_count}]")]
    LabelOutOfRange { label: usize, node_count: usize },
    #[error("self loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected: node {0} is unreachable from node 1")]
    Disconnected(usize),
    #[error("vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("({0}, {1}) is neither an arc of the network nor a self pair")]
    UnknownArc(usize, usize),
    #[error("flow entry {index} is {value}; flows must be finite and nonnegative")]
    NegativeFlow { index: usize, value: f64 },
}

/// Problems constructing or evaluating payoff functions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PayoffError {
    #[error("argument {0} is outside [0, 1]")]
    OutOfDomain(f64),
    #[error("invalid payoff parameter: {0}")]
    InvalidParameter(String),
    #[error("custom density needs at least 101 grid points, got {0}")]
    GridTooCoarse(usize),
    #[error("custom density is not strictly decreasing at grid index {0}")]
    NotDecreasing(usize),
    #[error("mass {mass} cannot be spread over {nodes} node(s)")]
    InfeasibleMass { mass: f64, nodes: usize },
    #[error("level solve over an empty node set")]
    EmptyNodeSet,
}

/// Top-level error for the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Payoff(#[from] PayoffError),
    #[error("payoff profile has {profile} functions but the network has {nodes} nodes")]
    ProfileSize { profile: usize, nodes: usize },
    #[error("state is not on the simplex: {0}")]
    NotOnSimplex(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("KKT verification failed at node {node}: residual {residual:e}")]
    KktFailure { node: usize, residual: f64 },
    #[error("allocation is infeasible: {0}")]
    InfeasibleAllocation(String),
    #[error("no feasible support found for node {0}")]
    NoFeasibleSupport(usize),
    #[error("reallocation solver stopped after {iterations} iterations with projected-gradient norm {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("exhaustive search dimension {0} exceeds the limit of {1}")]
    DimensionTooLarge(usize, usize),
    #[error("component {index} fell to {value:e} after a step; reduce the step size")]
    StepTooLarge { index: usize, value: f64 },
    #[error("total mass drifted by {0:e} during a step")]
    MassDrift(f64),
}
