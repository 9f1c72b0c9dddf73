//! Local-realist oracle. The certainty edges and the final exclusion are
//! turned into rules over deterministic outcome values, and two engines that
//! share no rule-evaluation code decide whether any assignment survives:
//! forward chaining from the premise outcomes, and model counting over a
//! clause encoding.

pub mod chain;
pub mod enumerate;
pub mod graph;

pub use chain::{forward_chain, replay, ContradictionCertificate, Step, StepRule, Violation};
pub use enumerate::{
    enumerate_assignments, enumerate_assignments_with, enumerate_exhaustive, Enumeration,
    ENUMERATION_LIMIT,
};
pub use graph::{
    graph_from_table, qubit_ladder_graph, Exclusion, GraphMode, Implication, InferenceGraph,
    ObservableDecl, ObservableId, Proposition, TriadRule,
};
