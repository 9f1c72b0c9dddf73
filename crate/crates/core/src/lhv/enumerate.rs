//! Model counting. Rules are compiled to clauses over one boolean per
//! observable (`true` is ħ², or "occurs" for qubit settings) and counted by
//! branching with unit propagation. A plain exhaustive sweep is kept as a
//! reference for small instances.

use serde::{Deserialize, Serialize};

use super::graph::{InferenceGraph, ObservableId, Proposition};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::state::Outcome;

/// Largest number of observables accepted.
pub const ENUMERATION_LIMIT: usize = 128;
/// Largest instance the exhaustive sweep accepts.
pub const EXHAUSTIVE_LIMIT: usize = 24;
const SPLIT_VARS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enumeration {
    pub observables: usize,
    /// Number of assignments satisfying every rule and premise.
    pub count: u128,
    /// One such assignment, if any.
    pub witness: Option<Vec<Proposition>>,
}

impl Enumeration {
    pub fn is_consistent(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lit {
    var: usize,
    positive: bool,
}

type Clause = Vec<Lit>;

fn compile(graph: &InferenceGraph, premises: &[Proposition]) -> Result<(usize, Vec<Clause>)> {
    let n = graph.observables.len();
    let var = |id: ObservableId| {
        graph
            .observables
            .iter()
            .position(|o| o.id == id)
            .ok_or_else(|| Error::MalformedGraph(format!("undeclared observable {id:?}")))
    };
    let lit = |p: &Proposition, negate: bool| -> Result<Lit> {
        Ok(Lit {
            var: var(p.observable)?,
            positive: (p.value == Outcome::One) != negate,
        })
    };
    let mut clauses = Vec::new();
    for r in &graph.implications {
        let mut c: Clause = r
            .antecedents
            .iter()
            .map(|p| lit(p, true))
            .collect::<Result<_>>()?;
        c.push(lit(&r.consequent, false)?);
        clauses.push(c);
    }
    for e in &graph.exclusions {
        clauses.push(
            e.propositions
                .iter()
                .map(|p| lit(p, true))
                .collect::<Result<_>>()?,
        );
    }
    for t in &graph.triads {
        let v: Vec<usize> = t
            .observables
            .iter()
            .map(|&id| var(id))
            .collect::<Result<_>>()?;
        // At least one zero, and no two zeros.
        clauses.push(
            v.iter()
                .map(|&var| Lit {
                    var,
                    positive: false,
                })
                .collect(),
        );
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            clauses.push(vec![
                Lit {
                    var: v[p],
                    positive: true,
                },
                Lit {
                    var: v[q],
                    positive: true,
                },
            ]);
        }
    }
    for p in premises {
        clauses.push(vec![lit(p, false)?]);
    }
    Ok((n, clauses))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Satisfied,
    Conflict,
    Unit(Lit),
    Open,
}

fn status(clause: &Clause, assign: &[Option<bool>]) -> Status {
    let mut free = None;
    let mut free_count = 0;
    for &l in clause {
        match assign[l.var] {
            Some(v) if v == l.positive => return Status::Satisfied,
            Some(_) => {}
            None => {
                free_count += 1;
                free = Some(l);
            }
        }
    }
    match (free_count, free) {
        (0, _) => Status::Conflict,
        (1, Some(l)) => Status::Unit(l),
        _ => Status::Open,
    }
}

/// Unit propagation to a fixed point; `false` on conflict.
fn propagate(clauses: &[Clause], assign: &mut [Option<bool>]) -> bool {
    loop {
        let mut changed = false;
        for c in clauses {
            match status(c, assign) {
                Status::Conflict => return false,
                Status::Unit(l) => {
                    assign[l.var] = Some(l.positive);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return true;
        }
    }
}

fn count(
    clauses: &[Clause],
    mut assign: Vec<Option<bool>>,
    witness: &mut Option<Vec<bool>>,
) -> u128 {
    if !propagate(clauses, &mut assign) {
        return 0;
    }
    let branch = clauses
        .iter()
        .find(|c| status(c, &assign) == Status::Open)
        .and_then(|c| c.iter().find(|l| assign[l.var].is_none()))
        .map(|l| l.var);
    match branch {
        None => {
            let free = assign.iter().filter(|a| a.is_none()).count() as u32;
            if witness.is_none() {
                *witness = Some(assign.iter().map(|a| a.unwrap_or(true)).collect());
            }
            1u128 << free
        }
        Some(v) => {
            let mut total = 0;
            for value in [false, true] {
                let mut next = assign.clone();
                next[v] = Some(value);
                total += count(clauses, next, witness);
            }
            total
        }
    }
}

fn to_propositions(graph: &InferenceGraph, values: &[bool]) -> Vec<Proposition> {
    graph
        .observables
        .iter()
        .zip(values)
        .map(|(o, &v)| Proposition {
            observable: o.id,
            value: if v { Outcome::One } else { Outcome::Zero },
        })
        .collect()
}

pub fn enumerate_assignments(
    graph: &InferenceGraph,
    premises: &[Proposition],
) -> Result<Enumeration> {
    enumerate_assignments_with(graph, premises, Execution::default())
}

/// Counts assignments by branching with unit propagation. The space is split
/// on the first few variables and the parts are counted independently.
pub fn enumerate_assignments_with(
    graph: &InferenceGraph,
    premises: &[Proposition],
    exec: Execution,
) -> Result<Enumeration> {
    let n = graph.observables.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooManyObservables {
            count: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let (n, clauses) = compile(graph, premises)?;
    let split = n.min(SPLIT_VARS);
    let parts = exec::map_range(exec, 1usize << split, |prefix| {
        let mut assign = vec![None; n];
        for (bit, slot) in assign.iter_mut().enumerate().take(split) {
            *slot = Some(prefix >> bit & 1 == 1);
        }
        let mut witness = None;
        let c = count(&clauses, assign, &mut witness);
        (c, witness)
    });
    let count = parts.iter().map(|(c, _)| c).sum();
    let witness = parts
        .into_iter()
        .find_map(|(_, w)| w)
        .map(|w| to_propositions(graph, &w));
    Ok(Enumeration {
        observables: n,
        count,
        witness,
    })
}

/// Checks every one of the `2ⁿ` assignments against the clauses.
pub fn enumerate_exhaustive(
    graph: &InferenceGraph,
    premises: &[Proposition],
    exec: Execution,
) -> Result<Enumeration> {
    let n = graph.observables.len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooManyObservables {
            count: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let (n, clauses) = compile(graph, premises)?;
    let split = n.min(SPLIT_VARS + 2);
    let rest = n - split;
    let parts = exec::map_range(exec, 1usize << split, |prefix| {
        let mut hits = 0u128;
        let mut first = None;
        for low in 0..1u64 << rest {
            let bits = (low << split) | prefix as u64;
            let ok = clauses
                .iter()
                .all(|c| c.iter().any(|l| (bits >> l.var & 1 == 1) == l.positive));
            if ok {
                hits += 1;
                first.get_or_insert(bits);
            }
        }
        (hits, first)
    });
    let count = parts.iter().map(|(c, _)| c).sum();
    let witness = parts.into_iter().find_map(|(_, w)| w).map(|bits| {
        to_propositions(
            graph,
            &(0..n).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>(),
        )
    });
    Ok(Enumeration {
        observables: n,
        count,
        witness,
    })
}
