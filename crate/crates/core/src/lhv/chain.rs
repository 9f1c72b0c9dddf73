//! Breadth-first forward chaining. Each round fires every rule whose
//! antecedents held at the start of the round, so derivations come out in
//! the order the ladder climbs down.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::{InferenceGraph, ObservableId, Proposition};
use crate::error::{Error, Result};
use crate::state::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rule", rename_all = "kebab-case")]
pub enum StepRule {
    Implication(usize),
    /// Forced by a triad rule: two ħ² force the third to 0, a 0 forces ħ².
    Triad(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub round: usize,
    pub rule: StepRule,
    pub derived: Proposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Exclusion {
        rule: usize,
    },
    /// Two derivations disagree on a value.
    Conflict {
        step: Option<usize>,
        observable: ObservableId,
    },
    /// Two zeros, or three ħ², among a triad.
    Triad {
        rule: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionCertificate {
    pub premises: Vec<Proposition>,
    pub steps: Vec<Step>,
    /// `None` when the closure is consistent.
    pub violation: Option<Violation>,
    /// Every value known at the end, in observable order.
    pub closure: Vec<Proposition>,
}

impl ContradictionCertificate {
    pub fn is_contradiction(&self) -> bool {
        self.violation.is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::MalformedGraph(e.to_string()))
    }
}

type Known = BTreeMap<ObservableId, Outcome>;

fn holds(known: &Known, p: &Proposition) -> bool {
    known.get(&p.observable) == Some(&p.value)
}

fn triad_forcing(graph: &InferenceGraph, known: &Known, rule: usize) -> Vec<Proposition> {
    let obs = graph.triads[rule].observables;
    let values: Vec<Option<Outcome>> = obs.iter().map(|o| known.get(o).copied()).collect();
    let zeros = values.iter().filter(|v| **v == Some(Outcome::Zero)).count();
    let ones = values.iter().filter(|v| **v == Some(Outcome::One)).count();
    let fill = if zeros == 1 {
        Outcome::One
    } else if zeros == 0 && ones == 2 {
        Outcome::Zero
    } else {
        return Vec::new();
    };
    obs.iter()
        .zip(&values)
        .filter(|(_, v)| v.is_none())
        .map(|(o, _)| Proposition {
            observable: *o,
            value: fill,
        })
        .collect()
}

fn triad_broken(graph: &InferenceGraph, known: &Known, rule: usize) -> bool {
    let values: Vec<Option<&Outcome>> = graph.triads[rule]
        .observables
        .iter()
        .map(|o| known.get(o))
        .collect();
    let zeros = values
        .iter()
        .filter(|v| **v == Some(&Outcome::Zero))
        .count();
    let ones = values.iter().filter(|v| **v == Some(&Outcome::One)).count();
    zeros > 1 || ones == 3
}

fn first_violation(graph: &InferenceGraph, known: &Known) -> Option<Violation> {
    if let Some(rule) = graph
        .exclusions
        .iter()
        .position(|e| e.propositions.iter().all(|p| holds(known, p)))
    {
        return Some(Violation::Exclusion { rule });
    }
    (0..graph.triads.len())
        .find(|&r| triad_broken(graph, known, r))
        .map(|rule| Violation::Triad { rule })
}

/// Closure of the premises under implications and triad forcing, stopping at
/// the first violated rule.
pub fn forward_chain(graph: &InferenceGraph, premises: &[Proposition]) -> ContradictionCertificate {
    let mut known = Known::new();
    let mut steps = Vec::new();
    let mut violation = None;
    for p in premises {
        match known.insert(p.observable, p.value) {
            Some(v) if v != p.value => {
                violation = Some(Violation::Conflict {
                    step: None,
                    observable: p.observable,
                });
                break;
            }
            _ => {}
        }
    }
    if violation.is_none() {
        violation = first_violation(graph, &known);
    }
    let mut round = 0;
    while violation.is_none() {
        round += 1;
        let mut fired: Vec<(StepRule, Proposition)> = Vec::new();
        for (i, r) in graph.implications.iter().enumerate() {
            if r.antecedents.iter().all(|p| holds(&known, p)) && !holds(&known, &r.consequent) {
                fired.push((StepRule::Implication(i), r.consequent));
            }
        }
        for t in 0..graph.triads.len() {
            for p in triad_forcing(graph, &known, t) {
                fired.push((StepRule::Triad(t), p));
            }
        }
        let mut changed = false;
        for (rule, derived) in fired {
            if holds(&known, &derived) {
                continue;
            }
            steps.push(Step {
                round,
                rule,
                derived,
            });
            if known.insert(derived.observable, derived.value).is_some() {
                violation = Some(Violation::Conflict {
                    step: Some(steps.len() - 1),
                    observable: derived.observable,
                });
                break;
            }
            changed = true;
        }
        if violation.is_none() {
            violation = first_violation(graph, &known);
        }
        if !changed {
            break;
        }
    }
    let mut closure: Vec<Proposition> = known
        .into_iter()
        .map(|(observable, value)| Proposition { observable, value })
        .collect();
    closure.sort_by_key(|p| graph.position(p.observable));
    ContradictionCertificate {
        premises: premises.to_vec(),
        steps,
        violation,
        closure,
    }
}

/// Re-derives every step of a certificate from its premises and checks that
/// the claimed violation follows.
pub fn replay(graph: &InferenceGraph, cert: &ContradictionCertificate) -> Result<()> {
    let bad = |msg: String| Err(Error::MalformedGraph(msg));
    let mut known = Known::new();
    for p in &cert.premises {
        if graph.position(p.observable).is_none() {
            return bad(format!(
                "premise on undeclared observable {:?}",
                p.observable
            ));
        }
        if let Some(v) = known.insert(p.observable, p.value) {
            if v != p.value {
                return match cert.violation {
                    Some(Violation::Conflict {
                        step: None,
                        observable,
                    }) if observable == p.observable => Ok(()),
                    _ => bad("premises conflict".into()),
                };
            }
        }
    }
    for (i, s) in cert.steps.iter().enumerate() {
        let justified = match s.rule {
            StepRule::Implication(r) => match graph.implications.get(r) {
                Some(rule) => {
                    rule.consequent == s.derived
                        && rule.antecedents.iter().all(|p| holds(&known, p))
                }
                None => false,
            },
            StepRule::Triad(r) => {
                r < graph.triads.len() && triad_forcing(graph, &known, r).contains(&s.derived)
            }
        };
        if !justified {
            return bad(format!("step {i} is not justified"));
        }
        if let Some(prev) = known.insert(s.derived.observable, s.derived.value) {
            if prev != s.derived.value {
                return match cert.violation {
                    Some(Violation::Conflict { step: Some(j), .. }) if j == i => Ok(()),
                    _ => bad(format!("step {i} conflicts with an earlier value")),
                };
            }
        }
    }
    match &cert.violation {
        None => Ok(()),
        Some(Violation::Exclusion { rule }) => match graph.exclusions.get(*rule) {
            Some(e) if e.propositions.iter().all(|p| holds(&known, p)) => Ok(()),
            _ => bad(format!("exclusion {rule} is not violated")),
        },
        Some(Violation::Triad { rule })
            if *rule < graph.triads.len() && triad_broken(graph, &known, *rule) =>
        {
            Ok(())
        }
        Some(v) => bad(format!("claimed violation {v:?} does not follow")),
    }
}
