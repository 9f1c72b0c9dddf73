use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::direction::Direction3;
use crate::error::{Error, Result};
use crate::ladder::{DirectionTable, EventRef, VerificationReport, GEOMETRY_TOL};
use crate::state::{Outcome, Particle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservableId {
    pub particle: Particle,
    /// Position among this particle's distinct directions.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableDecl {
    pub id: ObservableId,
    pub label: String,
    /// `None` for abstract observables such as the qubit settings.
    pub direction: Option<Direction3>,
}

/// An observable taking a value: 0 or ħ² for squared spin components; for
/// qubit settings `One` means the projective event occurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Proposition {
    pub observable: ObservableId,
    pub value: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Implication {
    pub antecedents: Vec<Proposition>,
    pub consequent: Proposition,
}

/// Propositions that cannot all hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub propositions: Vec<Proposition>,
}

/// Three mutually orthogonal squared components on one particle: exactly one
/// of them is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriadRule {
    pub observables: [ObservableId; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InferenceGraph {
    pub observables: Vec<ObservableDecl>,
    pub implications: Vec<Implication>,
    pub exclusions: Vec<Exclusion>,
    pub triads: Vec<TriadRule>,
    /// The starting outcomes the ladder is run from.
    pub premises: Vec<Proposition>,
}

impl InferenceGraph {
    pub fn position(&self, id: ObservableId) -> Option<usize> {
        self.observables.iter().position(|o| o.id == id)
    }

    pub fn label(&self, id: ObservableId) -> &str {
        self.observables
            .iter()
            .find(|o| o.id == id)
            .map_or("?", |o| o.label.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        let declared: BTreeSet<ObservableId> = self.observables.iter().map(|o| o.id).collect();
        if declared.len() != self.observables.len() {
            return Err(Error::MalformedGraph("duplicate observable id".into()));
        }
        let check = |p: &Proposition| {
            if declared.contains(&p.observable) {
                Ok(())
            } else {
                Err(Error::MalformedGraph(format!(
                    "undeclared observable {:?}",
                    p.observable
                )))
            }
        };
        for r in &self.implications {
            r.antecedents.iter().try_for_each(check)?;
            check(&r.consequent)?;
        }
        for e in &self.exclusions {
            e.propositions.iter().try_for_each(check)?;
        }
        self.premises.iter().try_for_each(check)?;
        for t in &self.triads {
            let [a, b, c] = t.observables;
            if a.particle != b.particle || b.particle != c.particle {
                return Err(Error::MalformedGraph("triad spans both particles".into()));
            }
            let dirs: Vec<Option<Direction3>> = t
                .observables
                .iter()
                .map(|id| {
                    self.observables
                        .iter()
                        .find(|o| o.id == *id)
                        .map(|o| o.direction)
                        .ok_or_else(|| {
                            Error::MalformedGraph(format!("undeclared observable {id:?}"))
                        })
                })
                .collect::<Result<_>>()?;
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                match (dirs[p], dirs[q]) {
                    (Some(u), Some(v)) if u.is_orthogonal(&v, GEOMETRY_TOL) => {}
                    _ => {
                        return Err(Error::MalformedGraph(
                            "triad directions are not mutually orthogonal".into(),
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: InferenceGraph =
            serde_json::from_str(s).map_err(|e| Error::MalformedGraph(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }
}

/// How much of a table is trusted when turning it into rules.
#[derive(Debug, Clone, Copy)]
pub enum GraphMode<'a> {
    /// Every edge and the exclusion, backed by a passing Born-rule report.
    Strict(&'a VerificationReport),
    /// Only edges whose geometric shape holds, and the exclusion only when
    /// `A_0 ⊥ B_0`.
    Geometric,
}

pub fn graph_from_table(table: &DirectionTable, mode: GraphMode<'_>) -> Result<InferenceGraph> {
    if let GraphMode::Strict(report) = mode {
        if !report.pass || report.k != table.k || report.edges.len() != table.edges.len() {
            return Err(Error::UnverifiedTable);
        }
    }
    let mut g = InferenceGraph::default();
    let mut a_ids = Vec::with_capacity(table.a_events.len());
    let mut b_ids = Vec::with_capacity(table.b_events.len());
    for (particle, events, ids, prefix) in [
        (Particle::One, &table.a_events, &mut a_ids, "A"),
        (Particle::Two, &table.b_events, &mut b_ids, "B"),
    ] {
        let mut seen: Vec<(Direction3, ObservableId)> = Vec::new();
        for (i, e) in events.iter().enumerate() {
            let id = match seen
                .iter()
                .find(|(d, _)| d.is_parallel(&e.direction, GEOMETRY_TOL))
            {
                Some(&(_, id)) => id,
                None => {
                    let id = ObservableId {
                        particle,
                        index: seen.len(),
                    };
                    seen.push((e.direction, id));
                    g.observables.push(ObservableDecl {
                        id,
                        label: format!("{prefix}{i}"),
                        direction: Some(e.direction),
                    });
                    id
                }
            };
            ids.push(id);
        }
    }
    let prop = |r: EventRef| {
        let ids = if r.particle == Particle::One {
            &a_ids
        } else {
            &b_ids
        };
        Proposition {
            observable: ids[r.index],
            value: table.event(r).outcome,
        }
    };
    for (i, e) in table.edges.iter().enumerate() {
        if matches!(mode, GraphMode::Geometric) && !table.edge_shape_ok(i) {
            continue;
        }
        g.implications.push(Implication {
            antecedents: e.sources.iter().map(|&s| prop(s)).collect(),
            consequent: prop(e.target),
        });
    }
    let exclusion = match mode {
        GraphMode::Strict(_) => !table.a_events.is_empty(),
        GraphMode::Geometric => table.has_exclusion(),
    };
    if exclusion {
        g.exclusions.push(Exclusion {
            propositions: vec![prop(EventRef::a(0)), prop(EventRef::b(0))],
        });
    }
    if !table.a_events.is_empty() && !table.b_events.is_empty() {
        let top = table.a_events.len() - 1;
        g.premises = vec![prop(EventRef::a(top)), prop(EventRef::b(top))];
    }
    g.triads = find_triads(&g.observables);
    Ok(g)
}

fn find_triads(observables: &[ObservableDecl]) -> Vec<TriadRule> {
    let mut out = Vec::new();
    for particle in [Particle::One, Particle::Two] {
        let side: Vec<(ObservableId, Direction3)> = observables
            .iter()
            .filter(|o| o.id.particle == particle)
            .filter_map(|o| o.direction.map(|d| (o.id, d)))
            .collect();
        let orth = |p: usize, q: usize| side[p].1.is_orthogonal(&side[q].1, GEOMETRY_TOL);
        for p in 0..side.len() {
            for q in p + 1..side.len() {
                if !orth(p, q) {
                    continue;
                }
                for r in q + 1..side.len() {
                    if orth(p, r) && orth(q, r) {
                        out.push(TriadRule {
                            observables: [side[p].0, side[q].0, side[r].0],
                        });
                    }
                }
            }
        }
    }
    out
}

/// The two-qubit ladder with `K` steps: `A_j ⇒ B_{j−1}`, `B_j ⇒ A_{j−1}`, and
/// `A_0`, `B_0` never together.
pub fn qubit_ladder_graph(k: usize) -> InferenceGraph {
    let mut g = InferenceGraph::default();
    let id = |particle, index| ObservableId { particle, index };
    for (particle, prefix) in [(Particle::One, "A"), (Particle::Two, "B")] {
        for i in 0..=k {
            g.observables.push(ObservableDecl {
                id: id(particle, i),
                label: format!("{prefix}{i}"),
                direction: None,
            });
        }
    }
    let yes = |particle, index| Proposition {
        observable: id(particle, index),
        value: Outcome::One,
    };
    for j in (1..=k).rev() {
        g.implications.push(Implication {
            antecedents: vec![yes(Particle::One, j)],
            consequent: yes(Particle::Two, j - 1),
        });
        g.implications.push(Implication {
            antecedents: vec![yes(Particle::Two, j)],
            consequent: yes(Particle::One, j - 1),
        });
    }
    g.exclusions.push(Exclusion {
        propositions: vec![yes(Particle::One, 0), yes(Particle::Two, 0)],
    });
    g.premises = vec![yes(Particle::One, k), yes(Particle::Two, k)];
    g
}
