use bell_ladder::ladder::{
    ladder_table, phi_window, solve_exclusion_in, stepladder_table, verify_ladder, DirectionTable,
    LadderSpec, DEFAULT_TOLERANCE,
};
use bell_ladder::lhv::{
    enumerate_assignments, enumerate_exhaustive, forward_chain, graph_from_table,
    qubit_ladder_graph, replay, ContradictionCertificate, GraphMode, InferenceGraph, StepRule,
    Violation,
};
use bell_ladder::state::{
    conditional_probability, joint_probability, singlet_spin1, ObservableEvent, Particle,
};
use bell_ladder::{Error, Execution};

fn ladder(k: usize, phi: f64) -> DirectionTable {
    let w = phi_window(k);
    let thetas = solve_exclusion_in(&w, phi).expect("feasible");
    ladder_table(&LadderSpec::new(phi, thetas).unwrap()).unwrap()
}

fn stepladder(phi: f64) -> DirectionTable {
    let theta = solve_exclusion_in(&phi_window(1), phi).unwrap()[0];
    stepladder_table(phi, theta).unwrap()
}

fn strict(table: &DirectionTable) -> InferenceGraph {
    let report = verify_ladder(&singlet_spin1(), table, DEFAULT_TOLERANCE).unwrap();
    graph_from_table(table, GraphMode::Strict(&report)).unwrap()
}

fn assert_engines_agree(g: &InferenceGraph, name: &str) -> bool {
    let cert = forward_chain(g, &g.premises);
    replay(g, &cert).unwrap_or_else(|e| panic!("{name}: replay failed: {e}"));
    let count = enumerate_assignments(g, &g.premises).unwrap();
    assert_eq!(
        cert.is_contradiction(),
        count.count == 0,
        "{name}: engines disagree"
    );
    if g.observables.len() <= 20 {
        let brute = enumerate_exhaustive(g, &g.premises, Execution::Parallel).unwrap();
        assert_eq!(
            brute.count, count.count,
            "{name}: counting differs from exhaustion"
        );
    }
    cert.is_contradiction()
}

#[test]
fn stepladder_graph_shape() {
    let g = strict(&stepladder(80.0));
    assert_eq!(g.implications.len(), 8);
    assert_eq!(g.exclusions.len(), 1);
    assert_eq!(g.observables.len(), 10);
    assert_eq!(g.premises.len(), 2);
    g.validate().unwrap();
}

#[test]
fn stepladder_chain_climbs_down_in_order() {
    let g = strict(&stepladder(80.0));
    let cert = forward_chain(&g, &g.premises);
    assert!(matches!(
        cert.violation,
        Some(Violation::Exclusion { rule: 0 })
    ));
    let by_round = |round: usize| -> Vec<String> {
        let mut v: Vec<String> = cert
            .steps
            .iter()
            .filter(|s| s.round == round && matches!(s.rule, StepRule::Implication(_)))
            .map(|s| g.label(s.derived.observable).to_string())
            .collect();
        v.sort();
        v
    };
    assert_eq!(by_round(1), ["A2", "A3", "B2", "B3"]);
    assert_eq!(by_round(2), ["A1", "B1"]);
    assert_eq!(by_round(3), ["A0", "B0"]);
    replay(&g, &cert).unwrap();
}

#[test]
fn stepladder_counts() {
    let g = strict(&stepladder(80.0));
    assert_eq!(enumerate_assignments(&g, &g.premises).unwrap().count, 0);
    let free = enumerate_assignments(&g, &[]).unwrap();
    assert!(free.count > 0);
    assert_eq!(
        free.count,
        enumerate_exhaustive(&g, &[], Execution::Sequential)
            .unwrap()
            .count
    );
}

#[test]
fn broken_exclusion_leaves_a_local_model() {
    let table = stepladder_table(75.0, 45.0).unwrap();
    let report = verify_ladder(&singlet_spin1(), &table, DEFAULT_TOLERANCE).unwrap();
    assert!(matches!(
        graph_from_table(&table, GraphMode::Strict(&report)),
        Err(Error::UnverifiedTable)
    ));
    let g = graph_from_table(&table, GraphMode::Geometric).unwrap();
    assert!(g.exclusions.is_empty());
    assert_eq!(g.implications.len(), 8);
    let cert = forward_chain(&g, &g.premises);
    assert!(!cert.is_contradiction());
    let e = enumerate_assignments(&g, &g.premises).unwrap();
    assert!(e.count > 0 && e.witness.is_some());
}

#[test]
fn empty_table_gives_empty_graph() {
    let table = DirectionTable {
        k: 0,
        phi_deg: 80.0,
        thetas_deg: vec![],
        a_events: vec![],
        b_events: vec![],
        edges: vec![],
    };
    let g = graph_from_table(&table, GraphMode::Geometric).unwrap();
    assert_eq!(g, InferenceGraph::default());
}

#[test]
fn qubit_graphs() {
    let g1 = qubit_ladder_graph(1);
    assert_eq!((g1.implications.len(), g1.exclusions.len()), (2, 1));
    let g2 = qubit_ladder_graph(2);
    let cert = forward_chain(&g2, &g2.premises);
    assert!(cert.is_contradiction());
    assert_eq!(cert.steps.len(), 4);
    for k in 1..=3 {
        assert!(assert_engines_agree(
            &qubit_ladder_graph(k),
            &format!("qubit K={k}")
        ));
    }
}

#[test]
fn ladder_corpus_and_mutations() {
    let mut graphs = vec![("stepladder".to_string(), strict(&stepladder(80.0)))];
    for (k, phi) in [(1, 75.0), (2, 65.0), (3, 60.0), (4, 58.0)] {
        graphs.push((format!("K={k}"), strict(&ladder(k, phi))));
    }
    for (name, g) in &graphs {
        assert!(
            assert_engines_agree(g, name),
            "{name} should be contradictory"
        );
    }
    let mut consistent_mutants = 0;
    for (name, g) in &graphs {
        for drop in 0..g.implications.len() {
            let mut m = g.clone();
            m.implications.remove(drop);
            if !assert_engines_agree(&m, &format!("{name} without rule {drop}")) {
                consistent_mutants += 1;
            }
        }
        let mut m = g.clone();
        m.exclusions.clear();
        assert!(!assert_engines_agree(
            &m,
            &format!("{name} without exclusion")
        ));
        consistent_mutants += 1;
    }
    for k in 1..=3 {
        let g = qubit_ladder_graph(k);
        for drop in 0..g.implications.len() {
            let mut m = g.clone();
            m.implications.remove(drop);
            if !assert_engines_agree(&m, &format!("qubit K={k} without rule {drop}")) {
                consistent_mutants += 1;
            }
        }
    }
    assert!(consistent_mutants >= 20, "{consistent_mutants}");
}

#[test]
fn eleven_block_ladder_has_no_local_model() {
    let g = strict(&ladder(11, 48.19));
    assert_eq!(g.implications.len(), 88);
    assert!(assert_engines_agree(&g, "K=11"));
    assert_eq!(enumerate_assignments(&g, &g.premises).unwrap().count, 0);
}

#[test]
fn strict_rules_are_born_rule_certainties() {
    let state = singlet_spin1();
    for table in [stepladder(80.0), ladder(3, 60.0)] {
        let g = strict(&table);
        let event = |p: &bell_ladder::lhv::Proposition| {
            let decl = g.observables.iter().find(|o| o.id == p.observable).unwrap();
            ObservableEvent::new(p.observable.particle, decl.direction.unwrap(), p.value)
        };
        for r in &g.implications {
            let given: Vec<_> = r.antecedents.iter().map(event).collect();
            let p = conditional_probability(&state, &event(&r.consequent), &given).unwrap();
            assert!((1.0 - p).abs() < 1e-10);
        }
        for e in &g.exclusions {
            let (a, b) = (event(&e.propositions[0]), event(&e.propositions[1]));
            assert_eq!((a.particle, b.particle), (Particle::One, Particle::Two));
            assert!(joint_probability(&state, &a, &b).unwrap() < 1e-10);
        }
    }
}

#[test]
fn certificates_replay_and_reject_tampering() {
    let g = strict(&ladder(2, 65.0));
    let cert = forward_chain(&g, &g.premises);
    let back = ContradictionCertificate::from_json(&cert.to_json()).unwrap();
    assert_eq!(back, cert);
    replay(&g, &back).unwrap();
    assert_eq!(forward_chain(&g, &g.premises), cert);

    let mut skipped = cert.clone();
    skipped.steps.remove(0);
    assert!(replay(&g, &skipped).is_err());
    let mut no_premise = cert.clone();
    no_premise.premises.pop();
    assert!(replay(&g, &no_premise).is_err());

    let g_back = InferenceGraph::from_json(&g.to_json()).unwrap();
    assert_eq!(g_back, g);
}
