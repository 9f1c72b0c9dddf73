use serde_json::{json, Value};

use bell_ladder::ladder::{
    ladder_table, phi_window, solve_exclusion_in, stepladder_table, verify_ladder, DirectionTable,
    EventRef, LadderSpec, VerificationReport,
};
use bell_ladder::lhv::{
    enumerate_assignments, forward_chain, graph_from_table, GraphMode, InferenceGraph, StepRule,
};
use bell_ladder::qubit::{optimize_with, results_to_csv, QubitOptions};
use bell_ladder::state::{singlet_spin1, Particle};
use bell_ladder::triads::{build_triads, coverage, scan_patterns, AnglePattern, AngleWindow};

use crate::config::{parse_angles, Format, RunConfig};
use crate::CliError;

/// Finished command: the document to write and the exit code.
pub struct Output {
    pub body: String,
    pub summary: String,
    pub code: i32,
}

fn r6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn r6_all(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| r6(x)).collect()
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn max_k(k: usize) -> Result<usize, CliError> {
    if (1..=12).contains(&k) {
        Ok(k)
    } else {
        Err(CliError::Invalid(format!("K = {k} outside 1..=12")))
    }
}

fn require_phi(cfg: &RunConfig) -> Result<f64, CliError> {
    let phi = cfg
        .phi
        .ok_or_else(|| CliError::Invalid("--phi is required".into()))?;
    let r = phi.rem_euclid(180.0);
    if !phi.is_finite() || r < 1e-9 || 180.0 - r < 1e-9 || (r - 90.0).abs() < 1e-9 {
        return Err(CliError::Degenerate(format!("phi = {phi}° is degenerate")));
    }
    if !(phi > 0.0 && phi < 180.0) {
        return Err(CliError::Invalid(format!(
            "phi = {phi}° outside (0°, 180°)"
        )));
    }
    Ok(phi)
}

/// The table for `(K, φ)`, with angles from `--theta` or solved.
fn build_table(cfg: &RunConfig, k: usize, phi: f64) -> Result<DirectionTable, CliError> {
    let window = phi_window(k);
    if !window.contains(phi, 0.0) {
        return Err(CliError::Infeasible(format!(
            "phi = {phi}° outside [{:.6}°, {:.6}°] for K = {k}",
            window.phi_min_deg, window.phi_max_deg
        )));
    }
    let thetas = match &cfg.theta {
        Some(t) if t.len() != k => {
            return Err(CliError::Invalid(format!(
                "{} theta values given for K = {k}",
                t.len()
            )));
        }
        Some(t) => t.clone(),
        None => solve_exclusion_in(&window, phi)
            .ok_or_else(|| CliError::Infeasible(format!("no solution at phi = {phi}°")))?,
    };
    let table = if k == 1 {
        stepladder_table(phi, thetas[0])?
    } else {
        ladder_table(&LadderSpec::new(phi, thetas)?)?
    };
    Ok(table)
}

fn label(r: EventRef) -> String {
    let p = if r.particle == Particle::One {
        "A"
    } else {
        "B"
    };
    format!("{p}{}", r.index)
}

fn kind_name<T: serde::Serialize>(kind: &T) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn report_json(report: &VerificationReport, table: &DirectionTable) -> Value {
    let edges: Vec<Value> = report
        .edges
        .iter()
        .map(|e| {
            json!({
                "sources": e.edge.sources.iter().map(|&s| label(s)).collect::<Vec<_>>(),
                "target": label(e.edge.target),
                "kind": kind_name(&e.edge.kind),
                "probability": e.probability,
                "residual": e.residual,
            })
        })
        .collect();
    json!({
        "K": report.k,
        "phi_deg": r6(report.phi_deg),
        "thetas_deg": r6_all(&report.thetas_deg),
        "start_probability": report.start_probability,
        "exclusion_probability": report.exclusion_probability,
        "max_residual": report.max_residual(),
        "tolerance": report.tolerance,
        "pass": report.pass,
        "edges": edges,
        "table": serde_json::to_value(table.to_document()).expect("table serializes"),
    })
}

pub fn verify_stepladder(cfg: &RunConfig) -> Result<Output, CliError> {
    let table = match &cfg.table {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            DirectionTable::from_json(&text)?
        }
        None => {
            let k = max_k(cfg.k.unwrap_or(1))?;
            let phi = require_phi(cfg)?;
            build_table(cfg, k, phi)?
        }
    };
    let report = verify_ladder(&singlet_spin1(), &table, cfg.tol)?;
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&report_json(&report, &table)),
        Format::Csv => {
            let mut s = String::from("kind,sources,target,probability,residual\n");
            for e in &report.edges {
                let sources: Vec<String> = e.edge.sources.iter().map(|&r| label(r)).collect();
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    kind_name(&e.edge.kind),
                    sources.join("+"),
                    label(e.edge.target),
                    e.probability,
                    e.residual
                ));
            }
            s.push_str(&format!(
                "start,{},exclusion,{},{}\n",
                report.start_probability, report.exclusion_probability, report.pass
            ));
            s
        }
    };
    let summary = format!(
        "{} K={} phi={:.6} P_start={} exclusion={:e} max_residual={:e}",
        if report.pass { "pass" } else { "fail" },
        report.k,
        report.phi_deg,
        report.start_probability,
        report.exclusion_probability,
        report.max_residual()
    );
    Ok(Output {
        body,
        summary,
        code: if report.pass { 0 } else { 1 },
    })
}

pub fn phi_window_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let k = max_k(
        cfg.k
            .ok_or_else(|| CliError::Invalid("--K is required".into()))?,
    )?;
    let w = phi_window(k);
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({
            "K": k,
            "phi_min_deg": r6(w.phi_min_deg),
            "phi_max_deg": r6(w.phi_max_deg),
            "max_rhs": w.max_rhs,
            "analytic_max": w.analytic_max,
            "agreement_residual": w.agreement_residual(),
            "argmax_thetas_deg": r6_all(&w.argmax_thetas_deg),
        })),
        Format::Csv => format!(
            "K,phi_min_deg,phi_max_deg,max_rhs,analytic_max,agreement_residual\n{k},{:.6},{:.6},{},{},{}\n",
            w.phi_min_deg,
            w.phi_max_deg,
            w.max_rhs,
            w.analytic_max,
            w.agreement_residual()
        ),
    };
    let summary = format!(
        "K={k} window [{:.6}, {:.6}] max={} analytic={} residual={:e}",
        w.phi_min_deg,
        w.phi_max_deg,
        w.max_rhs,
        w.analytic_max,
        w.agreement_residual()
    );
    Ok(Output {
        body,
        summary,
        code: 0,
    })
}

fn pattern_from(spec: &str) -> Result<AnglePattern, CliError> {
    if let Some(p) = AnglePattern::named(spec) {
        return Ok(p);
    }
    let a = parse_angles(spec)?;
    if a.len() != 3 {
        return Err(CliError::Invalid(format!(
            "pattern needs three angles, got {}",
            a.len()
        )));
    }
    Ok(AnglePattern::new(a[0], a[1], a[2])?)
}

pub fn coverage_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let k = max_k(cfg.k.unwrap_or(1))?;
    let window = AngleWindow::from(&phi_window(k));
    let state = singlet_spin1();
    let report = match (cfg.grid, &cfg.pattern) {
        (Some(grid), None) => scan_patterns(&state, window, grid)?.best,
        (_, p) => {
            let pattern = pattern_from(p.as_deref().unwrap_or("sec3"))?;
            coverage(&state, &build_triads(&pattern)?, &pattern, window)?
        }
    };
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv(),
        Format::Json => {
            let cells: Vec<Value> = report
                .cells
                .iter()
                .map(|c| {
                    json!({
                        "u_index": c.u_index,
                        "v_index": c.v_index,
                        "angle_deg": r6(c.angle_deg),
                        "probability": c.probability,
                        "covered": c.covered,
                    })
                })
                .collect();
            let p = report.pattern;
            pretty(&json!({
                "K": k,
                "pattern_deg": r6_all(&[p.phi1_deg, p.phi2_deg, p.phi3_deg]),
                "window_deg": r6_all(&[window.min_deg, window.max_deg]),
                "cells": cells,
                "covered_probability": report.covered_probability,
                "uncovered_probability": report.uncovered_probability,
            }))
        }
    };
    let summary = format!(
        "K={k} covered={:.6} uncovered={:.6}",
        report.covered_probability, report.uncovered_probability
    );
    Ok(Output {
        body,
        summary,
        code: 0,
    })
}

pub fn optimize_qubit(cfg: &RunConfig) -> Result<Output, CliError> {
    let k = max_k(
        cfg.k
            .ok_or_else(|| CliError::Invalid("--K is required".into()))?,
    )?;
    let r = optimize_with(
        k,
        &QubitOptions {
            seed: cfg.seed,
            ..Default::default()
        },
    );
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => results_to_csv(std::slice::from_ref(&r)),
        Format::Json => {
            let settings = |s: &[bell_ladder::qubit::BlochAngles]| -> Vec<Value> {
                s.iter()
                    .map(|b| json!([r6(b.polar_deg), r6(b.azimuth_deg)]))
                    .collect()
            };
            pretty(&json!({
                "K": k,
                "seed": cfg.seed,
                "p_k": r.p_k,
                "alpha_deg": r6(r.config.alpha_deg),
                "residual": r.constraint_residual,
                "restarts": r.restarts,
                "feasible": r.is_feasible(),
                "a_settings_deg": settings(&r.config.a_settings),
                "b_settings_deg": settings(&r.config.b_settings),
            }))
        }
    };
    let summary = format!(
        "K={k} p_k={:.6} alpha={:.6} residual={:e}",
        r.p_k, r.config.alpha_deg, r.constraint_residual
    );
    Ok(Output {
        body,
        summary,
        code: if r.is_feasible() { 0 } else { 1 },
    })
}

fn proposition_text(g: &InferenceGraph, p: &bell_ladder::lhv::Proposition) -> String {
    format!("{}={}", g.label(p.observable), p.value.value())
}

pub fn lhv(cfg: &RunConfig) -> Result<Output, CliError> {
    let k = max_k(cfg.k.unwrap_or(1))?;
    let phi = require_phi(cfg)?;
    let table = build_table(cfg, k, phi)?;
    let report = verify_ladder(&singlet_spin1(), &table, cfg.tol)?;
    if !report.pass {
        let body = pretty(&report_json(&report, &table));
        return Ok(Output {
            body,
            summary: format!("fail: table does not verify at K={k} phi={phi:.6}"),
            code: 1,
        });
    }
    let graph = graph_from_table(&table, GraphMode::Strict(&report))?;
    let cert = forward_chain(&graph, &graph.premises);
    let count = enumerate_assignments(&graph, &graph.premises)?;
    let agree = cert.is_contradiction() == (count.count == 0);
    let derivation: Vec<Value> = cert
        .steps
        .iter()
        .map(|s| {
            let rule = match s.rule {
                StepRule::Implication(i) => format!("implication {i}"),
                StepRule::Triad(i) => format!("triad {i}"),
            };
            json!({ "round": s.round, "rule": rule, "derived": proposition_text(&graph, &s.derived) })
        })
        .collect();
    let count_value =
        u64::try_from(count.count).map_or_else(|_| json!(count.count.to_string()), |c| json!(c));
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({
            "K": k,
            "phi_deg": r6(phi),
            "thetas_deg": r6_all(&table.thetas_deg),
            "observables": graph.observables.len(),
            "implications": graph.implications.len(),
            "exclusions": graph.exclusions.len(),
            "triads": graph.triads.len(),
            "premises": graph.premises.iter().map(|p| proposition_text(&graph, p)).collect::<Vec<_>>(),
            "chain_contradiction": cert.is_contradiction(),
            "assignments": count_value,
            "engines_agree": agree,
            "derivation": derivation,
            "certificate": serde_json::to_value(&cert).expect("certificate serializes"),
        })),
        Format::Csv => {
            let mut s = String::from("round,rule,derived\n");
            for d in &derivation {
                s.push_str(&format!(
                    "{},{},{}\n",
                    d["round"],
                    d["rule"].as_str().unwrap_or(""),
                    d["derived"].as_str().unwrap_or("")
                ));
            }
            s
        }
    };
    let summary = format!(
        "K={k} phi={phi:.6} chain={} assignments={} agree={agree}",
        if cert.is_contradiction() {
            "contradiction"
        } else {
            "consistent"
        },
        count.count
    );
    let code = if !agree {
        4
    } else if cert.is_contradiction() {
        0
    } else {
        1
    };
    Ok(Output {
        body,
        summary,
        code,
    })
}
