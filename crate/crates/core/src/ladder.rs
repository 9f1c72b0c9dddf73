//! Stepladder and general ladder direction tables, their coefficients and
//! φ-windows, and Born-rule verification of every certainty and exclusion.
//!
//! Events are indexed `0..=4K` on each particle. `A_{4K}` and `B_{4K}` are the
//! starting outcomes; `A_0` and `B_0` are the pair that can never occur
//! together. Between them the table consists of `K` blocks of four events per
//! particle, block `j` using the angle `θ_j` and occupying indices
//! `4(K−j) .. 4(K−j)+3`. The first block draws on the starting events, the last
//! block closes on `A_0`/`B_0`, and every block in between repeats the same
//! shape.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::direction::Direction3;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::optimize::{bisect, nelder_mead, NelderMeadOptions};
use crate::state::{
    conditional_probability, joint_probability, BipartiteState, ObservableEvent, Outcome, Particle,
};

/// Distance from a pole of tan/cot, in degrees, below which an angle is degenerate.
const POLE_TOL_DEG: f64 = 1e-9;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Geometric tolerance for edge-structure checks.
pub const GEOMETRY_TOL: f64 = 1e-9;
const WINDOW_STARTS: usize = 50;
const WINDOW_SEED: u64 = 0x1ad_d3e5;

/// `c_1 = sin θ_1`, `c_{j+1} = c_j cos(θ_{j+1} − θ_j)`.
pub fn coefficients(thetas_deg: &[f64]) -> Result<Vec<f64>> {
    check_theta_list(thetas_deg, true)?;
    let mut out = Vec::with_capacity(thetas_deg.len());
    let mut c = thetas_deg[0].to_radians().sin();
    out.push(c);
    for w in thetas_deg.windows(2) {
        c *= (w[1] - w[0]).to_radians().cos();
        out.push(c);
    }
    Ok(out)
}

/// Closed product form `c_j = sin θ_1 Π_{k<j} cos(θ_{k+1} − θ_k)`.
pub fn coefficients_explicit(thetas_deg: &[f64]) -> Result<Vec<f64>> {
    check_theta_list(thetas_deg, true)?;
    Ok((1..=thetas_deg.len())
        .map(|j| {
            let product: f64 = (0..j - 1)
                .map(|k| (thetas_deg[k + 1] - thetas_deg[k]).to_radians().cos())
                .product();
            thetas_deg[0].to_radians().sin() * product
        })
        .collect())
}

fn check_theta_list(thetas_deg: &[f64], allow_right_angle: bool) -> Result<()> {
    if thetas_deg.is_empty() {
        return Err(Error::InvalidSpec("at least one theta is required".into()));
    }
    for &t in thetas_deg {
        let upper_ok = if allow_right_angle {
            t <= 90.0
        } else {
            t < 90.0
        };
        if !(t > 0.0 && upper_ok) {
            return Err(Error::OutOfRangeTheta(t));
        }
    }
    Ok(())
}

/// `c_K² (cos²θ_K − sin²θ_K)`: the value `cot²φ` must take for `A_0 ⊥ B_0`.
pub fn exclusion_rhs_for(thetas_deg: &[f64]) -> Result<f64> {
    let c = coefficients(thetas_deg)?;
    let last = thetas_deg[thetas_deg.len() - 1].to_radians();
    let ck = c[c.len() - 1];
    Ok(ck * ck * (2.0 * last).cos())
}

fn rhs_unchecked(thetas_deg: &[f64]) -> f64 {
    let mut c = thetas_deg[0].to_radians().sin();
    for w in thetas_deg.windows(2) {
        c *= (w[1] - w[0]).to_radians().cos();
    }
    c * c * (2.0 * thetas_deg[thetas_deg.len() - 1].to_radians()).cos()
}

/// Parameters of a ladder with `K` basic blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub k: usize,
    pub phi_deg: f64,
    pub thetas_deg: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl LadderSpec {
    pub fn new(phi_deg: f64, thetas_deg: Vec<f64>) -> Result<Self> {
        check_theta_list(&thetas_deg, false)?;
        let coefficients = coefficients(&thetas_deg)?;
        Ok(LadderSpec {
            k: thetas_deg.len(),
            phi_deg,
            thetas_deg,
            coefficients,
        })
    }

    pub fn exclusion_rhs(&self) -> f64 {
        let ck = self.coefficients[self.k - 1];
        ck * ck * (2.0 * self.thetas_deg[self.k - 1].to_radians()).cos()
    }

    /// `cot²φ − rhs`; zero exactly when `A_0` and `B_0` are orthogonal.
    pub fn exclusion_residual(&self) -> f64 {
        let cot = 1.0 / self.phi_deg.to_radians().tan();
        cot * cot - self.exclusion_rhs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventRef {
    pub particle: Particle,
    pub index: usize,
}

impl EventRef {
    pub fn a(index: usize) -> Self {
        EventRef {
            particle: Particle::One,
            index,
        }
    }

    pub fn b(index: usize) -> Self {
        EventRef {
            particle: Particle::Two,
            index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    /// Same outcome predicted along the same direction on the other particle.
    SameDirection,
    /// A zero predicts ħ² along any orthogonal direction on the other particle.
    Perpendicular,
    /// Two orthogonal ħ² outcomes predict a zero along their cross product.
    Pair,
}

/// Certainty claim: the sources (one particle) imply the target (other particle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceEdge {
    pub sources: Vec<EventRef>,
    pub target: EventRef,
    pub kind: EdgeKind,
}

impl InferenceEdge {
    fn single(kind: EdgeKind, source: EventRef, target: EventRef) -> Self {
        InferenceEdge {
            sources: vec![source],
            target,
            kind,
        }
    }

    fn pair(first: EventRef, second: EventRef, target: EventRef) -> Self {
        InferenceEdge {
            sources: vec![first, second],
            target,
            kind: EdgeKind::Pair,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionTable {
    pub k: usize,
    pub phi_deg: f64,
    pub thetas_deg: Vec<f64>,
    /// `A_0 ..= A_{4K}`, particle 1.
    pub a_events: Vec<ObservableEvent>,
    /// `B_0 ..= B_{4K}`, particle 2.
    pub b_events: Vec<ObservableEvent>,
    pub edges: Vec<InferenceEdge>,
}

impl DirectionTable {
    pub fn event(&self, r: EventRef) -> &ObservableEvent {
        match r.particle {
            Particle::One => &self.a_events[r.index],
            Particle::Two => &self.b_events[r.index],
        }
    }

    pub fn top(&self) -> usize {
        4 * self.k
    }

    /// Whether edge `i` has the geometric shape its kind requires (see [`EdgeKind`]).
    pub fn edge_shape_ok(&self, i: usize) -> bool {
        let e = &self.edges[i];
        let target = self.event(e.target);
        let srcs: Vec<&ObservableEvent> = e.sources.iter().map(|&s| self.event(s)).collect();
        if srcs.iter().any(|s| s.particle == target.particle) {
            return false;
        }
        match (e.kind, srcs.as_slice()) {
            (EdgeKind::SameDirection, [s]) => {
                s.direction.is_parallel(&target.direction, GEOMETRY_TOL)
                    && s.outcome == target.outcome
            }
            (EdgeKind::Perpendicular, [s]) => {
                s.direction.is_orthogonal(&target.direction, GEOMETRY_TOL)
                    && s.outcome == Outcome::Zero
                    && target.outcome == Outcome::One
            }
            (EdgeKind::Pair, [s, t]) => {
                s.particle == t.particle
                    && s.direction.is_orthogonal(&t.direction, GEOMETRY_TOL)
                    && s.direction
                        .cross(&t.direction)
                        .normalize()
                        .cross(target.direction.as_vector())
                        .norm()
                        < GEOMETRY_TOL
                    && s.outcome == Outcome::One
                    && t.outcome == Outcome::One
                    && target.outcome == Outcome::Zero
            }
            _ => false,
        }
    }

    pub fn edge_structure_violations(&self) -> Vec<String> {
        (0..self.edges.len())
            .filter(|&i| !self.edge_shape_ok(i))
            .map(|i| {
                format!(
                    "edge {i} ({:?}) violates its geometric shape",
                    self.edges[i].kind
                )
            })
            .collect()
    }

    /// Whether `A_0` and `B_0` are orthogonal, making the pair impossible.
    pub fn has_exclusion(&self) -> bool {
        !self.a_events.is_empty()
            && !self.b_events.is_empty()
            && self.a_events[0]
                .direction
                .is_orthogonal(&self.b_events[0].direction, GEOMETRY_TOL)
    }

    pub fn to_document(&self) -> TableDocument {
        let events = self
            .a_events
            .iter()
            .enumerate()
            .chain(self.b_events.iter().enumerate())
            .map(|(index, e)| EventRecord {
                index,
                particle: e.particle,
                direction: e.direction,
                outcome: e.outcome,
            })
            .collect();
        TableDocument {
            k: self.k,
            phi_deg: self.phi_deg,
            thetas_deg: self.thetas_deg.clone(),
            events,
            edges: self.edges.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("table serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TableDocument =
            serde_json::from_str(s).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        doc.try_into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub index: usize,
    pub particle: Particle,
    pub direction: Direction3,
    pub outcome: Outcome,
}

/// JSON form of a [`DirectionTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub k: usize,
    pub phi_deg: f64,
    pub thetas_deg: Vec<f64>,
    pub events: Vec<EventRecord>,
    pub edges: Vec<InferenceEdge>,
}

impl TryFrom<TableDocument> for DirectionTable {
    type Error = Error;

    fn try_from(doc: TableDocument) -> Result<Self> {
        let n = 4 * doc.k + 1;
        let mut a: Vec<Option<ObservableEvent>> = vec![None; n];
        let mut b: Vec<Option<ObservableEvent>> = vec![None; n];
        for r in &doc.events {
            let slot = match r.particle {
                Particle::One => a.get_mut(r.index),
                Particle::Two => b.get_mut(r.index),
            }
            .ok_or_else(|| Error::InvalidSpec(format!("event index {} out of range", r.index)))?;
            *slot = Some(ObservableEvent::new(r.particle, r.direction, r.outcome));
        }
        let collect = |v: Vec<Option<ObservableEvent>>| -> Result<Vec<ObservableEvent>> {
            v.into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::InvalidSpec("table is missing events".into()))
        };
        let table = DirectionTable {
            k: doc.k,
            phi_deg: doc.phi_deg,
            thetas_deg: doc.thetas_deg,
            a_events: collect(a)?,
            b_events: collect(b)?,
            edges: doc.edges,
        };
        for e in &table.edges {
            if e.sources.is_empty() || e.sources.len() > 2 {
                return Err(Error::InvalidSpec("edges need one or two sources".into()));
            }
            for r in e.sources.iter().chain(std::iter::once(&e.target)) {
                if r.index >= n {
                    return Err(Error::InvalidSpec(format!(
                        "edge references index {}",
                        r.index
                    )));
                }
            }
        }
        Ok(table)
    }
}

fn check_phi(phi_deg: f64) -> Result<()> {
    if !phi_deg.is_finite() {
        return Err(Error::DegenerateAngle(format!("phi = {phi_deg}")));
    }
    let r = phi_deg.rem_euclid(180.0);
    if r < POLE_TOL_DEG || 180.0 - r < POLE_TOL_DEG {
        return Err(Error::DegenerateAngle(format!(
            "cot(phi) is singular at phi = {phi_deg}°"
        )));
    }
    if (r - 90.0).abs() < POLE_TOL_DEG {
        return Err(Error::DegenerateAngle(format!(
            "tan(phi) is singular at phi = {phi_deg}°"
        )));
    }
    Ok(())
}

fn dir(x: f64, y: f64, z: f64) -> Result<Direction3> {
    Direction3::new(x, y, z)
        .map_err(|_| Error::DegenerateAngle("direction entry is singular".into()))
}

fn ev(particle: Particle, d: Direction3, outcome: Outcome) -> ObservableEvent {
    ObservableEvent::new(particle, d, outcome)
}

/// The five-observable-per-particle table (`K = 1`), written out directly.
pub fn stepladder_table(phi_deg: f64, theta_deg: f64) -> Result<DirectionTable> {
    check_phi(phi_deg)?;
    if !(theta_deg > POLE_TOL_DEG && theta_deg < 90.0 - POLE_TOL_DEG) {
        return Err(if theta_deg > 0.0 && theta_deg < 90.0 {
            Error::DegenerateAngle(format!("theta = {theta_deg}°"))
        } else {
            Error::OutOfRangeTheta(theta_deg)
        });
    }
    let phi = phi_deg.to_radians();
    let th = theta_deg.to_radians();
    let (tan_p, cot_p) = (phi.tan(), 1.0 / phi.tan());
    let (s, c) = th.sin_cos();
    let cot_t = c / s;
    let csc2 = 1.0 / (s * s);
    use Outcome::{One, Zero};
    use Particle::{One as P1, Two as P2};

    let a_events = vec![
        ev(P1, dir(cot_p * csc2, 1.0, -cot_t)?, Zero),
        ev(P1, dir(0.0, c, -s)?, One),
        ev(P1, dir(tan_p, -1.0, -cot_t)?, One),
        ev(P1, dir(tan_p, -1.0, cot_t)?, One),
        ev(P1, Direction3::X, Zero),
    ];
    let b_events = vec![
        ev(P2, dir(cot_p * csc2, 1.0, cot_t)?, Zero),
        ev(P2, dir(tan_p, -1.0, cot_t)?, One),
        ev(P2, dir(0.0, c, s)?, One),
        ev(P2, dir(0.0, c, -s)?, One),
        ev(P2, dir(phi.cos(), phi.sin(), 0.0)?, Zero),
    ];
    let (a, b) = (EventRef::a, EventRef::b);
    use EdgeKind::{Perpendicular, SameDirection};
    let edges = vec![
        InferenceEdge::single(Perpendicular, b(4), a(3)),
        InferenceEdge::single(Perpendicular, b(4), a(2)),
        InferenceEdge::single(Perpendicular, a(4), b(3)),
        InferenceEdge::single(Perpendicular, a(4), b(2)),
        InferenceEdge::single(SameDirection, b(3), a(1)),
        InferenceEdge::single(SameDirection, a(3), b(1)),
        InferenceEdge::pair(b(1), b(2), a(0)),
        InferenceEdge::pair(a(1), a(2), b(0)),
    ];
    Ok(DirectionTable {
        k: 1,
        phi_deg,
        thetas_deg: vec![theta_deg],
        a_events,
        b_events,
        edges,
    })
}

/// The `4K+1`-observable-per-particle table for a general ladder.
pub fn ladder_table(spec: &LadderSpec) -> Result<DirectionTable> {
    check_phi(spec.phi_deg)?;
    check_theta_list(&spec.thetas_deg, false)?;
    if spec.thetas_deg.len() != spec.k || spec.coefficients.len() != spec.k {
        return Err(Error::InvalidSpec("K does not match the theta list".into()));
    }
    let k = spec.k;
    let top = 4 * k;
    let phi = spec.phi_deg.to_radians();
    let (tan_p, cot_p) = (phi.tan(), 1.0 / phi.tan());
    use Outcome::{One, Zero};
    use Particle::{One as P1, Two as P2};

    let placeholder = ev(P1, Direction3::X, Zero);
    let mut a_events = vec![placeholder; top + 1];
    let mut b_events = vec![
        ObservableEvent {
            particle: P2,
            ..placeholder
        };
        top + 1
    ];
    a_events[top] = ev(P1, Direction3::X, Zero);
    b_events[top] = ev(P2, dir(phi.cos(), phi.sin(), 0.0)?, Zero);

    let (a, b) = (EventRef::a, EventRef::b);
    use EdgeKind::{Perpendicular, SameDirection};
    let mut edges = Vec::with_capacity(8 * k);

    for j in 1..=k {
        let base = 4 * (k - j);
        let (s, c) = spec.thetas_deg[j - 1].to_radians().sin_cos();
        let cj = spec.coefficients[j - 1];
        if cj.abs() < 1e-300 {
            return Err(Error::DegenerateAngle(format!("c_{j} vanishes")));
        }
        a_events[base + 3] = ev(P1, dir(tan_p, -s / cj, c / cj)?, One);
        a_events[base + 2] = ev(P1, dir(tan_p, -s / cj, -c / cj)?, One);

        let (hi, lo) = if j == 1 {
            (b(top), b(top))
        } else {
            (b(base + 5), b(base + 4))
        };
        edges.push(InferenceEdge::single(Perpendicular, hi, a(base + 3)));
        edges.push(InferenceEdge::single(Perpendicular, lo, a(base + 2)));
        edges.push(InferenceEdge::single(Perpendicular, a(top), b(base + 3)));
        edges.push(InferenceEdge::single(Perpendicular, a(top), b(base + 2)));

        if j < k {
            a_events[base + 1] = ev(P1, dir(0.0, c, s)?, One);
            a_events[base] = ev(P1, dir(0.0, c, -s)?, One);
            b_events[base + 3] = ev(P2, dir(0.0, c, s)?, One);
            b_events[base + 2] = ev(P2, dir(0.0, c, -s)?, One);
            b_events[base + 1] = ev(P2, dir(cot_p, cj * s, -cj * c)?, Zero);
            b_events[base] = ev(P2, dir(cot_p, cj * s, cj * c)?, Zero);

            edges.push(InferenceEdge::single(
                SameDirection,
                b(base + 3),
                a(base + 1),
            ));
            edges.push(InferenceEdge::single(SameDirection, b(base + 2), a(base)));
            edges.push(InferenceEdge::pair(a(base + 3), a(base + 1), b(base + 1)));
            edges.push(InferenceEdge::pair(a(base + 2), a(base), b(base)));
        } else {
            a_events[1] = ev(P1, dir(0.0, c, -s)?, One);
            a_events[0] = ev(P1, dir(cot_p, cj * s, -cj * c)?, Zero);
            b_events[3] = ev(P2, dir(0.0, c, -s)?, One);
            b_events[2] = ev(P2, dir(0.0, c, s)?, One);
            b_events[1] = ev(P2, dir(tan_p, -s / cj, c / cj)?, One);
            b_events[0] = ev(P2, dir(cot_p, cj * s, cj * c)?, Zero);

            edges.push(InferenceEdge::single(SameDirection, b(3), a(1)));
            edges.push(InferenceEdge::single(SameDirection, a(3), b(1)));
            edges.push(InferenceEdge::pair(b(1), b(2), a(0)));
            edges.push(InferenceEdge::pair(a(1), a(2), b(0)));
        }
    }

    Ok(DirectionTable {
        k,
        phi_deg: spec.phi_deg,
        thetas_deg: spec.thetas_deg.clone(),
        a_events,
        b_events,
        edges,
    })
}

/// Feasible interval of φ for a ladder of `K` blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiWindow {
    pub k: usize,
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
    /// Numerical maximum of the exclusion right-hand side.
    pub max_rhs: f64,
    /// `cos^{2K+1}(π/(2K+1))`.
    pub analytic_max: f64,
    /// Angles attaining `max_rhs`.
    pub argmax_thetas_deg: Vec<f64>,
}

impl PhiWindow {
    /// Closed-interval membership with `slack_deg` on both ends.
    pub fn contains(&self, phi_deg: f64, slack_deg: f64) -> bool {
        phi_deg >= self.phi_min_deg - slack_deg && phi_deg <= self.phi_max_deg + slack_deg
    }

    pub fn agreement_residual(&self) -> f64 {
        (self.max_rhs - self.analytic_max).abs()
    }
}

pub fn analytic_max_rhs(k: usize) -> f64 {
    let n = (2 * k + 1) as f64;
    (std::f64::consts::PI / n).cos().powi(2 * k as i32 + 1)
}

fn window_from_max(max: f64) -> (f64, f64) {
    let lo = (1.0 / max.sqrt()).atan().to_degrees();
    (lo, 180.0 - lo)
}

pub fn phi_window(k: usize) -> PhiWindow {
    phi_window_with(k, Execution::default())
}

/// Multi-start maximization of the exclusion right-hand side over `θ_1..θ_K`.
pub fn phi_window_with(k: usize, exec: Execution) -> PhiWindow {
    assert!(k >= 1, "a ladder needs at least one block");
    let objective = |x: &[f64]| {
        if x.iter().all(|&t| t > 0.0 && t < 90.0) {
            -rhs_unchecked(x)
        } else {
            f64::INFINITY
        }
    };
    let opts = NelderMeadOptions {
        initial_step: 5.0,
        x_tol: 1e-9,
        f_tol: 1e-15,
        max_evals: 20_000 * k,
    };
    let starts: Vec<Vec<f64>> = (0..WINDOW_STARTS)
        .map(|i| {
            if i == 0 {
                (1..=k)
                    .map(|j| j as f64 * 90.0 / (2 * k + 1) as f64)
                    .collect()
            } else {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(WINDOW_SEED ^ ((k as u64) << 32) ^ i as u64);
                (0..k).map(|_| rng.random_range(1.0..89.0)).collect()
            }
        })
        .collect();
    let results = exec::map_slice(exec, &starts, |x0| {
        let m = nelder_mead(objective, x0, &opts);
        // Restarting from the converged point shakes off premature collapse.
        nelder_mead(
            objective,
            &m.x,
            &NelderMeadOptions {
                initial_step: 0.5,
                ..opts
            },
        )
    });
    let best = results
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .map(|(_, m)| m)
        .expect("at least one start");
    let max_rhs = -best.value;
    let (lo, hi) = window_from_max(max_rhs);
    PhiWindow {
        k,
        phi_min_deg: lo,
        phi_max_deg: hi,
        max_rhs,
        analytic_max: analytic_max_rhs(k),
        argmax_thetas_deg: best.x,
    }
}

/// Angles `θ_1..θ_K` making `A_0 ⊥ B_0` at the given φ, or `None` when φ is
/// outside the window.
pub fn solve_exclusion(k: usize, phi_deg: f64) -> Option<Vec<f64>> {
    solve_exclusion_in(&phi_window(k), phi_deg)
}

/// Root-finds along `θ(t) = t·θ*`, `t ∈ (0, 1]`, where `θ*` attains the
/// window maximum; the smallest root is returned. For `cot²φ = 0` the last
/// angle of `θ*` is replaced by 45°.
pub fn solve_exclusion_in(window: &PhiWindow, phi_deg: f64) -> Option<Vec<f64>> {
    let tan = phi_deg.to_radians().tan();
    if !tan.is_finite() && phi_deg.rem_euclid(180.0) != 90.0 {
        return None;
    }
    let target = if (phi_deg.rem_euclid(180.0) - 90.0).abs() < POLE_TOL_DEG {
        0.0
    } else {
        1.0 / (tan * tan)
    };
    if !target.is_finite() || target > window.max_rhs + 1e-12 {
        return None;
    }
    let best = &window.argmax_thetas_deg;
    if target <= 1e-15 {
        let mut thetas = best.clone();
        *thetas.last_mut().expect("non-empty") = 45.0;
        return Some(thetas);
    }
    if target >= window.max_rhs {
        return Some(best.clone());
    }
    let along = |t: f64| -> Vec<f64> { best.iter().map(|b| t * b).collect() };
    let g = |t: f64| rhs_unchecked(&along(t)) - target;
    const SCAN: usize = 256;
    let mut lo = 0.0;
    for i in 1..=SCAN {
        let t = i as f64 / SCAN as f64;
        if g(t) >= 0.0 {
            let root = bisect(g, lo, t, 200);
            return Some(along(root));
        }
        lo = t;
    }
    Some(best.clone())
}

/// Largest start probability `P_4 = cos²φ / 3` over the `K = 1` window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P4Max {
    pub value: f64,
    pub phi_deg: f64,
}

pub fn max_p4() -> P4Max {
    max_p4_in(&phi_window(1))
}

/// `cos²φ` decreases towards 90°, so the maximum sits on the window edge.
pub fn max_p4_in(window: &PhiWindow) -> P4Max {
    let phi = window.phi_min_deg;
    let c = phi.to_radians().cos();
    P4Max {
        value: c * c / 3.0,
        phi_deg: phi,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub edge: InferenceEdge,
    pub probability: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub k: usize,
    pub phi_deg: f64,
    pub thetas_deg: Vec<f64>,
    /// `P(A_{4K}, B_{4K})`.
    pub start_probability: f64,
    pub edges: Vec<EdgeCheck>,
    /// `P(A_0, B_0)`.
    pub exclusion_probability: f64,
    pub pass: bool,
    pub tolerance: f64,
}

impl VerificationReport {
    pub fn max_residual(&self) -> f64 {
        self.edges.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

/// Born-rule check of the start probability, every edge, and the exclusion.
pub fn verify_ladder(
    state: &BipartiteState,
    table: &DirectionTable,
    tolerance: f64,
) -> Result<VerificationReport> {
    let top = table.top();
    let start_probability = joint_probability(state, &table.a_events[top], &table.b_events[top])?;
    let edges = table
        .edges
        .iter()
        .map(|e| {
            let given: Vec<ObservableEvent> = e.sources.iter().map(|&s| *table.event(s)).collect();
            let p = conditional_probability(state, table.event(e.target), &given)?;
            Ok(EdgeCheck {
                edge: e.clone(),
                probability: p,
                residual: (1.0 - p).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let exclusion_probability = joint_probability(state, &table.a_events[0], &table.b_events[0])?;
    let pass = edges.iter().all(|e| e.residual < tolerance)
        && exclusion_probability < tolerance
        && start_probability > tolerance;
    Ok(VerificationReport {
        k: table.k,
        phi_deg: table.phi_deg,
        thetas_deg: table.thetas_deg.clone(),
        start_probability,
        edges,
        exclusion_probability,
        pass,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::triad_complete;
    use crate::state::singlet_spin1;

    #[test]
    fn coefficient_examples() {
        assert_eq!(coefficients(&[90.0]).unwrap(), vec![1.0]);
        assert!((coefficients(&[30.0]).unwrap()[0] - 0.5).abs() < 1e-15);
        let c = coefficients(&[30.0, 50.0]).unwrap();
        assert!((c[1] - 0.5 * 20f64.to_radians().cos()).abs() < 1e-15);
        assert!((c[1] - 0.469846310392954).abs() < 1e-12);
    }

    #[test]
    fn coefficient_errors() {
        assert!(matches!(
            coefficients(&[0.0]),
            Err(Error::OutOfRangeTheta(_))
        ));
        assert!(matches!(
            coefficients(&[10.0, 91.0]),
            Err(Error::OutOfRangeTheta(_))
        ));
        assert!(matches!(coefficients(&[]), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn exclusion_rhs_examples() {
        assert!((exclusion_rhs_for(&[30.0]).unwrap() - 0.125).abs() < 1e-15);
        assert!(exclusion_rhs_for(&[45.0]).unwrap().abs() < 1e-15);
        let spec = LadderSpec::new(80.0, vec![30.0]).unwrap();
        assert!((spec.exclusion_rhs() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn stepladder_named_directions() {
        let t = stepladder_table(75.0, 20.0).unwrap();
        assert!(t.a_events[4].direction.is_parallel(&Direction3::X, 1e-15));
        let p = 75f64.to_radians();
        let b4 = Direction3::new(p.cos(), p.sin(), 0.0).unwrap();
        assert!(t.b_events[4].direction.is_parallel(&b4, 1e-15));
        let b0 = triad_complete(&t.a_events[1].direction, &t.a_events[2].direction).unwrap();
        assert!(b0.is_parallel(&t.b_events[0].direction, 1e-12));
        assert!(t.edge_structure_violations().is_empty());
    }

    #[test]
    fn stepladder_exclusion_tracks_constraint() {
        for (phi, theta) in [(75.0, 45.0), (80.0, 10.0), (100.0, 60.0)] {
            let t = stepladder_table(phi, theta).unwrap();
            let dot = t.a_events[0].direction.dot(&t.b_events[0].direction);
            let th = f64::to_radians(theta);
            let cot = 1.0 / f64::to_radians(phi).tan();
            let residual = cot * cot - th.sin().powi(2) * (2.0 * th).cos();
            // A_0·B_0 ∝ cot²φ − sin²θ cos2θ; both vanish together.
            assert_eq!(dot.abs() < 1e-12, residual.abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_angles() {
        assert!(matches!(
            stepladder_table(90.0, 30.0),
            Err(Error::DegenerateAngle(_))
        ));
        assert!(matches!(
            stepladder_table(0.0, 30.0),
            Err(Error::DegenerateAngle(_))
        ));
        assert!(matches!(
            stepladder_table(80.0, 0.0),
            Err(Error::OutOfRangeTheta(_))
        ));
        let spec = LadderSpec::new(90.0, vec![30.0, 20.0]).unwrap();
        assert!(matches!(
            ladder_table(&spec),
            Err(Error::DegenerateAngle(_))
        ));
    }

    #[test]
    fn one_block_ladder_matches_stepladder() {
        for (phi, theta) in [(75.0, 21.3), (105.0, 33.0), (71.0, 29.0)] {
            let s = stepladder_table(phi, theta).unwrap();
            let l = ladder_table(&LadderSpec::new(phi, vec![theta]).unwrap()).unwrap();
            for i in 0..5 {
                assert!(
                    s.a_events[i]
                        .direction
                        .is_parallel(&l.a_events[i].direction, 1e-12),
                    "A{i}"
                );
                assert!(
                    s.b_events[i]
                        .direction
                        .is_parallel(&l.b_events[i].direction, 1e-12),
                    "B{i}"
                );
                assert_eq!(s.a_events[i].outcome, l.a_events[i].outcome);
                assert_eq!(s.b_events[i].outcome, l.b_events[i].outcome);
            }
            assert_eq!(s.edges, l.edges);
        }
    }

    #[test]
    fn window_k1_and_max_p4() {
        let w = phi_window(1);
        assert!((w.max_rhs - 0.125).abs() < 1e-12);
        assert!((w.phi_min_deg - (1.0f64 / 3.0).acos().to_degrees()).abs() < 1e-6);
        assert!((w.argmax_thetas_deg[0] - 30.0).abs() < 1e-5);
        let m = max_p4_in(&w);
        assert!((m.value - 1.0 / 27.0).abs() < 1e-9);
        let c_hi = w.phi_max_deg.to_radians().cos();
        assert!((c_hi * c_hi / 3.0 - m.value).abs() < 1e-12);
        assert!(m.value < 1.0 / 3.0);
    }

    #[test]
    fn solve_exclusion_examples() {
        let w = phi_window(1);
        assert_eq!(solve_exclusion_in(&w, 90.0), Some(vec![45.0]));
        let th = solve_exclusion_in(&w, (1.0f64 / 3.0).acos().to_degrees()).unwrap();
        assert!((th[0] - 30.0).abs() < 1e-4, "{th:?}");
        assert!(solve_exclusion_in(&w, 60.0).is_none());
        assert!(solve_exclusion_in(&w, 120.0).is_none());
        let th = solve_exclusion_in(&w, 75.0).unwrap();
        let spec = LadderSpec::new(75.0, th).unwrap();
        assert!(spec.exclusion_residual().abs() < 1e-10);
    }

    #[test]
    fn verify_stepladder_at_75() {
        let s = singlet_spin1();
        let th = solve_exclusion(1, 75.0).unwrap();
        let t = stepladder_table(75.0, th[0]).unwrap();
        let r = verify_ladder(&s, &t, DEFAULT_TOLERANCE).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.start_probability - 0.022329099369260).abs() < 1e-12);
        assert!(r.exclusion_probability < 1e-10);

        let bad = stepladder_table(75.0, 45.0).unwrap();
        let r = verify_ladder(&s, &bad, DEFAULT_TOLERANCE).unwrap();
        assert!(r.exclusion_probability > 1e-6 && !r.pass);
        assert!(r.max_residual() < 1e-10);
    }

    #[test]
    fn table_json_round_trip_is_exact() {
        let th = solve_exclusion(2, 65.0).unwrap();
        let t = ladder_table(&LadderSpec::new(65.0, th).unwrap()).unwrap();
        let back = DirectionTable::from_json(&t.to_json()).unwrap();
        assert_eq!(t, back);
    }
}
