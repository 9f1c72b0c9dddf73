//! Pairs of orthonormal triads with a cyclic pattern of relative angles, and
//! how much of the joint outcome probability a given φ-window covers.

use serde::{Deserialize, Serialize};

use crate::direction::Direction3;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::ladder::PhiWindow;
use crate::state::{joint_probability, BipartiteState, ObservableEvent, Outcome, Particle};

pub const PATTERN_TOL: f64 = 1e-8;
/// Slack on both window ends when classifying an angle, in degrees.
pub const CLASSIFY_SLACK_DEG: f64 = 1e-9;

/// Relative angles between two triads `(i, j, k)` and `(a, b, c)`:
/// `φ₁ = ∠ia = ∠jb = ∠kc`, `φ₂ = ∠ja = ∠kb = ∠ic`, `φ₃ = ∠ka = ∠ib = ∠jc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePattern {
    pub phi1_deg: f64,
    pub phi2_deg: f64,
    pub phi3_deg: f64,
}

impl AnglePattern {
    pub fn new(phi1_deg: f64, phi2_deg: f64, phi3_deg: f64) -> Result<Self> {
        let p = AnglePattern {
            phi1_deg,
            phi2_deg,
            phi3_deg,
        };
        let (norm, cross) = p.residuals();
        if !(norm.abs() <= PATTERN_TOL && cross.abs() <= PATTERN_TOL) {
            return Err(Error::InconsistentPattern(format!(
                "cos² sum off by {norm:.3e}, pairwise product sum {cross:.3e}"
            )));
        }
        Ok(p)
    }

    /// Pattern with the given cosines, unchecked.
    fn from_cosines_raw(c: [f64; 3]) -> Self {
        let deg = |x: f64| x.clamp(-1.0, 1.0).acos().to_degrees();
        AnglePattern {
            phi1_deg: deg(c[0]),
            phi2_deg: deg(c[1]),
            phi3_deg: deg(c[2]),
        }
    }

    /// `(arccos((1+√3)/3), arccos(1/3), arccos((1−√3)/3))`: the best split for
    /// the single-block window.
    pub fn sec3() -> Self {
        let r3 = 3f64.sqrt();
        Self::from_cosines_raw([(1.0 + r3) / 3.0, 1.0 / 3.0, (1.0 - r3) / 3.0])
    }

    /// `(arccos(2/3), arccos(2/3), arccos(−1/3))`: every angle inside the
    /// eleven-block window.
    pub fn sec4() -> Self {
        Self::from_cosines_raw([2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0])
    }

    pub fn named(name: &str) -> Option<Self> {
        match name {
            "sec3" => Some(Self::sec3()),
            "sec4" => Some(Self::sec4()),
            _ => None,
        }
    }

    /// One-parameter family. The cosines satisfy `x + y + z = sign` (±1) and
    /// `xy + yz + zx = 0`; `x` is the first cosine, `upper` picks which root
    /// becomes the second. Returns `None` when `x` is outside the family.
    pub fn from_family(x: f64, sign: f64, upper: bool) -> Option<Self> {
        let rest = sign - x;
        let disc = rest * (sign + 3.0 * x);
        if disc < -1e-15 {
            return None;
        }
        let root = disc.max(0.0).sqrt();
        let (hi, lo) = ((rest + root) / 2.0, (rest - root) / 2.0);
        let (y, z) = if upper { (hi, lo) } else { (lo, hi) };
        if [x, y, z].iter().any(|c| c.abs() > 1.0 + 1e-12) {
            return None;
        }
        Some(Self::from_cosines_raw([x, y, z]))
    }

    pub fn cosines(&self) -> [f64; 3] {
        [self.phi1_deg, self.phi2_deg, self.phi3_deg].map(|d| d.to_radians().cos())
    }

    pub fn angles_deg(&self) -> [f64; 3] {
        [self.phi1_deg, self.phi2_deg, self.phi3_deg]
    }

    /// `(Σcos² − 1, c₁c₃ + c₃c₂ + c₂c₁)`.
    pub fn residuals(&self) -> (f64, f64) {
        let [c1, c2, c3] = self.cosines();
        (
            c1 * c1 + c2 * c2 + c3 * c3 - 1.0,
            c1 * c3 + c3 * c2 + c2 * c1,
        )
    }
}

/// Angle class of cell `(u, v)`: 0, 1, 2 for φ₁, φ₂, φ₃.
pub fn angle_class(u: usize, v: usize) -> usize {
    (u + 3 - v) % 3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriadPair {
    /// `(i, j, k)`, measured on particle 1.
    pub first: [Direction3; 3],
    /// `(a, b, c)`, measured on particle 2.
    pub second: [Direction3; 3],
}

impl TriadPair {
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t in [&self.first, &self.second] {
            for p in 0..3 {
                worst = worst.max((t[p].as_vector().norm() - 1.0).abs());
                for q in p + 1..3 {
                    worst = worst.max(t[p].dot(&t[q]).abs());
                }
            }
        }
        worst
    }

    /// `angles[u][v]` is the angle between `first[u]` and `second[v]`, in degrees.
    pub fn realized_angles(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (u, row) in out.iter_mut().enumerate() {
            for (v, cell) in row.iter_mut().enumerate() {
                *cell = self.first[u].angle_deg(&self.second[v]);
            }
        }
        out
    }

    /// Largest deviation of a realized angle from the pattern, in degrees.
    pub fn pattern_error(&self, pattern: &AnglePattern) -> f64 {
        let target = pattern.angles_deg();
        let angles = self.realized_angles();
        let mut worst: f64 = 0.0;
        for u in 0..3 {
            for v in 0..3 {
                worst = worst.max((angles[u][v] - target[angle_class(u, v)]).abs());
            }
        }
        worst
    }
}

/// First triad is the standard basis; the second triad has rows
/// `a = (c₁, c₂, c₃)`, `b = (c₃, c₁, c₂)`, `c = (c₂, c₃, c₁)`.
pub fn build_triads(pattern: &AnglePattern) -> Result<TriadPair> {
    let pattern = AnglePattern::new(pattern.phi1_deg, pattern.phi2_deg, pattern.phi3_deg)?;
    let [c1, c2, c3] = pattern.cosines();
    let row = |x, y, z| {
        Direction3::new(x, y, z).map_err(|_| Error::InconsistentPattern("zero row".into()))
    };
    Ok(TriadPair {
        first: [Direction3::X, Direction3::Y, Direction3::Z],
        second: [row(c1, c2, c3)?, row(c3, c1, c2)?, row(c2, c3, c1)?],
    })
}

/// Closed interval of relative angles for which the ladder applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleWindow {
    pub min_deg: f64,
    pub max_deg: f64,
}

impl AngleWindow {
    pub fn new(min_deg: f64, max_deg: f64) -> Self {
        AngleWindow { min_deg, max_deg }
    }

    /// A window with `min ≥ max` contains nothing.
    pub fn is_empty(&self) -> bool {
        self.min_deg >= self.max_deg
    }

    pub fn contains(&self, angle_deg: f64) -> bool {
        !self.is_empty()
            && angle_deg >= self.min_deg - CLASSIFY_SLACK_DEG
            && angle_deg <= self.max_deg + CLASSIFY_SLACK_DEG
    }
}

impl From<&PhiWindow> for AngleWindow {
    fn from(w: &PhiWindow) -> Self {
        AngleWindow::new(w.phi_min_deg, w.phi_max_deg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub u_index: usize,
    pub v_index: usize,
    pub angle_deg: f64,
    /// Probability that both `(S₁·u)²` and `(S₂·v)²` give 0.
    pub probability: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub pattern: AnglePattern,
    pub window: AngleWindow,
    pub cells: Vec<CoverageCell>,
    pub covered_probability: f64,
    pub uncovered_probability: f64,
}

impl CoverageReport {
    pub fn total_probability(&self) -> f64 {
        self.cells.iter().map(|c| c.probability).sum()
    }

    /// Nine cell rows then a summary row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .from_writer(Vec::new());
        w.write_record(["u_index", "v_index", "angle_deg", "probability", "covered"])
            .expect("in-memory write");
        for c in &self.cells {
            w.write_record([
                c.u_index.to_string(),
                c.v_index.to_string(),
                format!("{:.6}", c.angle_deg),
                c.probability.to_string(),
                c.covered.to_string(),
            ])
            .expect("in-memory write");
        }
        w.write_record([
            "summary".to_string(),
            "covered".to_string(),
            self.covered_probability.to_string(),
            "uncovered".to_string(),
            self.uncovered_probability.to_string(),
        ])
        .expect("in-memory write");
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Joint zero-zero probability of every (first, second) cell, and which cells
/// fall inside the window.
pub fn coverage(
    state: &BipartiteState,
    pair: &TriadPair,
    pattern: &AnglePattern,
    window: AngleWindow,
) -> Result<CoverageReport> {
    let mut cells = Vec::with_capacity(9);
    for u in 0..3 {
        for v in 0..3 {
            let a = ObservableEvent::new(Particle::One, pair.first[u], Outcome::Zero);
            let b = ObservableEvent::new(Particle::Two, pair.second[v], Outcome::Zero);
            let probability = joint_probability(state, &a, &b)?;
            let angle_deg = pair.first[u].angle_deg(&pair.second[v]);
            cells.push(CoverageCell {
                u_index: u,
                v_index: v,
                angle_deg,
                probability,
                covered: window.contains(angle_deg),
            });
        }
    }
    let covered_probability = cells
        .iter()
        .filter(|c| c.covered)
        .fold(0.0, |a, c| a + c.probability);
    let uncovered_probability = cells
        .iter()
        .filter(|c| !c.covered)
        .fold(0.0, |a, c| a + c.probability);
    Ok(CoverageReport {
        pattern: *pattern,
        window,
        cells,
        covered_probability,
        uncovered_probability,
    })
}

/// Singlet coverage depends only on the pattern: each angle class contributes
/// `cos²φ` when inside the window.
pub fn singlet_coverage(pattern: &AnglePattern, window: AngleWindow) -> f64 {
    pattern
        .angles_deg()
        .iter()
        .zip(pattern.cosines())
        .filter(|(a, _)| window.contains(**a))
        .map(|(_, c)| c * c)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub best: CoverageReport,
    pub patterns_evaluated: usize,
}

pub fn scan_patterns(
    state: &BipartiteState,
    window: AngleWindow,
    grid_resolution: usize,
) -> Result<ScanResult> {
    scan_patterns_with(state, window, grid_resolution, Execution::default())
}

/// Sweeps the one-parameter pattern family on a uniform grid of the first
/// cosine, plus the patterns with an angle exactly on a window edge (where
/// the covered probability jumps), and returns the best report.
pub fn scan_patterns_with(
    state: &BipartiteState,
    window: AngleWindow,
    grid_resolution: usize,
    exec: Execution,
) -> Result<ScanResult> {
    if grid_resolution < 100 {
        return Err(Error::InvalidSpec(
            "grid resolution must be at least 100".into(),
        ));
    }
    let mut xs: Vec<(f64, f64)> = Vec::new();
    for sign in [1.0, -1.0] {
        // Family range: x ∈ [−1/3, 1] for sign +1, mirrored for −1.
        let (lo, hi) = if sign > 0.0 {
            (-1.0 / 3.0, 1.0)
        } else {
            (-1.0, 1.0 / 3.0)
        };
        xs.extend((0..grid_resolution).map(|i| {
            (
                lo + (hi - lo) * i as f64 / (grid_resolution - 1) as f64,
                sign,
            )
        }));
        if !window.is_empty() {
            for edge in [window.min_deg, window.max_deg] {
                xs.push((edge.to_radians().cos(), sign));
            }
        }
    }
    let candidates: Vec<AnglePattern> = xs
        .iter()
        .flat_map(|&(x, sign)| {
            [true, false]
                .into_iter()
                .filter_map(move |up| AnglePattern::from_family(x, sign, up))
        })
        .collect();
    let scores = exec::map_slice(exec, &candidates, |p| singlet_coverage(p, window));
    let best_index = scores
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.total_cmp(b).then(j.cmp(i)))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let pattern = candidates[best_index];
    let pair = build_triads(&pattern)?;
    let best = coverage(state, &pair, &pattern, window)?;
    Ok(ScanResult {
        best,
        patterns_evaluated: candidates.len(),
    })
}
