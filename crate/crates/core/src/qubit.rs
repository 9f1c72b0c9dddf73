//! The two-qubit ladder: a nonmaximally entangled state
//! `cos α |00⟩ + sin α |11⟩` with `K+1` settings per side. The search space is
//! reduced by construction: every certainty fixes the next setting, and the
//! exclusion fixes where the second chain starts, so only `α` and the top
//! setting of particle 1 remain free.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{self, Execution};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::spin::CMatrix;
use crate::state::BipartiteState;

pub const FEASIBILITY_TOL: f64 = 1e-8;
pub const MIN_RESTARTS: usize = 100;

type Spinor = [Complex64; 2];

/// Point on the Bloch sphere, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles {
    pub polar_deg: f64,
    pub azimuth_deg: f64,
}

impl BlochAngles {
    pub fn spinor(&self) -> Spinor {
        let half = self.polar_deg.to_radians() / 2.0;
        [
            Complex64::new(half.cos(), 0.0),
            Complex64::from_polar(half.sin(), self.azimuth_deg.to_radians()),
        ]
    }

    fn from_spinor(v: &Spinor) -> Self {
        let polar = 2.0 * v[1].norm().atan2(v[0].norm());
        let azimuth = if v[0].norm() < 1e-300 || v[1].norm() < 1e-300 {
            0.0
        } else {
            v[1].arg() - v[0].arg()
        };
        BlochAngles {
            polar_deg: polar.to_degrees(),
            azimuth_deg: azimuth.to_degrees(),
        }
    }

    fn projector(&self) -> CMatrix {
        let v = self.spinor();
        DMatrix::from_fn(2, 2, |i, j| v[i] * v[j].conj())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitLadderConfig {
    pub k: usize,
    /// Schmidt angle; 45° is the maximally entangled state.
    pub alpha_deg: f64,
    /// `A_0 ..= A_K`.
    pub a_settings: Vec<BlochAngles>,
    /// `B_0 ..= B_K`.
    pub b_settings: Vec<BlochAngles>,
}

impl QubitLadderConfig {
    pub fn state(&self) -> BipartiteState {
        let a = self.alpha_deg.to_radians();
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(a.cos(), 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(a.sin(), 0.0),
            ],
        );
        BipartiteState::normalized(m).expect("nonzero amplitudes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitLadderResult {
    pub k: usize,
    /// `P(A_K, B_K)`.
    pub p_k: f64,
    /// Largest of `|1 − P(B_{j−1} | A_j)|`, `|1 − P(A_{j−1} | B_j)|` and `P(A_0, B_0)`.
    pub constraint_residual: f64,
    pub config: QubitLadderConfig,
    pub restarts: usize,
}

impl QubitLadderResult {
    pub fn is_feasible(&self) -> bool {
        self.constraint_residual < FEASIBILITY_TOL
    }
}

/// Born-rule evaluation of a configuration; independent of how it was built.
pub fn evaluate(config: &QubitLadderConfig) -> QubitLadderResult {
    let state = config.state();
    let id = CMatrix::identity(2, 2);
    let pa: Vec<CMatrix> = config
        .a_settings
        .iter()
        .map(BlochAngles::projector)
        .collect();
    let pb: Vec<CMatrix> = config
        .b_settings
        .iter()
        .map(BlochAngles::projector)
        .collect();
    let joint =
        |p: &CMatrix, q: &CMatrix| state.expectation_local(p, q).expect("two-qubit operators");
    let conditional = |given: f64, both: f64| if given > 1e-15 { both / given } else { 0.0 };
    let k = config.k;
    let mut residual = joint(&pa[0], &pb[0]);
    for j in 1..=k {
        let given_a = joint(&pa[j], &id);
        residual = residual.max((1.0 - conditional(given_a, joint(&pa[j], &pb[j - 1]))).abs());
        let given_b = joint(&id, &pb[j]);
        residual = residual.max((1.0 - conditional(given_b, joint(&pa[j - 1], &pb[j]))).abs());
    }
    QubitLadderResult {
        k,
        p_k: joint(&pa[k], &pb[k]),
        constraint_residual: residual,
        config: config.clone(),
        restarts: 0,
    }
}

fn normalize(v: Spinor) -> Option<Spinor> {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if !n.is_finite() || n <= 1e-300 {
        return None;
    }
    Some([v[0] / n, v[1] / n])
}

fn perp(v: &Spinor) -> Spinor {
    [-v[1].conj(), v[0].conj()]
}

/// Settings forced by `α` and the top setting of particle 1.
pub fn eliminate(k: usize, alpha_deg: f64, top_a: BlochAngles) -> Option<QubitLadderConfig> {
    let a = alpha_deg.to_radians();
    let (m0, m1) = (a.cos(), a.sin());
    if m0 <= 0.0 || m1 <= 0.0 {
        return None;
    }
    // Given particle 1 found in |u⟩, particle 2 is left in M conj(u) (M is
    // diagonal, so Mᵀ = M), and symmetrically.
    let partner = |u: &Spinor| normalize([m0 * u[0].conj(), m1 * u[1].conj()]);
    // The setting whose partner is |w⟩.
    let preimage = |w: &Spinor| normalize([(w[0] / m0).conj(), (w[1] / m1).conj()]);

    let mut a_set: Vec<Option<Spinor>> = vec![None; k + 1];
    let mut b_set: Vec<Option<Spinor>> = vec![None; k + 1];
    a_set[k] = Some(top_a.spinor());
    // Down from A_K: B_{K−1}, A_{K−2}, ... alternating sides.
    let mut cur = top_a.spinor();
    for step in 1..=k {
        cur = partner(&cur)?;
        let slot = if step % 2 == 1 {
            &mut b_set
        } else {
            &mut a_set
        };
        slot[k - step] = Some(cur);
    }
    // The other index-0 setting is orthogonal to the partner of the first.
    let first_chain_on_a = k.is_multiple_of(2);
    cur = perp(&partner(&cur)?);
    if first_chain_on_a {
        b_set[0] = Some(cur);
    } else {
        a_set[0] = Some(cur);
    }
    // Up from there to the top of particle 2.
    for step in 1..=k {
        cur = preimage(&cur)?;
        let on_a = (step % 2 == 1) == first_chain_on_a;
        let slot = if on_a { &mut a_set } else { &mut b_set };
        slot[step] = Some(cur);
    }
    let to_angles = |v: Vec<Option<Spinor>>| -> Option<Vec<BlochAngles>> {
        v.into_iter()
            .map(|s| s.map(|s| BlochAngles::from_spinor(&s)))
            .collect()
    };
    Some(QubitLadderConfig {
        k,
        alpha_deg,
        a_settings: to_angles(a_set)?,
        b_settings: to_angles(b_set)?,
    })
}

fn eliminated_p_k(k: usize, alpha_deg: f64, top_a: BlochAngles) -> Option<f64> {
    let cfg = eliminate(k, alpha_deg, top_a)?;
    let p = evaluate(&cfg);
    (p.constraint_residual < FEASIBILITY_TOL).then_some(p.p_k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub execution: Execution,
    /// Also vary the azimuth of the top setting.
    pub full_bloch: bool,
    /// Hold `α` fixed instead of optimizing it.
    pub fixed_alpha_deg: Option<f64>,
}

impl Default for QubitOptions {
    fn default() -> Self {
        QubitOptions {
            restarts: MIN_RESTARTS,
            seed: 0,
            execution: Execution::default(),
            full_bloch: false,
            fixed_alpha_deg: None,
        }
    }
}

pub fn optimize(k: usize) -> QubitLadderResult {
    optimize_with(k, &QubitOptions::default())
}

/// Multi-start maximization of `P_K` over the free parameters. Restarts are
/// seeded individually and merged by best value, lowest restart index first.
pub fn optimize_with(k: usize, opts: &QubitOptions) -> QubitLadderResult {
    assert!(k >= 1, "a ladder needs at least one step");
    let restarts = opts.restarts.max(MIN_RESTARTS);
    let unpack = |x: &[f64]| -> (f64, BlochAngles) {
        let (alpha, rest) = match opts.fixed_alpha_deg {
            Some(a) => (a, x),
            None => (x[0], &x[1..]),
        };
        let azimuth = if opts.full_bloch { rest[1] } else { 0.0 };
        (
            alpha,
            BlochAngles {
                polar_deg: rest[0],
                azimuth_deg: azimuth,
            },
        )
    };
    let objective = |x: &[f64]| {
        let (alpha, top) = unpack(x);
        if !(alpha > 0.0 && alpha <= 45.0) {
            return f64::INFINITY;
        }
        eliminated_p_k(k, alpha, top).map_or(f64::INFINITY, |p| -p)
    };
    let nm = NelderMeadOptions {
        initial_step: 5.0,
        x_tol: 1e-10,
        f_tol: 1e-15,
        max_evals: 20_000,
    };
    let runs = exec::map_range(opts.execution, restarts, |i| {
        let mut rng =
            ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ i as u64);
        let mut x0 = Vec::with_capacity(3);
        if opts.fixed_alpha_deg.is_none() {
            x0.push(rng.random_range(1.0..44.0));
        }
        x0.push(rng.random_range(0.0..360.0));
        if opts.full_bloch {
            x0.push(rng.random_range(0.0..360.0));
        }
        let m = nelder_mead(objective, &x0, &nm);
        nelder_mead(
            objective,
            &m.x,
            &NelderMeadOptions {
                initial_step: 0.5,
                ..nm
            },
        )
    });
    let best = runs
        .into_iter()
        .enumerate()
        .filter(|(_, m)| m.value.is_finite())
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .map(|(_, m)| m);
    let config = best
        .and_then(|m| {
            let (alpha, top) = unpack(&m.x);
            eliminate(k, alpha, top)
        })
        .unwrap_or_else(|| fallback_config(k, opts.fixed_alpha_deg.unwrap_or(45.0)));
    QubitLadderResult {
        restarts,
        ..evaluate(&config)
    }
}

/// Any feasible configuration; used only when no restart found one.
fn fallback_config(k: usize, alpha_deg: f64) -> QubitLadderConfig {
    eliminate(
        k,
        alpha_deg,
        BlochAngles {
            polar_deg: 0.0,
            azimuth_deg: 0.0,
        },
    )
    .expect("the standard basis survives elimination for α in (0°, 45°]")
}

/// `K,p_k,alpha_deg,residual,restarts`, one row per result.
pub fn results_to_csv(results: &[QubitLadderResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["K", "p_k", "alpha_deg", "residual", "restarts"])
        .expect("in-memory write");
    for r in results {
        w.write_record([
            r.k.to_string(),
            r.p_k.to_string(),
            format!("{:.6}", r.config.alpha_deg),
            r.constraint_residual.to_string(),
            r.restarts.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
