//! Bipartite pure states, Born-rule probabilities for squared spin-1
//! component events, and Schmidt analysis.
//!
//! A state `Σ M_ij |i⟩|j⟩` is stored as its amplitude matrix `M`, rows
//! indexing particle 1. Local operators act as `(P ⊗ Q)ψ ↔ P M Qᵀ`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::direction::Direction3;
use crate::error::{Error, Result};
use crate::spin::{
    cartesian_basis, max_abs, squared_projectors, zero_eigenvector, CMatrix, CVector,
};

const NORM_TOL: f64 = 1e-12;
/// Same-particle events are compatible when their directions are parallel or orthogonal.
pub const COMPATIBILITY_TOL: f64 = 1e-9;
const MIN_CONDITIONING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Particle {
    One,
    Two,
}

impl Particle {
    pub fn other(self) -> Particle {
        match self {
            Particle::One => Particle::Two,
            Particle::Two => Particle::One,
        }
    }
}

impl TryFrom<u8> for Particle {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Particle::One),
            2 => Ok(Particle::Two),
            _ => Err(format!("particle must be 1 or 2, got {v}")),
        }
    }
}

impl From<Particle> for u8 {
    fn from(p: Particle) -> u8 {
        match p {
            Particle::One => 1,
            Particle::Two => 2,
        }
    }
}

/// Outcome of `(S·n)²` in ħ² units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    pub fn value(self) -> u8 {
        self.into()
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Zero => Outcome::One,
            Outcome::One => Outcome::Zero,
        }
    }
}

impl TryFrom<u8> for Outcome {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Outcome::Zero),
            1 => Ok(Outcome::One),
            _ => Err(format!("outcome must be 0 or 1, got {v}")),
        }
    }
}

impl From<Outcome> for u8 {
    fn from(o: Outcome) -> u8 {
        match o {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }
}

/// `(S_particle · direction)² = outcome`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableEvent {
    pub particle: Particle,
    pub direction: Direction3,
    pub outcome: Outcome,
}

impl ObservableEvent {
    pub fn new(particle: Particle, direction: Direction3, outcome: Outcome) -> Self {
        ObservableEvent {
            particle,
            direction,
            outcome,
        }
    }

    pub fn projector(&self) -> CMatrix {
        squared_projectors(&self.direction)
            .for_outcome(self.outcome == Outcome::One)
            .clone()
    }
}

/// Normalized amplitude matrix of a two-particle pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    amplitudes: CMatrix,
}

impl BipartiteState {
    pub fn new(amplitudes: CMatrix) -> Result<Self> {
        if amplitudes.nrows() == 0 || amplitudes.ncols() == 0 {
            return Err(Error::InvalidState("empty amplitude matrix".into()));
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm is {norm_sq}")));
        }
        Ok(BipartiteState { amplitudes })
    }

    /// Rescales a nonzero amplitude matrix to unit norm.
    pub fn normalized(amplitudes: CMatrix) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("zero amplitude matrix".into()));
        }
        Self::new(amplitudes.unscale(norm))
    }

    pub fn dim1(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn dim2(&self) -> usize {
        self.amplitudes.ncols()
    }

    pub fn amplitudes(&self) -> &CMatrix {
        &self.amplitudes
    }

    /// `⟨ψ| P ⊗ Q |ψ⟩` for arbitrary local projectors.
    pub fn expectation_local(&self, p1: &CMatrix, p2: &CMatrix) -> Result<f64> {
        if p1.nrows() != self.dim1() || p2.nrows() != self.dim2() {
            return Err(Error::DimensionMismatch(format!(
                "operators {}×{} and {}×{} on a {}×{} state",
                p1.nrows(),
                p1.ncols(),
                p2.nrows(),
                p2.ncols(),
                self.dim1(),
                self.dim2()
            )));
        }
        Ok((p1 * &self.amplitudes * p2.transpose()).norm_squared())
    }

    /// Applies `A ⊗ B` and returns the (unnormalized) amplitude matrix.
    pub fn apply_local(&self, a: &CMatrix, b: &CMatrix) -> CMatrix {
        a * &self.amplitudes * b.transpose()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&StateDocument::from(self)).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: StateDocument =
            serde_json::from_str(s).map_err(|e| Error::InvalidState(e.to_string()))?;
        doc.try_into()
    }
}

/// JSON form: `{dim1, dim2, amplitudes: [[re, im], …]}` in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDocument {
    pub dim1: usize,
    pub dim2: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

impl From<&BipartiteState> for StateDocument {
    fn from(s: &BipartiteState) -> Self {
        let m = s.amplitudes();
        let mut amplitudes = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                amplitudes.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        StateDocument {
            dim1: m.nrows(),
            dim2: m.ncols(),
            amplitudes,
        }
    }
}

impl TryFrom<StateDocument> for BipartiteState {
    type Error = Error;

    fn try_from(doc: StateDocument) -> Result<Self> {
        if doc.amplitudes.len() != doc.dim1 * doc.dim2 {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a {}×{} state",
                doc.amplitudes.len(),
                doc.dim1,
                doc.dim2
            )));
        }
        let entries: Vec<Complex64> = doc
            .amplitudes
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        BipartiteState::new(CMatrix::from_row_slice(doc.dim1, doc.dim2, &entries))
    }
}

/// `(1/√3)(|1⟩|−1⟩ + |−1⟩|1⟩ − |0⟩|0⟩)` in the m-basis.
pub fn singlet_spin1() -> BipartiteState {
    let a = 1.0 / 3f64.sqrt();
    let mut m = CMatrix::zeros(3, 3);
    m[(0, 2)] = Complex64::new(a, 0.0);
    m[(2, 0)] = Complex64::new(a, 0.0);
    m[(1, 1)] = Complex64::new(-a, 0.0);
    BipartiteState { amplitudes: m }
}

/// Hermitian generator from nine real parameters: three diagonal entries,
/// then (re, im) of the (0,1), (0,2) and (1,2) entries.
fn hermitian_from_params(p: &[f64; 9]) -> CMatrix {
    let mut h = CMatrix::zeros(3, 3);
    for i in 0..3 {
        h[(i, i)] = Complex64::new(p[i], 0.0);
    }
    for (k, (r, c)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
        let z = Complex64::new(p[3 + 2 * k], p[4 + 2 * k]);
        h[(r, c)] = z;
        h[(c, r)] = z.conj();
    }
    h
}

/// `exp(iH)` for the Hermitian generator built from `params`.
pub fn unitary_from_params(params: &[f64; 9]) -> CMatrix {
    let eig = hermitian_from_params(params).symmetric_eigen();
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, l)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// `(1 ⊗ U)|singlet⟩` with `U = exp(iH(params))`. Zero parameters give the singlet.
pub fn maximally_entangled_spin1(params: &[f64; 9]) -> BipartiteState {
    let u = unitary_from_params(params);
    let s = singlet_spin1();
    let amps = s.apply_local(&CMatrix::identity(3, 3), &u);
    // Renormalize away rounding from the eigendecomposition.
    BipartiteState::normalized(amps).expect("unitary image of a normalized state")
}

/// Schmidt decomposition `ψ = Σ_k c_k |left_k⟩|right_k⟩`.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    /// Descending, nonnegative.
    pub coefficients: Vec<f64>,
    /// Columns are the particle-1 Schmidt vectors.
    pub left: CMatrix,
    /// Columns are the particle-2 Schmidt vectors.
    pub right: CMatrix,
}

impl SchmidtData {
    pub fn reconstruct(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.left.nrows(), self.right.nrows());
        for (k, c) in self.coefficients.iter().enumerate() {
            m += self.left.column(k) * self.right.column(k).transpose() * Complex64::new(*c, 0.0);
        }
        m
    }

    pub fn reconstruction_error(&self, state: &BipartiteState) -> f64 {
        max_abs(&(self.reconstruct() - state.amplitudes()))
    }

    pub fn is_maximally_entangled(&self, tol: f64) -> bool {
        let hi = self.coefficients.first().copied().unwrap_or(0.0);
        let lo = self.coefficients.last().copied().unwrap_or(0.0);
        hi - lo <= tol
    }
}

pub fn schmidt(state: &BipartiteState) -> SchmidtData {
    let svd = state.amplitudes().clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let coefficients = order.iter().map(|&k| svd.singular_values[k]).collect();
    let left = CMatrix::from_columns(&order.iter().map(|&k| u.column(k)).collect::<Vec<_>>());
    // M = U Σ V†, so the particle-2 vectors are the rows of V† read as columns.
    let right = DMatrix::from_columns(
        &order
            .iter()
            .map(|&k| v_t.row(k).transpose())
            .collect::<Vec<_>>(),
    );
    SchmidtData {
        coefficients,
        left,
        right,
    }
}

fn require_spin1(state: &BipartiteState) -> Result<()> {
    if state.dim1() != 3 || state.dim2() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "squared spin-1 events need a 3×3 state, got {}×{}",
            state.dim1(),
            state.dim2()
        )));
    }
    Ok(())
}

/// `⟨ψ| P_a ⊗ P_b |ψ⟩` with `a` on particle 1 and `b` on particle 2.
pub fn joint_probability(
    state: &BipartiteState,
    a: &ObservableEvent,
    b: &ObservableEvent,
) -> Result<f64> {
    require_spin1(state)?;
    if a.particle != Particle::One || b.particle != Particle::Two {
        return Err(Error::DimensionMismatch(
            "joint probability takes one event on each particle, particle 1 first".into(),
        ));
    }
    state.expectation_local(&a.projector(), &b.projector())
}

fn compatible(a: &ObservableEvent, b: &ObservableEvent) -> bool {
    a.direction.is_parallel(&b.direction, COMPATIBILITY_TOL)
        || a.direction.is_orthogonal(&b.direction, COMPATIBILITY_TOL)
}

/// Product of the commuting projectors of the given events on one particle.
fn joint_projector<'a>(events: impl Iterator<Item = &'a ObservableEvent>) -> CMatrix {
    events.fold(CMatrix::identity(3, 3), |acc, e| acc * e.projector())
}

fn probability_of_all(state: &BipartiteState, events: &[&ObservableEvent]) -> Result<f64> {
    let p1 = joint_projector(
        events
            .iter()
            .copied()
            .filter(|e| e.particle == Particle::One),
    );
    let p2 = joint_projector(
        events
            .iter()
            .copied()
            .filter(|e| e.particle == Particle::Two),
    );
    state.expectation_local(&p1, &p2)
}

/// `P(target ∧ given) / P(given)`.
pub fn conditional_probability(
    state: &BipartiteState,
    target: &ObservableEvent,
    given: &[ObservableEvent],
) -> Result<f64> {
    require_spin1(state)?;
    let all: Vec<&ObservableEvent> = given.iter().chain(std::iter::once(target)).collect();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            if a.particle == b.particle && !compatible(a, b) {
                return Err(Error::IncompatibleGivens);
            }
        }
    }
    let p_given = probability_of_all(state, &all[..given.len()])?;
    if p_given <= MIN_CONDITIONING {
        return Err(Error::ZeroConditioningProbability(p_given));
    }
    let p_joint = probability_of_all(state, &all)?;
    Ok((p_joint / p_given).clamp(0.0, 1.0))
}

/// Direction `n_k` such that `(S₂·n_k)² = 0` is certain once `(S₁·n_j)² = 0`
/// has been found, or `None` if no such direction exists.
///
/// The zero eigenvector of `(S₁·n_j)²` is mapped through the amplitude matrix;
/// the image must be, up to a global phase, a real vector in the Cartesian
/// basis, which is then the zero eigenvector along `n_k`.
pub fn partner_direction(state: &BipartiteState, n_j: &Direction3) -> Result<Option<Direction3>> {
    require_spin1(state)?;
    let data = schmidt(state);
    if !data.is_maximally_entangled(1e-9) {
        return Err(Error::NotMaximallyEntangled(data.coefficients));
    }
    let v = zero_eigenvector(n_j);
    let image: CVector = state.amplitudes().transpose() * v.conjugate();
    let norm = image.norm();
    if norm < 1e-12 {
        return Ok(None);
    }
    let cart = cartesian_basis().adjoint() * image.unscale(norm);
    // Global phase that makes Σ w_k² real and positive maximizes the real part.
    let sum_sq: Complex64 = cart.iter().map(|z| z * z).sum();
    let phase = Complex64::from_polar(1.0, -0.5 * sum_sq.arg());
    let rotated: Vec<Complex64> = cart.iter().map(|z| z * phase).collect();
    if rotated.iter().any(|z| z.im.abs() >= 1e-9) {
        return Ok(None);
    }
    let n_k = Direction3::new(rotated[0].re, rotated[1].re, rotated[2].re)?;
    let target = ObservableEvent::new(Particle::Two, n_k, Outcome::Zero);
    let given = ObservableEvent::new(Particle::One, *n_j, Outcome::Zero);
    let p = conditional_probability(state, &target, &[given])?;
    Ok((p >= 1.0 - 1e-9).then_some(n_k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{spin_component, SpinRep};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zero(p: Particle, d: Direction3) -> ObservableEvent {
        ObservableEvent::new(p, d, Outcome::Zero)
    }

    fn one(p: Particle, d: Direction3) -> ObservableEvent {
        ObservableEvent::new(p, d, Outcome::One)
    }

    fn random_params(rng: &mut ChaCha8Rng) -> [f64; 9] {
        std::array::from_fn(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
    }

    #[test]
    fn singlet_is_normalized_and_rotation_invariant() {
        let s = singlet_spin1();
        assert!((s.amplitudes().norm_squared() - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let id = CMatrix::identity(3, 3);
        for _ in 0..100 {
            let n = Direction3::random(&mut rng);
            let sn = spin_component(SpinRep::ONE, &n).into_matrix();
            let total = s.apply_local(&sn, &id) + s.apply_local(&id, &sn);
            assert!(max_abs(&total) < 1e-12);
        }
    }

    #[test]
    fn joint_probability_examples() {
        let s = singlet_spin1();
        let phi = (1.0f64 / 3.0).acos();
        let b = Direction3::new(phi.cos(), phi.sin(), 0.0).unwrap();
        let p = joint_probability(
            &s,
            &zero(Particle::One, Direction3::X),
            &zero(Particle::Two, b),
        )
        .unwrap();
        assert!((p - 1.0 / 27.0).abs() < 1e-12);
        let p = joint_probability(
            &s,
            &zero(Particle::One, Direction3::X),
            &zero(Particle::Two, Direction3::Y),
        )
        .unwrap();
        assert!(p < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = Direction3::random(&mut rng);
            let p =
                joint_probability(&s, &zero(Particle::One, n), &zero(Particle::Two, n)).unwrap();
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_probability_rejects_wrong_particles_and_dims() {
        let s = singlet_spin1();
        let e = zero(Particle::Two, Direction3::X);
        assert!(matches!(
            joint_probability(&s, &e, &e),
            Err(Error::DimensionMismatch(_))
        ));
        let qubit = BipartiteState::normalized(CMatrix::identity(2, 2)).unwrap();
        let a = zero(Particle::One, Direction3::X);
        assert!(matches!(
            joint_probability(&qubit, &a, &e),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn singlet_certainties() {
        let s = singlet_spin1();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let n = Direction3::random(&mut rng);
            let m = n.any_orthogonal();
            let p = conditional_probability(&s, &zero(Particle::Two, n), &[zero(Particle::One, n)])
                .unwrap();
            assert!((p - 1.0).abs() < 1e-12);
            let p = conditional_probability(&s, &one(Particle::Two, n), &[one(Particle::One, n)])
                .unwrap();
            assert!((p - 1.0).abs() < 1e-12);
            let p = conditional_probability(&s, &one(Particle::Two, m), &[zero(Particle::One, n)])
                .unwrap();
            assert!((p - 1.0).abs() < 1e-12);
            let w = crate::spin::triad_complete(&n, &m).unwrap();
            let givens = [one(Particle::One, n), one(Particle::One, m)];
            let p = conditional_probability(&s, &zero(Particle::Two, w), &givens).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
            let reversed = [givens[1], givens[0]];
            let q = conditional_probability(&s, &zero(Particle::Two, w), &reversed).unwrap();
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn conditional_errors() {
        let s = singlet_spin1();
        let oblique = Direction3::new(1.0, 1.0, 0.0).unwrap();
        let r = conditional_probability(
            &s,
            &zero(Particle::Two, Direction3::Z),
            &[
                one(Particle::One, Direction3::X),
                one(Particle::One, oblique),
            ],
        );
        assert_eq!(r, Err(Error::IncompatibleGivens));
        // Two orthogonal zeros on one particle never happen together.
        let r = conditional_probability(
            &s,
            &zero(Particle::Two, Direction3::Z),
            &[
                zero(Particle::One, Direction3::X),
                zero(Particle::One, Direction3::Y),
            ],
        );
        assert!(matches!(r, Err(Error::ZeroConditioningProbability(_))));
    }

    #[test]
    fn schmidt_examples() {
        let c = schmidt(&singlet_spin1()).coefficients;
        for x in &c {
            assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        let mut product = CMatrix::zeros(3, 3);
        product[(0, 1)] = Complex64::new(1.0, 0.0);
        let c = schmidt(&BipartiteState::new(product).unwrap()).coefficients;
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12 && c[2].abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (d1, d2) in [(3, 3), (2, 3), (4, 2)] {
            let m = CMatrix::from_fn(d1, d2, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let st = BipartiteState::normalized(m).unwrap();
            let data = schmidt(&st);
            assert!(data.reconstruction_error(&st) < 1e-10);
            let sum: f64 = data.coefficients.iter().map(|c| c * c).sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(data.coefficients.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn maximally_entangled_family() {
        let s0 = maximally_entangled_spin1(&[0.0; 9]);
        assert!(max_abs(&(s0.amplitudes() - singlet_spin1().amplitudes())) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let st = maximally_entangled_spin1(&random_params(&mut rng));
            let c = schmidt(&st).coefficients;
            assert!(c[0] - c[2] < 1e-12);
        }
    }

    #[test]
    fn singlet_partner_is_same_direction() {
        let s = singlet_spin1();
        let p = partner_direction(&s, &Direction3::Z).unwrap().unwrap();
        assert!(p.is_parallel(&Direction3::Z, 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = Direction3::random(&mut rng);
            let p = partner_direction(&s, &n).unwrap().unwrap();
            assert!(p.is_parallel(&n, 1e-10));
        }
    }

    #[test]
    fn partner_requires_maximal_entanglement() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = Complex64::new(0.8, 0.0);
        m[(1, 1)] = Complex64::new(0.6, 0.0);
        let st = BipartiteState::new(m).unwrap();
        assert!(matches!(
            partner_direction(&st, &Direction3::Z),
            Err(Error::NotMaximallyEntangled(_))
        ));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let st = maximally_entangled_spin1(&random_params(&mut rng));
        let back = BipartiteState::from_json(&st.to_json()).unwrap();
        assert_eq!(st, back);
        assert!(BipartiteState::from_json(r#"{"dim1":2,"dim2":2,"amplitudes":[[1,0]]}"#).is_err());
        assert!(
            BipartiteState::from_json(r#"{"dim1":1,"dim2":2,"amplitudes":[[1,0],[1,0]]}"#).is_err()
        );
    }
}
