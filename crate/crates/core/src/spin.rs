//! Spin operators, spin components along arbitrary directions and the
//! spectral projectors of squared spin-1 components.
//!
//! Matrices act on the standard basis `|s, m⟩` ordered `m = s, s−1, …, −s`,
//! with ħ = 1.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;

use crate::direction::Direction3;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;

/// Spin representation labelled by `2s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinRep {
    two_s: u32,
}

impl SpinRep {
    pub const HALF: SpinRep = SpinRep { two_s: 1 };
    pub const ONE: SpinRep = SpinRep { two_s: 2 };

    pub fn new(two_s: u32) -> Result<Self> {
        if two_s == 0 {
            return Err(Error::DimensionMismatch(
                "spin representation needs dimension ≥ 2".into(),
            ));
        }
        Ok(SpinRep { two_s })
    }

    pub fn two_s(&self) -> u32 {
        self.two_s
    }

    pub fn spin(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    pub fn dimension(&self) -> usize {
        self.two_s as usize + 1
    }

    /// `m` value of the basis vector at `index`.
    pub fn m(&self, index: usize) -> f64 {
        self.spin() - index as f64
    }
}

/// Hermitian matrix in ħ-units.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp(CMatrix);

impl HermitianOp {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("operator must be square".into()));
        }
        let dev = max_abs(&(&m - m.adjoint()));
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "matrix deviates from its adjoint by {dev:e}"
            )));
        }
        Ok(HermitianOp(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn square(&self) -> HermitianOp {
        HermitianOp(&self.0 * &self.0)
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(Sx, Sy, Sz)` for the given representation.
pub fn spin_operators(rep: SpinRep) -> (HermitianOp, HermitianOp, HermitianOp) {
    let d = rep.dimension();
    let s = rep.spin();
    let mut raise = CMatrix::zeros(d, d);
    // S+ |m⟩ = sqrt(s(s+1) − m(m+1)) |m+1⟩; |m+1⟩ sits one row above |m⟩.
    for col in 1..d {
        let m = rep.m(col);
        raise[(col - 1, col)] = Complex64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, -0.5);
    let sx = (&raise + &lower) * half;
    let sy = (&raise - &lower) * half_i;
    let sz = CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::new(rep.m(r), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    (HermitianOp(sx), HermitianOp(sy), HermitianOp(sz))
}

/// `S·n = n_x Sx + n_y Sy + n_z Sz`.
pub fn spin_component(rep: SpinRep, n: &Direction3) -> HermitianOp {
    let (sx, sy, sz) = spin_operators(rep);
    let c = |v: f64| Complex64::new(v, 0.0);
    HermitianOp(sx.0 * c(n.x()) + sy.0 * c(n.y()) + sz.0 * c(n.z()))
}

/// Spectral projectors of `(S·n)²` for spin 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPair {
    /// Rank-1 projector onto the eigenvalue 0.
    pub p_zero: CMatrix,
    /// Rank-2 projector onto the eigenvalue ħ².
    pub p_one: CMatrix,
}

impl ProjectorPair {
    /// Projector for the outcome `0` (`false`) or `ħ²` (`true`).
    pub fn for_outcome(&self, one: bool) -> &CMatrix {
        if one {
            &self.p_one
        } else {
            &self.p_zero
        }
    }
}

/// For spin 1, `(S·n)²` has eigenvalues {0, 1, 1}, so it is itself the
/// projector onto the ħ² eigenspace and `1 − (S·n)²` projects onto 0.
pub fn squared_projectors(n: &Direction3) -> ProjectorPair {
    let sq = spin_component(SpinRep::ONE, n).square().into_matrix();
    let p_zero = CMatrix::identity(3, 3) - &sq;
    ProjectorPair { p_zero, p_one: sq }
}

/// Columns are the Cartesian states `|x⟩, |y⟩, |z⟩` written in the m-basis.
///
/// In this basis `(S_k)_{ij} = −i ε_{kij}`, so the zero eigenvector of `S·n`
/// is the real vector `n` itself.
pub fn cartesian_basis() -> CMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    #[rustfmt::skip]
    let entries = [
        Complex64::new(-r, 0.0), Complex64::new(0.0, r), z,
        z,                       z,                      Complex64::new(1.0, 0.0),
        Complex64::new(r, 0.0),  Complex64::new(0.0, r), z,
    ];
    CMatrix::from_row_slice(3, 3, &entries)
}

/// Normalized eigenvector of spin-1 `S·n` with eigenvalue 0, in the m-basis.
pub fn zero_eigenvector(n: &Direction3) -> CVector {
    let v = n.as_vector();
    let cart = CVector::from_vec(vec![
        Complex64::new(v.x, 0.0),
        Complex64::new(v.y, 0.0),
        Complex64::new(v.z, 0.0),
    ]);
    cartesian_basis() * cart
}

/// Unit cross product `u × v` of two orthogonal directions.
pub fn triad_complete(u: &Direction3, v: &Direction3) -> Result<Direction3> {
    let dot = u.dot(v);
    if dot.abs() >= 1e-9 {
        return Err(Error::NonOrthogonal { dot });
    }
    let w: Vector3<f64> = u.cross(v);
    Direction3::from_vector(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_triad(rng: &mut ChaCha8Rng) -> [Direction3; 3] {
        let u = Direction3::random(rng);
        let v = Direction3::from_vector(u.cross(&Direction3::random(rng))).unwrap();
        let w = triad_complete(&u, &v).unwrap();
        [u, v, w]
    }

    #[test]
    fn sz_conventions() {
        let (_, _, sz) = spin_operators(SpinRep::ONE);
        let diag: Vec<f64> = (0..3).map(|i| sz.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
        let (_, _, sz) = spin_operators(SpinRep::HALF);
        assert_eq!(sz.matrix()[(0, 0)].re, 0.5);
        assert_eq!(sz.matrix()[(1, 1)].re, -0.5);
    }

    #[test]
    fn angular_momentum_commutator() {
        for two_s in 1..=6 {
            let rep = SpinRep::new(two_s).unwrap();
            let (sx, sy, sz) = spin_operators(rep);
            let comm = sx.matrix() * sy.matrix() - sy.matrix() * sx.matrix();
            let expected = sz.matrix() * Complex64::new(0.0, 1.0);
            assert!(max_abs(&(comm - expected)) < 1e-12, "2s = {two_s}");
            for op in [&sx, &sy, &sz] {
                assert!(HermitianOp::new(op.matrix().clone()).is_ok());
            }
        }
    }

    #[test]
    fn zero_spin_rejected() {
        assert!(SpinRep::new(0).is_err());
    }

    #[test]
    fn component_spectrum_and_cubic_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sx = spin_component(SpinRep::ONE, &Direction3::X);
        for (got, want) in sx.eigenvalues().iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let sz = spin_component(SpinRep::ONE, &Direction3::Z);
        assert_eq!(sz, spin_operators(SpinRep::ONE).2);
        for _ in 0..100 {
            let n = Direction3::random(&mut rng);
            let s = spin_component(SpinRep::ONE, &n);
            let cube = s.matrix() * s.matrix() * s.matrix();
            assert!(max_abs(&(cube - s.matrix())) < 1e-12);
            let sq = s.square();
            for (got, want) in sq.eigenvalues().iter().zip([0.0, 1.0, 1.0]) {
                assert!((got - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projector_pair_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let id = CMatrix::identity(3, 3);
        for _ in 0..1000 {
            let p = squared_projectors(&Direction3::random(&mut rng));
            assert!(max_abs(&(&p.p_zero * &p.p_zero - &p.p_zero)) < 1e-12);
            assert!(max_abs(&(&p.p_one * &p.p_one - &p.p_one)) < 1e-12);
            assert!(max_abs(&(&p.p_zero * &p.p_one)) < 1e-12);
            assert!(max_abs(&(&p.p_zero + &p.p_one - &id)) < 1e-12);
            assert!((p.p_zero.trace().re - 1.0).abs() < 1e-12);
            assert!((p.p_one.trace().re - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn z_projector_is_m_zero_state() {
        let p = squared_projectors(&Direction3::Z);
        let mut expected = CMatrix::zeros(3, 3);
        expected[(1, 1)] = Complex64::new(1.0, 0.0);
        assert!(max_abs(&(p.p_zero - expected)) < 1e-15);
    }

    #[test]
    fn squared_components_of_triad_sum_to_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let two = CMatrix::identity(3, 3) * Complex64::new(2.0, 0.0);
        for _ in 0..1000 {
            let t = random_triad(&mut rng);
            let sum = t
                .iter()
                .map(|n| spin_component(SpinRep::ONE, n).square().into_matrix())
                .fold(CMatrix::zeros(3, 3), |acc, m| acc + m);
            assert!(max_abs(&(sum - &two)) < 1e-12);
        }
    }

    #[test]
    fn orthogonal_zero_projectors_annihilate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = Direction3::random(&mut rng);
            let m = n.any_orthogonal();
            let prod = squared_projectors(&n).p_zero * squared_projectors(&m).p_zero;
            assert!(max_abs(&prod) < 1e-12);
        }
    }

    #[test]
    fn cartesian_zero_eigenvector() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = cartesian_basis();
        assert!(max_abs(&(c.adjoint() * &c - CMatrix::identity(3, 3))) < 1e-15);
        for _ in 0..100 {
            let n = Direction3::random(&mut rng);
            let v = zero_eigenvector(&n);
            let s = spin_component(SpinRep::ONE, &n);
            assert!((s.matrix() * &v).norm() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn triad_completion() {
        let w = triad_complete(&Direction3::X, &Direction3::Y).unwrap();
        assert!((w.z() - 1.0).abs() < 1e-15);
        let bad = Direction3::new(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            triad_complete(&Direction3::X, &bad),
            Err(Error::NonOrthogonal { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let [u, v, w] = random_triad(&mut rng);
            assert!(w.is_orthogonal(&u, 1e-12) && w.is_orthogonal(&v, 1e-12));
        }
    }
}
