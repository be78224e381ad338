//! Self-adjoint linear subspaces of a block algebra.

use crate::algebra::{matrix_unit_tensor, AlgebraShape, Element, Tolerances};
use crate::error::{OzError, Result};
use crate::scalar::{cre, Real, C};

/// A self-adjoint subspace with a Hilbert–Schmidt orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace<T: Real> {
    shape: AlgebraShape,
    basis: Vec<Element<T>>,
    ortho: Vec<Element<T>>,
}

/// Outcome of a membership test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Membership<T: Real> {
    pub member: bool,
    pub residual: T,
}

/// Gram–Schmidt step against an orthonormal family; returns the remainder.
fn orthogonalize<T: Real>(v: &Element<T>, family: &[Element<T>]) -> Element<T> {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in family {
            let c = q.hs_inner(&r);
            r = r.axpy(-c, q);
        }
    }
    r
}

impl<T: Real> Subspace<T> {
    /// Builds the span of `vectors`, dropping numerically dependent ones and
    /// rejecting spans that are not closed under the adjoint.
    pub fn new(shape: &AlgebraShape, vectors: Vec<Element<T>>, tol: &Tolerances) -> Result<Self> {
        let rank_tol = T::lit(tol.rank);
        let mut basis = Vec::new();
        let mut ortho: Vec<Element<T>> = Vec::new();
        for v in vectors {
            if v.shape() != shape {
                return Err(OzError::Shape(format!("vector of shape {:?} in subspace of shape {:?}", v.shape().blocks(), shape.blocks())));
            }
            let scale = v.hs_norm();
            if scale == T::zero() {
                continue;
            }
            let r = orthogonalize(&v, &ortho);
            let rn = r.hs_norm();
            if rn > rank_tol * scale {
                ortho.push(r.scale_real(T::one() / rn));
                basis.push(v);
            }
        }
        let out = Self { shape: shape.clone(), basis, ortho };
        for (index, v) in out.basis.iter().enumerate() {
            let m = out.contains(&v.adjoint(), tol.membership);
            if !m.member {
                return Err(OzError::NotSelfAdjoint { index, residual: m.residual.as_f64() });
            }
        }
        Ok(out)
    }

    /// Span without the adjoint-closure check.
    pub(crate) fn new_unchecked(shape: &AlgebraShape, vectors: Vec<Element<T>>, tol: &Tolerances) -> Self {
        let rank_tol = T::lit(tol.rank);
        let mut out = Self::trivial(shape);
        for v in vectors {
            let scale = v.hs_norm();
            if scale == T::zero() {
                continue;
            }
            let r = orthogonalize(&v, &out.ortho);
            let rn = r.hs_norm();
            if rn > rank_tol * scale {
                out.ortho.push(r.scale_real(T::one() / rn));
                out.basis.push(v);
            }
        }
        out
    }

    /// The zero subspace.
    pub fn trivial(shape: &AlgebraShape) -> Self {
        Self { shape: shape.clone(), basis: Vec::new(), ortho: Vec::new() }
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.ortho.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.ortho.is_empty()
    }

    /// Independent spanning vectors as supplied.
    pub fn basis(&self) -> &[Element<T>] {
        &self.basis
    }

    pub fn ortho_basis(&self) -> &[Element<T>] {
        &self.ortho
    }

    /// Coordinates of the orthogonal projection of `v` in the orthonormal basis.
    pub fn coordinates(&self, v: &Element<T>) -> Vec<C<T>> {
        self.ortho.iter().map(|q| q.hs_inner(v)).collect()
    }

    pub fn from_coordinates(&self, coords: &[C<T>]) -> Element<T> {
        coords.iter().zip(&self.ortho).fold(Element::zeros(&self.shape), |acc, (&c, q)| acc.axpy(c, q))
    }

    pub fn project(&self, v: &Element<T>) -> Element<T> {
        self.from_coordinates(&self.coordinates(v))
    }

    /// Membership with residual `‖v − P v‖_HS ≤ tol·max(1, ‖v‖_HS)`.
    pub fn contains(&self, v: &Element<T>, tol: f64) -> Membership<T> {
        let residual = (v - &self.project(v)).hs_norm();
        let member = residual <= T::lit(tol) * v.hs_norm().max(T::one());
        Membership { member, residual }
    }

    /// Real Hilbert–Schmidt orthonormal basis of the self-adjoint part.
    pub fn self_adjoint_basis(&self, tol: &Tolerances) -> Vec<Element<T>> {
        let rank_tol = T::lit(tol.rank);
        let mut out: Vec<Element<T>> = Vec::new();
        for q in &self.ortho {
            for cand in [q.real_part(), q.imag_part()] {
                let scale = cand.hs_norm();
                if scale <= rank_tol {
                    continue;
                }
                let mut r = cand;
                for _ in 0..2 {
                    for b in &out {
                        let c = b.hs_inner(&r).re;
                        r = r.axpy(cre(-c), b);
                    }
                }
                let rn = r.hs_norm();
                if rn > rank_tol * scale {
                    out.push(r.scale_real(T::one() / rn));
                }
                if out.len() == self.dim() {
                    return out;
                }
            }
        }
        out
    }

    pub fn from_self_adjoint_coords(basis: &[Element<T>], coords: &[T], shape: &AlgebraShape) -> Element<T> {
        coords.iter().zip(basis).fold(Element::zeros(shape), |acc, (&c, b)| acc.axpy(cre(c), b))
    }

    /// `Z = span{X, e}` together with whether `e` already lies in `X`.
    pub fn span_with(&self, e: &Element<T>, tol: &Tolerances) -> Result<(Subspace<T>, bool)> {
        e.check_same_shape(&Element::zeros(&self.shape))?;
        let in_x = self.contains(e, tol.membership).member;
        if in_x {
            return Ok((self.clone(), true));
        }
        let mut vectors = self.basis.clone();
        vectors.push(e.clone());
        let z = Subspace::new(&self.shape, vectors, tol)?;
        Ok((z, false))
    }

    /// `M_r(X)` spanned by `E_kl ⊗ v`.
    pub fn amplify(&self, r: usize, tol: &Tolerances) -> Result<Subspace<T>> {
        let shape = self.shape.amplified(r)?;
        let mut vectors = Vec::with_capacity(r * r * self.dim());
        for k in 0..r {
            for l in 0..r {
                for v in &self.ortho {
                    vectors.push(matrix_unit_tensor(v, r, k, l)?);
                }
            }
        }
        Subspace::new(&shape, vectors, tol)
    }

    /// Largest `‖ev − ve‖` over the spanning vectors.
    pub fn commutant_check(&self, e: &Element<T>) -> T {
        self.basis.iter().map(|v| e.commutator(v).operator_norm()).fold(T::zero(), |a, b| a.max(b))
    }

    /// True when every orthonormal basis vector of `other` lies in `self`.
    pub fn contains_subspace(&self, other: &Subspace<T>, tol: f64) -> Membership<T> {
        let mut worst = T::zero();
        for v in &other.ortho {
            worst = worst.max(self.contains(v, tol).residual);
        }
        Membership { member: worst <= T::lit(tol), residual: worst }
    }
}

/// Free-function form of [`Subspace::new`].
pub fn make_subspace<T: Real>(shape: &AlgebraShape, vectors: Vec<Element<T>>, tol: &Tolerances) -> Result<Subspace<T>> {
    Subspace::new(shape, vectors, tol)
}

/// Free-function form of [`Subspace::commutant_check`].
pub fn commutant_check<T: Real>(e: &Element<T>, x: &Subspace<T>) -> T {
    x.commutant_check(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    type E = Element<f64>;
    type S = Subspace<f64>;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn d(shape: &AlgebraShape, v: &[f64]) -> E {
        E::real_diagonal(shape, v).unwrap()
    }

    #[test]
    fn diagonal_subspace() {
        let sh = AlgebraShape::matrix(2);
        let x = S::new(&sh, vec![d(&sh, &[1.0, 0.0]), d(&sh, &[0.0, 1.0])], &tol()).unwrap();
        assert_eq!(x.dim(), 2);
        let v = &d(&sh, &[2.0, 0.0]) + &E::matrix_unit(&sh, 0, 1, 1).scale(C::new(0.0, 3.0));
        assert!(x.contains(&v, 1e-8).member);
        let m = x.contains(&E::matrix_unit(&sh, 0, 0, 1), 1e-8);
        assert!(!m.member);
        assert!((m.residual - 1.0).abs() < 1e-12);
        assert!(x.contains(&E::zeros(&sh), 1e-8).member);
    }

    #[test]
    fn non_self_adjoint_span_rejected() {
        let sh = AlgebraShape::matrix(2);
        match S::new(&sh, vec![E::matrix_unit(&sh, 0, 0, 1)], &tol()) {
            Err(OzError::NotSelfAdjoint { index, residual }) => {
                assert_eq!(index, 0);
                assert!(residual > 0.9);
            }
            other => panic!("expected self-adjointness error, got {other:?}"),
        }
    }

    #[test]
    fn hermitian_off_diagonal_pair() {
        let sh = AlgebraShape::matrix(2);
        let e12 = E::matrix_unit(&sh, 0, 0, 1);
        let e21 = E::matrix_unit(&sh, 0, 1, 0);
        let a = &e12 + &e21;
        let b = (&e12 - &e21).scale(crate::scalar::C::new(0.0, 1.0));
        let x = S::new(&sh, vec![a, b], &tol()).unwrap();
        assert_eq!(x.dim(), 2);
        assert_eq!(x.self_adjoint_basis(&tol()).len(), 2);
    }

    #[test]
    fn dependent_vectors_dropped() {
        let sh = AlgebraShape::matrix(2);
        let a = d(&sh, &[1.0, 1.0]);
        let x = S::new(&sh, vec![a.clone(), a.scale_real(2.0), d(&sh, &[1.0, 0.0])], &tol()).unwrap();
        assert_eq!(x.dim(), 2);
        assert_eq!(x.basis().len(), 2);
    }

    #[test]
    fn span_with_examples() {
        let sh = AlgebraShape::matrix(3);
        let x = S::new(&sh, vec![d(&sh, &[0.0, 1.0, 0.0]), d(&sh, &[0.0, 0.0, 1.0])], &tol()).unwrap();
        let e = d(&sh, &[1.0, 0.5, 0.5]);
        // projection oracle: e − P_X e = diag(1,0,0) has HS norm 1
        assert!((x.contains(&e, 1e-8).residual - 1.0).abs() < 1e-12);
        let (z, in_x) = x.span_with(&e, &tol()).unwrap();
        assert!(!in_x);
        assert_eq!(z.dim(), 3);
        let (z2, _) = z.span_with(&e, &tol()).unwrap();
        assert_eq!(z2.dim(), 3);

        let sh2 = AlgebraShape::matrix(2);
        let full = S::new(&sh2, vec![d(&sh2, &[1.0, 0.0]), d(&sh2, &[0.0, 1.0])], &tol()).unwrap();
        let (z, in_x) = full.span_with(&d(&sh2, &[1.0, 0.5]), &tol()).unwrap();
        assert!(in_x);
        assert_eq!(z.dim(), 2);

        let zero = S::trivial(&sh2);
        let (z, in_x) = zero.span_with(&d(&sh2, &[1.0, 0.5]), &tol()).unwrap();
        assert!(!in_x);
        assert_eq!(z.dim(), 1);
    }

    #[test]
    fn amplify_examples() {
        let sh = AlgebraShape::matrix(2);
        let x = S::new(&sh, vec![d(&sh, &[1.0, 0.0])], &tol()).unwrap();
        let m2 = x.amplify(2, &tol()).unwrap();
        assert_eq!(m2.dim(), 4);
        let target = matrix_unit_tensor(&d(&sh, &[1.0, 0.0]), 2, 0, 0).unwrap();
        assert!(m2.contains(&target, 1e-8).member);
        assert!(x.amplify(0, &tol()).is_err());

        let e = d(&sh, &[1.0, 0.5]);
        let e2 = crate::algebra::amplify(&e, 2).unwrap();
        assert!(m2.commutant_check(&e2) < 1e-14);
    }

    #[test]
    fn commutant_examples() {
        let sh = AlgebraShape::matrix(2);
        let x = S::new(&sh, vec![&E::matrix_unit(&sh, 0, 0, 1) + &E::matrix_unit(&sh, 0, 1, 0)], &tol()).unwrap();
        // [diag(1,0), e12+e21] = e12 − e21, norm 1
        assert!((x.commutant_check(&d(&sh, &[1.0, 0.0])) - 1.0).abs() < 1e-12);
        assert!(x.commutant_check(&E::identity(&sh)) < 1e-15);
        let diag = S::new(&sh, vec![d(&sh, &[1.0, 2.0])], &tol()).unwrap();
        assert_eq!(diag.commutant_check(&d(&sh, &[0.3, 0.7])), 0.0);
    }

    #[test]
    fn ortho_basis_is_orthonormal_and_order_invariant() {
        let sh = AlgebraShape::new(vec![1, 2]).unwrap();
        let vs = vec![d(&sh, &[1.0, 2.0, 0.0]), d(&sh, &[0.0, 1.0, 1.0]), &E::matrix_unit(&sh, 1, 0, 1) + &E::matrix_unit(&sh, 1, 1, 0)];
        let x = S::new(&sh, vs.clone(), &tol()).unwrap();
        let mut rev = vs;
        rev.reverse();
        let y = S::new(&sh, rev, &tol()).unwrap();
        for (i, a) in x.ortho_basis().iter().enumerate() {
            assert!((a.hs_norm() - 1.0).abs() < 1e-12);
            for b in &x.ortho_basis()[i + 1..] {
                assert!(a.hs_inner(b).norm() < 1e-12);
            }
        }
        let probe = d(&sh, &[3.0, -1.0, 2.0]);
        assert_eq!(x.contains(&probe, 1e-8).member, y.contains(&probe, 1e-9).member);
        assert!(!x.contains(&E::matrix_unit(&sh, 1, 0, 1), 1e-8).member);
    }
}
