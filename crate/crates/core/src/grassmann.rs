//! The compression map `a ↦ (p_V a p_V)_V` over 2-planes `V ⊂ C³`, its
//! level-one isometry witnesses, and a search for
//! `sup_V ‖(1 ⊗ p_V) s (1 ⊗ p_V)‖` on `M_2 ⊗ M_3`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{OzError, Result};
use crate::optim::{maximize_on_sphere, OptimBudget};
use crate::scalar::{Real, C};

/// Search budget for the Grassmannian: dense sampling plus local ascent.
pub fn default_budget(seed: u64) -> OptimBudget {
    OptimBudget { starts: 256, iterations: 150, samples: 200_000, fd_step: 1e-6, seed }
}

fn zero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

/// Orthonormalizes the columns of `z` by modified Gram–Schmidt; `None` if
/// they are numerically dependent.
pub fn orthonormal_frame<T: Real>(z: &DMatrix<C<T>>) -> Option<DMatrix<C<T>>> {
    let mut q = z.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).into_owned();
                let c = qi.dotc(&q.column(j));
                let col = q.column(j) - qi * c;
                q.set_column(j, &col);
            }
        }
        let n = q.column(j).norm();
        if n <= T::lit(1e-12) {
            return None;
        }
        let col = q.column(j) / C::new(n, T::zero());
        q.set_column(j, &col);
    }
    Some(q)
}

pub fn frame_projection<T: Real>(frame: &DMatrix<C<T>>) -> DMatrix<C<T>> {
    frame * frame.adjoint()
}

/// `‖(1_r ⊗ p) s (1_r ⊗ p)‖` for `s ∈ M_r ⊗ M_n` with `p ∈ M_n`.
pub fn compressed_norm<T: Real>(s: &DMatrix<C<T>>, p: &DMatrix<C<T>>) -> T {
    let r = s.nrows() / p.nrows();
    let big = DMatrix::<C<T>>::identity(r, r).kronecker(p);
    let c = &big * s * &big;
    c.singular_values().max()
}

/// The element `s = (e12⊗e13 + e22⊗e23)/√2`, returned as its integer
/// pattern together with the scale `1/√2`.
pub fn bestellung_element<T: Real>() -> (DMatrix<C<T>>, T) {
    let mut s = DMatrix::from_element(6, 6, zero());
    let one = C::new(T::one(), T::zero());
    // index of e_ij ⊗ e_ab is (3i + a, 3j + b)
    s[(0, 3 + 2)] = one;
    s[(3 + 1, 3 + 2)] = one;
    (s, T::lit(0.5).sqrt())
}

/// `s*s`, computed from the integer pattern and the exact square `1/2`.
pub fn bestellung_sts<T: Real>() -> DMatrix<C<T>> {
    let (s0, _) = bestellung_element::<T>();
    s0.adjoint() * &s0 * C::new(T::lit(0.5), T::zero())
}

#[derive(Clone, Debug, Serialize)]
pub struct GrassmannSup {
    pub estimate: f64,
    pub sampled_best: f64,
    /// Orthonormal `3 × 2` frame as `[re, im]` pairs, row-major.
    pub frame: Vec<Vec<[f64; 2]>>,
    pub evaluations: usize,
}

/// Maximizes `‖(1_2 ⊗ p_V) s (1_2 ⊗ p_V)‖` over `V ∈ Gr(2, C³)`, with `V`
/// the column span of an orthonormalized complex `3 × 2` matrix.
pub fn grassmann_sup<T: Real>(s: &DMatrix<C<T>>, budget: &OptimBudget) -> Result<GrassmannSup> {
    if s.nrows() != 6 || s.ncols() != 6 {
        return Err(OzError::Shape("s must be 6 x 6 in M_2 ⊗ M_3".into()));
    }
    if budget.samples == 0 && budget.starts == 0 {
        return Err(OzError::Domain("Grassmannian search budget is zero".into()));
    }
    let frame_of = |c: &[f64]| DMatrix::from_fn(3, 2, |i, j| C::new(T::lit(c[2 * (2 * i + j)]), T::lit(c[2 * (2 * i + j) + 1])));
    let objective = |c: &[f64]| -> f64 {
        match orthonormal_frame(&frame_of(c)) {
            Some(q) => compressed_norm(s, &frame_projection(&q)).as_f64(),
            None => f64::NEG_INFINITY,
        }
    };
    let found = maximize_on_sphere(objective, 12, &[], budget);
    let q = orthonormal_frame(&frame_of(&found.argmax)).ok_or_else(|| OzError::Domain("degenerate optimal frame".into()))?;
    let frame = (0..3).map(|i| (0..2).map(|j| [q[(i, j)].re.as_f64(), q[(i, j)].im.as_f64()]).collect()).collect();
    Ok(GrassmannSup {
        estimate: found.best,
        sampled_best: found.sampled_best,
        frame,
        evaluations: budget.samples + 24 + budget.starts * budget.iterations,
    })
}

#[derive(Clone, Debug)]
pub struct IsometryWitness<T: Real> {
    pub frame: DMatrix<C<T>>,
    pub norm: T,
    pub compressed_norm: T,
}

/// A plane `V ∋ ξ, aξ` for a norming vector `ξ` of `a ∈ M_3`, so that
/// `‖p_V a p_V‖ = ‖a‖`.
pub fn isometry_witness<T: Real>(a: &DMatrix<C<T>>) -> Result<IsometryWitness<T>> {
    if a.nrows() != 3 || a.ncols() != 3 {
        return Err(OzError::Shape("isometry witness expects a 3 x 3 matrix".into()));
    }
    let svd = a.clone().svd(true, true);
    let (k, norm) = svd.singular_values.iter().enumerate().fold((0, T::zero()), |m, (i, &v)| if v > m.1 { (i, v) } else { m });
    if norm <= T::zero() {
        return Err(OzError::Domain("a = 0 has no norming vector".into()));
    }
    let v_t = svd.v_t.expect("requested");
    let xi = v_t.row(k).adjoint();
    let axi = a * &xi;
    let mut cols = vec![xi.clone(), axi];
    let mut candidate = DMatrix::from_columns(&cols);
    let frame = match orthonormal_frame(&candidate) {
        Some(f) => f,
        None => {
            // aξ ∥ ξ: complete with the basis vector least aligned with ξ
            let idx = (0..3).min_by(|&i, &j| xi[i].norm_sqr().partial_cmp(&xi[j].norm_sqr()).unwrap_or(std::cmp::Ordering::Equal)).unwrap();
            let mut e = nalgebra::DVector::from_element(3, zero());
            e[idx] = C::new(T::one(), T::zero());
            cols[1] = e;
            candidate = DMatrix::from_columns(&cols);
            orthonormal_frame(&candidate).ok_or_else(|| OzError::Domain("could not complete witness frame".into()))?
        }
    };
    let p = frame_projection(&frame);
    let compressed = (&p * a * &p).singular_values().max();
    Ok(IsometryWitness { frame, norm, compressed_norm: compressed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    type Mx = DMatrix<C<f64>>;

    fn unit(i: usize, j: usize) -> Mx {
        let mut m = Mx::zeros(3, 3);
        m[(i, j)] = C::new(1.0, 0.0);
        m
    }

    #[test]
    fn s_star_s_is_exact() {
        let sts = bestellung_sts::<f64>();
        let mut expect = Mx::zeros(6, 6);
        expect[(3 + 2, 3 + 2)] = C::new(1.0, 0.0);
        assert_eq!(sts, expect);
        let (s0, c) = bestellung_element::<f64>();
        let s = s0 * C::new(c, 0.0);
        assert!((s.singular_values().max() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn witness_examples() {
        let w = isometry_witness(&unit(0, 2)).unwrap();
        assert!((w.compressed_norm - 1.0).abs() < 1e-12);
        let p = frame_projection(&w.frame);
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-12 && (p[(2, 2)].re - 1.0).abs() < 1e-12);
        let id = isometry_witness(&Mx::identity(3, 3)).unwrap();
        assert!((id.compressed_norm - 1.0).abs() < 1e-12);
        assert!(isometry_witness(&Mx::zeros(3, 3)).is_err());
        let mut rng = random::rng(8);
        for _ in 0..20 {
            let a = random::complex_gaussian::<f64, _>(&mut rng, 3, 3);
            let w = isometry_witness(&a).unwrap();
            assert!((w.compressed_norm - w.norm).abs() <= 1e-9 * w.norm);
        }
    }

    #[test]
    fn trivial_sups() {
        let b = OptimBudget { samples: 2000, starts: 8, iterations: 40, ..OptimBudget::light() };
        let mut s = Mx::zeros(6, 6);
        assert_eq!(grassmann_sup(&s, &b).unwrap().estimate, 0.0);
        s[(0, 0)] = C::new(1.0, 0.0);
        assert!((grassmann_sup(&s, &b).unwrap().estimate - 1.0).abs() < 1e-6);
        let zero = OptimBudget { samples: 0, starts: 0, ..b };
        assert!(grassmann_sup(&s, &zero).is_err());
    }

    #[test]
    fn bestellung_sup_is_below_one() {
        let b = OptimBudget { samples: 5000, starts: 16, iterations: 80, ..OptimBudget::light() };
        let (s0, c) = bestellung_element::<f64>();
        let r = grassmann_sup(&(s0 * C::new(c, 0.0)), &b).unwrap();
        assert!(r.estimate < 0.99);
        assert!((r.estimate - 0.5f64.sqrt()).abs() < 1e-4, "{}", r.estimate);
    }
}
