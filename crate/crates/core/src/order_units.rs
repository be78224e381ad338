//! Local order units, order units and scaling factors for a pair `(X, e)`.

use serde::Serialize;

use crate::algebra::{is_positive, joint_spectrum, pseudo_inverse, support_projection, Element, SpectralData, Tolerances};
use crate::error::{OzError, Result};
use crate::optim::{maximize_on_sphere, OptimBudget};
use crate::scalar::Real;
use crate::subspace::Subspace;

/// `min{R ≥ 0 : R·e ≥ x}` for commuting `e ≥ 0` and self-adjoint `x`;
/// `None` when no such `R` exists.
pub fn min_scale<T: Real>(e: &Element<T>, x: &Element<T>, tol: &Tolerances) -> Result<Option<T>> {
    let js = joint_spectrum(e, x, tol)?;
    let kernel = T::lit(tol.pinv_cutoff) * e.operator_norm();
    let slack = T::lit(tol.positivity) * x.operator_norm();
    let mut best = T::zero();
    for (s, t) in js.values() {
        if s <= kernel {
            if t > slack {
                return Ok(None);
            }
        } else {
            best = best.max(t.max(T::zero()) / s);
        }
    }
    Ok(Some(best))
}

/// Result of the local order unit test, with the first violating basis vector.
#[derive(Clone, Debug)]
pub struct LocalOrderUnit<T: Real> {
    pub holds: bool,
    pub residual: T,
    pub witness: Option<(usize, Element<T>)>,
}

fn ensure_commutes<T: Real>(e: &Element<T>, x: &Subspace<T>, tol: &Tolerances) -> Result<()> {
    let en = e.operator_norm().max(T::one());
    for v in x.basis() {
        let c = e.commutator(v).operator_norm();
        if c > T::lit(tol.commutation) * en * v.operator_norm().max(T::one()) {
            return Err(OzError::Commutation { norm: c.as_f64() });
        }
    }
    Ok(())
}

/// `e` is a local order unit for `X` iff each basis vector lives on the
/// support of `e`.
pub fn is_local_order_unit<T: Real>(e: &Element<T>, x: &Subspace<T>, tol: &Tolerances) -> Result<LocalOrderUnit<T>> {
    ensure_commutes(e, x, tol)?;
    let supp = support_projection(e, tol.pinv_cutoff, tol.positivity)?;
    let mut worst = T::zero();
    let mut witness = None;
    for (i, v) in x.basis().iter().enumerate() {
        let r = (&(&supp * v) - v).operator_norm() / v.operator_norm().max(T::lit(f64::MIN_POSITIVE));
        if r > worst {
            worst = r;
        }
        if r > T::lit(tol.positivity) && witness.is_none() {
            witness = Some((i, v.clone()));
        }
    }
    Ok(LocalOrderUnit { holds: witness.is_none(), residual: worst, witness })
}

/// Exact scaling factor when `e` and `X` are diagonal and `X_sa` has a basis
/// of vectors with pairwise disjoint supports. Returns the value together
/// with a maximizing element.
pub fn diagonal_closed_form<T: Real>(e: &Element<T>, x: &Subspace<T>, tol: &Tolerances) -> Option<(Option<T>, Element<T>)> {
    let dtol = T::lit(1e-12) * e.operator_norm().max(T::one());
    if !e.is_diagonal(dtol) || !x.basis().iter().all(|v| v.is_diagonal(dtol * v.operator_norm().max(T::one()))) {
        return None;
    }
    if x.is_trivial() {
        return None;
    }
    let s: Vec<T> = e.diagonal_entries().iter().map(|z| z.re).collect();
    let n = s.len();
    // real diagonals of the self-adjoint part, in reduced row echelon form
    let mut rows: Vec<Vec<T>> = Vec::new();
    for v in x.basis() {
        let d = v.diagonal_entries();
        rows.push(d.iter().map(|z| z.re).collect());
        rows.push(d.iter().map(|z| z.im).collect());
    }
    let rref = reduced_row_echelon(rows, T::lit(tol.rank));
    if rref.len() != x.dim() {
        return None;
    }
    let zero = T::lit(1e-12);
    for i in 0..n {
        if rref.iter().filter(|r| r[i].abs() > zero).count() > 1 {
            return None;
        }
    }
    let kernel = T::lit(tol.pinv_cutoff) * e.operator_norm();
    let mut best = T::zero();
    let mut arg: Option<Vec<T>> = None;
    for w in &rref {
        let sup = w.iter().fold(T::zero(), |a, b| a.max(b.abs()));
        for i in 0..n {
            if w[i].abs() <= zero {
                continue;
            }
            let sign = if w[i] > T::zero() { T::one() } else { -T::one() };
            let unit: Vec<T> = w.iter().map(|&c| c * sign / sup).collect();
            if s[i] <= kernel {
                let el = Element::real_diagonal(e.shape(), &unit.iter().map(|c| c.as_f64()).collect::<Vec<_>>()).ok()?;
                return Some((None, el));
            }
            let ratio = w[i].abs() / (s[i] * sup);
            if arg.is_none() || ratio > best {
                best = ratio;
                arg = Some(unit);
            }
        }
    }
    let el = Element::real_diagonal(e.shape(), &arg?.iter().map(|c| c.as_f64()).collect::<Vec<_>>()).ok()?;
    Some((Some(best), el))
}

fn reduced_row_echelon<T: Real>(mut rows: Vec<Vec<T>>, tol: T) -> Vec<Vec<T>> {
    if rows.is_empty() {
        return rows;
    }
    let ncols = rows[0].len();
    let scale = rows.iter().flatten().fold(T::zero(), |a, b| a.max(b.abs())).max(T::one());
    let mut pivot_row = 0;
    for col in 0..ncols {
        if pivot_row == rows.len() {
            break;
        }
        let (best, val) =
            (pivot_row..rows.len())
                .map(|r| (r, rows[r][col].abs()))
                .fold((pivot_row, T::zero()), |acc, c| if c.1 > acc.1 { c } else { acc });
        if val <= tol * scale {
            continue;
        }
        rows.swap(pivot_row, best);
        let p = rows[pivot_row][col];
        rows[pivot_row].iter_mut().for_each(|v| *v /= p);
        let prow = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != pivot_row {
                let f = row[col];
                row.iter_mut().zip(&prow).for_each(|(v, &pv)| *v -= f * pv);
            }
        }
        pivot_row += 1;
    }
    rows.truncate(pivot_row);
    rows
}

/// Scaling factor estimate with its cross-check.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingFactor {
    /// Best available value: the closed form when it applies, otherwise the
    /// larger of the two estimators.
    pub estimate: f64,
    /// Largest value seen before local refinement.
    pub lower_bound: f64,
    /// `sup min_scale(e, x)` over unit self-adjoint `x`.
    pub estimator_a: f64,
    /// `sup ‖e⁺x‖` over unit `x`.
    pub estimator_b: f64,
    pub method_agreement: f64,
    pub closed_form: Option<f64>,
    pub is_order_unit: bool,
}

/// Estimates the scaling factor of `e` for `X`.
///
/// Returns `is_order_unit = false` with an infinite estimate when `e` is
/// not even a local order unit.
pub fn scaling_factor<T: Real>(e: &Element<T>, x: &Subspace<T>, budget: &OptimBudget, tol: &Tolerances) -> Result<ScalingFactor> {
    let lou = is_local_order_unit(e, x, tol)?;
    if !lou.holds {
        return Ok(ScalingFactor {
            estimate: f64::INFINITY,
            lower_bound: f64::INFINITY,
            estimator_a: f64::INFINITY,
            estimator_b: f64::INFINITY,
            method_agreement: 0.0,
            closed_form: None,
            is_order_unit: false,
        });
    }
    if x.is_trivial() {
        return Ok(ScalingFactor {
            estimate: 0.0,
            lower_bound: 0.0,
            estimator_a: 0.0,
            estimator_b: 0.0,
            method_agreement: 0.0,
            closed_form: Some(0.0),
            is_order_unit: true,
        });
    }
    let epinv = pseudo_inverse(e, tol.pinv_cutoff, tol.positivity)?;
    let sa = x.self_adjoint_basis(tol);
    let rep_sa: Vec<Element<T>> = sa.iter().map(|b| &epinv * b).collect();
    let shape = e.shape().clone();

    let closed = diagonal_closed_form(e, x, tol);
    let mut seeds_a = Vec::new();
    let mut seeds_b = Vec::new();
    if let Some((_, arg)) = &closed {
        seeds_a.push(sa.iter().map(|b| b.hs_inner(arg).re.as_f64()).collect::<Vec<_>>());
        let cb: Vec<f64> = x.coordinates(arg).iter().flat_map(|z| [z.re.as_f64(), z.im.as_f64()]).collect();
        seeds_b.push(cb);
    }

    // On the support, e⁺x is self-adjoint with eigenvalues t_i/s_i, so the
    // minimal scale is the positive part of its top eigenvalue.
    let objective_a = |c: &[f64]| -> f64 {
        let coords: Vec<T> = c.iter().map(|&v| T::lit(v)).collect();
        let xv = Subspace::from_self_adjoint_coords(&sa, &coords, &shape);
        let ex = Subspace::from_self_adjoint_coords(&rep_sa, &coords, &shape);
        let n = xv.operator_norm();
        if n <= T::zero() {
            return f64::NEG_INFINITY;
        }
        (SpectralData::of(&ex).max_eigenvalue().max(T::zero()) / n).as_f64()
    };
    let ortho = x.ortho_basis();
    let rep: Vec<Element<T>> = ortho.iter().map(|q| &epinv * q).collect();
    let objective_b = |c: &[f64]| -> f64 {
        let mut xv = Element::zeros(&shape);
        let mut ex = Element::zeros(&shape);
        for (k, (q, r)) in ortho.iter().zip(&rep).enumerate() {
            let z = crate::scalar::C::new(T::lit(c[2 * k]), T::lit(c[2 * k + 1]));
            xv = xv.axpy(z, q);
            ex = ex.axpy(z, r);
        }
        let n = xv.operator_norm();
        if n <= T::zero() {
            return f64::NEG_INFINITY;
        }
        (ex.operator_norm() / n).as_f64()
    };
    let ra = maximize_on_sphere(objective_a, sa.len(), &seeds_a, budget);
    let rb = maximize_on_sphere(objective_b, 2 * ortho.len(), &seeds_b, &budget.with_seed(budget.seed ^ 0x5bd1e995));
    let a = ra.best;
    let b = rb.best;
    let top = a.max(b);
    let agreement = if top > 0.0 { (a - b).abs() / top } else { 0.0 };
    let closed_value = closed.as_ref().and_then(|(v, _)| v.map(|t| t.as_f64()));
    if let Some((None, _)) = closed {
        return Ok(ScalingFactor {
            estimate: f64::INFINITY,
            lower_bound: f64::INFINITY,
            estimator_a: a,
            estimator_b: b,
            method_agreement: agreement,
            closed_form: None,
            is_order_unit: false,
        });
    }
    Ok(ScalingFactor {
        estimate: closed_value.unwrap_or(top),
        lower_bound: ra.sampled_best.max(rb.sampled_best),
        estimator_a: a,
        estimator_b: b,
        method_agreement: agreement,
        closed_form: closed_value,
        is_order_unit: true,
    })
}

/// Summary of the order unit properties of `e` for `X`.
#[derive(Clone, Debug, Serialize)]
pub struct OrderUnitReport {
    pub commutes: bool,
    pub max_commutator: f64,
    pub is_local_order_unit: bool,
    pub is_order_unit: bool,
    pub scaling_factor: f64,
    pub scaling_factor_alt: f64,
    pub method_agreement: f64,
    /// Index of a basis vector off the support of `e`, if any.
    pub witness: Option<usize>,
}

pub fn order_unit_report<T: Real>(e: &Element<T>, x: &Subspace<T>, budget: &OptimBudget, tol: &Tolerances) -> Result<OrderUnitReport> {
    let max_commutator = x.commutant_check(e).as_f64();
    let commutes = ensure_commutes(e, x, tol).is_ok();
    if !commutes {
        return Ok(OrderUnitReport {
            commutes,
            max_commutator,
            is_local_order_unit: false,
            is_order_unit: false,
            scaling_factor: f64::INFINITY,
            scaling_factor_alt: f64::INFINITY,
            method_agreement: 0.0,
            witness: None,
        });
    }
    let lou = is_local_order_unit(e, x, tol)?;
    let sf = scaling_factor(e, x, budget, tol)?;
    Ok(OrderUnitReport {
        commutes,
        max_commutator,
        is_local_order_unit: lou.holds,
        is_order_unit: sf.is_order_unit,
        scaling_factor: sf.estimate,
        scaling_factor_alt: sf.estimator_b,
        method_agreement: sf.method_agreement,
        witness: lou.witness.map(|w| w.0),
    })
}

/// Boolean outcome of every hypothesis on `(X, e)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HypothesisFlags {
    pub positive_contraction: bool,
    pub commutes: bool,
    pub local_order_unit: bool,
    pub products_in_ex: bool,
    pub products_equal_ex: bool,
    pub e_in_x: bool,
    pub trivial_subspace: bool,
}

impl HypothesisFlags {
    /// Hypotheses needed to build the induced product.
    pub fn buildable(&self) -> bool {
        self.positive_contraction && self.commutes && self.local_order_unit && self.products_in_ex
    }

    /// First failed clause in check order, if any, for the image criterion.
    /// `X² ⊂ eX` is folded into `X² = eX`.
    pub fn first_image_failure(&self) -> Option<&'static str> {
        [
            (self.positive_contraction, "e positive contraction"),
            (self.commutes, "e in X'"),
            (self.local_order_unit, "local order unit"),
            (self.products_equal_ex, "X^2 = eX"),
            (self.e_in_x, "e in X"),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, name)| name)
    }
}

#[derive(Clone, Debug)]
pub struct HypothesesReport<T: Real> {
    pub flags: HypothesisFlags,
    pub max_commutator: T,
    pub support_residual: T,
    pub product_residual: T,
    pub equality_residual: T,
    pub e_membership_residual: T,
    /// Ortho-basis indices whose product escapes `eX`.
    pub product_witness: Option<(usize, usize)>,
    pub local_witness: Option<usize>,
    /// An element `e·v` outside `span X²`.
    pub equality_witness: Option<Element<T>>,
}

/// Checks, in order: positive contraction, commutation, local order unit,
/// `X² ⊂ eX`, `X² = eX`, `e ∈ X`.
pub fn hypotheses_report<T: Real>(x: &Subspace<T>, e: &Element<T>, tol: &Tolerances) -> Result<HypothesesReport<T>> {
    e.check_same_shape(&Element::zeros(x.shape()))?;
    let mut flags = HypothesisFlags { trivial_subspace: x.is_trivial(), ..Default::default() };
    let en = e.operator_norm();
    flags.positive_contraction = en <= T::one() + T::lit(tol.positivity) && is_positive(e, tol.positivity);
    let max_commutator = x.commutant_check(e);
    flags.commutes = ensure_commutes(e, x, tol).is_ok();
    let e_membership_residual = x.contains(e, tol.membership).residual;
    flags.e_in_x = x.contains(e, tol.membership).member;
    let mut report = HypothesesReport {
        flags: flags.clone(),
        max_commutator,
        support_residual: T::zero(),
        product_residual: T::zero(),
        equality_residual: T::zero(),
        e_membership_residual,
        product_witness: None,
        local_witness: None,
        equality_witness: None,
    };
    if !(flags.positive_contraction && flags.commutes) {
        return Ok(report);
    }
    let lou = is_local_order_unit(e, x, tol)?;
    report.flags.local_order_unit = lou.holds;
    report.support_residual = lou.residual;
    report.local_witness = lou.witness.map(|w| w.0);

    let epinv = pseudo_inverse(e, tol.pinv_cutoff, tol.positivity)?;
    let ortho = x.ortho_basis();
    let mut products = Vec::with_capacity(ortho.len() * ortho.len());
    let mut worst = T::zero();
    for (i, u) in ortho.iter().enumerate() {
        for (j, v) in ortho.iter().enumerate() {
            let uv = u * v;
            let z = &epinv * &uv;
            let scale = uv.hs_norm().max(T::one());
            let range = (&(e * &z) - &uv).hs_norm() / scale;
            let m = x.contains(&z, tol.membership);
            let r = range.max(m.residual / z.hs_norm().max(T::one()));
            if r > worst {
                worst = r;
            }
            if (!m.member || range > T::lit(tol.membership)) && report.product_witness.is_none() {
                report.product_witness = Some((i, j));
            }
            products.push(uv);
        }
    }
    report.product_residual = worst;
    report.flags.products_in_ex = report.product_witness.is_none();

    let span = Subspace::new_unchecked(x.shape(), products, tol);
    let mut eq_worst = T::zero();
    for v in ortho {
        let ev = e * v;
        let m = span.contains(&ev, tol.membership);
        eq_worst = eq_worst.max(m.residual);
        if !m.member && report.equality_witness.is_none() {
            report.equality_witness = Some(ev);
        }
    }
    report.equality_residual = eq_worst;
    report.flags.products_equal_ex = report.flags.products_in_ex && report.equality_witness.is_none();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraShape;

    type E = Element<f64>;
    type S = Subspace<f64>;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn d(sh: &AlgebraShape, v: &[f64]) -> E {
        E::real_diagonal(sh, v).unwrap()
    }

    fn diag_space(sh: &AlgebraShape, vs: &[&[f64]]) -> S {
        S::new(sh, vs.iter().map(|v| d(sh, v)).collect(), &tol()).unwrap()
    }

    #[test]
    fn min_scale_examples() {
        let sh = AlgebraShape::matrix(2);
        let e = d(&sh, &[1.0, 0.5]);
        // ratio oracle: max(0/1, 1/0.5) = 2
        assert!((min_scale(&e, &d(&sh, &[0.0, 1.0]), &tol()).unwrap().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(min_scale(&e, &(-&e), &tol()).unwrap(), Some(0.0));
        assert_eq!(min_scale(&d(&sh, &[1.0, 0.0]), &d(&sh, &[0.0, 1.0]), &tol()).unwrap(), None);
        let x = d(&sh, &[0.3, 0.7]);
        let a = min_scale(&e, &x, &tol()).unwrap().unwrap();
        let b = min_scale(&e, &x.scale_real(3.5), &tol()).unwrap().unwrap();
        assert!((b - 3.5 * a).abs() < 1e-12);
    }

    #[test]
    fn min_scale_rejects_noncommuting() {
        let sh = AlgebraShape::matrix(2);
        let x = &E::matrix_unit(&sh, 0, 0, 1) + &E::matrix_unit(&sh, 0, 1, 0);
        assert!(matches!(min_scale(&d(&sh, &[1.0, 0.5]), &x, &tol()), Err(OzError::Commutation { .. })));
    }

    #[test]
    fn local_order_unit_examples() {
        let sh = AlgebraShape::matrix(2);
        let x = diag_space(&sh, &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(is_local_order_unit(&d(&sh, &[1.0, 0.5]), &x, &tol()).unwrap().holds);
        let r = is_local_order_unit(&d(&sh, &[1.0, 0.0]), &x, &tol()).unwrap();
        assert!(!r.holds);
        let (idx, w) = r.witness.unwrap();
        assert_eq!(idx, 1);
        assert!((&w - &d(&sh, &[0.0, 1.0])).operator_norm() < 1e-15);

        let sh3 = AlgebraShape::matrix(3);
        let x3 = diag_space(&sh3, &[&[2.0, 1.0, 0.0]]);
        assert!(is_local_order_unit(&d(&sh3, &[1.0, 0.5, 0.0]), &x3, &tol()).unwrap().holds);
    }

    #[test]
    fn scaling_factor_closed_forms() {
        let sh = AlgebraShape::matrix(2);
        let x = diag_space(&sh, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let sf = scaling_factor(&d(&sh, &[1.0, 0.5]), &x, &OptimBudget::light(), &tol()).unwrap();
        assert_eq!(sf.closed_form, Some(2.0));
        assert!((sf.estimator_a - 2.0).abs() < 1e-9);
        assert!((sf.estimator_b - 2.0).abs() < 1e-9);

        let e = d(&sh, &[1.0, 0.3]);
        let span_e = S::new(&sh, vec![e.clone()], &tol()).unwrap();
        let sf = scaling_factor(&e, &span_e, &OptimBudget::light(), &tol()).unwrap();
        assert!((sf.estimate - 1.0).abs() < 1e-9);
        assert!((sf.estimator_a - 1.0).abs() < 1e-9);
    }

    #[test]
    fn truncated_not_uniform_order_unit() {
        for n in [2usize, 4, 8] {
            let sh = AlgebraShape::matrix(n);
            let diag: Vec<f64> = (0..n).map(|k| 1.0 / ((k + 1) * (k + 1)) as f64).collect();
            let e = d(&sh, &diag);
            let units: Vec<E> = (0..n)
                .map(|k| {
                    let mut v = vec![0.0; n];
                    v[k] = diag[k];
                    d(&sh, &v)
                })
                .collect();
            let x = S::new(&sh, units, &tol()).unwrap();
            let sf = scaling_factor(&e, &x, &OptimBudget::light(), &tol()).unwrap();
            let expect = (n * n) as f64;
            assert!((sf.estimate - expect).abs() < 1e-6, "N={n}: {}", sf.estimate);
        }
    }

    #[test]
    fn infeasible_reports_not_order_unit() {
        let sh = AlgebraShape::matrix(2);
        let x = diag_space(&sh, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let sf = scaling_factor(&d(&sh, &[1.0, 0.0]), &x, &OptimBudget::light(), &tol()).unwrap();
        assert!(!sf.is_order_unit);
        assert!(sf.estimate.is_infinite());
    }

    #[test]
    fn hypotheses_diagonal_demo() {
        let sh = AlgebraShape::matrix(2);
        let x = diag_space(&sh, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = hypotheses_report(&x, &d(&sh, &[1.0, 0.5]), &tol()).unwrap();
        assert!(r.flags.positive_contraction && r.flags.commutes && r.flags.local_order_unit);
        assert!(r.flags.products_in_ex && r.flags.products_equal_ex && r.flags.e_in_x);
        assert_eq!(r.flags.first_image_failure(), None);
    }

    #[test]
    fn hypotheses_product_escape() {
        let sh = AlgebraShape::matrix(2);
        let x = diag_space(&sh, &[&[1.0, 1.0]]);
        let r = hypotheses_report(&x, &d(&sh, &[1.0, 0.5]), &tol()).unwrap();
        assert!(r.flags.local_order_unit);
        assert!(!r.flags.products_in_ex);
        assert_eq!(r.product_witness, Some((0, 0)));
        assert_eq!(r.flags.first_image_failure(), Some("X^2 = eX"));
    }

    #[test]
    fn hypotheses_corner_demo() {
        let sh = AlgebraShape::matrix(3);
        let x = diag_space(&sh, &[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let r = hypotheses_report(&x, &d(&sh, &[1.0, 0.5, 0.5]), &tol()).unwrap();
        let f = &r.flags;
        assert!(f.positive_contraction && f.commutes && f.local_order_unit && f.products_in_ex);
        assert!(f.products_equal_ex);
        assert!(!f.e_in_x);
        assert_eq!(f.first_image_failure(), Some("e in X"));
    }

    #[test]
    fn min_scale_matches_fast_objective() {
        let sh = AlgebraShape::new(vec![1, 2]).unwrap();
        let e = d(&sh, &[0.4, 1.0, 0.25]);
        let x = d(&sh, &[-1.0, 0.3, 0.9]);
        let epinv = pseudo_inverse(&e, 1e-12, 1e-9).unwrap();
        let fast = SpectralData::of(&(&epinv * &x)).max_eigenvalue().max(0.0);
        assert!((min_scale(&e, &x, &tol()).unwrap().unwrap() - fast).abs() < 1e-12);
    }
}
