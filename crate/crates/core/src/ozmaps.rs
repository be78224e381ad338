//! Analysis of linear maps between block algebras: complete positivity,
//! the order zero identity, the structure decomposition `θ = h·π`, images,
//! isometry probes and adjoining a unit.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{is_positive, pseudo_inverse, sqrt_positive, AlgebraShape, Element, SpectralData, Tolerances};
use crate::bullet::BulletStructure;
use crate::error::{OzError, Result};
use crate::map::LinearMapTable;
use crate::optim::{minimize_on_sphere, OptimBudget};
use crate::order_units::{hypotheses_report, HypothesisFlags};
use crate::random;
use crate::scalar::{Real, C};
use crate::subspace::Subspace;

/// `Σ E_ij ⊗ θ(E_ij)` over the matrix units of the block-diagonal embedding
/// of the domain into `M_N`. Pairs `(i, j)` outside the diagonal blocks are
/// masked out, which makes this the Choi matrix of `θ ∘ E` for the
/// conditional expectation `E` onto the blocks; it is PSD iff `θ` is c.p.
#[derive(Clone, Debug)]
pub struct ChoiMatrix<T: Real> {
    pub matrix: DMatrix<C<T>>,
    pub min_eigenvalue: T,
    pub hermitian_residual: T,
}

pub fn choi_matrix<T: Real>(theta: &LinearMapTable<T>) -> ChoiMatrix<T> {
    let dom = theta.domain();
    let n = dom.full_size();
    let m = theta.codomain().full_size();
    let mut choi = DMatrix::zeros(n * m, n * m);
    let offsets: Vec<usize> = dom
        .blocks()
        .iter()
        .scan(0, |acc, &b| {
            let o = *acc;
            *acc += b;
            Some(o)
        })
        .collect();
    for idx in 0..dom.total_dim() {
        let (k, a, b) = dom.unit_index(idx);
        let (i, j) = (offsets[k] + a, offsets[k] + b);
        let img = theta.apply(&Element::matrix_unit(dom, k, a, b)).expect("domain element").to_full();
        choi.view_mut((i * m, j * m), (m, m)).copy_from(&img);
    }
    let herm = (&choi + choi.adjoint()) * C::new(T::lit(0.5), T::zero());
    let hermitian_residual = (&choi - &herm).norm();
    let min_eigenvalue = if n * m == 0 { T::zero() } else { herm.symmetric_eigenvalues().min() };
    ChoiMatrix { matrix: choi, min_eigenvalue, hermitian_residual }
}

/// Complete positivity up to `tol.positivity` relative to the Choi norm.
pub fn is_completely_positive<T: Real>(theta: &LinearMapTable<T>, tol: &Tolerances) -> (bool, ChoiMatrix<T>) {
    let c = choi_matrix(theta);
    let scale = c.matrix.norm().max(T::one());
    (c.min_eigenvalue >= -T::lit(tol.positivity) * scale, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OrderZeroVerdict {
    #[serde(rename = "order zero")]
    OrderZero,
    #[serde(rename = "not order zero")]
    NotOrderZero,
    #[serde(rename = "not c.p., order zero test skipped")]
    NotCompletelyPositive,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderZeroReport {
    pub verdict: OrderZeroVerdict,
    pub choi_min_eigenvalue: f64,
    /// `max ‖θ(1)θ(ab) − θ(a)θ(b)‖` over matrix-unit pairs, relative to `‖θ(1)‖²`.
    pub identity_defect: Option<f64>,
    /// Matrix-unit indices attaining `identity_defect`.
    pub identity_witness: Option<(usize, usize)>,
    /// `max ‖θ(s₊)θ(s₋)‖ / ‖s‖²` over random self-adjoint `s`.
    pub sampled_defect: Option<f64>,
    pub samples: usize,
}

/// Decides order zero for a c.p. map. With `unital_domain` the identity
/// `θ(1)θ(ab) = θ(a)θ(b)` decides; the sampling path always runs when
/// `samples > 0` and decides otherwise.
pub fn is_order_zero<T: Real>(
    theta: &LinearMapTable<T>,
    unital_domain: bool,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> OrderZeroReport {
    let (cp, choi) = is_completely_positive(theta, tol);
    let mut report = OrderZeroReport {
        verdict: OrderZeroVerdict::NotCompletelyPositive,
        choi_min_eigenvalue: choi.min_eigenvalue.as_f64(),
        identity_defect: None,
        identity_witness: None,
        sampled_defect: None,
        samples,
    };
    if !cp {
        return report;
    }
    let dom = theta.domain();
    let one = theta.apply(&Element::identity(dom)).expect("domain element");
    let scale = one.operator_norm().as_f64().powi(2).max(f64::MIN_POSITIVE);
    let threshold = tol.commutation;
    let mut ok = true;
    if unital_domain {
        let basis = theta.domain_basis();
        let images: Vec<Element<T>> = basis.iter().map(|b| theta.apply(b).expect("domain element")).collect();
        let mut worst = 0.0f64;
        let mut wit = None;
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let tab = theta.apply(&(a * b)).expect("domain element");
                let d = (&(&one * &tab) - &(&images[i] * &images[j])).operator_norm().as_f64() / scale;
                if d > worst {
                    worst = d;
                    wit = Some((i, j));
                }
            }
        }
        report.identity_defect = Some(worst);
        report.identity_witness = wit;
        ok &= worst <= threshold;
    }
    if samples > 0 {
        let mut rng = random::rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let s = random::self_adjoint::<T, _>(&mut rng, dom);
            let spec = SpectralData::of(&s);
            let pos = spec.apply(|t| t.max(T::zero()));
            let neg = spec.apply(|t| (-t).max(T::zero()));
            let ns = s.operator_norm().as_f64().powi(2);
            let d = (&theta.apply(&pos).expect("domain") * &theta.apply(&neg).expect("domain")).operator_norm().as_f64();
            worst = worst.max(d / (ns * scale).max(f64::MIN_POSITIVE));
        }
        report.sampled_defect = Some(worst);
        if !unital_domain {
            ok &= worst <= threshold;
        }
    }
    report.verdict = if ok { OrderZeroVerdict::OrderZero } else { OrderZeroVerdict::NotOrderZero };
    report
}

/// `θ = h·π` with `h = θ(1)` and `π = h⁺θ`.
#[derive(Clone, Debug)]
pub struct Structure<T: Real> {
    pub h: Element<T>,
    pub pi: LinearMapTable<T>,
    /// `max ‖π(ab) − π(a)π(b)‖` over matrix-unit pairs.
    pub pi_hom_defect: f64,
    pub pi_star_defect: f64,
    /// `max ‖[h, θ(E)]‖` over matrix units.
    pub commutation_defect: f64,
    /// `max ‖θ(E) − hπ(E)‖`.
    pub reconstruction_defect: f64,
}

pub fn structure_decompose<T: Real>(theta: &LinearMapTable<T>, tol: &Tolerances) -> Result<Structure<T>> {
    let rep = is_order_zero(theta, true, 0, 0, tol);
    if rep.verdict != OrderZeroVerdict::OrderZero {
        return Err(OzError::NotOrderZero { defect: rep.identity_defect.unwrap_or(f64::INFINITY) });
    }
    let dom = theta.domain();
    let h = theta.apply(&Element::identity(dom))?;
    let hp = pseudo_inverse(&h, tol.pinv_cutoff, tol.positivity)?;
    let pi = LinearMapTable::from_fn(dom, theta.codomain(), |a| &hp * &theta.apply(a).expect("domain element"))?;
    let basis = theta.domain_basis();
    let mut hom = 0.0f64;
    let mut comm = 0.0f64;
    let mut recon = 0.0f64;
    let pis: Vec<Element<T>> = basis.iter().map(|b| pi.apply(b).expect("domain element")).collect();
    for (i, a) in basis.iter().enumerate() {
        let ta = theta.apply(a)?;
        comm = comm.max(h.commutator(&ta).operator_norm().as_f64());
        recon = recon.max((&ta - &(&h * &pis[i])).operator_norm().as_f64());
        for (j, b) in basis.iter().enumerate() {
            let lhs = pi.apply(&(a * b))?;
            hom = hom.max((&lhs - &(&pis[i] * &pis[j])).operator_norm().as_f64());
        }
    }
    Ok(Structure {
        pi_star_defect: pi.star_defect().as_f64(),
        h,
        pi,
        pi_hom_defect: hom,
        commutation_defect: comm,
        reconstruction_defect: recon,
    })
}

/// `θ(A)`, spanned by the images of the matrix units.
pub fn image_subspace<T: Real>(theta: &LinearMapTable<T>, tol: &Tolerances) -> Result<Subspace<T>> {
    let images = theta.domain_basis().iter().map(|b| theta.apply(b)).collect::<Result<Vec<_>>>()?;
    Subspace::new(theta.codomain(), images, tol)
}

/// Orthonormal basis of `ker θ` in the domain.
pub fn kernel_basis<T: Real>(theta: &LinearMapTable<T>, tol: &Tolerances) -> Vec<Element<T>> {
    let a = theta.action();
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    let gram = a.adjoint() * a;
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(T::zero(), |m, v| m.max(v.abs())).max(T::one());
    (0..n)
        .filter(|&i| eig.eigenvalues[i] <= T::lit(tol.rank) * top)
        .map(|i| Element::from_vector(theta.domain(), &eig.eigenvectors.column(i).into_owned()).expect("domain length"))
        .collect()
}

/// `max ‖θ(ka)‖, ‖θ(ak)‖` over kernel basis `k` and matrix units `a`.
pub fn kernel_ideal_residual<T: Real>(theta: &LinearMapTable<T>, tol: &Tolerances) -> f64 {
    let mut worst = 0.0f64;
    for k in kernel_basis(theta, tol) {
        for a in theta.domain_basis() {
            for p in [&k * &a, &a * &k] {
                worst = worst.max(theta.apply(&p).expect("domain element").operator_norm().as_f64());
            }
        }
    }
    worst
}

/// `max ‖θ(ab) − θ(a)•θ(b)‖•` over matrix-unit pairs, for `θ` with image `X`.
pub fn induced_hom_defect<T: Real>(theta: &LinearMapTable<T>, s: &BulletStructure<T>) -> Result<f64> {
    let basis = theta.domain_basis();
    let imgs = basis.iter().map(|b| theta.apply(b)).collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let lhs = theta.apply(&(a * b))?;
            let rhs = s.product(&imgs[i], &imgs[j]);
            worst = worst.max(s.bullet_norm(&(&lhs - &rhs)).map(|v| v.as_f64()).unwrap_or(f64::INFINITY));
        }
    }
    Ok(worst)
}

/// A positive answer from [`decide_order_zero_image`]: the compression
/// `θ(y) = e^{1/2} y e^{1/2}` restricted to the subalgebra `e⁺X` is c.p.c.
/// order zero with unit image `e` and range `X`.
#[derive(Clone, Debug)]
pub struct ImageMap<T: Real> {
    pub theta: LinearMapTable<T>,
    /// `e⁺X`, a C*-subalgebra with unit `supp(e)`.
    pub domain: Subspace<T>,
    pub domain_unit: Element<T>,
    /// `‖θ(1) − e‖`.
    pub unit_defect: f64,
    /// Worst membership residual of `θ(e⁺X) ⊂ X` and `X ⊂ θ(e⁺X)`.
    pub image_defect: f64,
    /// `max ‖θ(1)θ(ab) − θ(a)θ(b)‖` over the domain basis.
    pub order_zero_defect: f64,
}

#[derive(Clone, Debug)]
pub struct ImageDecision<T: Real> {
    pub accepted: bool,
    pub failed_clause: Option<String>,
    pub flags: HypothesisFlags,
    pub witness: Option<Element<T>>,
    pub map: Option<ImageMap<T>>,
}

/// Decides whether `X` is the image of a c.p.c. order zero map sending the
/// unit to `e`, returning such a map or the first failed clause.
pub fn decide_order_zero_image<T: Real>(x: &Subspace<T>, e: &Element<T>, tol: &Tolerances) -> Result<ImageDecision<T>> {
    let report = hypotheses_report(x, e, tol)?;
    if let Some(clause) = report.flags.first_image_failure() {
        let witness = match clause {
            "local order unit" => report.local_witness.map(|i| x.ortho_basis()[i].clone()),
            "X^2 = eX" => {
                report.product_witness.map(|(i, j)| &x.ortho_basis()[i] * &x.ortho_basis()[j]).or(report.equality_witness.clone())
            }
            "e in X'" => x
                .ortho_basis()
                .iter()
                .max_by(|a, b| {
                    let (ca, cb) = (e.commutator(a).operator_norm(), e.commutator(b).operator_norm());
                    ca.partial_cmp(&cb).unwrap_or(std::cmp::Ordering::Equal)
                })
                .cloned(),
            _ => Some(e.clone()),
        };
        return Ok(ImageDecision { accepted: false, failed_clause: Some(clause.to_string()), flags: report.flags, witness, map: None });
    }
    let ep = pseudo_inverse(e, tol.pinv_cutoff, tol.positivity)?;
    let root = sqrt_positive(e, tol.positivity)?;
    let shape = x.shape().clone();
    let theta = LinearMapTable::from_fn(&shape, &shape, |y| &(&root * y) * &root)?;
    let domain = Subspace::new(&shape, x.basis().iter().map(|v| &ep * v).collect(), tol)?;
    let domain_unit = &ep * e;
    let image = Subspace::new(&shape, domain.basis().iter().map(|d| theta.apply(d)).collect::<Result<Vec<_>>>()?, tol)?;
    let unit_defect = (&theta.apply(&domain_unit)? - e).operator_norm().as_f64();
    let image_defect =
        x.contains_subspace(&image, tol.membership).residual.max(image.contains_subspace(x, tol.membership).residual).as_f64();
    let t1 = theta.apply(&domain_unit)?;
    let imgs = domain.ortho_basis().iter().map(|d| theta.apply(d)).collect::<Result<Vec<_>>>()?;
    let mut oz = 0.0f64;
    for (i, a) in domain.ortho_basis().iter().enumerate() {
        for (j, b) in domain.ortho_basis().iter().enumerate() {
            let d = (&(&t1 * &theta.apply(&(a * b))?) - &(&imgs[i] * &imgs[j])).operator_norm().as_f64();
            oz = oz.max(d);
        }
    }
    Ok(ImageDecision {
        accepted: true,
        failed_clause: None,
        flags: report.flags,
        witness: None,
        map: Some(ImageMap { theta, domain, domain_unit, unit_defect, image_defect, order_zero_defect: oz }),
    })
}

/// Level-`r` isometry defects `d_r = 1 − inf_{‖a‖=1} ‖θ^{(r)}(a)‖`.
#[derive(Clone, Debug, Serialize)]
pub struct CoeReport {
    pub defects: Vec<(usize, f64)>,
    pub order_zero: bool,
    pub headroom: f64,
    /// For order zero `θ` with `d_1 ≤ tol`: whether every `d_r ≤ headroom`.
    pub implication_holds: Option<bool>,
}

pub const COE_HEADROOM: f64 = 0.02;

pub fn coe_probe<T: Real>(theta: &LinearMapTable<T>, levels: &[usize], budget: &OptimBudget, tol: &Tolerances) -> Result<CoeReport> {
    let mut defects = Vec::new();
    for &r in levels {
        let shape = theta.domain().amplified(r)?;
        let n = shape.total_dim();
        let objective = |c: &[f64]| -> f64 {
            let v: nalgebra::DVector<C<T>> = nalgebra::DVector::from_fn(n, |i, _| C::new(T::lit(c[2 * i]), T::lit(c[2 * i + 1])));
            let a = Element::from_vector(&shape, &v).expect("amplified length");
            let na = a.operator_norm();
            if na <= T::zero() {
                return f64::INFINITY;
            }
            (theta.apply_amplified(&a, r).expect("amplified shape").operator_norm() / na).as_f64()
        };
        let found = minimize_on_sphere(objective, 2 * n, &[], budget);
        defects.push((r, 1.0 - found.best));
    }
    let order_zero = is_order_zero(theta, true, 0, 0, tol).verdict == OrderZeroVerdict::OrderZero;
    let d1 = defects.iter().find(|(r, _)| *r == 1).map(|d| d.1);
    let implication_holds = match (order_zero, d1) {
        (true, Some(d)) if d <= tol.membership.max(1e-6) => Some(defects.iter().all(|(_, v)| *v <= COE_HEADROOM)),
        _ => None,
    };
    Ok(CoeReport { defects, order_zero, headroom: COE_HEADROOM, implication_holds })
}

/// `θ~` on `A ⊕ C`: agrees with `θ` on `A` and sends the unit of the new
/// summand to `e − θ(1)`, so the unit of `A ⊕ C` goes to `e`.
pub fn unitize_map<T: Real>(theta: &LinearMapTable<T>, e: &Element<T>, tol: &Tolerances) -> Result<LinearMapTable<T>> {
    let dom = theta.domain();
    e.check_same_shape(&Element::zeros(theta.codomain()))?;
    let basis = theta.domain_basis();
    let imgs = basis.iter().map(|b| theta.apply(b)).collect::<Result<Vec<_>>>()?;
    let scale = e.operator_norm().max(T::one()).as_f64();
    for (i, a) in basis.iter().enumerate() {
        if e.commutator(&imgs[i]).operator_norm().as_f64() > tol.commutation * scale {
            return Err(OzError::Commutation { norm: e.commutator(&imgs[i]).operator_norm().as_f64() });
        }
        for (j, b) in basis.iter().enumerate() {
            let d = (&(e * &theta.apply(&(a * b))?) - &(&imgs[i] * &imgs[j])).operator_norm().as_f64();
            if d > tol.membership * scale {
                return Err(OzError::ProductEscapes { left: i, right: j, residual: d });
            }
        }
    }
    let mut blocks = dom.blocks().to_vec();
    blocks.push(1);
    let big = AlgebraShape::new(blocks)?;
    let one = theta.apply(&Element::identity(dom))?;
    let extra = e - &one;
    let nd = dom.total_dim();
    let mut action = DMatrix::zeros(theta.codomain().total_dim(), nd + 1);
    action.view_mut((0, 0), (theta.codomain().total_dim(), nd)).copy_from(theta.action());
    action.set_column(nd, &extra.to_vector());
    let out = LinearMapTable::new(big, theta.codomain().clone(), action)?;
    let rep = is_order_zero(&out, true, 0, 0, tol);
    if rep.verdict != OrderZeroVerdict::OrderZero {
        return Err(OzError::NotOrderZero { defect: rep.identity_defect.unwrap_or(rep.choi_min_eigenvalue) });
    }
    Ok(out)
}

/// `θ(1)` is positive, and `θ` is contractive iff `‖θ(1)‖ ≤ 1`.
pub fn unit_image_is_contraction<T: Real>(theta: &LinearMapTable<T>, tol: &Tolerances) -> bool {
    let one = theta.apply(&Element::identity(theta.domain())).expect("domain element");
    is_positive(&one, tol.positivity) && one.operator_norm() <= T::one() + T::lit(tol.positivity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bullet::build_bullet;
    use crate::random::{OrderZeroOptions, OrderZeroSample, StarHom};

    type E = Element<f64>;
    type M = LinearMapTable<f64>;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn transpose(sh: &AlgebraShape) -> M {
        M::from_fn(sh, sh, |a| a.map_blocks(|_, b| b.transpose())).unwrap()
    }

    fn rank_one_compression() -> M {
        let sh = AlgebraShape::matrix(2);
        let p = E::from_matrix(DMatrix::from_element(2, 2, C::new(0.5, 0.0))).unwrap();
        M::from_fn(&sh, &sh, |a| &(&p * a) * &p).unwrap()
    }

    #[test]
    fn choi_examples() {
        let sh = AlgebraShape::matrix(2);
        let c = choi_matrix(&M::identity(&sh));
        assert!(c.min_eigenvalue.abs() < 1e-12);
        let eig = c.matrix.symmetric_eigenvalues();
        assert_eq!(eig.iter().filter(|v| v.abs() > 1e-9).count(), 1);
        assert!((choi_matrix(&transpose(&sh)).min_eigenvalue + 1.0).abs() < 1e-12);
        assert!(choi_matrix(&rank_one_compression()).min_eigenvalue > -1e-12);
        let blocks = AlgebraShape::new(vec![1, 2]).unwrap();
        assert!((choi_matrix(&transpose(&blocks)).min_eigenvalue + 1.0).abs() < 1e-12);
        assert!(choi_matrix(&M::identity(&blocks)).min_eigenvalue > -1e-12);
    }

    #[test]
    fn order_zero_examples() {
        let mut rng = random::rng(3);
        let dom = AlgebraShape::new(vec![1, 2]).unwrap();
        let cod = AlgebraShape::new(vec![3, 2]).unwrap();
        let hom = StarHom::<f64>::random(&mut rng, &dom, &cod).table();
        let r = is_order_zero(&hom, true, 16, 1, &tol());
        assert_eq!(r.verdict, OrderZeroVerdict::OrderZero);
        assert!(r.identity_defect.unwrap() < 1e-12);

        let bad = is_order_zero(&rank_one_compression(), true, 16, 1, &tol());
        assert_eq!(bad.verdict, OrderZeroVerdict::NotOrderZero);
        assert!(bad.identity_defect.unwrap() >= 0.1);

        let nc = is_order_zero(&transpose(&AlgebraShape::matrix(2)), true, 0, 0, &tol());
        assert_eq!(nc.verdict, OrderZeroVerdict::NotCompletelyPositive);
    }

    #[test]
    fn structure_of_diagonal_scaling() {
        let sh = AlgebraShape::diagonal(2);
        let h = E::real_diagonal(&sh, &[0.5, 1.0 / 3.0]).unwrap();
        let theta = M::from_fn(&sh, &sh, |a| &h * a).unwrap();
        let s = structure_decompose(&theta, &tol()).unwrap();
        assert!((&s.h - &h).operator_norm() < 1e-15);
        for b in theta.domain_basis() {
            assert!((&s.pi.apply(&b).unwrap() - &b).operator_norm() < 1e-12);
        }
        assert!(s.pi_hom_defect < 1e-12 && s.reconstruction_defect < 1e-12);
        assert!(structure_decompose(&rank_one_compression(), &tol()).is_err());
    }

    #[test]
    fn generated_maps_round_trip() {
        let mut rng = random::rng(21);
        for _ in 0..10 {
            let s = OrderZeroSample::<f64>::random(&mut rng, &OrderZeroOptions::default(), &tol()).unwrap();
            let st = structure_decompose(&s.theta, &tol()).unwrap();
            assert!((&st.h - &s.h).operator_norm() < 1e-9);
            assert!(st.pi_hom_defect < 1e-9, "{}", st.pi_hom_defect);
            assert!(kernel_ideal_residual(&s.theta, &tol()) < 1e-9);
            let img = image_subspace(&s.theta, &tol()).unwrap();
            assert_eq!(img.dim(), s.image.dim());
            let b = build_bullet(&img, &s.h, &tol()).unwrap();
            assert!(induced_hom_defect(&s.theta, &b).unwrap() < 1e-9);
            let d = decide_order_zero_image(&img, &s.h, &tol()).unwrap();
            let m = d.map.expect("accepted");
            assert!(m.unit_defect < 1e-9 && m.image_defect < 1e-8 && m.order_zero_defect < 1e-9);
        }
    }

    #[test]
    fn image_dimensions() {
        let sh = AlgebraShape::diagonal(3);
        let h = E::real_diagonal(&sh, &[1.0, 0.5, 0.25]).unwrap();
        let theta = M::from_fn(&sh, &sh, |a| &h * a).unwrap();
        assert_eq!(image_subspace(&theta, &tol()).unwrap().dim(), 3);
        let zero = M::from_fn(&sh, &sh, |_| E::zeros(&sh)).unwrap();
        assert!(image_subspace(&zero, &tol()).unwrap().is_trivial());
    }

    #[test]
    fn decide_image_negatives() {
        let sh = AlgebraShape::matrix(3);
        let x = Subspace::new(
            &sh,
            vec![E::real_diagonal(&sh, &[0.0, 1.0, 0.0]).unwrap(), E::real_diagonal(&sh, &[0.0, 0.0, 1.0]).unwrap()],
            &tol(),
        )
        .unwrap();
        let d = decide_order_zero_image(&x, &E::real_diagonal(&sh, &[1.0, 0.5, 0.5]).unwrap(), &tol()).unwrap();
        assert_eq!(d.failed_clause.as_deref(), Some("e in X"));
        let sh2 = AlgebraShape::matrix(2);
        let x2 = Subspace::new(&sh2, vec![E::identity(&sh2)], &tol()).unwrap();
        let d2 = decide_order_zero_image(&x2, &E::real_diagonal(&sh2, &[1.0, 0.5]).unwrap(), &tol()).unwrap();
        assert_eq!(d2.failed_clause.as_deref(), Some("X^2 = eX"));
        assert!(d2.witness.is_some());
    }

    #[test]
    fn coe_examples() {
        let sh = AlgebraShape::diagonal(2);
        let h = E::real_diagonal(&sh, &[1.0, 0.5]).unwrap();
        let theta = M::from_fn(&sh, &sh, |a| &h * a).unwrap();
        let rep = coe_probe(&theta, &[1], &OptimBudget::light(), &tol()).unwrap();
        assert!((rep.defects[0].1 - 0.5).abs() < 1e-6);
        let mut rng = random::rng(2);
        let u = random::unitary::<f64, _>(&mut rng, 2);
        let m2 = AlgebraShape::matrix(2);
        let conj = M::from_fn(&m2, &m2, |a| {
            let b = &u * a.block(0) * u.adjoint();
            E::from_matrix(b).unwrap()
        })
        .unwrap();
        let rep = coe_probe(&conj, &[1, 2], &OptimBudget::light(), &tol()).unwrap();
        assert!(rep.defects.iter().all(|d| d.1.abs() < 1e-9));
        assert_eq!(rep.implication_holds, Some(true));
    }

    #[test]
    fn unitize_map_example() {
        let c = AlgebraShape::new(vec![1]).unwrap();
        let sh = AlgebraShape::diagonal(2);
        let e11 = E::real_diagonal(&sh, &[1.0, 0.0]).unwrap();
        let theta = M::from_fn(&c, &sh, |a| e11.scale(a.block(0)[(0, 0)])).unwrap();
        let e = E::real_diagonal(&sh, &[1.0, 0.5]).unwrap();
        let t = unitize_map(&theta, &e, &tol()).unwrap();
        let one = t.apply(&Element::identity(t.domain())).unwrap();
        assert!((&one - &e).operator_norm() < 1e-15);
        assert!(choi_matrix(&t).min_eigenvalue > -1e-12);
        let same = unitize_map(&theta, &e11, &tol()).unwrap();
        assert!(same.action().column(1).norm() < 1e-15);

        // eθ(1) = e11/2 but θ(1)² = e11/4
        let half = M::from_fn(&c, &sh, |a| e11.scale(a.block(0)[(0, 0)] * 0.5)).unwrap();
        assert!(matches!(unitize_map(&half, &e11, &tol()), Err(OzError::ProductEscapes { .. })));
    }
}
