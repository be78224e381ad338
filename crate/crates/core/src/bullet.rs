//! The induced product `x•y = e⁺xy` on `X`, its C*-norm `‖x‖• = ‖e⁺x‖`,
//! and the concrete C*-algebra `e⁺X` it makes `X` into.
//!
//! In finite dimensions `x ↦ e⁺x` is a faithful *-homomorphism from
//! `(X, •)` onto the subalgebra `e⁺X ⊂ B`, so every identity of the induced
//! structure can be checked as a matrix identity.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{
    amplify, funcalc_hj, is_positive, matrix_entry, matrix_unit_tensor, pseudo_inverse, support_projection, Element, SpectralData,
    Tolerances,
};
use crate::error::{OzError, Result};
use crate::map::LinearMapTable;
use crate::optim::{maximize_on_sphere, OptimBudget};
use crate::order_units::hypotheses_report;
use crate::random;
use crate::scalar::{cre, Real, C};
use crate::subspace::Subspace;

/// Worst relative residuals of the structural identities, measured at build.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BulletResiduals {
    /// `‖e(u•v) − uv‖ / ‖u‖•‖v‖•`.
    pub mult_identity: f64,
    pub associativity: f64,
    pub adjoint_law: f64,
    pub cstar_identity: f64,
    /// Largest `(‖x•y‖• − ‖x‖•‖y‖•)/‖x‖•‖y‖•`; non-positive when submultiplicative.
    pub submultiplicativity: f64,
    /// Smallest eigenvalue of the Gram matrix of `e⁺q_i`.
    pub representation_gram_min: f64,
}

#[derive(Clone, Debug)]
pub struct BulletStructure<T: Real> {
    x: Subspace<T>,
    e: Element<T>,
    e_pinv: Element<T>,
    supp: Element<T>,
    /// `table[i][j]` holds the coordinates of `q_i • q_j` in the orthonormal basis.
    product_table: Vec<Vec<Vec<C<T>>>>,
    rep_basis: Vec<Element<T>>,
    unit: Option<Element<T>>,
    residuals: BulletResiduals,
    tol: Tolerances,
}

const STRUCTURE_SAMPLES: usize = 8;
const MAX_TRIPLE_BASIS: usize = 6;

/// Builds `(X, •, ‖·‖•)` for a commuting local order unit `e` with `X² ⊂ eX`.
pub fn build_bullet<T: Real>(x: &Subspace<T>, e: &Element<T>, tol: &Tolerances) -> Result<BulletStructure<T>> {
    let report = hypotheses_report(x, e, tol)?;
    if !report.flags.buildable() {
        if report.flags.local_order_unit {
            if let Some((left, right)) = report.product_witness {
                return Err(OzError::ProductEscapes { left, right, residual: report.product_residual.as_f64() });
            }
        }
        let clause = report.flags.first_image_failure().unwrap_or("unknown").to_string();
        return Err(OzError::Hypothesis { clause, flags: Box::new(report.flags) });
    }
    let e_pinv = pseudo_inverse(e, tol.pinv_cutoff, tol.positivity)?;
    let supp = support_projection(e, tol.pinv_cutoff, tol.positivity)?;
    let ortho = x.ortho_basis();
    let product_table = ortho.iter().map(|u| ortho.iter().map(|v| x.coordinates(&(&(&e_pinv * u) * v))).collect()).collect();
    let rep_basis = ortho.iter().map(|q| &e_pinv * q).collect();
    let mut s = BulletStructure {
        x: x.clone(),
        e: e.clone(),
        e_pinv,
        supp,
        product_table,
        rep_basis,
        unit: None,
        residuals: BulletResiduals::default(),
        tol: *tol,
    };
    s.residuals = s.measure_residuals();
    s.unit = s.find_unit();
    Ok(s)
}

impl<T: Real> BulletStructure<T> {
    pub fn subspace(&self) -> &Subspace<T> {
        &self.x
    }

    pub fn order_unit(&self) -> &Element<T> {
        &self.e
    }

    pub fn e_pinv(&self) -> &Element<T> {
        &self.e_pinv
    }

    pub fn support(&self) -> &Element<T> {
        &self.supp
    }

    pub fn product_table(&self) -> &[Vec<Vec<C<T>>>] {
        &self.product_table
    }

    pub fn rep_basis(&self) -> &[Element<T>] {
        &self.rep_basis
    }

    pub fn unit(&self) -> Option<&Element<T>> {
        self.unit.as_ref()
    }

    pub fn residuals(&self) -> &BulletResiduals {
        &self.residuals
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// `x•y = e⁺xy`.
    pub fn product(&self, x: &Element<T>, y: &Element<T>) -> Element<T> {
        &(&self.e_pinv * x) * y
    }

    /// `x•y` assembled from the product table and the coordinates of `x`, `y`.
    pub fn product_via_table(&self, x: &Element<T>, y: &Element<T>) -> Element<T> {
        let cx = self.x.coordinates(x);
        let cy = self.x.coordinates(y);
        let mut coords = vec![C::new(T::zero(), T::zero()); self.dim()];
        for (xi, row) in cx.iter().zip(&self.product_table) {
            for (yj, entry) in cy.iter().zip(row) {
                let w = *xi * *yj;
                for (c, t) in coords.iter_mut().zip(entry) {
                    *c += w * *t;
                }
            }
        }
        self.x.from_coordinates(&coords)
    }

    /// Image under the faithful representation `x ↦ e⁺x`.
    pub fn represent(&self, x: &Element<T>) -> Element<T> {
        &self.e_pinv * x
    }

    /// Inverse of [`Self::represent`] on `e⁺X`.
    pub fn from_rep(&self, r: &Element<T>) -> Element<T> {
        &self.e * r
    }

    /// `‖x‖• = ‖e⁺x‖`, after checking `x ∈ X`.
    pub fn bullet_norm(&self, x: &Element<T>) -> Result<T> {
        let m = self.x.contains(x, self.tol.membership);
        if !m.member {
            return Err(OzError::NotMember { residual: m.residual.as_f64() });
        }
        Ok(self.norm(x))
    }

    pub(crate) fn norm(&self, x: &Element<T>) -> T {
        self.represent(x).operator_norm()
    }

    /// `(j, ‖h_j(e)x‖)` for `j = 1, 2, 4, …, 2^10`.
    pub fn hj_norm_sequence(&self, x: &Element<T>) -> Result<Vec<(usize, T)>> {
        (0..=10)
            .map(|p| {
                let j = 1usize << p;
                let hj = funcalc_hj(&self.e, j, self.tol.positivity)?;
                Ok((j, (&hj * x).operator_norm()))
            })
            .collect()
    }

    /// Positivity in `C*•(X)`, decided through the representation.
    pub fn is_bullet_positive(&self, x: &Element<T>) -> bool {
        is_positive(&self.represent(x), self.tol.positivity)
    }

    fn measure_residuals(&self) -> BulletResiduals {
        let ortho = self.x.ortho_basis();
        let d = ortho.len();
        let mut r = BulletResiduals::default();
        let norms: Vec<T> = ortho.iter().map(|q| self.norm(q)).collect();
        let norms_f: Vec<f64> = norms.iter().map(|v| v.as_f64()).collect();
        for i in 0..d {
            for j in 0..d {
                let uv = self.x.from_coordinates(&self.product_table[i][j]);
                let raw = &ortho[i] * &ortho[j];
                let scale = norms_f[i] * norms_f[j];
                r.mult_identity = r.mult_identity.max((&(&self.e * &uv) - &raw).operator_norm().as_f64() / scale);
                let lhs = uv.adjoint();
                let rhs = self.product(&ortho[j].adjoint(), &ortho[i].adjoint());
                r.adjoint_law = r.adjoint_law.max(self.norm(&(&lhs - &rhs)).as_f64() / scale);
            }
        }
        let m = d.min(MAX_TRIPLE_BASIS);
        for i in 0..m {
            for j in 0..m {
                let uv = self.product_via_table(&ortho[i], &ortho[j]);
                for k in 0..m {
                    let left = self.product_via_table(&uv, &ortho[k]);
                    let vw = self.product_via_table(&ortho[j], &ortho[k]);
                    let right = self.product_via_table(&ortho[i], &vw);
                    let scale = norms_f[i] * norms_f[j] * norms_f[k];
                    r.associativity = r.associativity.max(self.norm(&(&left - &right)).as_f64() / scale);
                }
            }
        }
        let mut rng = random::rng(0x0b0e);
        for _ in 0..STRUCTURE_SAMPLES {
            let a = random::in_subspace(&mut rng, &self.x);
            let b = random::in_subspace(&mut rng, &self.x);
            let na = self.norm(&a).as_f64();
            let nb = self.norm(&b).as_f64();
            if na == 0.0 || nb == 0.0 {
                continue;
            }
            let asa = self.product_via_table(&a.adjoint(), &a);
            r.cstar_identity = r.cstar_identity.max((self.norm(&asa).as_f64() - na * na).abs() / (na * na));
            let ab = self.norm(&self.product_via_table(&a, &b)).as_f64();
            let excess = (ab - na * nb) / (na * nb);
            r.submultiplicativity = if r.submultiplicativity == 0.0 { excess } else { r.submultiplicativity.max(excess) };
        }
        if d > 0 {
            let g = DMatrix::from_fn(d, d, |i, j| self.rep_basis[i].hs_inner(&self.rep_basis[j]));
            r.representation_gram_min = g.symmetric_eigenvalues().min().as_f64();
        }
        r
    }

    /// The •-unit: `u ∈ X` with `uv = ev` for every basis vector `v`.
    pub fn find_unit(&self) -> Option<Element<T>> {
        if self.x.contains(&self.e, self.tol.membership).member {
            return Some(self.e.clone());
        }
        let ortho = self.x.ortho_basis();
        let d = ortho.len();
        if d == 0 {
            return None;
        }
        let n = self.x.shape().total_dim();
        let mut a = DMatrix::zeros(n * d, d);
        let mut b = DMatrix::zeros(n * d, 1);
        for (j, v) in ortho.iter().enumerate() {
            let ev = (&self.e * v).to_vector();
            for i in 0..n {
                b[(j * n + i, 0)] = ev[i];
            }
            for (c, q) in ortho.iter().enumerate() {
                let qv = (q * v).to_vector();
                for i in 0..n {
                    a[(j * n + i, c)] = qv[i];
                }
            }
        }
        let svd = a.clone().svd(true, true);
        let sol = svd.solve(&b, T::lit(self.tol.rank)).ok()?;
        let coords: Vec<C<T>> = (0..d).map(|c| sol[(c, 0)]).collect();
        let resid = (&a * &sol - &b).norm();
        let scale = b.norm().max(T::one());
        if resid > T::lit(self.tol.membership) * scale {
            return None;
        }
        Some(self.x.from_coordinates(&coords))
    }

    /// Inverse in `C*•(X)`, computed spectrally in the representation.
    pub fn bullet_inverse(&self, x: &Element<T>) -> Result<Element<T>> {
        let unit = self.unit.as_ref().ok_or(OzError::NotInvertible)?;
        let p = self.represent(unit);
        let r = self.represent(x);
        // inverse on the range of the unit; r need not be normal in general
        let inv = r.map_blocks(|_, b| {
            let svd = b.clone().svd(true, true);
            svd.pseudo_inverse(T::lit(self.tol.pinv_cutoff) * T::one().max(b.norm())).unwrap_or_else(|_| b.clone() * cre(T::zero()))
        });
        let check = (&(&r * &inv) - &p).operator_norm().max((&(&inv * &r) - &p).operator_norm());
        if check > T::lit(1e-6) {
            return Err(OzError::NotInvertible);
        }
        Ok(self.from_rep(&inv))
    }
}

/// Diagnostics for `Φ: C*•(X) → B`, the identity on `X`.
#[derive(Clone, Debug, Serialize)]
pub struct PhiReport {
    /// `max ‖x‖/‖x‖•`; at most one for a contraction.
    pub contraction_margin: f64,
    /// `max ‖Φ(a)Φ(b)‖` over sampled orthogonal •-positive pairs.
    pub order_zero_defect: f64,
    /// Per requested level `(r, mismatches, samples)`.
    pub positivity_mismatches: Vec<(usize, usize, usize)>,
    /// `sup ‖x‖•/‖x‖` estimate.
    pub phi_inverse_norm: f64,
    pub samples: usize,
}

pub fn phi_diagnostics<T: Real>(s: &BulletStructure<T>, levels: &[usize], samples: usize, budget: &OptimBudget) -> Result<PhiReport> {
    let tol = *s.tolerances();
    let mut rng = random::rng(budget.seed ^ 0x9e37);
    let x = s.subspace();
    let mut margin = 0.0f64;
    let mut defect = 0.0f64;
    let mut candidates: Vec<Element<T>> = x.ortho_basis().to_vec();
    candidates.extend(x.self_adjoint_basis(&tol));
    for _ in 0..samples {
        candidates.push(random::in_subspace(&mut rng, x));
    }
    for c in &candidates {
        let nb = s.norm(c).as_f64();
        if nb > 0.0 {
            margin = margin.max(c.operator_norm().as_f64() / nb);
        }
    }
    for _ in 0..samples {
        let xa = random::self_adjoint_in_subspace(&mut rng, x);
        let spec = SpectralData::of(&s.represent(&xa));
        let pos = s.from_rep(&spec.apply(|t| t.max(T::zero())));
        let neg = s.from_rep(&spec.apply(|t| (-t).max(T::zero())));
        defect = defect.max((&pos * &neg).operator_norm().as_f64());
    }
    let mut mismatches = Vec::new();
    for &r in levels {
        let sr = if r == 1 { s.clone() } else { build_bullet(&x.amplify(r, &tol)?, &amplify(s.order_unit(), r)?, &tol)? };
        let mut bad = 0;
        let mut count = 0;
        for k in 0..samples {
            let cand = if k % 2 == 0 {
                let w = sr.represent(&random::in_subspace(&mut rng, sr.subspace()));
                sr.from_rep(&(&w.adjoint() * &w))
            } else {
                random::self_adjoint_in_subspace(&mut rng, sr.subspace())
            };
            count += 1;
            if sr.is_bullet_positive(&cand) != is_positive(&cand, tol.positivity) {
                bad += 1;
            }
        }
        mismatches.push((r, bad, count));
    }
    let ortho = x.ortho_basis();
    let shape = x.shape().clone();
    let objective = |c: &[f64]| -> f64 {
        let mut v = Element::zeros(&shape);
        for (k, q) in ortho.iter().enumerate() {
            v = v.axpy(C::new(T::lit(c[2 * k]), T::lit(c[2 * k + 1])), q);
        }
        let n = v.operator_norm();
        if n <= T::zero() {
            return f64::NEG_INFINITY;
        }
        (s.norm(&v) / n).as_f64()
    };
    let inv = if ortho.is_empty() { 0.0 } else { maximize_on_sphere(objective, 2 * ortho.len(), &[], budget).best };
    Ok(PhiReport {
        contraction_margin: margin,
        order_zero_defect: defect,
        positivity_mismatches: mismatches,
        phi_inverse_norm: inv,
        samples,
    })
}

/// How `Z = span{X, e}` relates to `X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Unitization {
    #[serde(rename = "no-op")]
    NoOp,
    #[serde(rename = "forced unitization")]
    Forced,
    #[serde(rename = "minimal unitization")]
    Minimal,
}

impl Unitization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Unitization::NoOp => "no-op",
            Unitization::Forced => "forced unitization",
            Unitization::Minimal => "minimal unitization",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitizationReport {
    pub codim: usize,
    pub classification: Unitization,
    /// `max ‖u •_Z v − u •_X v‖•` on basis pairs of `X`.
    pub restriction_residual: f64,
    pub norm_residual: f64,
    /// Worst membership residual of `z • x` and `x • z` in `X`.
    pub ideal_residual: f64,
    pub note: Option<String>,
}

/// Builds the structure on `Z = span{X, e}` and compares it with `X`.
pub fn unitize<T: Real>(s: &BulletStructure<T>) -> Result<(BulletStructure<T>, UnitizationReport)> {
    let tol = *s.tolerances();
    let (z, e_in_x) = s.subspace().span_with(s.order_unit(), &tol)?;
    let sz = build_bullet(&z, s.order_unit(), &tol)?;
    let x = s.subspace();
    let mut restriction = 0.0f64;
    let mut norm_res = 0.0f64;
    for u in x.ortho_basis() {
        let nu = s.norm(u).as_f64();
        norm_res = norm_res.max((sz.norm(u).as_f64() - nu).abs() / nu);
        for v in x.ortho_basis() {
            let a = s.product_via_table(u, v);
            let b = sz.product_via_table(u, v);
            restriction = restriction.max(s.norm(&(&a - &b)).as_f64() / (nu * s.norm(v).as_f64()));
        }
    }
    let mut ideal = 0.0f64;
    for w in z.ortho_basis() {
        for v in x.ortho_basis() {
            for p in [sz.product_via_table(w, v), sz.product_via_table(v, w)] {
                let m = x.contains(&p, tol.membership);
                ideal = ideal.max(m.residual.as_f64() / p.hs_norm().as_f64().max(1.0));
            }
        }
    }
    let codim = z.dim() - x.dim();
    let (classification, note) = if e_in_x {
        (Unitization::NoOp, None)
    } else if s.unit().is_some() {
        (Unitization::Forced, None)
    } else {
        (Unitization::Minimal, Some("C*•(X) reported non-unital; minimal unitization branch fired".to_string()))
    };
    Ok((
        sz,
        UnitizationReport {
            codim,
            classification,
            restriction_residual: restriction,
            norm_residual: norm_res,
            ideal_residual: ideal,
            note,
        },
    ))
}

/// `φ(x) = h⁻¹ • x` between the structures induced by two units in `X ∩ X′`.
#[derive(Clone, Debug)]
pub struct UnitIsomorphism<T: Real> {
    /// `h⁻¹` in the structure of `e`.
    pub h_inverse: Element<T>,
    /// `e⁻¹` in the structure of `h`.
    pub e_inverse: Element<T>,
    pub phi: LinearMapTable<T>,
    pub psi: LinearMapTable<T>,
    /// `max ‖φ(u ⋆ v) − φ(u) • φ(v)‖•`, relative.
    pub hom_defect: f64,
    pub star_defect: f64,
    /// `‖φ(h) − e‖`.
    pub unital_defect: f64,
    /// `max ‖ψ(φ(u)) − u‖`.
    pub inverse_defect: f64,
    /// `‖e⁻¹ ⋆ h⁻¹ − e‖`.
    pub consistency_defect: f64,
}

impl<T: Real> UnitIsomorphism<T> {
    pub fn max_defect(&self) -> f64 {
        [self.hom_defect, self.star_defect, self.unital_defect, self.inverse_defect, self.consistency_defect]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Tabulates a map defined on `X` as a map on the ambient algebra, zero on
/// the Hilbert–Schmidt complement of `X`.
fn table_on_subspace<T: Real>(x: &Subspace<T>, f: impl Fn(&Element<T>) -> Element<T>) -> Result<LinearMapTable<T>> {
    LinearMapTable::from_fn(x.shape(), x.shape(), |a| f(&x.project(a)))
}

pub fn iso_between_units<T: Real>(s_e: &BulletStructure<T>, s_h: &BulletStructure<T>) -> Result<UnitIsomorphism<T>> {
    let tol = *s_e.tolerances();
    let x = s_e.subspace();
    let same = x.contains_subspace(s_h.subspace(), tol.membership).member && s_h.subspace().contains_subspace(x, tol.membership).member;
    if !same {
        return Err(OzError::Domain("both structures must live on the same subspace".into()));
    }
    let e = s_e.order_unit();
    let h = s_h.order_unit();
    for (name, u) in [("e", e), ("h", h)] {
        if !x.contains(u, tol.membership).member {
            return Err(OzError::Hypothesis { clause: format!("{name} in X"), flags: Box::default() });
        }
    }
    let h_inv = s_e.bullet_inverse(h)?;
    let e_inv = s_h.bullet_inverse(e)?;
    let phi_fn = |v: &Element<T>| s_e.product(&h_inv, v);
    let psi_fn = |v: &Element<T>| s_h.product(&e_inv, v);
    let phi = table_on_subspace(x, phi_fn)?;
    let psi = table_on_subspace(x, psi_fn)?;

    let mut hom = 0.0f64;
    let mut star = 0.0f64;
    let mut inverse = 0.0f64;
    for u in x.ortho_basis() {
        let pu = phi_fn(u);
        star = star.max(s_e.norm(&(&phi_fn(&u.adjoint()) - &pu.adjoint())).as_f64() / s_e.norm(&pu).as_f64().max(1e-300));
        inverse = inverse.max((&psi_fn(&pu) - u).operator_norm().as_f64() / u.operator_norm().as_f64());
        for v in x.ortho_basis() {
            let pv = phi_fn(v);
            let lhs = phi_fn(&s_h.product(u, v));
            let rhs = s_e.product(&pu, &pv);
            let scale = (s_e.norm(&pu) * s_e.norm(&pv)).as_f64().max(1e-300);
            hom = hom.max(s_e.norm(&(&lhs - &rhs)).as_f64() / scale);
        }
    }
    let unital = (&phi_fn(h) - e).operator_norm().as_f64();
    let consistency = (&s_h.product(&e_inv, &h_inv) - e).operator_norm().as_f64();
    Ok(UnitIsomorphism {
        h_inverse: h_inv,
        e_inverse: e_inv,
        phi,
        psi,
        hom_defect: hom,
        star_defect: star,
        unital_defect: unital,
        inverse_defect: inverse,
        consistency_defect: consistency,
    })
}

/// Worst deviation of `M_r(X)`'s product table from the entrywise formula
/// `(E_kl ⊗ q_i) • (E_mn ⊗ q_j) = δ_lm E_kn ⊗ (q_i • q_j)`, together with
/// how far the amplified orthonormal basis is from `E_kl ⊗ q_i`.
pub fn amplified_table_defect<T: Real>(s: &BulletStructure<T>, r: usize) -> Result<f64> {
    let tol = *s.tolerances();
    let sr = build_bullet(&s.subspace().amplify(r, &tol)?, &amplify(s.order_unit(), r)?, &tol)?;
    let d = s.dim();
    let ob = sr.subspace().ortho_basis();
    if ob.len() != r * r * d {
        return Ok(f64::INFINITY);
    }
    let index = |k: usize, l: usize, i: usize| (k * r + l) * d + i;
    let mut worst = 0.0f64;
    for k in 0..r {
        for l in 0..r {
            for (i, q) in s.subspace().ortho_basis().iter().enumerate() {
                let expect = matrix_unit_tensor(q, r, k, l)?;
                worst = worst.max((&ob[index(k, l, i)] - &expect).hs_norm().as_f64());
            }
        }
    }
    let table = sr.product_table();
    for k in 0..r {
        for l in 0..r {
            for m in 0..r {
                for n in 0..r {
                    for i in 0..d {
                        for j in 0..d {
                            let got = &table[index(k, l, i)][index(m, n, j)];
                            for (c, g) in got.iter().enumerate() {
                                let (kk, rest) = (c / (r * d), c % (r * d));
                                let (nn, cc) = (rest / d, rest % d);
                                let want =
                                    if l == m && kk == k && nn == n { s.product_table[i][j][cc] } else { C::new(T::zero(), T::zero()) };
                                worst = worst.max((*g - want).norm_sqr().sqrt().as_f64());
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Worst relative deviation of the amplified product from
/// `(x•y)_kl = Σ_m x_km • y_ml` on `pairs` random elements of `M_r(X)`.
pub fn amplification_coherence<T: Real>(s: &BulletStructure<T>, r: usize, pairs: usize, seed: u64) -> Result<f64> {
    let tol = *s.tolerances();
    let sr = build_bullet(&s.subspace().amplify(r, &tol)?, &amplify(s.order_unit(), r)?, &tol)?;
    let base = s.subspace().shape().clone();
    let mut worst = 0.0f64;
    let mut rng = random::rng(seed);
    for _ in 0..pairs {
        let a = random::in_subspace(&mut rng, sr.subspace());
        let b = random::in_subspace(&mut rng, sr.subspace());
        let lhs = sr.product_via_table(&a, &b);
        let mut rhs = Element::zeros(a.shape());
        for k in 0..r {
            for l in 0..r {
                let mut acc = Element::zeros(&base);
                for m in 0..r {
                    let akm = matrix_entry(&a, &base, r, k, m)?;
                    let bml = matrix_entry(&b, &base, r, m, l)?;
                    acc = &acc + &s.product_via_table(&akm, &bml);
                }
                rhs = &rhs + &matrix_unit_tensor(&acc, r, k, l)?;
            }
        }
        let scale = (sr.norm(&a) * sr.norm(&b)).as_f64().max(1e-300);
        worst = worst.max(sr.norm(&(&lhs - &rhs)).as_f64() / scale);
    }
    Ok(worst)
}

/// Orthogonality and commutation agree between the ambient and induced
/// products; measured on sampled pairs.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ProductEquivalences {
    /// `max(‖xy‖, ‖x•y‖)` over spectrally orthogonal pairs, relative.
    pub orthogonal_residual: f64,
    /// `max(‖[x,y]‖, ‖x•y − y•x‖)` over pairs `y = x•x`, relative.
    pub commuting_residual: f64,
    /// Random pairs where exactly one of `xy`, `x•y` vanishes (resp. commutators).
    pub mismatches: usize,
    /// Smallest eigenvalue of `x*•x` over samples, relative to `‖x‖•²`.
    pub positivity_min: f64,
    pub samples: usize,
}

pub fn product_equivalences<T: Real>(s: &BulletStructure<T>, samples: usize, seed: u64) -> ProductEquivalences {
    let tol = s.tolerances();
    let x = s.subspace();
    let mut rng = random::rng(seed);
    let mut out = ProductEquivalences { positivity_min: f64::INFINITY, samples, ..Default::default() };
    let thresh = tol.membership;
    for _ in 0..samples {
        let a = random::self_adjoint_in_subspace(&mut rng, x);
        let na = s.norm(&a).as_f64();
        if na == 0.0 {
            continue;
        }
        let spec = SpectralData::of(&s.represent(&a));
        let p = s.from_rep(&spec.apply(|t| t.max(T::zero())));
        let q = s.from_rep(&spec.apply(|t| (-t).max(T::zero())));
        let scale = na * na;
        out.orthogonal_residual =
            out.orthogonal_residual.max((&p * &q).operator_norm().as_f64() / scale).max(s.norm(&s.product(&p, &q)).as_f64() / scale);

        let a2 = s.product(&a, &a);
        let scale3 = scale * na;
        out.commuting_residual = out
            .commuting_residual
            .max(a.commutator(&a2).operator_norm().as_f64() / scale3)
            .max(s.norm(&(&s.product(&a, &a2) - &s.product(&a2, &a))).as_f64() / scale3);

        let b = random::in_subspace(&mut rng, x);
        let c = random::in_subspace(&mut rng, x);
        let sc = (s.norm(&b) * s.norm(&c)).as_f64();
        let raw = (&b * &c).operator_norm().as_f64() / sc <= thresh;
        let bul = s.norm(&s.product(&b, &c)).as_f64() / sc <= thresh;
        let raw_c = b.commutator(&c).operator_norm().as_f64() / sc <= thresh;
        let bul_c = s.norm(&(&s.product(&b, &c) - &s.product(&c, &b))).as_f64() / sc <= thresh;
        out.mismatches += usize::from(raw != bul) + usize::from(raw_c != bul_c);

        let nb = s.norm(&b).as_f64();
        let bsb = s.represent(&s.product(&b.adjoint(), &b));
        out.positivity_min = out.positivity_min.min(SpectralData::of(&bsb.real_part()).min_eigenvalue().as_f64() / (nb * nb));
    }
    out
}

/// Largest difference between two structures on the same subspace:
/// product-table coordinates and `‖·‖•` on the basis.
pub fn structure_distance<T: Real>(a: &BulletStructure<T>, b: &BulletStructure<T>) -> f64 {
    let mut worst = 0.0f64;
    let d = a.dim().min(b.dim());
    for i in 0..d {
        for j in 0..d {
            for (u, v) in a.product_table[i][j].iter().zip(&b.product_table[i][j]) {
                worst = worst.max((*u - *v).norm_sqr().sqrt().as_f64());
            }
        }
    }
    for q in a.subspace().ortho_basis() {
        worst = worst.max((a.norm(q) - b.norm(q)).abs().as_f64());
    }
    if a.dim() != b.dim() {
        worst = f64::INFINITY;
    }
    worst
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

    fn diag_demo() -> BulletStructure<f64> {
        let sh = AlgebraShape::matrix(2);
        let x = S::new(&sh, vec![d(&sh, &[1.0, 0.0]), d(&sh, &[0.0, 1.0])], &tol()).unwrap();
        build_bullet(&x, &d(&sh, &[1.0, 0.5]), &tol()).unwrap()
    }

    fn corner_demo() -> BulletStructure<f64> {
        let sh = AlgebraShape::matrix(3);
        let x = S::new(&sh, vec![d(&sh, &[0.0, 1.0, 0.0]), d(&sh, &[0.0, 0.0, 1.0])], &tol()).unwrap();
        build_bullet(&x, &d(&sh, &[1.0, 0.5, 0.5]), &tol()).unwrap()
    }

    #[test]
    fn diagonal_product() {
        let s = diag_demo();
        let sh = AlgebraShape::matrix(2);
        let (a, b, c, dd) = (1.5, -0.5, 2.0, 3.0);
        let p = s.product_via_table(&d(&sh, &[a, b]), &d(&sh, &[c, dd]));
        // e⁻¹ oracle: diag(ac, 2bd)
        assert!((&p - &d(&sh, &[a * c, 2.0 * b * dd])).operator_norm() < 1e-12);
        let z = s.product(&d(&sh, &[a, 0.0]), &d(&sh, &[0.0, dd]));
        assert!(z.operator_norm() < 1e-15);
        let r = s.residuals();
        assert!(r.mult_identity < 1e-12 && r.associativity < 1e-12 && r.adjoint_law < 1e-12);
        assert!(r.cstar_identity < 1e-12 && r.submultiplicativity < 1e-12);
    }

    #[test]
    fn corner_projection_is_idempotent() {
        let s = corner_demo();
        let sh = AlgebraShape::matrix(3);
        let p = d(&sh, &[0.0, 0.5, 0.0]);
        assert!((&s.product_via_table(&p, &p) - &p).operator_norm() < 1e-12);
    }

    #[test]
    fn bullet_norms() {
        let s = diag_demo();
        let sh = AlgebraShape::matrix(2);
        assert!((s.bullet_norm(&d(&sh, &[0.0, 1.0])).unwrap() - 2.0).abs() < 1e-12);
        assert!((s.bullet_norm(s.order_unit()).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(s.bullet_norm(&E::matrix_unit(&sh, 0, 0, 1)), Err(OzError::NotMember { .. })));
        let seq = s.hj_norm_sequence(&d(&sh, &[0.0, 1.0])).unwrap();
        assert!(seq.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-15));
        assert!((seq.last().unwrap().1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn build_rejects_escaping_products() {
        let sh = AlgebraShape::matrix(2);
        let x = S::new(&sh, vec![d(&sh, &[1.0, 1.0])], &tol()).unwrap();
        match build_bullet(&x, &d(&sh, &[1.0, 0.5]), &tol()) {
            Err(OzError::ProductEscapes { left: 0, right: 0, .. }) => {}
            other => panic!("expected escape error, got {other:?}"),
        }
        let full = S::new(&sh, vec![d(&sh, &[1.0, 0.0]), d(&sh, &[0.0, 1.0])], &tol()).unwrap();
        assert!(matches!(build_bullet(&full, &d(&sh, &[1.0, 0.0]), &tol()), Err(OzError::Hypothesis { .. })));
    }

    #[test]
    fn units() {
        let s = diag_demo();
        assert!((s.unit().unwrap() - s.order_unit()).operator_norm() < 1e-15);
        let c = corner_demo();
        let sh = AlgebraShape::matrix(3);
        let u = c.unit().unwrap();
        assert!((u - &d(&sh, &[0.0, 0.5, 0.5])).operator_norm() < 1e-10);
        assert!((u - c.order_unit()).operator_norm() > 0.5);

        let one = S::new(&sh, vec![d(&sh, &[0.0, 1.0, 0.0])], &tol()).unwrap();
        let s1 = build_bullet(&one, &d(&sh, &[1.0, 0.5, 0.5]), &tol()).unwrap();
        assert!((s1.unit().unwrap() - &d(&sh, &[0.0, 0.5, 0.0])).operator_norm() < 1e-10);
    }

    #[test]
    fn phi_report_diagonal_demo() {
        let s = diag_demo();
        let rep = phi_diagnostics(&s, &[1, 2], 32, &OptimBudget::light()).unwrap();
        assert!((rep.contraction_margin - 1.0).abs() < 1e-12);
        assert!((rep.phi_inverse_norm - 2.0).abs() < 1e-6);
        assert!(rep.order_zero_defect < 1e-12);
        assert!(rep.positivity_mismatches.iter().all(|m| m.1 == 0));
    }

    #[test]
    fn phi_isometric_for_projection_unit() {
        let sh = AlgebraShape::new(vec![1, 2]).unwrap();
        let p = d(&sh, &[1.0, 1.0, 0.0]);
        let x = S::new(&sh, vec![d(&sh, &[1.0, 0.0, 0.0]), d(&sh, &[0.0, 1.0, 0.0])], &tol()).unwrap();
        let s = build_bullet(&x, &p, &tol()).unwrap();
        let mut rng = random::rng(11);
        for _ in 0..20 {
            let v = random::in_subspace(&mut rng, &x);
            assert!(((&p * &v).operator_norm() - v.operator_norm()).abs() < 1e-12);
            assert!((s.norm(&v) - v.operator_norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn unitize_examples() {
        let (_, rep) = unitize(&diag_demo()).unwrap();
        assert_eq!(rep.classification, Unitization::NoOp);
        assert_eq!(rep.codim, 0);

        let (z, rep) = unitize(&corner_demo()).unwrap();
        assert_eq!(rep.codim, 1);
        assert_eq!(rep.classification, Unitization::Forced);
        assert!(rep.ideal_residual < 1e-9 && rep.restriction_residual < 1e-9 && rep.norm_residual < 1e-12);
        assert_eq!(z.dim(), 3);

        let sh = AlgebraShape::matrix(3);
        let one = S::new(&sh, vec![d(&sh, &[0.0, 1.0, 0.0])], &tol()).unwrap();
        let s1 = build_bullet(&one, &d(&sh, &[1.0, 0.5, 0.5]), &tol()).unwrap();
        let (_, rep) = unitize(&s1).unwrap();
        assert_eq!(rep.codim, 1);
        assert!(rep.ideal_residual < 1e-9);
    }

    #[test]
    fn iso_between_diagonal_units() {
        let s_e = diag_demo();
        let sh = AlgebraShape::matrix(2);
        let h = d(&sh, &[0.5, 1.0]);
        let s_h = build_bullet(s_e.subspace(), &h, &tol()).unwrap();
        let iso = iso_between_units(&s_e, &s_h).unwrap();
        // hand oracle: h • w = e gives w = diag(2, 1/4)
        assert!((&iso.h_inverse - &d(&sh, &[2.0, 0.25])).operator_norm() < 1e-12);
        assert!(iso.max_defect() < 1e-10, "{iso:?}");
        let ph = iso.phi.apply(&h).unwrap();
        assert!((&ph - s_e.order_unit()).operator_norm() < 1e-12);

        let same = iso_between_units(&s_e, &s_e).unwrap();
        let id = LinearMapTable::identity(&sh);
        let x = s_e.subspace();
        for q in x.ortho_basis() {
            assert!((&same.phi.apply(q).unwrap() - &id.apply(q).unwrap()).operator_norm() < 1e-12);
        }
    }

    #[test]
    fn amplification_is_entrywise() {
        let s = corner_demo();
        for r in [2, 3] {
            assert!(amplified_table_defect(&s, r).unwrap() < 1e-12);
            assert!(amplification_coherence(&s, r, 4, 5).unwrap() < 1e-9);
        }
    }
}
