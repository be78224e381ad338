//! Named, seeded end-to-end checks producing JSON reports.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{AlgebraShape, Element, Tolerances};
use crate::bullet::{
    amplification_coherence, build_bullet, iso_between_units, phi_diagnostics, product_equivalences, structure_distance, unitize,
    Unitization,
};
use crate::error::{OzError, Result};
use crate::grassmann::{self, bestellung_element, bestellung_sts, grassmann_sup, isometry_witness};
use crate::io::{bullet_export, element_to_value, map_to_json, subspace_to_json};
use crate::optim::OptimBudget;
use crate::order_units::{hypotheses_report, scaling_factor};
use crate::ozmaps::{
    choi_matrix, decide_order_zero_image, image_subspace, induced_hom_defect, is_order_zero, kernel_ideal_residual, structure_decompose,
};
use crate::random::{self, OrderZeroOptions, OrderZeroSample};
use crate::scalar::C;
use crate::subspace::Subspace;

pub const SCENARIOS: [&str; 6] = ["diagonal-demo", "corner-3x3", "not-uou-truncated", "bestellung", "invariance", "property-suite"];

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub claim: String,
    pub pass: bool,
    pub measured: f64,
    /// `"<="`, `">="` or `"~"` (within `tolerance` of `target`).
    pub relation: &'static str,
    pub target: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub size: Option<usize>,
    pub pass: bool,
    pub verdicts: Vec<Verdict>,
    pub artifacts: BTreeMap<String, Value>,
    pub runtime_seconds: f64,
}

impl Report {
    fn new(scenario: &str, params: &ScenarioParams) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed: params.seed,
            size: params.size,
            pass: true,
            verdicts: Vec::new(),
            artifacts: BTreeMap::new(),
            runtime_seconds: 0.0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        claim: &str,
        pass: bool,
        measured: f64,
        relation: &'static str,
        target: f64,
        tolerance: f64,
        witness: Option<Value>,
    ) {
        if !pass {
            self.pass = false;
            let w = witness.unwrap_or_else(|| json!({ "measured": measured }));
            self.artifacts.insert(format!("witness/{claim}"), w);
        }
        self.verdicts.push(Verdict { claim: claim.to_string(), pass, measured, relation, target, tolerance });
    }

    pub fn at_most(&mut self, claim: &str, measured: f64, bound: f64, witness: Option<Value>) {
        self.record(claim, measured <= bound, measured, "<=", bound, 0.0, witness);
    }

    pub fn at_least(&mut self, claim: &str, measured: f64, bound: f64, witness: Option<Value>) {
        self.record(claim, measured >= bound, measured, ">=", bound, 0.0, witness);
    }

    pub fn near(&mut self, claim: &str, measured: f64, target: f64, tolerance: f64, witness: Option<Value>) {
        self.record(claim, (measured - target).abs() <= tolerance, measured, "~", target, tolerance, witness);
    }

    pub fn holds(&mut self, claim: &str, ok: bool, witness: Option<Value>) {
        self.record(claim, ok, if ok { 1.0 } else { 0.0 }, ">=", 1.0, 0.0, witness);
    }

    pub fn failures(&self) -> usize {
        self.verdicts.iter().filter(|v| !v.pass).count()
    }

    /// Plain-text rendering, one verdict per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("scenario {} (seed {})\n", self.scenario, self.seed);
        for v in &self.verdicts {
            let rel = match v.relation {
                "~" => format!("~ {:e} ± {:e}", v.target, v.tolerance),
                r => format!("{r} {:e}", v.target),
            };
            out.push_str(&format!("  {} {:<48} {:e} {}\n", if v.pass { "PASS" } else { "FAIL" }, v.claim, v.measured, rel));
        }
        out.push_str(&format!("{} verdicts, {} failed, {:.2}s\n", self.verdicts.len(), self.failures(), self.runtime_seconds));
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct ScenarioParams {
    pub seed: u64,
    pub size: Option<usize>,
    pub budget: Option<OptimBudget>,
    pub tol: Tolerances,
}

pub fn run_scenario(name: &str, params: &ScenarioParams) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new(name, params);
    match name {
        "diagonal-demo" => diagonal_demo(&mut report, params)?,
        "corner-3x3" => corner_demo(&mut report, params)?,
        "not-uou-truncated" => not_uou(&mut report, params)?,
        "bestellung" => bestellung(&mut report, params)?,
        "invariance" => invariance(&mut report, params)?,
        "property-suite" => property_suite(&mut report, params)?,
        other => return Err(OzError::Domain(format!("unknown scenario {other:?}; expected one of {}", SCENARIOS.join(", ")))),
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

type E = Element<f64>;

fn diag(sh: &AlgebraShape, v: &[f64]) -> E {
    E::real_diagonal(sh, v).expect("diagonal fits shape")
}

fn budget(params: &ScenarioParams) -> OptimBudget {
    params.budget.unwrap_or_default().with_seed(params.seed)
}

fn diagonal_demo(r: &mut Report, p: &ScenarioParams) -> Result<()> {
    let tol = p.tol;
    let sh = AlgebraShape::matrix(2);
    let e = diag(&sh, &[1.0, 0.5]);
    let x = Subspace::new(&sh, vec![diag(&sh, &[1.0, 0.0]), diag(&sh, &[0.0, 1.0])], &tol)?;
    let hyp = hypotheses_report(&x, &e, &tol)?;
    r.holds("hypotheses.all", hyp.flags.first_image_failure().is_none(), Some(json!(hyp.flags)));

    let sf = scaling_factor(&e, &x, &budget(p), &tol)?;
    r.near("scaling_factor.closed_form", sf.closed_form.unwrap_or(f64::NAN), 2.0, 1e-9, Some(json!(sf)));
    r.at_most("scaling_factor.method_agreement", sf.method_agreement, 0.02, Some(json!(sf)));
    r.artifacts.insert("scaling_factor".into(), json!(sf));

    let s = build_bullet(&x, &e, &tol)?;
    let (a, b, c, d) = (1.5, -0.5, 2.0, 3.0);
    let prod = s.product_via_table(&diag(&sh, &[a, b]), &diag(&sh, &[c, d]));
    r.at_most("bullet.product_oracle", (&prod - &diag(&sh, &[a * c, 2.0 * b * d])).operator_norm(), 1e-9, Some(element_to_value(&prod)));
    r.at_most("bullet.orthogonal_product", s.product(&diag(&sh, &[a, 0.0]), &diag(&sh, &[0.0, d])).operator_norm(), 1e-12, None);
    residual_verdicts(r, &s.residuals().clone());
    r.near("bullet.norm_of_diag01", s.bullet_norm(&diag(&sh, &[0.0, 1.0]))?, 2.0, 1e-9, None);
    let unit_gap = s.unit().map_or(f64::INFINITY, |u| (u - &e).operator_norm());
    r.at_most("find_unit.equals_e", unit_gap, 1e-12, s.unit().map(element_to_value));

    let phi = phi_diagnostics(&s, &[1, 2], 64, &budget(p))?;
    r.near("phi.contraction_margin", phi.contraction_margin, 1.0, 1e-9, Some(json!(phi)));
    r.near("phi.inverse_norm", phi.phi_inverse_norm, 2.0, 1e-6, Some(json!(phi)));
    r.at_most("phi.order_zero_defect", phi.order_zero_defect, 1e-9, Some(json!(phi)));

    let dec = decide_order_zero_image(&x, &e, &tol)?;
    let unit_defect = dec.map.as_ref().map_or(f64::INFINITY, |m| m.unit_defect);
    r.at_most("decide_image.accepted_unit_defect", unit_defect, 1e-9, Some(json!({ "clause": dec.failed_clause })));

    let (_, un) = unitize(&s)?;
    r.holds("unitize.no_op", un.classification == Unitization::NoOp && un.codim == 0, Some(json!(un)));

    let h = diag(&sh, &[0.5, 1.0]);
    let sh_h = build_bullet(&x, &h, &tol)?;
    let iso = iso_between_units(&s, &sh_h)?;
    r.at_most(
        "iso.h_inverse_oracle",
        (&iso.h_inverse - &diag(&sh, &[2.0, 0.25])).operator_norm(),
        1e-10,
        Some(element_to_value(&iso.h_inverse)),
    );
    r.at_most("iso.max_defect", iso.max_defect(), 1e-10, None);

    r.artifacts.insert("structure".into(), bullet_export(&s, un.classification));
    Ok(())
}

fn residual_verdicts(r: &mut Report, res: &crate::bullet::BulletResiduals) {
    let w = Some(json!(res));
    r.at_most("bullet.mult_identity", res.mult_identity, 1e-8, w.clone());
    r.at_most("bullet.associativity", res.associativity, 1e-8, w.clone());
    r.at_most("bullet.adjoint_law", res.adjoint_law, 1e-8, w.clone());
    r.at_most("bullet.cstar_identity", res.cstar_identity, 1e-8, w.clone());
    r.at_most("bullet.submultiplicativity", res.submultiplicativity, 1e-9, w.clone());
    r.at_least("bullet.representation_faithful", res.representation_gram_min, 1e-10, w);
}

fn corner_demo(r: &mut Report, p: &ScenarioParams) -> Result<()> {
    let tol = p.tol;
    let sh = AlgebraShape::matrix(3);
    let e = diag(&sh, &[1.0, 0.5, 0.5]);
    let x = Subspace::new(&sh, vec![diag(&sh, &[0.0, 1.0, 0.0]), diag(&sh, &[0.0, 0.0, 1.0])], &tol)?;
    let hyp = hypotheses_report(&x, &e, &tol)?;
    r.holds("hypotheses.buildable", hyp.flags.buildable(), Some(json!(hyp.flags)));
    r.holds("hypotheses.e_not_in_x", !hyp.flags.e_in_x, Some(json!(hyp.flags)));

    let s = build_bullet(&x, &e, &tol)?;
    residual_verdicts(r, &s.residuals().clone());
    let q = diag(&sh, &[0.0, 0.5, 0.0]);
    r.at_most("bullet.projection_idempotent", (&s.product_via_table(&q, &q) - &q).operator_norm(), 1e-12, None);
    let h = diag(&sh, &[0.0, 0.5, 0.5]);
    let unit_gap = s.unit().map_or(f64::INFINITY, |u| (u - &h).operator_norm());
    r.at_most("find_unit.equals_h", unit_gap, 1e-9, s.unit().map(element_to_value));
    r.at_least("find_unit.h_differs_from_e", s.unit().map_or(0.0, |u| (u - &e).operator_norm()), 0.5, None);

    let (_, un) = unitize(&s)?;
    r.holds("unitize.codim_one", un.codim == 1, Some(json!(un)));
    r.holds("unitize.forced", un.classification == Unitization::Forced, Some(json!(un)));
    r.at_most("unitize.ideal_residual", un.ideal_residual, 1e-9, Some(json!(un)));
    r.at_most("unitize.restriction_residual", un.restriction_residual, 1e-9, Some(json!(un)));

    let dec = decide_order_zero_image(&x, &e, &tol)?;
    r.holds("decide_image.fails_e_in_x", dec.failed_clause.as_deref() == Some("e in X"), Some(json!({ "clause": dec.failed_clause })));

    let sf = scaling_factor(&e, &x, &budget(p), &tol)?;
    r.near("scaling_factor", sf.estimate, 2.0, 1e-9, Some(json!(sf)));

    let s_h = build_bullet(&x, &h, &tol)?;
    r.at_most("mult_is_order_unit.agreement", structure_distance(&s, &s_h), 1e-9, Some(element_to_value(&h)));
    r.artifacts.insert("structure".into(), bullet_export(&s, un.classification));
    Ok(())
}

fn not_uou(r: &mut Report, p: &ScenarioParams) -> Result<()> {
    let tol = p.tol;
    let sizes = p.size.map_or(vec![2, 4, 8], |n| vec![n]);
    let mut values = BTreeMap::new();
    for n in sizes {
        if n == 0 {
            return Err(OzError::Domain("size must be positive".into()));
        }
        let sh = AlgebraShape::diagonal(n);
        let d: Vec<f64> = (0..n).map(|k| 1.0 / ((k + 1) * (k + 1)) as f64).collect();
        let e = diag(&sh, &d);
        let basis = (0..n)
            .map(|k| {
                let mut v = vec![0.0; n];
                v[k] = d[k];
                diag(&sh, &v)
            })
            .collect();
        let x = Subspace::new(&sh, basis, &tol)?;
        let sf = scaling_factor(&e, &x, &budget(p), &tol)?;
        let target = (n * n) as f64;
        r.near(&format!("scaling_factor.N{n}"), sf.estimate, target, 1e-6, Some(json!(sf)));
        values.insert(n.to_string(), json!(sf));
    }
    r.artifacts.insert("scaling_factors".into(), json!(values));
    Ok(())
}

fn bestellung(r: &mut Report, p: &ScenarioParams) -> Result<()> {
    let sts = bestellung_sts::<f64>();
    let mut target = DMatrix::<C<f64>>::zeros(6, 6);
    target[(5, 5)] = C::new(1.0, 0.0);
    let exact = sts == target;
    r.holds("s_star_s.exact", exact, Some(json!(crate::io::matrix_to_json(&sts))));
    let (s0, c) = bestellung_element::<f64>();
    let s = &s0 * C::new(c, 0.0);
    r.near("s.norm", s.singular_values().max(), 1.0, 1e-12, None);

    let mut rng = random::rng(p.seed);
    let mut worst = 0.0f64;
    let mut cp_worst = 0.0f64;
    let count = p.size.unwrap_or(100);
    let m3 = AlgebraShape::matrix(3);
    for _ in 0..count {
        let a = random::complex_gaussian::<f64, _>(&mut rng, 3, 3);
        let w = isometry_witness(&a)?;
        worst = worst.max((w.norm - w.compressed_norm).abs() / w.norm);
        let pv = grassmann::frame_projection(&w.frame);
        let comp = crate::map::LinearMapTable::from_fn(&m3, &m3, |b| E::from_matrix(&pv * b.block(0) * &pv).expect("square"))?;
        cp_worst = cp_worst.max(-choi_matrix(&comp).min_eigenvalue);
    }
    r.at_most("theta.witness_norm_gap", worst, 1e-9, None);
    r.at_most("theta.level1_isometry_defect", worst, 1e-6, None);
    r.at_most("theta.compressions_cp", cp_worst, 1e-10, None);

    let gb = params_grassmann_budget(p);
    let sup = grassmann_sup(&s, &gb)?;
    r.at_most("grassmann_sup.margin", sup.estimate, 1.0 - 0.01, Some(json!(sup)));
    // ‖φ^{(2)}(s)‖ = max(sup_V ‖θ^{(2)}(s)(V)‖, ½‖s‖)
    let phi2 = sup.estimate.max(0.5);
    r.at_least("phi.level2_defect", 1.0 - phi2, 0.01, Some(json!(sup)));
    r.artifacts.insert("grassmann_sup".into(), json!(sup));
    r.artifacts.insert("budget".into(), json!(gb));
    Ok(())
}

fn params_grassmann_budget(p: &ScenarioParams) -> OptimBudget {
    p.budget.map_or_else(|| grassmann::default_budget(p.seed), |b| b.with_seed(p.seed))
}

fn invariance(r: &mut Report, p: &ScenarioParams) -> Result<()> {
    let tol = p.tol;
    let mut rng = random::rng(p.seed);
    let count = p.size.unwrap_or(20);
    let opts = OrderZeroOptions::default();
    let (mut hom, mut all, mut agree) = (0.0f64, 0.0f64, 0.0f64);
    let mut worst_instance = None;
    for _ in 0..count {
        let smp = OrderZeroSample::<f64>::random(&mut rng, &opts, &tol)?;
        let x = &smp.image;
        let e = &smp.h;
        let h = smp.second_unit(&mut rng, 0.2);
        let s_e = build_bullet(x, e, &tol)?;
        let s_h = build_bullet(x, &h, &tol)?;
        let iso = iso_between_units(&s_e, &s_h)?;
        if iso.hom_defect > hom {
            worst_instance = Some(json!({ "X": subspace_to_json(x), "e": element_to_value(e), "h": element_to_value(&h) }));
        }
        hom = hom.max(iso.hom_defect);
        all = all.max(iso.max_defect());
        let s_full = build_bullet(x, &smp.e, &tol)?;
        agree = agree.max(structure_distance(&s_full, &s_e));
    }
    r.at_most("iso.hom_defect", hom, 1e-8, worst_instance.clone());
    r.at_most("iso.max_defect", all, 1e-8, worst_instance);
    r.at_most("mult_is_order_unit.agreement", agree, 1e-9, None);
    Ok(())
}

/// Running maximum with the instance that attains it.
struct Worst {
    value: f64,
    instance: Option<usize>,
}

struct Suite {
    claims: BTreeMap<&'static str, (Worst, &'static str, f64)>,
    order: Vec<&'static str>,
    instances: Vec<Value>,
}

impl Suite {
    fn new() -> Self {
        Self { claims: BTreeMap::new(), order: Vec::new(), instances: Vec::new() }
    }

    /// Tracks `value` for a claim checked as `value <= bound` (or `>=` if
    /// `lower`); the worst case is kept.
    fn track(&mut self, claim: &'static str, value: f64, bound: f64, lower: bool, instance: usize) {
        let entry = self.claims.entry(claim).or_insert_with(|| {
            self.order.push(claim);
            let init = if lower { f64::INFINITY } else { f64::NEG_INFINITY };
            (Worst { value: init, instance: None }, if lower { ">=" } else { "<=" }, bound)
        });
        let worse = if lower { value < entry.0.value } else { value > entry.0.value } || value.is_nan();
        if worse {
            entry.0 = Worst { value, instance: Some(instance) };
        }
    }

    fn finish(self, r: &mut Report) {
        for claim in &self.order {
            let (w, rel, bound) = &self.claims[claim];
            let witness = w.instance.and_then(|i| self.instances.get(i).cloned()).map(|v| json!({ "instance": w.instance, "data": v }));
            if *rel == ">=" {
                r.at_least(claim, w.value, *bound, witness);
            } else {
                r.at_most(claim, w.value, *bound, witness);
            }
        }
    }
}

fn property_suite(r: &mut Report, p: &ScenarioParams) -> Result<()> {
    let tol = p.tol;
    let count = p.size.unwrap_or(20);
    let mut rng = random::rng(p.seed);
    let opts = OrderZeroOptions::default();
    let mut suite = Suite::new();
    let light = OptimBudget::light().with_seed(p.seed);
    let sf_budget = budget(p);
    for i in 0..count {
        let smp = OrderZeroSample::<f64>::random(&mut rng, &opts, &tol)?;
        let x = &smp.image;
        suite.instances.push(json!({ "X": subspace_to_json(x), "e": element_to_value(&smp.e), "theta": map_to_json(&smp.theta) }));
        let s = build_bullet(x, &smp.e, &tol)?;
        let res = s.residuals();
        suite.track("bullet.mult_identity", res.mult_identity, 1e-8, false, i);
        suite.track("bullet.associativity", res.associativity, 1e-8, false, i);
        suite.track("bullet.adjoint_law", res.adjoint_law, 1e-8, false, i);
        suite.track("bullet.cstar_identity", res.cstar_identity, 1e-8, false, i);
        suite.track("bullet.submultiplicativity", res.submultiplicativity, 1e-9, false, i);
        suite.track("bullet.representation_faithful", res.representation_gram_min, tol.rank, true, i);

        let eq = product_equivalences(&s, 16, p.seed ^ i as u64);
        suite.track("bullet.orthogonality_equivalence", eq.orthogonal_residual, 1e-9, false, i);
        suite.track("bullet.commutation_equivalence", eq.commuting_residual, 1e-9, false, i);
        suite.track("bullet.equivalence_mismatches", eq.mismatches as f64, 0.0, false, i);
        suite.track("bullet.xstar_x_positive", eq.positivity_min, -1e-9, true, i);

        for _ in 0..8 {
            let v = random::in_subspace(&mut rng, x);
            let nb = s.bullet_norm(&v)?;
            suite.track("norm.inequality_slack", (nb - v.operator_norm()) / nb, -1e-10, true, i);
            let seq = s.hj_norm_sequence(&v)?;
            let drop = seq.windows(2).map(|w| w[0].1 - w[1].1).fold(f64::NEG_INFINITY, f64::max);
            suite.track("norm.hj_monotone_drop", drop / nb, 1e-12, false, i);
            suite.track("norm.hj_limit_gap", (seq.last().expect("nonempty").1 - nb).abs() / nb, 1e-8, false, i);
        }

        let sf = scaling_factor(&smp.e, x, &sf_budget, &tol)?;
        suite.track("scaling_factor.method_agreement", sf.method_agreement, 0.02, false, i);
        suite.track("scaling_factor.at_least_one", sf.estimate, 1.0 - 1e-9, true, i);

        let phi = phi_diagnostics(&s, &[1, 2], 8, &light)?;
        suite.track("phi.contraction_margin", phi.contraction_margin, 1.0 + 1e-9, false, i);
        suite.track("phi.order_zero_defect", phi.order_zero_defect, 1e-9, false, i);
        let mism: usize = phi.positivity_mismatches.iter().map(|m| m.1).sum();
        suite.track("phi.positivity_mismatches", mism as f64, 0.0, false, i);

        let st = structure_decompose(&smp.theta, &tol)?;
        let hn = smp.h.operator_norm();
        suite.track("structure.h_recovery", (&st.h - &smp.h).operator_norm() / hn, 1e-9, false, i);
        suite.track("structure.pi_hom_defect", st.pi_hom_defect, 1e-9, false, i);
        let oz = is_order_zero(&smp.theta, true, 8, p.seed, &tol);
        suite.track("order_zero.identity_defect", oz.identity_defect.unwrap_or(f64::INFINITY), 1e-10, false, i);
        suite.track("order_zero.kernel_ideal", kernel_ideal_residual(&smp.theta, &tol), 1e-9, false, i);

        let img = image_subspace(&smp.theta, &tol)?;
        let s_img = build_bullet(&img, &smp.h, &tol)?;
        suite.track("order_zero.induced_hom_defect", induced_hom_defect(&smp.theta, &s_img)?, 1e-9, false, i);
        let dec = decide_order_zero_image(&img, &smp.h, &tol)?;
        let (ud, idf) = dec.map.as_ref().map_or((f64::INFINITY, f64::INFINITY), |m| (m.unit_defect, m.image_defect));
        suite.track("decide_image.unit_defect", ud, 1e-9, false, i);
        suite.track("decide_image.image_equality", idf, 1e-8, false, i);

        let (_, un) = unitize(&s)?;
        suite.track("unitize.ideal_residual", un.ideal_residual, 1e-9, false, i);
        suite.track("amplification.r2", amplification_coherence(&s, 2, 2, p.seed ^ i as u64)?, 1e-9, false, i);

        let dom = smp.hom.domain.clone();
        let cod = smp.hom.codomain.clone();
        let kraus = random::kraus_map::<f64, _>(&mut rng, &dom, &cod, 2);
        suite.track("choi.kraus_min_eigenvalue", choi_matrix(&kraus).min_eigenvalue, -1e-10, true, i);
        let tshape = AlgebraShape::new(vec![2, 1])?;
        let tmap = random::transpose_map::<f64, _>(&mut rng, &tshape);
        suite.track("choi.transpose_min_eigenvalue", choi_matrix(&tmap).min_eigenvalue, -0.5, false, i);
    }
    suite.finish(r);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(mut r: Report) -> String {
        r.runtime_seconds = 0.0;
        serde_json::to_string(&r).unwrap()
    }

    #[test]
    fn small_scenarios_pass() {
        for name in ["diagonal-demo", "corner-3x3", "not-uou-truncated"] {
            let r = run_scenario(name, &ScenarioParams::default()).unwrap();
            assert!(r.pass, "{}", r.to_text());
        }
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        assert!(run_scenario("nope", &ScenarioParams::default()).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let p = ScenarioParams { seed: 7, size: Some(3), ..Default::default() };
        let a = strip(run_scenario("invariance", &p).unwrap());
        let b = strip(run_scenario("invariance", &p).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn failures_carry_witnesses() {
        let mut r = Report::new("x", &ScenarioParams::default());
        r.at_most("c", 2.0, 1.0, None);
        assert!(!r.pass && r.artifacts.contains_key("witness/c"));
    }
}
