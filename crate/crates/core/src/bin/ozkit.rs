use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use ozkit::algebra::Tolerances;
use ozkit::bullet::{build_bullet, unitize};
use ozkit::io::{self, bullet_export, element_to_value, map_to_json, subspace_to_json};
use ozkit::optim::OptimBudget;
use ozkit::order_units::{hypotheses_report, scaling_factor};
use ozkit::ozmaps::{choi_matrix, is_order_zero, structure_decompose, OrderZeroVerdict};
use ozkit::scenario::{run_scenario, ScenarioParams};
use ozkit::OzError;

/// Order zero maps and induced C*-structures on self-adjoint subspaces.
#[derive(Parser)]
#[command(name = "ozkit", version)]
struct Cli {
    /// Tolerance preset ("default", "single") or a JSON file of overrides.
    #[arg(long, global = true, default_value = "default")]
    tol: String,
    /// Seed for every randomized search and sampler.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Human-readable output instead of JSON.
    #[arg(long, global = true)]
    text: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every hypothesis on (X, e).
    CheckHypotheses { x: PathBuf, e: PathBuf },
    /// Build the induced product on X.
    Build {
        x: PathBuf,
        e: PathBuf,
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Estimate the scaling factor of e for X.
    ScalingFactor {
        x: PathBuf,
        e: PathBuf,
        #[arg(long)]
        budget: Option<PathBuf>,
    },
    /// Choi matrix, order zero test and structure decomposition of a map.
    MapAnalyze { theta: PathBuf },
    /// Decide whether X is the image of a c.p.c. order zero map with unit image e.
    DecideImage { x: PathBuf, e: PathBuf },
    /// Run a named scenario.
    Scenario {
        name: String,
        #[arg(long)]
        size: Option<usize>,
    },
}

/// A command outcome: the JSON body and whether every verdict passed.
struct Outcome {
    body: Value,
    pass: bool,
    text: Option<String>,
}

fn run(cli: &Cli) -> Result<Outcome, OzError> {
    let tol: Tolerances = io::parse_tolerances(&cli.tol)?;
    let start = Instant::now();
    let mut out = match &cli.command {
        Command::CheckHypotheses { x, e } => {
            let x = io::read_subspace::<f64>(x, &tol)?;
            let e = io::read_element::<f64>(e)?;
            let r = hypotheses_report(&x, &e, &tol)?;
            let body = json!({
                "command": "check-hypotheses",
                "pass": r.flags.buildable(),
                "flags": r.flags,
                "first_failed_clause": r.flags.first_image_failure(),
                "max_commutator": r.max_commutator,
                "support_residual": r.support_residual,
                "product_residual": r.product_residual,
                "equality_residual": r.equality_residual,
                "e_membership_residual": r.e_membership_residual,
                "product_witness": r.product_witness,
                "local_witness": r.local_witness,
            });
            Outcome { pass: r.flags.buildable(), body, text: None }
        }
        Command::Build { x, e, export } => {
            let x = io::read_subspace::<f64>(x, &tol)?;
            let e = io::read_element::<f64>(e)?;
            match build_bullet(&x, &e, &tol) {
                Ok(s) => {
                    let (_, un) = unitize(&s)?;
                    let exported = bullet_export(&s, un.classification);
                    if let Some(path) = export {
                        let text = serde_json::to_string_pretty(&exported).expect("plain data");
                        std::fs::write(path, text).map_err(|err| OzError::Format(format!("{}: {err}", path.display())))?;
                    }
                    let r = s.residuals();
                    let pass = [r.mult_identity, r.associativity, r.adjoint_law, r.cstar_identity].iter().all(|v| *v <= 1e-8)
                        && r.submultiplicativity <= 1e-9;
                    let body = json!({ "command": "build", "pass": pass, "structure": exported, "unitization": un });
                    Outcome { pass, body, text: None }
                }
                Err(err @ (OzError::Hypothesis { .. } | OzError::ProductEscapes { .. })) => {
                    Outcome { pass: false, body: json!({ "command": "build", "pass": false, "error": err.to_string() }), text: None }
                }
                Err(err) => return Err(err),
            }
        }
        Command::ScalingFactor { x, e, budget } => {
            let x = io::read_subspace::<f64>(x, &tol)?;
            let e = io::read_element::<f64>(e)?;
            let b = match budget {
                Some(p) => io::read_budget(p)?,
                None => OptimBudget::default().with_seed(cli.seed),
            };
            let sf = scaling_factor(&e, &x, &b, &tol)?;
            let pass = sf.is_order_unit && sf.method_agreement <= 0.02;
            Outcome { pass, body: json!({ "command": "scaling-factor", "pass": pass, "budget": b, "scaling_factor": sf }), text: None }
        }
        Command::MapAnalyze { theta } => {
            let t = io::read_map::<f64>(theta)?;
            let choi = choi_matrix(&t);
            let oz = is_order_zero(&t, true, 64, cli.seed, &tol);
            let structure = if oz.verdict == OrderZeroVerdict::OrderZero {
                let st = structure_decompose(&t, &tol)?;
                json!({
                    "h": element_to_value(&st.h),
                    "pi": map_to_json(&st.pi),
                    "pi_hom_defect": st.pi_hom_defect,
                    "pi_star_defect": st.pi_star_defect,
                    "commutation_defect": st.commutation_defect,
                    "reconstruction_defect": st.reconstruction_defect,
                })
            } else {
                Value::Null
            };
            let pass = oz.verdict == OrderZeroVerdict::OrderZero;
            let body = json!({
                "command": "map-analyze",
                "pass": pass,
                "choi_min_eigenvalue": choi.min_eigenvalue,
                "choi_hermitian_residual": choi.hermitian_residual,
                "order_zero": oz,
                "structure": structure,
            });
            Outcome { pass, body, text: None }
        }
        Command::DecideImage { x, e } => {
            let x = io::read_subspace::<f64>(x, &tol)?;
            let e = io::read_element::<f64>(e)?;
            let d = ozkit::ozmaps::decide_order_zero_image(&x, &e, &tol)?;
            let map = d.map.as_ref().map(|m| {
                json!({
                    "theta": map_to_json(&m.theta),
                    "domain": subspace_to_json(&m.domain),
                    "domain_unit": element_to_value(&m.domain_unit),
                    "unit_defect": m.unit_defect,
                    "image_defect": m.image_defect,
                    "order_zero_defect": m.order_zero_defect,
                })
            });
            let body = json!({
                "command": "decide-image",
                "pass": d.accepted,
                "accepted": d.accepted,
                "failed_clause": d.failed_clause,
                "flags": d.flags,
                "witness": d.witness.as_ref().map(element_to_value),
                "map": map,
            });
            Outcome { pass: d.accepted, body, text: None }
        }
        Command::Scenario { name, size } => {
            let params = ScenarioParams { seed: cli.seed, size: *size, budget: None, tol };
            let r = run_scenario(name, &params)?;
            let text = r.to_text();
            Outcome { pass: r.pass, body: serde_json::to_value(&r).expect("plain data"), text: Some(text) }
        }
    };
    if let Value::Object(m) = &mut out.body {
        m.entry("runtime_seconds").or_insert(json!(start.elapsed().as_secs_f64()));
    }
    Ok(out)
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, val) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, val, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            out.push_str(&format!("{prefix}: {v}\n"));
        }
        Value::Array(a) => out.push_str(&format!("{prefix}: [{} entries]\n", a.len())),
        other => out.push_str(&format!("{prefix}: {other}\n")),
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("OZKIT_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        // a second initialization only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(&cli) {
        Ok(out) => {
            if cli.text {
                match out.text {
                    Some(t) => print!("{t}"),
                    None => {
                        let mut s = String::new();
                        flatten("", &out.body, &mut s);
                        print!("{s}");
                    }
                }
            } else {
                println!("{}", serde_json::to_string_pretty(&out.body).expect("plain data"));
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("{}", json!({ "error": err.to_string() }));
            ExitCode::from(2)
        }
    }
}
