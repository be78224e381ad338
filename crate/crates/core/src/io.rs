//! JSON wire formats. Complex numbers are `[re, im]` pairs and matrices are
//! row-major lists of rows.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{AlgebraShape, Element, Tolerances};
use crate::bullet::{BulletStructure, Unitization};
use crate::error::{OzError, Result};
use crate::map::LinearMapTable;
use crate::optim::OptimBudget;
use crate::scalar::{Real, C};
use crate::subspace::Subspace;

pub const BASIS_CONVENTION: &str = "matrix-units-row-major";

type Pair = [f64; 2];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementJson {
    pub shape: Vec<usize>,
    pub blocks: Vec<Vec<Vec<Pair>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubspaceJson {
    pub shape: Vec<usize>,
    pub basis: Vec<ElementJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapJson {
    pub domain: Vec<usize>,
    pub codomain: Vec<usize>,
    pub action: Vec<Vec<Pair>>,
    #[serde(default = "default_convention")]
    pub basis_convention: String,
}

fn default_convention() -> String {
    BASIS_CONVENTION.to_string()
}

fn pair<T: Real>(z: &C<T>) -> Pair {
    [z.re.as_f64(), z.im.as_f64()]
}

fn unpair<T: Real>(p: &Pair) -> C<T> {
    C::new(T::lit(p[0]), T::lit(p[1]))
}

pub fn matrix_to_json<T: Real>(m: &DMatrix<C<T>>) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect()).collect()
}

pub fn matrix_from_json<T: Real>(rows: &[Vec<Pair>]) -> Result<DMatrix<C<T>>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(OzError::Format("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| unpair(&rows[i][j])))
}

impl ElementJson {
    pub fn from_element<T: Real>(a: &Element<T>) -> Self {
        Self { shape: a.shape().blocks().to_vec(), blocks: a.blocks().iter().map(matrix_to_json).collect() }
    }

    pub fn to_element<T: Real>(&self) -> Result<Element<T>> {
        let shape = AlgebraShape::new(self.shape.clone())?;
        let blocks = self.blocks.iter().map(|b| matrix_from_json(b)).collect::<Result<Vec<_>>>()?;
        Element::from_blocks(shape, blocks)
    }
}

pub fn element_to_value<T: Real>(a: &Element<T>) -> Value {
    serde_json::to_value(ElementJson::from_element(a)).expect("plain data")
}

pub fn subspace_to_json<T: Real>(x: &Subspace<T>) -> SubspaceJson {
    SubspaceJson { shape: x.shape().blocks().to_vec(), basis: x.basis().iter().map(ElementJson::from_element).collect() }
}

pub fn subspace_from_json<T: Real>(s: &SubspaceJson, tol: &Tolerances) -> Result<Subspace<T>> {
    let shape = AlgebraShape::new(s.shape.clone())?;
    let basis = s.basis.iter().map(|b| b.to_element()).collect::<Result<Vec<_>>>()?;
    Subspace::new(&shape, basis, tol)
}

pub fn map_to_json<T: Real>(m: &LinearMapTable<T>) -> MapJson {
    MapJson {
        domain: m.domain().blocks().to_vec(),
        codomain: m.codomain().blocks().to_vec(),
        action: matrix_to_json(m.action()),
        basis_convention: default_convention(),
    }
}

pub fn map_from_json<T: Real>(m: &MapJson) -> Result<LinearMapTable<T>> {
    if m.basis_convention != BASIS_CONVENTION {
        return Err(OzError::Format(format!("unsupported basis convention {:?}", m.basis_convention)));
    }
    LinearMapTable::new(AlgebraShape::new(m.domain.clone())?, AlgebraShape::new(m.codomain.clone())?, matrix_from_json(&m.action)?)
}

/// Product table as parallel real and imaginary arrays indexed `[i][j][k]`.
pub fn bullet_export<T: Real>(s: &BulletStructure<T>, classification: Unitization) -> Value {
    let table = s.product_table();
    let part = |f: fn(&C<T>) -> f64| -> Vec<Vec<Vec<f64>>> {
        table.iter().map(|row| row.iter().map(|c| c.iter().map(f).collect()).collect()).collect()
    };
    json!({
        "dim": s.dim(),
        "basis": subspace_to_json(&orthonormal_view(s.subspace())).basis,
        "product_table": {
            "real": part(|z| z.re.as_f64()),
            "imag": part(|z| z.im.as_f64()),
        },
        "residuals": s.residuals(),
        "unit": s.unit().map(element_to_value),
        "classification": classification.as_str(),
    })
}

/// The orthonormal basis in which product tables are expressed.
fn orthonormal_view<T: Real>(x: &Subspace<T>) -> Subspace<T> {
    Subspace::new_unchecked(x.shape(), x.ortho_basis().to_vec(), &Tolerances::default())
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    let text = std::fs::read_to_string(path).map_err(|e| OzError::Format(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| OzError::Format(format!("{}: {e}", path.display())))
}

pub fn read_element<T: Real>(path: &Path) -> Result<Element<T>> {
    read_json::<ElementJson>(path)?.to_element()
}

pub fn read_subspace<T: Real>(path: &Path, tol: &Tolerances) -> Result<Subspace<T>> {
    subspace_from_json(&read_json(path)?, tol)
}

pub fn read_map<T: Real>(path: &Path) -> Result<LinearMapTable<T>> {
    map_from_json(&read_json(path)?)
}

pub fn read_budget(path: &Path) -> Result<OptimBudget> {
    read_json(path)
}

/// A preset name (`default` or `single`) or the path of a JSON object of overrides.
pub fn parse_tolerances(spec: &str) -> Result<Tolerances> {
    match spec {
        "default" | "double" => Ok(Tolerances::default()),
        "single" => Ok(Tolerances::single_precision()),
        path => {
            let value: Value = read_json(Path::new(path))?;
            let mut base = serde_json::to_value(Tolerances::default()).expect("plain data");
            let (Value::Object(b), Value::Object(o)) = (&mut base, value) else {
                return Err(OzError::Format("tolerance file must hold a JSON object".into()));
            };
            for (k, v) in o {
                if !b.contains_key(&k) {
                    return Err(OzError::Format(format!("unknown tolerance field {k:?}")));
                }
                b.insert(k, v);
            }
            serde_json::from_value(base).map_err(|e| OzError::Format(e.to_string()))
        }
    }
}
