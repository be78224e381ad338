//! Linear maps between block algebras, stored as matrices in the canonical
//! matrix-unit bases (row-major within each block, blocks concatenated).

use nalgebra::DMatrix;

use crate::algebra::{matrix_entry, matrix_unit_tensor, AlgebraShape, Element};
use crate::error::{OzError, Result};
use crate::scalar::{Real, C};

#[derive(Clone, Debug, PartialEq)]
pub struct LinearMapTable<T: Real> {
    domain: AlgebraShape,
    codomain: AlgebraShape,
    /// `codomain.total_dim() × domain.total_dim()`.
    action: DMatrix<C<T>>,
}

impl<T: Real> LinearMapTable<T> {
    pub fn new(domain: AlgebraShape, codomain: AlgebraShape, action: DMatrix<C<T>>) -> Result<Self> {
        if action.nrows() != codomain.total_dim() || action.ncols() != domain.total_dim() {
            return Err(OzError::Shape(format!(
                "action is {}x{}, expected {}x{}",
                action.nrows(),
                action.ncols(),
                codomain.total_dim(),
                domain.total_dim()
            )));
        }
        Ok(Self { domain, codomain, action })
    }

    /// Tabulates `f` on the matrix units of `domain`.
    pub fn from_fn(domain: &AlgebraShape, codomain: &AlgebraShape, f: impl Fn(&Element<T>) -> Element<T>) -> Result<Self> {
        let n = domain.total_dim();
        let mut action = DMatrix::zeros(codomain.total_dim(), n);
        for idx in 0..n {
            let (k, i, j) = domain.unit_index(idx);
            let img = f(&Element::matrix_unit(domain, k, i, j));
            if img.shape() != codomain {
                return Err(OzError::Shape("map output does not match codomain".into()));
            }
            action.set_column(idx, &img.to_vector());
        }
        Ok(Self { domain: domain.clone(), codomain: codomain.clone(), action })
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let n = shape.total_dim();
        Self { domain: shape.clone(), codomain: shape.clone(), action: DMatrix::identity(n, n) }
    }

    pub fn domain(&self) -> &AlgebraShape {
        &self.domain
    }

    pub fn codomain(&self) -> &AlgebraShape {
        &self.codomain
    }

    pub fn action(&self) -> &DMatrix<C<T>> {
        &self.action
    }

    pub fn apply(&self, a: &Element<T>) -> Result<Element<T>> {
        if a.shape() != &self.domain {
            return Err(OzError::Shape("argument not in the map's domain".into()));
        }
        Element::from_vector(&self.codomain, &(&self.action * a.to_vector()))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearMapTable<T>) -> Result<Self> {
        if other.codomain != self.domain {
            return Err(OzError::Shape("composition shapes do not match".into()));
        }
        Ok(Self { domain: other.domain.clone(), codomain: self.codomain.clone(), action: &self.action * &other.action })
    }

    /// `θ^{(r)}` applied entrywise to an element of `M_r(domain)`.
    pub fn apply_amplified(&self, a: &Element<T>, r: usize) -> Result<Element<T>> {
        let mut out = Element::zeros(&self.codomain.amplified(r)?);
        for k in 0..r {
            for l in 0..r {
                let entry = matrix_entry(a, &self.domain, r, k, l)?;
                let img = self.apply(&entry)?;
                out = &out + &matrix_unit_tensor(&img, r, k, l)?;
            }
        }
        Ok(out)
    }

    /// `max ‖θ(E*) − θ(E)*‖` over matrix units.
    pub fn star_defect(&self) -> T {
        let mut worst = T::zero();
        for idx in 0..self.domain.total_dim() {
            let (k, i, j) = self.domain.unit_index(idx);
            let u = Element::matrix_unit(&self.domain, k, i, j);
            let a = self.apply(&u.adjoint()).expect("domain element");
            let b = self.apply(&u).expect("domain element").adjoint();
            worst = worst.max((&a - &b).operator_norm());
        }
        worst
    }

    /// Matrix-unit basis of the domain.
    pub fn domain_basis(&self) -> Vec<Element<T>> {
        (0..self.domain.total_dim())
            .map(|idx| {
                let (k, i, j) = self.domain.unit_index(idx);
                Element::matrix_unit(&self.domain, k, i, j)
            })
            .collect()
    }
}
