//! Finite-dimensional C*-algebras as direct sums of matrix blocks.
//!
//! An [`AlgebraShape`] lists the block sizes; an [`Element`] holds one dense
//! complex matrix per block. Everything else in the crate computes in here.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{OzError, Result};
use crate::scalar::{cre, Real, C};

/// Numerical tolerances, all relative unless stated otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigen-reconstruction and norm identities.
    pub spectral: f64,
    /// Positivity and self-adjointness checks.
    pub positivity: f64,
    /// Eigenvalues at or below `cutoff * ‖e‖` are treated as kernel.
    pub pinv_cutoff: f64,
    /// Commutator norms relative to `‖e‖‖x‖`.
    pub commutation: f64,
    /// Linear independence threshold for subspace bases.
    pub rank: f64,
    /// Projection residual threshold for subspace membership.
    pub membership: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { spectral: 1e-10, positivity: 1e-9, pinv_cutoff: 1e-12, commutation: 1e-9, rank: 1e-10, membership: 1e-8 }
    }
}

impl Tolerances {
    /// Tolerances suited to `f32` arithmetic.
    pub fn single_precision() -> Self {
        Self { spectral: 1e-4, positivity: 1e-4, pinv_cutoff: 1e-5, commutation: 1e-4, rank: 1e-4, membership: 1e-3 }
    }
}

/// Block sizes of a finite-dimensional C*-algebra `⊕_k M_{n_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct AlgebraShape {
    blocks: Vec<usize>,
}

impl TryFrom<Vec<usize>> for AlgebraShape {
    type Error = OzError;
    fn try_from(blocks: Vec<usize>) -> Result<Self> {
        AlgebraShape::new(blocks)
    }
}

impl From<AlgebraShape> for Vec<usize> {
    fn from(s: AlgebraShape) -> Self {
        s.blocks
    }
}

impl AlgebraShape {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(OzError::Shape("algebra shape needs at least one block".into()));
        }
        if blocks.contains(&0) {
            return Err(OzError::Shape(format!("block sizes must be positive, got {blocks:?}")));
        }
        Ok(Self { blocks })
    }

    /// Single full matrix algebra `M_n`.
    pub fn matrix(n: usize) -> Self {
        Self::new(vec![n]).expect("n >= 1")
    }

    /// The diagonal algebra `C^n` as `n` one-dimensional blocks.
    pub fn diagonal(n: usize) -> Self {
        Self::new(vec![1; n]).expect("n >= 1")
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Complex dimension `Σ n_k²`.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Side length of the full matrix algebra the blocks embed into diagonally.
    pub fn full_size(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Shape of `M_r ⊗ A`: each block `n_k` becomes `r·n_k`.
    pub fn amplified(&self, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(OzError::Domain("amplification level must be at least 1".into()));
        }
        Ok(Self { blocks: self.blocks.iter().map(|n| n * r).collect() })
    }

    /// Offset of each block inside the row-major vectorization.
    pub fn vec_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|n| {
                let o = acc;
                acc += n * n;
                o
            })
            .collect()
    }

    /// `(block, row, col)` of canonical basis index `idx`.
    pub fn unit_index(&self, mut idx: usize) -> (usize, usize, usize) {
        for (k, &n) in self.blocks.iter().enumerate() {
            if idx < n * n {
                return (k, idx / n, idx % n);
            }
            idx -= n * n;
        }
        panic!("basis index out of range for shape {:?}", self.blocks);
    }
}

/// A block-diagonal complex matrix tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct Element<T: Real> {
    shape: AlgebraShape,
    blocks: Vec<DMatrix<C<T>>>,
}

impl<T: Real> Element<T> {
    pub fn from_blocks(shape: AlgebraShape, blocks: Vec<DMatrix<C<T>>>) -> Result<Self> {
        if blocks.len() != shape.num_blocks() {
            return Err(OzError::Shape(format!("expected {} blocks, got {}", shape.num_blocks(), blocks.len())));
        }
        for (k, (b, &n)) in blocks.iter().zip(shape.blocks()).enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(OzError::Shape(format!("block {k} is {}x{}, expected {n}x{n}", b.nrows(), b.ncols())));
            }
            if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(OzError::Shape(format!("block {k} has non-finite entries")));
            }
        }
        Ok(Self { shape, blocks })
    }

    pub fn zeros(shape: &AlgebraShape) -> Self {
        let blocks = shape.blocks().iter().map(|&n| DMatrix::zeros(n, n)).collect();
        Self { shape: shape.clone(), blocks }
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let blocks = shape.blocks().iter().map(|&n| DMatrix::identity(n, n)).collect();
        Self { shape: shape.clone(), blocks }
    }

    /// Matrix unit `e_ij` inside block `k`.
    pub fn matrix_unit(shape: &AlgebraShape, k: usize, i: usize, j: usize) -> Self {
        let mut out = Self::zeros(shape);
        out.blocks[k][(i, j)] = C::new(T::one(), T::zero());
        out
    }

    /// Real diagonal element; `diag` runs through the blocks in order.
    pub fn real_diagonal(shape: &AlgebraShape, diag: &[f64]) -> Result<Self> {
        if diag.len() != shape.full_size() {
            return Err(OzError::Shape(format!("diagonal of length {} does not fit shape {:?}", diag.len(), shape.blocks())));
        }
        let mut out = Self::zeros(shape);
        let mut pos = 0;
        for (k, &n) in shape.blocks().iter().enumerate() {
            for i in 0..n {
                out.blocks[k][(i, i)] = cre(T::lit(diag[pos]));
                pos += 1;
            }
        }
        Ok(out)
    }

    /// Single-block element from a dense matrix.
    pub fn from_matrix(m: DMatrix<C<T>>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(OzError::Shape("matrix must be square and non-empty".into()));
        }
        Self::from_blocks(AlgebraShape::matrix(m.nrows()), vec![m])
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[DMatrix<C<T>>] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &DMatrix<C<T>> {
        &self.blocks[k]
    }

    pub fn map_blocks(&self, mut f: impl FnMut(usize, &DMatrix<C<T>>) -> DMatrix<C<T>>) -> Self {
        let blocks = self.blocks.iter().enumerate().map(|(k, b)| f(k, b)).collect();
        Self { shape: self.shape.clone(), blocks }
    }

    fn zip_blocks(&self, other: &Self, mut f: impl FnMut(&DMatrix<C<T>>, &DMatrix<C<T>>) -> DMatrix<C<T>>) -> Self {
        assert_eq!(self.shape, other.shape, "shape mismatch in element arithmetic");
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        Self { shape: self.shape.clone(), blocks }
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(OzError::Shape(format!("shape {:?} vs {:?}", self.shape.blocks(), other.shape.blocks())));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        self.map_blocks(|_, b| b.adjoint())
    }

    pub fn scale(&self, z: C<T>) -> Self {
        self.map_blocks(|_, b| b * z)
    }

    pub fn scale_real(&self, x: T) -> Self {
        self.scale(cre(x))
    }

    /// `a + λ·b`.
    pub fn axpy(&self, lambda: C<T>, b: &Self) -> Self {
        self.zip_blocks(b, |x, y| x + y * lambda)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Hilbert–Schmidt inner product `tr(a* b)`, antilinear in `self`.
    pub fn hs_inner(&self, other: &Self) -> C<T> {
        assert_eq!(self.shape, other.shape);
        let mut acc = C::new(T::zero(), T::zero());
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            for (x, y) in a.iter().zip(b.iter()) {
                acc += x.conj() * y;
            }
        }
        acc
    }

    pub fn hs_norm(&self) -> T {
        self.blocks.iter().flat_map(|b| b.iter()).fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// Ambient C*-norm: largest singular value over all blocks.
    pub fn operator_norm(&self) -> T {
        self.blocks.iter().map(block_norm).fold(T::zero(), |a, b| a.max(b))
    }

    /// `‖a − a*‖`.
    pub fn self_adjoint_residual(&self) -> T {
        (self - &self.adjoint()).operator_norm()
    }

    /// Self-adjoint part `(a + a*)/2`.
    pub fn real_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(T::lit(0.5))
    }

    /// `(a − a*)/(2i)`.
    pub fn imag_part(&self) -> Self {
        (self - &self.adjoint()).scale(C::new(T::zero(), T::lit(-0.5)))
    }

    /// Row-major vectorization, blocks concatenated.
    pub fn to_vector(&self) -> DVector<C<T>> {
        let mut out = Vec::with_capacity(self.shape.total_dim());
        for b in &self.blocks {
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    out.push(b[(i, j)]);
                }
            }
        }
        DVector::from_vec(out)
    }

    pub fn from_vector(shape: &AlgebraShape, v: &DVector<C<T>>) -> Result<Self> {
        if v.len() != shape.total_dim() {
            return Err(OzError::Shape(format!("vector of length {} does not fit shape {:?}", v.len(), shape.blocks())));
        }
        let mut pos = 0;
        let mut blocks = Vec::with_capacity(shape.num_blocks());
        for &n in shape.blocks() {
            blocks.push(DMatrix::from_fn(n, n, |i, j| v[pos + i * n + j]));
            pos += n * n;
        }
        Self::from_blocks(shape.clone(), blocks)
    }

    /// Block-diagonal embedding into the full matrix algebra `M_{Σ n_k}`.
    pub fn to_full(&self) -> DMatrix<C<T>> {
        let n = self.shape.full_size();
        let mut out = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            let m = b.nrows();
            out.view_mut((off, off), (m, m)).copy_from(b);
            off += m;
        }
        out
    }

    /// Compresses a full matrix back onto the block diagonal.
    pub fn from_full_masked(shape: &AlgebraShape, m: &DMatrix<C<T>>) -> Self {
        let mut off = 0;
        let mut blocks = Vec::with_capacity(shape.num_blocks());
        for &n in shape.blocks() {
            blocks.push(m.view((off, off), (n, n)).into_owned());
            off += n;
        }
        Self { shape: shape.clone(), blocks }
    }

    /// True when every block is diagonal up to `tol` (absolute).
    pub fn is_diagonal(&self, tol: T) -> bool {
        self.blocks.iter().all(|b| (0..b.nrows()).all(|i| (0..b.ncols()).all(|j| i == j || b[(i, j)].norm_sqr().sqrt() <= tol)))
    }

    /// Diagonal entries across blocks.
    pub fn diagonal_entries(&self) -> Vec<C<T>> {
        self.blocks.iter().flat_map(|b| (0..b.nrows()).map(|i| b[(i, i)]).collect::<Vec<_>>()).collect()
    }
}

impl<T: Real> Add for &Element<T> {
    type Output = Element<T>;
    fn add(self, rhs: Self) -> Element<T> {
        self.zip_blocks(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &Element<T> {
    type Output = Element<T>;
    fn sub(self, rhs: Self) -> Element<T> {
        self.zip_blocks(rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul for &Element<T> {
    type Output = Element<T>;
    fn mul(self, rhs: Self) -> Element<T> {
        self.zip_blocks(rhs, |a, b| a * b)
    }
}

impl<T: Real> Neg for &Element<T> {
    type Output = Element<T>;
    fn neg(self) -> Element<T> {
        self.map_blocks(|_, b| -b)
    }
}

pub(crate) fn block_norm<T: Real>(b: &DMatrix<C<T>>) -> T {
    if b.is_empty() {
        return T::zero();
    }
    b.clone().svd(false, false).singular_values.max()
}

/// Eigendecomposition of a self-adjoint element, block by block.
#[derive(Clone, Debug)]
pub struct SpectralData<T: Real> {
    /// Ascending eigenvalues per block.
    pub eigenvalues: Vec<Vec<T>>,
    /// Unitary eigenvector matrices per block, columns matching `eigenvalues`.
    pub eigenvectors: Vec<DMatrix<C<T>>>,
    pub shape: AlgebraShape,
}

pub(crate) fn eigh_block<T: Real>(b: &DMatrix<C<T>>) -> (Vec<T>, DMatrix<C<T>>) {
    let n = b.nrows();
    let herm = (b + b.adjoint()) * cre(T::lit(0.5));
    let eig = herm.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).expect("finite eigenvalues"));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

impl<T: Real> SpectralData<T> {
    /// Diagonalizes the self-adjoint part of `a`.
    pub fn of(a: &Element<T>) -> Self {
        let (eigenvalues, eigenvectors) = a.blocks().iter().map(eigh_block).unzip();
        Self { eigenvalues, eigenvectors, shape: a.shape().clone() }
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues.iter().flatten().copied().fold(T::max_value().unwrap(), |a, b| a.min(b))
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues.iter().flatten().copied().fold(T::min_value().unwrap(), |a, b| a.max(b))
    }

    /// `U f(Λ) U*` per block.
    pub fn apply(&self, mut f: impl FnMut(T) -> T) -> Element<T> {
        let blocks = self
            .eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(vals, u)| {
                let mut scaled = u.clone();
                for (c, &v) in vals.iter().enumerate() {
                    let fv = cre(f(v));
                    for r in 0..scaled.nrows() {
                        scaled[(r, c)] *= fv;
                    }
                }
                &scaled * u.adjoint()
            })
            .collect();
        Element { shape: self.shape.clone(), blocks }
    }

    pub fn reconstruct(&self) -> Element<T> {
        self.apply(|t| t)
    }
}

/// Ambient operator norm.
pub fn operator_norm<T: Real>(a: &Element<T>) -> T {
    a.operator_norm()
}

/// Self-adjoint and spectrum above `−tol·max(1, ‖a‖)`, with the same
/// allowance for the skew part.
pub fn is_positive<T: Real>(a: &Element<T>, tol: f64) -> bool {
    let tol = T::lit(tol);
    let norm = a.operator_norm();
    if a.self_adjoint_residual() > tol * norm.max(T::one()) {
        return false;
    }
    SpectralData::of(a).min_eigenvalue() >= -tol * norm.max(T::one())
}

fn check_positive<T: Real>(e: &Element<T>, tol: f64) -> Result<SpectralData<T>> {
    let t = T::lit(tol);
    let norm = e.operator_norm();
    let sa = e.self_adjoint_residual();
    if sa > t * norm.max(T::one()) {
        return Err(OzError::Domain(format!("element is not self-adjoint (residual {:.3e})", sa.as_f64())));
    }
    let spec = SpectralData::of(e);
    let min = spec.min_eigenvalue();
    if min < -t * norm.max(T::one()) {
        return Err(OzError::Domain(format!("element is not positive (min eigenvalue {:.3e})", min.as_f64())));
    }
    Ok(spec)
}

/// The approximate inverse `h_j` of the identity on `[0, 1]`.
pub fn hj<T: Real>(j: usize, t: T) -> T {
    let jt = T::from_usize(j).expect("j fits");
    if t <= T::one() / jt {
        jt * jt * t
    } else {
        T::one() / t
    }
}

/// Applies `h_j` spectrally to a positive contraction.
pub fn funcalc_hj<T: Real>(e: &Element<T>, j: usize, tol: f64) -> Result<Element<T>> {
    if j == 0 {
        return Err(OzError::Domain("h_j needs j >= 1".into()));
    }
    let spec = check_positive(e, tol)?;
    let t = T::lit(tol);
    if spec.max_eigenvalue() > T::one() + t {
        return Err(OzError::Domain(format!("eigenvalue {:.6} outside [0, 1]", spec.max_eigenvalue().as_f64())));
    }
    Ok(spec.apply(|v| hj(j, v.max(T::zero()).min(T::one()))))
}

/// Moore–Penrose inverse of a positive element; eigenvalues at or below
/// `cutoff·‖e‖` count as kernel.
pub fn pseudo_inverse<T: Real>(e: &Element<T>, cutoff: f64, tol: f64) -> Result<Element<T>> {
    let spec = check_positive(e, tol)?;
    let thr = T::lit(cutoff) * e.operator_norm();
    Ok(spec.apply(|v| if v > thr { T::one() / v } else { T::zero() }))
}

/// Spectral projection onto eigenvalues above `cutoff·‖e‖`.
pub fn support_projection<T: Real>(e: &Element<T>, cutoff: f64, tol: f64) -> Result<Element<T>> {
    let spec = check_positive(e, tol)?;
    let thr = T::lit(cutoff) * e.operator_norm();
    Ok(spec.apply(|v| if v > thr { T::one() } else { T::zero() }))
}

/// Positive square root of a positive element.
pub fn sqrt_positive<T: Real>(e: &Element<T>, tol: f64) -> Result<Element<T>> {
    let spec = check_positive(e, tol)?;
    Ok(spec.apply(|v| v.max(T::zero()).sqrt()))
}

/// Places `tile` at grid position `(k, l)` of an `r×r` grid of `n×n` tiles.
pub(crate) fn tile_block<T: Real>(r: usize, k: usize, l: usize, tile: &DMatrix<C<T>>) -> DMatrix<C<T>> {
    let n = tile.nrows();
    let mut out = DMatrix::zeros(r * n, r * n);
    out.view_mut((k * n, l * n), (n, n)).copy_from(tile);
    out
}

/// `1_{M_r} ⊗ a`: block `n_k` becomes an `r×r` grid of `n_k×n_k` tiles with
/// `a_k` on the diagonal tiles.
pub fn amplify<T: Real>(a: &Element<T>, r: usize) -> Result<Element<T>> {
    let shape = a.shape().amplified(r)?;
    let blocks = a
        .blocks()
        .iter()
        .map(|b| {
            let n = b.nrows();
            let mut out = DMatrix::zeros(r * n, r * n);
            for k in 0..r {
                out.view_mut((k * n, k * n), (n, n)).copy_from(b);
            }
            out
        })
        .collect();
    Ok(Element { shape, blocks })
}

/// `E_kl ⊗ a` in the amplified shape.
pub fn matrix_unit_tensor<T: Real>(a: &Element<T>, r: usize, k: usize, l: usize) -> Result<Element<T>> {
    let shape = a.shape().amplified(r)?;
    if k >= r || l >= r {
        return Err(OzError::Domain(format!("matrix unit ({k},{l}) outside M_{r}")));
    }
    let blocks = a.blocks().iter().map(|b| tile_block(r, k, l, b)).collect();
    Ok(Element { shape, blocks })
}

/// Entry `(k, l)` of an element of `M_r(A)`, read back as an element of `A`.
pub fn matrix_entry<T: Real>(a: &Element<T>, base: &AlgebraShape, r: usize, k: usize, l: usize) -> Result<Element<T>> {
    if a.shape() != &base.amplified(r)? {
        return Err(OzError::Shape("element is not in the amplified shape".into()));
    }
    let blocks = a.blocks().iter().zip(base.blocks()).map(|(b, &n)| b.view((k * n, l * n), (n, n)).into_owned()).collect();
    Ok(Element { shape: base.clone(), blocks })
}

/// One common eigenvector of a commuting pair.
#[derive(Clone, Debug)]
pub struct JointEigenpair<T: Real> {
    pub block: usize,
    /// Eigenvalue of the order unit.
    pub s: T,
    /// Eigenvalue of the second element.
    pub t: T,
    pub vector: DVector<C<T>>,
}

/// Simultaneous diagonalization of a commuting pair `(e, x)`.
#[derive(Clone, Debug)]
pub struct JointSpectrum<T: Real> {
    pub shape: AlgebraShape,
    pub pairs: Vec<JointEigenpair<T>>,
}

impl<T: Real> JointSpectrum<T> {
    pub fn values(&self) -> Vec<(T, T)> {
        self.pairs.iter().map(|p| (p.s, p.t)).collect()
    }

    fn sum_with(&self, pick: impl Fn(&JointEigenpair<T>) -> T) -> Element<T> {
        let mut blocks: Vec<DMatrix<C<T>>> = self.shape.blocks().iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for p in &self.pairs {
            blocks[p.block] += &p.vector * p.vector.adjoint() * cre(pick(p));
        }
        Element { shape: self.shape.clone(), blocks }
    }

    /// `Σ s_i P_i`.
    pub fn reconstruct_first(&self) -> Element<T> {
        self.sum_with(|p| p.s)
    }

    /// `Σ t_i P_i`.
    pub fn reconstruct_second(&self) -> Element<T> {
        self.sum_with(|p| p.t)
    }
}

/// Diagonalizes `e`, then diagonalizes `x` inside each eigenspace of `e`.
pub fn joint_spectrum<T: Real>(e: &Element<T>, x: &Element<T>, tol: &Tolerances) -> Result<JointSpectrum<T>> {
    e.check_same_shape(x)?;
    let en = e.operator_norm();
    let xn = x.operator_norm();
    let comm = e.commutator(x).operator_norm();
    if comm > T::lit(tol.commutation) * en.max(T::one()) * xn.max(T::one()) {
        return Err(OzError::Commutation { norm: comm.as_f64() });
    }
    if x.self_adjoint_residual() > T::lit(tol.positivity) * xn.max(T::one()) {
        return Err(OzError::Domain("second element of a joint spectrum must be self-adjoint".into()));
    }
    let gap = T::lit(1e-7) * en.max(T::one());
    let mut pairs = Vec::new();
    for (k, (eb, xb)) in e.blocks().iter().zip(x.blocks()).enumerate() {
        let (vals, vecs) = eigh_block(eb);
        let n = vals.len();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && vals[end] - vals[end - 1] <= gap {
                end += 1;
            }
            let q = vecs.columns(start, end - start).into_owned();
            let s = vals[start..end].iter().fold(T::zero(), |a, &b| a + b) / T::from_usize(end - start).unwrap();
            let compressed = q.adjoint() * xb * &q;
            let (tv, tw) = eigh_block(&compressed);
            for (c, &t) in tv.iter().enumerate() {
                pairs.push(JointEigenpair { block: k, s, t, vector: &q * tw.column(c) });
            }
            start = end;
        }
    }
    Ok(JointSpectrum { shape: e.shape().clone(), pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    type E = Element<f64>;

    fn diag(d: &[f64]) -> E {
        E::real_diagonal(&AlgebraShape::matrix(d.len()), d).unwrap()
    }

    fn close(a: &E, b: &E, tol: f64) -> bool {
        (a - b).operator_norm() <= tol
    }

    #[test]
    fn shape_validation() {
        assert!(AlgebraShape::new(vec![]).is_err());
        assert!(AlgebraShape::new(vec![2, 0]).is_err());
        let s = AlgebraShape::new(vec![1, 2, 3]).unwrap();
        assert_eq!(s.total_dim(), 14);
        assert_eq!(s.full_size(), 6);
        assert_eq!(s.unit_index(5), (2, 0, 0));
    }

    #[test]
    fn malformed_blocks_rejected() {
        let s = AlgebraShape::new(vec![2]).unwrap();
        assert!(E::from_blocks(s.clone(), vec![DMatrix::zeros(3, 3)]).is_err());
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = C::new(f64::NAN, 0.0);
        assert!(E::from_blocks(s, vec![m]).is_err());
    }

    #[test]
    fn norm_examples() {
        let a = E::real_diagonal(&AlgebraShape::diagonal(2), &[3.0, -4.0]).unwrap();
        assert!((a.operator_norm() - 4.0).abs() < 1e-12);
        assert_eq!(E::zeros(&AlgebraShape::matrix(3)).operator_norm(), 0.0);
    }

    #[test]
    fn positivity_examples() {
        let p = E::real_diagonal(&AlgebraShape::matrix(3), &[0.0, 0.0, 1.0]).unwrap();
        assert!(is_positive(&p, 1e-9));
        assert!(is_positive(&diag(&[1.0, -1e-15]), 1e-12));
        let n = E::matrix_unit(&AlgebraShape::matrix(2), 0, 0, 1);
        assert!(!is_positive(&n, 1e-9));
        assert!(!is_positive(&diag(&[1.0, -0.1]), 1e-9));
    }

    #[test]
    fn hj_examples() {
        let h = funcalc_hj(&diag(&[1.0, 0.25]), 2, 1e-9).unwrap();
        assert!(close(&h, &diag(&[1.0, 1.0]), 1e-12));
        let h = funcalc_hj(&diag(&[1.0, 0.25, 0.1]), 4, 1e-9).unwrap();
        assert!(close(&h, &diag(&[1.0, 4.0, 1.6]), 1e-12));
        let z = E::zeros(&AlgebraShape::matrix(2));
        for j in 1..6 {
            assert_eq!(funcalc_hj(&z, j, 1e-9).unwrap().operator_norm(), 0.0);
        }
        assert!(funcalc_hj(&diag(&[1.5, 0.0]), 2, 1e-9).is_err());
        assert!(funcalc_hj(&diag(&[-0.5, 0.0]), 2, 1e-9).is_err());
    }

    #[test]
    fn pinv_and_support_examples() {
        let e = diag(&[1.0, 0.5, 0.0]);
        assert!(close(&pseudo_inverse(&e, 1e-12, 1e-9).unwrap(), &diag(&[1.0, 2.0, 0.0]), 1e-12));
        assert!(close(&support_projection(&e, 1e-12, 1e-9).unwrap(), &diag(&[1.0, 1.0, 0.0]), 1e-12));
        let id = E::identity(&AlgebraShape::new(vec![2, 1]).unwrap());
        assert!(close(&pseudo_inverse(&id, 1e-12, 1e-9).unwrap(), &id, 1e-12));
        let tiny = diag(&[1.0, 1e-15]);
        assert!(close(&pseudo_inverse(&tiny, 1e-12, 1e-9).unwrap(), &diag(&[1.0, 0.0]), 1e-12));
        let z = E::zeros(&AlgebraShape::matrix(2));
        assert_eq!(support_projection(&z, 1e-12, 1e-9).unwrap().operator_norm(), 0.0);
        assert!(pseudo_inverse(&diag(&[1.0, -1.0]), 1e-12, 1e-9).is_err());
    }

    #[test]
    fn rank_one_projection_support() {
        let h = 0.5f64.sqrt();
        let v = DVector::from_vec(vec![cre(h), cre(h)]);
        let p = E::from_matrix(&v * v.adjoint()).unwrap();
        assert!(close(&support_projection(&p, 1e-12, 1e-9).unwrap(), &p, 1e-12));
    }

    #[test]
    fn amplify_examples() {
        let a = diag(&[1.0, 0.5]);
        let amp = amplify(&a, 2).unwrap();
        assert!(close(&amp, &diag(&[1.0, 0.5, 1.0, 0.5]), 0.0));
        assert!(amplify(&a, 0).is_err());
        let z = E::zeros(&AlgebraShape::new(vec![1, 2]).unwrap());
        assert_eq!(amplify(&z, 3).unwrap().operator_norm(), 0.0);
    }

    #[test]
    fn matrix_entry_roundtrip() {
        let a = diag(&[1.0, 2.0]);
        let t = matrix_unit_tensor(&a, 3, 1, 2).unwrap();
        let back = matrix_entry(&t, a.shape(), 3, 1, 2).unwrap();
        assert!(close(&back, &a, 0.0));
        assert_eq!(matrix_entry(&t, a.shape(), 3, 0, 0).unwrap().operator_norm(), 0.0);
    }

    #[test]
    fn joint_spectrum_examples() {
        let tol = Tolerances::default();
        let js = joint_spectrum(&diag(&[1.0, 0.5]), &diag(&[3.0, -1.0]), &tol).unwrap();
        let mut v = js.values();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((v[0].0 - 0.5).abs() < 1e-12 && (v[0].1 + 1.0).abs() < 1e-12);
        assert!((v[1].0 - 1.0).abs() < 1e-12 && (v[1].1 - 3.0).abs() < 1e-12);

        let e = diag(&[0.3, 0.9, 0.6]);
        for (s, t) in joint_spectrum(&e, &e, &tol).unwrap().values() {
            assert!((s - t).abs() < 1e-12);
        }

        let m = DMatrix::from_row_slice(2, 2, &[cre(3.5), cre(1.5), cre(1.5), cre(3.5)]);
        let x = E::from_matrix(m).unwrap();
        let js = joint_spectrum(&E::identity(x.shape()), &x, &tol).unwrap();
        let mut ts: Vec<f64> = js.values().iter().map(|p| p.1).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ts[0] - 2.0).abs() < 1e-12 && (ts[1] - 5.0).abs() < 1e-12);
        assert!(close(&js.reconstruct_second(), &x, 1e-12));
    }

    #[test]
    fn joint_spectrum_rejects_noncommuting() {
        let e = diag(&[1.0, 0.0]);
        let x = &E::matrix_unit(e.shape(), 0, 0, 1) + &E::matrix_unit(e.shape(), 0, 1, 0);
        match joint_spectrum(&e, &x, &Tolerances::default()) {
            Err(OzError::Commutation { norm }) => assert!((norm - 1.0).abs() < 1e-12),
            other => panic!("expected commutation error, got {other:?}"),
        }
    }

    #[test]
    fn generic_over_f32() {
        let e = Element::<f32>::real_diagonal(&AlgebraShape::matrix(2), &[1.0, 0.5]).unwrap();
        let p = pseudo_inverse(&e, 1e-5, 1e-4).unwrap();
        assert!((p.operator_norm() - 2.0).abs() < 1e-5);
        let h = funcalc_hj(&e, 4, 1e-4).unwrap();
        assert!((h.operator_norm() - 2.0).abs() < 1e-5);
    }
}
