//! Seeded generators for random elements, *-homomorphisms and order zero maps.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraShape, Element, Tolerances};
use crate::error::Result;
use crate::map::LinearMapTable;
use crate::scalar::{cre, Real, C};
use crate::subspace::Subspace;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_gaussian<T: Real, R: Rng>(rng: &mut R, n: usize, m: usize) -> DMatrix<C<T>> {
    DMatrix::from_fn(n, m, |_, _| C::new(T::lit(gauss(rng)), T::lit(gauss(rng))))
}

/// Haar-like unitary from the QR factor of a complex Gaussian matrix.
pub fn unitary<T: Real, R: Rng>(rng: &mut R, n: usize) -> DMatrix<C<T>> {
    let g = complex_gaussian::<T, R>(rng, n, n);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.clone();
    for c in 0..n {
        let d = r[(c, c)];
        let m = d.norm_sqr().sqrt();
        if m > T::zero() {
            let phase = d / cre(m);
            for i in 0..n {
                out[(i, c)] *= phase;
            }
        }
    }
    out
}

/// Hermitian matrix with the given eigenvalues in a random eigenbasis.
pub fn hermitian_with_spectrum<T: Real, R: Rng>(rng: &mut R, eigenvalues: &[f64]) -> DMatrix<C<T>> {
    let n = eigenvalues.len();
    let u = unitary::<T, R>(rng, n);
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { cre(T::lit(eigenvalues[i])) } else { C::new(T::zero(), T::zero()) });
    &u * d * u.adjoint()
}

pub fn element<T: Real, R: Rng>(rng: &mut R, shape: &AlgebraShape) -> Element<T> {
    let blocks = shape.blocks().iter().map(|&n| complex_gaussian::<T, R>(rng, n, n)).collect();
    Element::from_blocks(shape.clone(), blocks).expect("finite gaussian entries")
}

pub fn self_adjoint<T: Real, R: Rng>(rng: &mut R, shape: &AlgebraShape) -> Element<T> {
    element::<T, R>(rng, shape).real_part()
}

/// Random element of `X` with Gaussian coordinates in the orthonormal basis.
pub fn in_subspace<T: Real, R: Rng>(rng: &mut R, x: &Subspace<T>) -> Element<T> {
    let coords: Vec<C<T>> = (0..x.dim()).map(|_| C::new(T::lit(gauss(rng)), T::lit(gauss(rng)))).collect();
    x.from_coordinates(&coords)
}

pub fn self_adjoint_in_subspace<T: Real, R: Rng>(rng: &mut R, x: &Subspace<T>) -> Element<T> {
    in_subspace(rng, x).real_part()
}

/// A *-homomorphism `π: ⊕ M_{m_j} → ⊕ M_{n_k}` given by multiplicities
/// `μ_jk` and block unitaries: `π(a)_k = U_k (⊕_j a_j ⊗ 1_{μ_jk} ⊕ 0) U_k*`.
#[derive(Clone, Debug)]
pub struct StarHom<T: Real> {
    pub domain: AlgebraShape,
    pub codomain: AlgebraShape,
    /// `multiplicity[k][j]`.
    pub multiplicity: Vec<Vec<usize>>,
    pub unitaries: Vec<DMatrix<C<T>>>,
}

fn kron<T: Real>(a: &DMatrix<C<T>>, b: &DMatrix<C<T>>) -> DMatrix<C<T>> {
    a.kronecker(b)
}

impl<T: Real> StarHom<T> {
    pub fn random<R: Rng>(rng: &mut R, domain: &AlgebraShape, codomain: &AlgebraShape) -> Self {
        let mut multiplicity = Vec::new();
        for &n in codomain.blocks() {
            let mut row = vec![0; domain.num_blocks()];
            let mut remaining = n;
            let mut order: Vec<usize> = (0..domain.num_blocks()).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            for j in order {
                let m = domain.blocks()[j];
                let max = remaining / m;
                let mu = if max == 0 { 0 } else { rng.random_range(0..=max) };
                row[j] = mu;
                remaining -= mu * m;
            }
            multiplicity.push(row);
        }
        let unitaries = codomain.blocks().iter().map(|&n| unitary::<T, R>(rng, n)).collect();
        Self { domain: domain.clone(), codomain: codomain.clone(), multiplicity, unitaries }
    }

    /// Domain blocks sent to zero.
    pub fn kernel_blocks(&self) -> Vec<usize> {
        (0..self.domain.num_blocks()).filter(|&j| self.multiplicity.iter().all(|row| row[j] == 0)).collect()
    }

    /// `U_k (⊕_j kron(f_j, g_jk) ⊕ tail_k) U_k*` for caller-supplied tiles.
    fn assemble(
        &self,
        mut tile: impl FnMut(usize, usize) -> DMatrix<C<T>>,
        mut tail: impl FnMut(usize, usize) -> DMatrix<C<T>>,
    ) -> Element<T> {
        let blocks = self
            .codomain
            .blocks()
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let mut m = DMatrix::zeros(n, n);
                let mut off = 0;
                for j in 0..self.domain.num_blocks() {
                    if self.multiplicity[k][j] == 0 {
                        continue;
                    }
                    let t = tile(j, k);
                    let s = t.nrows();
                    m.view_mut((off, off), (s, s)).copy_from(&t);
                    off += s;
                }
                if off < n {
                    let t = tail(k, n - off);
                    m.view_mut((off, off), (n - off, n - off)).copy_from(&t);
                }
                let u = &self.unitaries[k];
                u * m * u.adjoint()
            })
            .collect();
        Element::from_blocks(self.codomain.clone(), blocks).expect("assembled shape")
    }

    pub fn apply(&self, a: &Element<T>) -> Element<T> {
        self.assemble(
            |j, k| kron(a.block(j), &DMatrix::identity(self.multiplicity[k][j], self.multiplicity[k][j])),
            |_, s| DMatrix::zeros(s, s),
        )
    }

    pub fn table(&self) -> LinearMapTable<T> {
        LinearMapTable::from_fn(&self.domain, &self.codomain, |a| self.apply(a)).expect("hom shapes")
    }
}

/// An order zero map `θ(a) = h·π(a)` with `h` positive in `π(A)′`, plus an
/// order unit `e = θ(1) + d` where `d ≥ 0` lives off the range of `π(1)`.
#[derive(Clone, Debug)]
pub struct OrderZeroSample<T: Real> {
    pub hom: StarHom<T>,
    /// `h·π(1)`, the part of `h` that `θ` sees.
    pub h: Element<T>,
    /// `‖h‖ = 1` unless the whole map vanishes.
    pub theta: LinearMapTable<T>,
    pub e: Element<T>,
    pub complement: Element<T>,
    pub image: Subspace<T>,
}

#[derive(Clone, Debug)]
pub struct OrderZeroOptions {
    pub codomains: Vec<Vec<usize>>,
    pub max_image_dim: usize,
    /// Smallest eigenvalue of `h` on the range of `π(1)`.
    pub min_eigenvalue: f64,
    /// Probability of a nonzero complement part `d`.
    pub complement_probability: f64,
    pub allow_kernel: bool,
}

impl Default for OrderZeroOptions {
    fn default() -> Self {
        Self {
            codomains: vec![vec![2], vec![3], vec![1, 2], vec![2, 2], vec![1, 1, 2]],
            max_image_dim: 6,
            min_eigenvalue: 0.05,
            complement_probability: 0.5,
            allow_kernel: true,
        }
    }
}

fn spectrum<R: Rng>(rng: &mut R, n: usize, lo: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..=1.0)).collect()
}

impl<T: Real> OrderZeroSample<T> {
    pub fn random<R: Rng>(rng: &mut R, opts: &OrderZeroOptions, tol: &Tolerances) -> Result<Self> {
        loop {
            let codomain = AlgebraShape::new(opts.codomains[rng.random_range(0..opts.codomains.len())].clone())?;
            let max_block = *codomain.blocks().iter().max().unwrap();
            let nblocks = rng.random_range(1..=3usize);
            let dom: Vec<usize> = (0..nblocks).map(|_| rng.random_range(1..=max_block.min(2))).collect();
            let domain = AlgebraShape::new(dom)?;
            let hom = StarHom::<T>::random(rng, &domain, &codomain);
            let kernel = hom.kernel_blocks();
            if !opts.allow_kernel && !kernel.is_empty() {
                continue;
            }
            let image_dim: usize = (0..domain.num_blocks()).filter(|j| !kernel.contains(j)).map(|j| domain.blocks()[j].pow(2)).sum();
            if image_dim == 0 || image_dim > opts.max_image_dim {
                continue;
            }
            if let Some(s) = Self::with_hom(rng, hom, opts, tol)? {
                return Ok(s);
            }
        }
    }

    /// Builds the sample for a given homomorphism; `None` when the image
    /// fails the dimension bound.
    pub fn with_hom<R: Rng>(rng: &mut R, hom: StarHom<T>, opts: &OrderZeroOptions, tol: &Tolerances) -> Result<Option<Self>> {
        let mut tiles: Vec<Vec<DMatrix<C<T>>>> = Vec::new();
        for row in &hom.multiplicity {
            tiles.push(
                row.iter()
                    .map(|&mu| {
                        if mu == 0 {
                            DMatrix::zeros(0, 0)
                        } else {
                            let spec = spectrum(rng, mu, opts.min_eigenvalue);
                            hermitian_with_spectrum::<T, R>(rng, &spec)
                        }
                    })
                    .collect(),
            );
        }
        let top = tiles.iter().flatten().filter(|t| t.nrows() > 0).map(|t| crate::algebra::block_norm(t)).fold(T::zero(), |a, b| a.max(b));
        if top > T::zero() {
            let s = cre(T::one() / top);
            tiles.iter_mut().flatten().for_each(|t| *t *= s);
        }
        let with_complement = rng.random_bool(opts.complement_probability);
        let mut tails: Vec<DMatrix<C<T>>> = Vec::new();
        for (k, &n) in hom.codomain.blocks().iter().enumerate() {
            let used: usize = hom.multiplicity[k].iter().zip(hom.domain.blocks()).map(|(mu, m)| mu * m).sum();
            let s = n - used;
            if with_complement && s > 0 {
                let spec = spectrum(rng, s, opts.min_eigenvalue);
                tails.push(hermitian_with_spectrum::<T, R>(rng, &spec));
            } else {
                tails.push(DMatrix::zeros(s, s));
            }
        }
        let domain_blocks = hom.domain.blocks().to_vec();
        let h =
            hom.assemble(|j, k| kron(&DMatrix::identity(domain_blocks[j], domain_blocks[j]), &tiles[k][j]), |_, s| DMatrix::zeros(s, s));
        let complement = hom.assemble(
            |j, k| DMatrix::zeros(domain_blocks[j] * hom.multiplicity[k][j], domain_blocks[j] * hom.multiplicity[k][j]),
            |k, _| tails[k].clone(),
        );
        let theta = LinearMapTable::from_fn(&hom.domain, &hom.codomain, |a| &h * &hom.apply(a))?;
        let images: Vec<Element<T>> = theta.domain_basis().iter().map(|b| theta.apply(b).expect("domain")).collect();
        let image = Subspace::new(&hom.codomain, images, tol)?;
        if image.dim() == 0 || image.dim() > opts.max_image_dim {
            return Ok(None);
        }
        let e = &h + &complement;
        Ok(Some(Self { hom, h, theta, e, complement, image }))
    }

    /// A second order unit `θ(c)` for a central `c = ⊕ γ_j 1` with
    /// `γ_j ∈ [lo, 1]`; it lies in `X ∩ X′` and induces the same structure
    /// up to isomorphism.
    pub fn second_unit<R: Rng>(&self, rng: &mut R, lo: f64) -> Element<T> {
        let gammas: Vec<f64> = (0..self.hom.domain.num_blocks()).map(|_| rng.random_range(lo..=1.0)).collect();
        let blocks = self.hom.domain.blocks().iter().zip(&gammas).map(|(&m, &g)| DMatrix::identity(m, m) * cre(T::lit(g))).collect();
        let c = Element::from_blocks(self.hom.domain.clone(), blocks).expect("domain shape");
        self.theta.apply(&c).expect("domain element")
    }
}

/// A random `(X, e)` meeting the build hypotheses: `X` is the image of a
/// random order zero map and `e` its order unit.
pub fn bullet_instance<T: Real, R: Rng>(rng: &mut R, tol: &Tolerances) -> Result<(Subspace<T>, Element<T>)> {
    let s = OrderZeroSample::<T>::random(rng, &OrderZeroOptions::default(), tol)?;
    Ok((s.image, s.e))
}

/// `a ↦ E(Σ v_k* ι(a) v_k)` with `ι` the block-diagonal embedding into the
/// full matrix algebra and `E` the compression onto the codomain blocks.
pub fn kraus_map<T: Real, R: Rng>(rng: &mut R, domain: &AlgebraShape, codomain: &AlgebraShape, terms: usize) -> LinearMapTable<T> {
    let (n, m) = (domain.full_size(), codomain.full_size());
    let scale = cre(T::lit(1.0 / ((n * terms.max(1)) as f64).sqrt()));
    let vs: Vec<DMatrix<C<T>>> = (0..terms).map(|_| complex_gaussian::<T, R>(rng, n, m) * scale).collect();
    LinearMapTable::from_fn(domain, codomain, |a| {
        let full = a.to_full();
        let img = vs.iter().fold(DMatrix::zeros(m, m), |acc, v| acc + v.adjoint() * &full * v);
        Element::from_full_masked(codomain, &img)
    })
    .expect("kraus shapes")
}

/// `a ↦ U (W a W*)ᵀ U*` blockwise, for random block unitaries `U`, `W`.
pub fn transpose_map<T: Real, R: Rng>(rng: &mut R, shape: &AlgebraShape) -> LinearMapTable<T> {
    let us: Vec<DMatrix<C<T>>> = shape.blocks().iter().map(|&n| unitary::<T, R>(rng, n)).collect();
    let ws: Vec<DMatrix<C<T>>> = shape.blocks().iter().map(|&n| unitary::<T, R>(rng, n)).collect();
    LinearMapTable::from_fn(shape, shape, |a| a.map_blocks(|k, b| &us[k] * (&ws[k] * b * ws[k].adjoint()).transpose() * us[k].adjoint()))
        .expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(1);
        let u = unitary::<f64, _>(&mut r, 4);
        let err = (&u * u.adjoint() - DMatrix::<C<f64>>::identity(4, 4)).norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn random_hom_is_multiplicative() {
        let mut r = rng(7);
        let domain = AlgebraShape::new(vec![1, 2]).unwrap();
        let codomain = AlgebraShape::new(vec![3, 2]).unwrap();
        for _ in 0..10 {
            let pi = StarHom::<f64>::random(&mut r, &domain, &codomain);
            let a = element::<f64, _>(&mut r, &domain);
            let b = element::<f64, _>(&mut r, &domain);
            let lhs = pi.apply(&(&a * &b));
            let rhs = &pi.apply(&a) * &pi.apply(&b);
            assert!((&lhs - &rhs).operator_norm() < 1e-10);
            assert!((&pi.apply(&a.adjoint()) - &pi.apply(&a).adjoint()).operator_norm() < 1e-10);
        }
    }

    #[test]
    fn sample_is_order_zero_contraction() {
        let mut r = rng(3);
        let tol = Tolerances::default();
        for _ in 0..10 {
            let s = OrderZeroSample::<f64>::random(&mut r, &OrderZeroOptions::default(), &tol).unwrap();
            let one = Element::identity(&s.hom.domain);
            let t1 = s.theta.apply(&one).unwrap();
            assert!((&t1 - &s.h).operator_norm() < 1e-10);
            assert!((s.h.operator_norm() - 1.0).abs() < 1e-10);
            assert!(s.image.dim() <= 6 && s.image.dim() >= 1);
            assert!((&s.complement * &s.h).operator_norm() < 1e-10);
        }
    }
}
