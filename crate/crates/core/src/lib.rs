//! Order zero maps and the C*-structure they induce on self-adjoint
//! subspaces of finite-dimensional C*-algebras.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the aliases
//! below fix `f64`, with `*32` variants for single precision. Pair the
//! latter with [`Tolerances::single_precision`].

pub mod algebra;
pub mod bullet;
pub mod error;
pub mod grassmann;
pub mod io;
pub mod map;
pub mod optim;
pub mod order_units;
pub mod ozmaps;
pub mod random;
pub mod scalar;
pub mod scenario;
pub mod subspace;

pub use algebra::{AlgebraShape, Tolerances};
pub use error::{OzError, Result};
pub use optim::OptimBudget;
pub use scalar::Real;

pub type Element = algebra::Element<f64>;
pub type Subspace = subspace::Subspace<f64>;
pub type LinearMapTable = map::LinearMapTable<f64>;
pub type BulletStructure = bullet::BulletStructure<f64>;

pub type Element32 = algebra::Element<f32>;
pub type Subspace32 = subspace::Subspace<f32>;
pub type LinearMapTable32 = map::LinearMapTable<f32>;
pub type BulletStructure32 = bullet::BulletStructure<f32>;
