//! Volterra quadratic stochastic operators on the infinite-dimensional simplex.
//!
//! Points are finitely supported probability vectors, operators are given by
//! skew-symmetric coefficient matrices, and infinite matrices are evaluated
//! lazily through their entries.

pub mod dynamics;
pub mod extension;
pub mod operator;
pub mod qset;
pub mod simplex;
pub mod skew;

pub use dynamics::{ConvergenceStatus, ConvergenceVerdict, Trajectory};
pub use extension::CompatibleFamily;
pub use operator::OperatorHandle;
pub use simplex::{FaceIndexSet, SimplexPoint};
pub use skew::{DenseSkew, SkewSpec};
