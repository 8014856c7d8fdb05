//! Congruence lattices of finite unary algebras and the overalgebra
//! constructions that realize prescribed intervals inside them.

pub mod algebra;
pub mod error;
pub mod lattice;
pub mod overalgebra;
pub mod partition;
pub mod verify;

pub use algebra::{ConLattice, Monoid1, Operation, Residuation, UnaryAlgebra};
pub use error::{Error, Result};
pub use lattice::{FiniteLattice, IntervalShape};
pub use overalgebra::{EmbeddingMap, OverIISpec, OverISpec, OverResult, OverSpec};
pub use partition::{Partition, UnionFind};
pub use verify::{FiberReport, FuzzBounds, VerifyOptions, VerifyReport};
