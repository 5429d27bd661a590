//! Monodromy partitions of finite Blaschke products, their dual partitions,
//! and the reducing-subspace data derived from them.

pub mod blaschke;
pub mod classifier;
pub mod decompose;
pub mod error;
pub mod monodromy;
pub mod nth_root;
pub mod operators;
pub mod polyroots;
pub mod zn;

pub use blaschke::FiniteBlaschkeProduct;
pub use error::{Error, Result};
pub use monodromy::{analyze, MonodromyResult};
pub use zn::ZnPartition;
