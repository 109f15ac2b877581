pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod liouville;
pub mod physmodel;
pub mod twoqutrit;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod testutil;
