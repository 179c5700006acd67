//! Theta-function and elliptic-genus machinery for equivariant Toeplitz
//! index theory on odd-dimensional manifolds.

pub mod acceptance;
pub mod cli;
pub mod dataset;
pub mod equivariant;
pub mod error;
pub mod genera;
pub mod modularity;
pub mod odd_chern;
pub mod series;
pub mod theta;
pub mod witten_bundles;

pub use error::{Error, Result};
