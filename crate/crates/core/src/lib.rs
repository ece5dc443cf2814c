// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cli;
pub mod config;
pub mod constitutive;
pub mod dofmap;
pub mod error;
pub mod export;
pub mod manufactured;
pub mod mesh;
pub mod params;
pub mod quadrature;
pub mod solver;
pub mod sparse;
