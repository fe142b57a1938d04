#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod circle;
pub mod cone;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod geodesic;
pub mod grid;
pub mod minimize;
pub mod norms;
pub mod oracles;
pub mod par;
pub mod precond;
pub mod spectral;
