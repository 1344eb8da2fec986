//! Shared numerical kernels: adaptive quadrature, bracketed root-finding,
//! and normal tail functions that stay accurate in log space.

pub mod normal;
pub mod quad;
pub mod roots;
