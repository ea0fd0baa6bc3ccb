//! Desk-scale computations around counting points of varieties over finite
//! fields: exact field arithmetic, a small description language for models,
//! point counting with caching, zeta functions reconstructed from counts,
//! p-adic volumes of gauge forms, and count-based comparison of birational
//! models.

pub mod counter;
pub mod fastfield;
pub mod ffield;
pub mod geomdsl;
pub mod kequiv;
pub mod models;
pub mod padics;
pub mod zetakit;
