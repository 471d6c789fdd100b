pub mod config;
pub mod counterexample;
pub mod densities;
pub mod eigensolve;
pub mod error;
pub mod field_io;
pub mod functionals;
pub mod grid;
pub mod inversion;
pub mod operators;
