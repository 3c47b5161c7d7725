//! Numerical certification of high-frequency uniqueness criteria for
//! p-growth energies on the unit disk.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`] and [`io`]: cell-centred polar sampling of the unit disk,
//!   quadrature for `dx` and `dx/R²`, and the `pfield v1` file format.
//! - [`fourier`]: angular mode decomposition, band projections, the
//!   zero-mode split.
//! - [`diffops`] and [`mat2`]: polar-frame derivatives, cofactor and
//!   determinant algebra, weighted norms.
//! - [`energies`]: the incompressible p-Dirichlet energy, the compressible
//!   polyconvex energy, structural checks and the reference gallery.
//! - [`stationarity`]: weak Euler–Lagrange residuals and pressure recovery.
//! - [`certifier`]: the integers `l`, `n`, `m`, thresholds `n*`, `m*` and
//!   the full-class shortcut.
//! - [`lab`]: admissible variations and trial-based checks of every
//!   inequality and identity the uniqueness argument relies on.
//!
//! Node loops and trial loops run on rayon when the `parallel` feature is
//! enabled (the default) and sequentially otherwise.

pub mod certifier;
pub mod diffops;
pub mod energies;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod lab;
pub mod mat2;
pub mod par;
pub mod rng;
pub mod stationarity;

pub use error::{Error, Result};
pub use grid::{MatrixField, Point, PolarGrid, ScalarField, VectorField, Weight};
pub use mat2::Mat2;
