//! Off-grid aware spatial covariance estimation for hybrid mmWave MIMO links.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerical code:
//!
//! * [`channel`]: steering vectors, clustered multipath channels and compressed snapshots.
//! * [`grid`]: cosine-uniform angular grids, the virtual dictionary, hybrid sensing
//!   operators and per-cell perturbation bounds.
//! * [`estimators`]: the measurement covariance, covariance OMP (COMP) and its
//!   parameter-perturbed variant (PPCOMP) with the bounded angle solver.
//! * [`metrics`]: ground-truth covariances, relative efficiency and NMSE.
//!
//! Every random draw goes through an explicit [`rand::Rng`], so identical seeds give
//! bitwise-identical results.
//!
//! Indices are zero-based throughout: grid point `i` of a size-`G` grid has cosine
//! `1 - 2i/G`, and dictionary column `j = i_tx * G_UE + i_rx`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channel;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod linalg;
pub mod metrics;

pub use error::{Error, Result};

/// Complex double-precision scalar.
pub type C64 = num_complex::Complex<f64>;
/// Dense, column-major complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
