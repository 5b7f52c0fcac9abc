//! Numerical kernels for oscillatory integral operators on periodic grids.
//!
//! The crate provides spectral grids with the non-unitary transform pair
//! `f_hat(xi) = \int f(x) e^{-i x.xi} dx` and inverse measured against
//! `dbar xi = (2 pi)^{-n} d xi`, symbol and phase abstractions with
//! finite-difference seminorm estimation, direct-summation oscillatory
//! integral operators with an opt-in separable fast path, Littlewood-Paley
//! analysis (scale decompositions, scale-integrated kernels, paraproducts),
//! oscillation-based function space norms, and a composition expansion
//! study for symbols conjugated by oscillatory phases.
//!
//! Everything here is deterministic and allocation-only (`no_std` +
//! `alloc` compatible); file formats, randomness and CLI live in the
//! companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod composition;
pub mod fio;
pub mod grid;
pub mod littlewood_paley;
pub mod numeric;
pub mod phases;
pub mod spaces;
pub mod symbols;

pub use num_complex::Complex64;
