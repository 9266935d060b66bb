//! Discrete capacities, energies and rearrangements of finite subsets of `Z^d`.
//!
//! The crate is `no_std` (it only needs `alloc`) so the numerical kernels can be
//! embedded anywhere; file formats and the command-line driver live in the
//! companion `isocap-lab` crate.
//!
//! Conventions used throughout:
//!
//! * The Dirichlet energy `E_p(u)` sums over *ordered* neighbour pairs, so every
//!   lattice edge contributes twice. [`energy::edge_energy`] gives the
//!   single-counted variant.
//! * Scaled quantities carry the factor `N^{(p-d)/d}`.
//! * Continuum comparisons divide lattice energies by [`energy::ORDERED_PAIR_FACTOR`].

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod checks;
pub mod continuum;
pub mod embedding;
pub mod energy;
pub mod error;
pub mod float;
pub mod function;
pub mod lattice;
pub mod optimizer;
pub mod rearrange;
pub mod solver;
pub mod sum;

pub use error::{Error, Result};
pub use function::{LatticeFunction, Sequence};
pub use lattice::{Direction, LatticePoint, LatticeSet, SliceIndex, MAX_DIM};
