//! Exact-arithmetic engine for torus-equivariant (co)homology and
//! intersection homology of simplicial sets.
//!
//! The crate is organized bottom-up:
//!
//! * [`coeff`] — exact coefficient rings (Z, Q, F_p), sparse matrices,
//!   Smith normal form, and homology of a pair of boundary maps;
//! * [`simplicial`] — simplicial sets, groups, products, twisted products,
//!   group actions, and normalized (co)chains;
//! * [`em_ops`] — the Eilenberg–Zilber maps (shuffle, Alexander–Whitney,
//!   homotopy), the Steenrod interchange operator, and the cup, cap and
//!   cup-1 products;
//! * [`classifying`] — bar constructions, universal bundles, and the
//!   extra-degeneracy contraction operator;
//! * [`koszul_alg`] — exterior algebra / symmetric coalgebra pairs,
//!   twisting cochains, twisted tensor complexes, weak (co)modules, and
//!   the algebraic Koszul functors with their adjunction;
//! * [`torus_eq`] — simplicial tori, the Borel construction, the explicit
//!   comparison maps between the simplicial and algebraic Koszul functors,
//!   and the Cartan-style small models for equivariant (co)homology;
//! * [`ih`] — allowable subsets, perversities, and intersection homology
//!   of filtered simplicial sets, plus the equivariant combination;
//! * [`verify`] — the seeded verification suites shared by the test
//!   harness and the command-line `verify` subcommand.

pub mod classifying;
pub mod coeff;
pub mod em_ops;
pub mod koszul_alg;
pub mod simplicial;
pub mod torus_eq;
