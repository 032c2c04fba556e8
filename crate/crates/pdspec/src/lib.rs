//! Band structure, symbolic coding and trace-map dynamics for the
//! period-doubling Hamiltonian H(λ) with coupling λ > 0.
//!
//! The potential is generated by the substitution a -> ab, b -> aa; the
//! spectrum at level n is the disjoint union of 2^n closed bands, each
//! carrying a distinguished interior zero of the n-th trace polynomial.
//! Everything downstream (optimal coverings, gap labelling, the integrated
//! density of states, Hausdorff dimension bounds) is computed from those
//! bands with certified interval enclosures for the numerics and exact
//! rational/symbolic arithmetic for the combinatorics.

pub mod bands;
pub mod coding;
pub mod covering;
pub mod dimension;
pub mod dynamics;
pub mod real;
pub mod traces;
