//! Exact arithmetic in finitely presented, evenly graded cohomology rings,
//! even-factorization verdicts for full Chern classes, and desk-scale
//! symplectic constructions (linear normal forms, generating-function
//! blending, Calabi invariants).
//!
//! The crate is organized around six subsystems:
//!
//! * [`ring`] — normal forms, products, unit inversion and graded
//!   projections in truncated, evenly graded commutative rings over
//!   arbitrary-precision rationals.
//! * [`factor`] — existence of an even factorization of a full Chern
//!   class, with proof-carrying "no" certificates (univariate gcd
//!   criterion, exact elimination) and a bounded fallback search.
//! * [`catalog`] — built-in manifolds: projective spaces, products,
//!   the one-point blow-up of CP³ and the 2-sphere.
//! * [`symplectic`] — symplecticity checks, elliptic classification,
//!   modulus splittings, rational-angle perturbation, identity order.
//! * [`blend`] — generating functions of symplectic maps and cutoff
//!   blending to the linearization, with closeness reports.
//! * [`calabi`] — Calabi invariants of compactly supported Hamiltonians,
//!   Hamiltonian flows, composition/conjugation and orbit copies.

pub mod blend;
pub mod calabi;
pub mod catalog;
pub mod factor;
pub mod report;
pub mod ring;
pub mod symplectic;

pub use catalog::CatalogEntry;
pub use factor::{FactorizationVerdict, FactorizationWitness, SearchConfig};
pub use ring::{ManifoldData, Rational, RingElement, RingPresentation};
