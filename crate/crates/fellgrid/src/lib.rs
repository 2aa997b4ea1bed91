//! Convolution algebras of fiber bundles over finite groupoids.
//!
//! The crate builds, at desk scale, the section algebra of a fiber bundle over
//! a finite groupoid: convolution, involution, the five norms (`inf`, `1`,
//! `2`, `b`, `i`), the quotient seminorm obtained by splitting off a saturated
//! subgroupoid, and a small category of bundle morphisms whose section-level
//! action is a norm-contractive *-homomorphism.
//!
//! Module map:
//! - [`linalg`]: dense complex matrices, Hermitian eigensolver, PSD calculus.
//! - [`groupoid`]: finite groupoids as validated partial-product tables.
//! - [`bundle`]: matrix bundles and cocycle-twisted line bundles.
//! - [`section`]: sections, convolution, and the norm family.
//! - [`algebra`]: the randomized law suite, units, multipliers, and the
//!   essential (quotient) seminorm.
//! - [`morphism`]: star-bijective functors, pullbacks, fibre morphisms.
//! - [`io`]: JSON interchange formats for all of the above.
//! - [`sample`]: seeded random instance generators for the suites.

pub mod algebra;
pub mod bundle;
pub mod groupoid;
pub mod io;
pub mod linalg;
pub mod morphism;
pub mod report;
pub mod sample;
pub mod section;

pub use linalg::{CMatrix, Tolerance};
