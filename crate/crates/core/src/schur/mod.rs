//! Young diagrams, Young's orthogonal form, the explicit Schur transform and
//! weak Schur sampling.

mod polynomial;
mod transform;
mod young;

pub use polynomial::schur_polynomial_eval;
pub use transform::{SchurBlock, SchurDecomposition, SchurValidation, CACHE_ENV, CACHE_FORMAT, JM_CLUSTER_TOL};
pub use young::{cycle_type, enumerate_partitions, StandardTableau, YoungDiagram, YoungRep};
