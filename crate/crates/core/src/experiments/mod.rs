//! Named experiments: the pseudo-representation gallery, distributional
//! pairings, symplecticity checks and commutator flows.

pub mod affine;
pub mod gallery;
pub mod pairing;
pub mod symplectic;

pub use affine::{affine_commutator_check, AffineCommutatorReport, AffineHamiltonian};
pub use gallery::{
    gallery, gallery_with, run_convergence, ConvergenceRow, ConvergenceTable, GalleryDiagnostics, GalleryEntry,
    GalleryOptions, CYLINDER_KAPPA, CYLINDER_STATED_CONSTANT, GALLERY_NAMES,
};
pub use pairing::{
    conforming_family, direct_pairing, distribution_pairing, function_pairing, prop6_experiment, prop7_experiment,
    prop7_families, remark2_family, remark2_pairing_constant, PairFamily, Prop6Table, Prop7Table,
};
pub use symplectic::{named_map, symplectic_check, CoordinateMap, SymplecticReport};
