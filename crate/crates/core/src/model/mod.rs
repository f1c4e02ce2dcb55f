//! Crystal, detector and beam models, plus the geometric helpers the
//! kernels are built from. Every type here is immutable once constructed.

mod beam;
mod detector;
mod lattice;
mod mosaic;
mod tables;

pub use beam::{BeamSpectrum, SpectrumSample};
pub use detector::{DetectorPanel, BEAM_AXIS};
pub use lattice::{check_rotation, reciprocal_basis, CrystalModel, Orientation, UnitCell};
pub use mosaic::{generate_mosaic_rotations, random_orientation, MosaicDomainSet};
pub use tables::{BackgroundProfile, Miller, StructureFactorTable};
