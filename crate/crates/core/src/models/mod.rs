//! Kronig-Penney Hamiltonians, Gubanov deformations, spectral islands and
//! Wannier extraction.

mod gubanov;
mod hamiltonian;
mod spectral;
mod transport;

pub use gubanov::{build_gubanov, DeformationKind, GubanovMap};
pub use hamiltonian::{build_deformed_hamiltonian, build_kronig_penney, Hamiltonian, PotentialSpec};
pub use spectral::{
    compute_spectrum, eigenvector_orthonormality, extract_gwb, find_spectral_islands, position_expectation,
    span_residual, spectral_projection, ExtractionOptions, SpectralIsland, Spectrum, DENSE_LIMIT,
};
pub use transport::{apply_y, deform_gwb, Direction};
