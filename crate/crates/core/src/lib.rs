//! Gauge-invariant quantum geometry of Bloch-band eigenprojectors.
//!
//! The chain runs from a model's Hamiltonian jet to projector jets, to the
//! pointwise metric and curvature, to Brillouin-zone integrals and the
//! fold-curve analysis that closes the Gauss–Bonnet bookkeeping.

pub mod basis;
pub mod error;
pub mod gaussbonnet;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod model;
pub mod projector;
pub mod quadrature;
pub mod singular;
pub mod validate;

pub use basis::{completeness_defect, normal_frame, standard_hermitian_frame, HermitianFrame};
pub use error::{Error, Result};
pub use gaussbonnet::{gauss_bonnet_report, GaussBonnetReport};
pub use geometry::{geometry_point, QGeometryPoint};
pub use model::{eval_jet, parse_model_spec, HamiltonianJet, Hopping, KPoint, ModelSpec};
pub use projector::{
    eigenvalues, polynomial_projector_jet, projector_jet, spectral_projector_jet, BandSelection,
    ProjectorJet, SymmetricPolyState,
};
pub use quadrature::{bz_integrate, chern_number, volume_report, FieldGrid, VolumeReport};
pub use singular::{singular_line_integral, trace_singular_curve, SingularCurve, SingularSample};
