//! Statistical shape modeling: rigid alignment, dense correspondence via
//! Gaussian-process deformation models, PCA point-distribution models, and
//! the standard generalization / specificity / compactness quality metrics.
//!
//! The intended flow over a corpus of surface meshes:
//!
//! 1. [`icp::icp_align`] each shape to a reference (rotation + translation only),
//! 2. [`gpmm::establish_correspondence`] by fitting low-rank Gaussian-process
//!    deformations of the reference to each aligned shape,
//! 3. [`pdm::build_pdm`] on the corresponded shape vectors,
//! 4. [`eval`] the model and [`pdm::PdmModel::sample`] new instances.

pub mod container;
pub mod error;
pub mod eval;
pub mod gpmm;
pub mod icp;
pub mod kernel;
pub mod lbfgs;
pub mod nystrom;
pub mod pdm;
pub mod pv;
pub mod spatial;

pub use error::{AlignError, ContainerError, GpError, PdmError};
pub use gpmm::{FitConfig, FitResult, GpBuildOptions, GpModel};
pub use icp::{icp_align, nearest_correspondences, procrustes_rigid, IcpConfig, IcpReport};
pub use kernel::{gaussian_kernel, KernelSpec, KernelTerm, LabelMask};
pub use pdm::{build_pdm, Coefficients, PdmModel};
