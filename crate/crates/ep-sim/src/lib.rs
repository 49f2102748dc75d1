//! Electrophysiology chain on shape-model instances: extrude an endocardial
//! surface into a labeled tetrahedral wall, solve the anisotropic Eikonal
//! equation for local activation times, reconstruct transmembrane voltages
//! from an action-potential template, project dipole sources to body-surface
//! electrodes, derive the 12-lead ECG, and measure P-wave duration.
//!
//! Units: mm, ms, mV. Conduction velocities are configured in mm/s and
//! converted once on entry.

pub mod ap;
pub mod conduction;
pub mod eikonal;
pub mod error;
pub mod fibers;
pub mod forward;
pub mod leads;
pub mod regions;
pub mod tetmesh;
pub mod wall;

pub use ap::{vm_movie, ApTemplate, VmMovie};
pub use conduction::{velocity_tensor, ConductionTable, RegionConduction};
pub use eikonal::{fast_march, sinus_seed, ActivationMap};
pub use error::EpError;
pub use forward::{surface_potentials, ElectrodeSet, ElectrodeTraces};
pub use leads::{derive_12_leads, detect_p_wave, p_wave_duration, EcgTraceSet, PWaveAnnotation};
pub use tetmesh::{AtrialRegion, TetMesh};
pub use wall::{extrude_wall, WallConfig};
