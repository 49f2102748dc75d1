//! Per-region conduction velocities and the anisotropic velocity tensor.

use mesh_core::Vector3;
use nalgebra::Matrix3;

use crate::error::EpError;
use crate::tetmesh::AtrialRegion;

/// Transverse conduction velocity and longitudinal:transverse anisotropy
/// ratio for one region.
#[derive(Debug, Clone, Copy)]
pub struct RegionConduction {
    /// CV across the fiber direction, mm/s.
    pub transverse_velocity: f64,
    /// Longitudinal velocity is `anisotropy_ratio · transverse_velocity`.
    pub anisotropy_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ConductionTable {
    entries: [RegionConduction; 7],
}

impl Default for ConductionTable {
    /// Standard sinus-rhythm values per region.
    fn default() -> Self {
        let mut table = ConductionTable {
            entries: [RegionConduction {
                transverse_velocity: 0.0,
                anisotropy_ratio: 1.0,
            }; 7],
        };
        let values = [
            (AtrialRegion::RightAtrium, 739.0, 2.11),
            (AtrialRegion::LeftAtrium, 946.0, 2.11),
            (AtrialRegion::InterAtrial, 1093.0, 3.36),
            (AtrialRegion::ValveRing, 445.0, 2.11),
            (AtrialRegion::PectinateMuscle, 578.0, 3.78),
            (AtrialRegion::CristaTerminalis, 607.0, 3.0),
            (AtrialRegion::InferiorIsthmus, 722.0, 1.0),
        ];
        for (region, cv, ar) in values {
            table.set(
                region,
                RegionConduction {
                    transverse_velocity: cv,
                    anisotropy_ratio: ar,
                },
            );
        }
        table
    }
}

impl ConductionTable {
    fn index(region: AtrialRegion) -> usize {
        AtrialRegion::ALL.iter().position(|&r| r == region).expect("exhaustive")
    }

    pub fn get(&self, region: AtrialRegion) -> RegionConduction {
        self.entries[Self::index(region)]
    }

    pub fn set(&mut self, region: AtrialRegion, entry: RegionConduction) {
        self.entries[Self::index(region)] = entry;
    }

    pub fn validate(&self) -> Result<(), EpError> {
        for region in AtrialRegion::ALL {
            let e = self.get(region);
            if !(e.transverse_velocity > 0.0) || !e.transverse_velocity.is_finite() {
                return Err(EpError::BadConduction {
                    region: region.name().into(),
                    msg: format!("transverse velocity {} must be positive", e.transverse_velocity),
                });
            }
            if !(e.anisotropy_ratio >= 1.0) || !e.anisotropy_ratio.is_finite() {
                return Err(EpError::BadConduction {
                    region: region.name().into(),
                    msg: format!("anisotropy ratio {} must be >= 1", e.anisotropy_ratio),
                });
            }
        }
        Ok(())
    }
}

/// Squared-velocity tensor `M = (ar·cv)²·f fᵀ + cv²·(I − f fᵀ)` in mm²/s².
/// Symmetric positive definite with eigenvalues {(ar·cv)², cv², cv²}.
pub fn velocity_tensor(
    region: AtrialRegion,
    fiber: &Vector3<f64>,
    table: &ConductionTable,
) -> Matrix3<f64> {
    let e = table.get(region);
    let cv2 = e.transverse_velocity * e.transverse_velocity;
    let long2 = (e.anisotropy_ratio * e.transverse_velocity).powi(2);
    let ff = fiber * fiber.transpose();
    ff * long2 + (Matrix3::identity() - ff) * cv2
}
