//! Mosaic domain rotations and per-image random orientations.
//!
//! Sampling is reproducible across platforms. The generator is ChaCha8
//! (`rand_chacha`), seeded with `seed_from_u64(seed)`: mosaic draws use stream
//! 0, random orientations use stream 1. A uniform `u` in `[0, 1)` is taken from
//! the top 53 bits of one `next_u64()` word, `u = (w >> 11) · 2⁻⁵³`.
//!
//! For each mosaic domain three uniforms `u1, u2, u3` are drawn in order:
//!
//! * axis: `z = 2·u1 - 1`, `φ = 2π·u2`, axis `= (√(1-z²) cos φ, √(1-z²) sin φ, z)`
//!   (uniform on the sphere);
//! * angle: `θ = u3 · spread` (uniform in `[0, spread]`);
//! * matrix: Rodrigues, `R = I + sin θ K + (1 - cos θ) K²`.
//!
//! A random orientation draws `u1, u2, u3` and forms the unit quaternion
//! `(√(1-u1) sin 2πu2, √(1-u1) cos 2πu2, √u1 sin 2πu3, √u1 cos 2πu3)`,
//! which is uniform over SO(3).

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::lattice::{check_rotation, Orientation};
use crate::error::{Error, Result};

const MOSAIC_STREAM: u64 = 0;
const ORIENTATION_STREAM: u64 = 1;

/// Ordered rotations of a crystal's mosaic blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MosaicDomainSet {
    rotations: Vec<Matrix3<f64>>,
    spread_deg: f64,
    seed: Option<u64>,
}

impl MosaicDomainSet {
    /// A single unrotated domain.
    pub fn identity() -> Self {
        MosaicDomainSet {
            rotations: vec![Matrix3::identity()],
            spread_deg: 0.0,
            seed: None,
        }
    }

    /// Rotations supplied directly; each must be a proper rotation.
    pub fn explicit(rotations: Vec<Matrix3<f64>>, spread_deg: f64) -> Result<Self> {
        if rotations.is_empty() {
            return Err(Error::InvalidArgument("mosaic domain list is empty".into()));
        }
        for (i, r) in rotations.iter().enumerate() {
            check_rotation(r).map_err(|e| {
                Error::InvalidGeometry(format!("mosaic rotation {i}: {e}"))
            })?;
        }
        Ok(MosaicDomainSet {
            rotations,
            spread_deg,
            seed: None,
        })
    }

    pub fn rotations(&self) -> &[Matrix3<f64>] {
        &self.rotations
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn spread_deg(&self) -> f64 {
        self.spread_deg
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = axis.cross_matrix();
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// `count` rotations with axes uniform on the sphere and angles uniform in
/// `[0, spread_deg]`. Deterministic in all three arguments.
pub fn generate_mosaic_rotations(seed: u64, spread_deg: f64, count: usize) -> Result<MosaicDomainSet> {
    if count == 0 {
        return Err(Error::InvalidArgument("mosaic domain count must be >= 1".into()));
    }
    if !(spread_deg.is_finite() && spread_deg >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mosaic spread {spread_deg} must be a finite angle >= 0"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(MOSAIC_STREAM);
    let spread = spread_deg.to_radians();
    let rotations = (0..count)
        .map(|_| {
            let z = 2.0 * uniform(&mut rng) - 1.0;
            let phi = TAU * uniform(&mut rng);
            let angle = uniform(&mut rng) * spread;
            if spread == 0.0 {
                return Matrix3::identity();
            }
            let r = (1.0 - z * z).max(0.0).sqrt();
            rodrigues(&Vector3::new(r * phi.cos(), r * phi.sin(), z), angle)
        })
        .collect();
    Ok(MosaicDomainSet {
        rotations,
        spread_deg,
        seed: Some(seed),
    })
}

/// Orientation drawn uniformly from SO(3).
pub fn random_orientation(seed: u64) -> Orientation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ORIENTATION_STREAM);
    let (u1, u2, u3) = (uniform(&mut rng), uniform(&mut rng), uniform(&mut rng));
    let (s1, s2) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(
        s2 * (TAU * u3).cos(),
        s1 * (TAU * u2).sin(),
        s1 * (TAU * u2).cos(),
        s2 * (TAU * u3).sin(),
    );
    let rot = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
    Orientation::new(rot).expect("unit quaternion yields a proper rotation")
}
