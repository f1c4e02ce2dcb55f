use nalgebra::Vector3;

use crate::error::{Error, Result};

const AXIS_TOL: f64 = 1e-12;

/// Lab axis along which the panel is displaced from the sample.
pub const BEAM_AXIS: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);

/// Flat single-panel detector. Lengths in meters, beam center in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorPanel {
    slow_pixels: usize,
    fast_pixels: usize,
    pixel_size: f64,
    distance: f64,
    beam_center: (f64, f64),
    fast_axis: Vector3<f64>,
    slow_axis: Vector3<f64>,
}

impl DetectorPanel {
    pub fn new(
        slow_pixels: usize,
        fast_pixels: usize,
        pixel_size: f64,
        distance: f64,
        beam_center: (f64, f64),
        fast_axis: Vector3<f64>,
        slow_axis: Vector3<f64>,
    ) -> Result<Self> {
        if slow_pixels == 0 || fast_pixels == 0 {
            return Err(Error::InvalidGeometry(format!(
                "panel must have at least one pixel, got {slow_pixels}x{fast_pixels}"
            )));
        }
        if !(pixel_size.is_finite() && pixel_size > 0.0) {
            return Err(Error::InvalidGeometry(format!("pixel size {pixel_size} must be > 0")));
        }
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::InvalidGeometry(format!("distance {distance} must be > 0")));
        }
        if !(beam_center.0.is_finite() && beam_center.1.is_finite()) {
            return Err(Error::InvalidGeometry("beam center must be finite".into()));
        }
        for (name, axis) in [("fast", &fast_axis), ("slow", &slow_axis)] {
            if (axis.norm() - 1.0).abs() > AXIS_TOL {
                return Err(Error::InvalidGeometry(format!(
                    "{name} axis has length {}, expected 1",
                    axis.norm()
                )));
            }
        }
        let dot = fast_axis.dot(&slow_axis);
        if dot.abs() > AXIS_TOL {
            return Err(Error::InvalidGeometry(format!(
                "fast and slow axes are not orthogonal (dot = {dot:e})"
            )));
        }
        Ok(DetectorPanel {
            slow_pixels,
            fast_pixels,
            pixel_size,
            distance,
            beam_center,
            fast_axis,
            slow_axis,
        })
    }

    /// Panel with fast along +x, slow along +y, beam centered.
    pub fn square(pixels: usize, pixel_size: f64, distance: f64) -> Result<Self> {
        let c = pixels as f64 / 2.0;
        Self::new(
            pixels,
            pixels,
            pixel_size,
            distance,
            (c, c),
            Vector3::x(),
            Vector3::y(),
        )
    }

    pub fn slow_pixels(&self) -> usize {
        self.slow_pixels
    }

    pub fn fast_pixels(&self) -> usize {
        self.fast_pixels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.slow_pixels, self.fast_pixels)
    }

    pub fn n_pixels(&self) -> usize {
        self.slow_pixels * self.fast_pixels
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn beam_center(&self) -> (f64, f64) {
        self.beam_center
    }

    pub fn fast_axis(&self) -> &Vector3<f64> {
        &self.fast_axis
    }

    pub fn slow_axis(&self) -> &Vector3<f64> {
        &self.slow_axis
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.fast_axis.cross(&self.slow_axis)
    }

    /// Lab-frame position (m) of a point inside pixel `(slow, fast)`, with
    /// sub-pixel offsets in `[0, 1)`.
    pub fn pixel_lab_position(
        &self,
        slow: usize,
        fast: usize,
        sub_slow: f64,
        sub_fast: f64,
    ) -> Result<Vector3<f64>> {
        if slow >= self.slow_pixels || fast >= self.fast_pixels {
            return Err(Error::OutOfBounds {
                slow,
                fast,
                slow_pixels: self.slow_pixels,
                fast_pixels: self.fast_pixels,
            });
        }
        if !((0.0..1.0).contains(&sub_slow) && (0.0..1.0).contains(&sub_fast)) {
            return Err(Error::InvalidArgument(format!(
                "sub-pixel offsets ({sub_slow}, {sub_fast}) must lie in [0, 1)"
            )));
        }
        Ok(self.position_unchecked(slow as f64 + sub_slow, fast as f64 + sub_fast))
    }

    /// Position at continuous pixel coordinates, no bounds check.
    #[inline]
    pub(crate) fn position_unchecked(&self, slow: f64, fast: f64) -> Vector3<f64> {
        BEAM_AXIS * self.distance
            + self.slow_axis * ((slow - self.beam_center.0) * self.pixel_size)
            + self.fast_axis * ((fast - self.beam_center.1) * self.pixel_size)
    }

    /// Point-pixel solid angle (sr) seen from the sample:
    /// `pixel_size² / R² · |r̂·n̂|`.
    pub fn solid_angle(&self, pixel_position: &Vector3<f64>) -> Result<f64> {
        let r = pixel_position.norm();
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "pixel position has length {r}; solid angle undefined"
            )));
        }
        Ok(self.solid_angle_unchecked(pixel_position, r))
    }

    #[inline]
    pub(crate) fn solid_angle_unchecked(&self, pos: &Vector3<f64>, r: f64) -> f64 {
        let cos_obliquity = pos.dot(&self.normal()).abs() / r;
        self.pixel_size * self.pixel_size / (r * r) * cos_obliquity
    }
}
