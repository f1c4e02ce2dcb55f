use nalgebra::Vector3;

use crate::error::{Error, Result};

/// One wavelength sample of the incident spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    /// Å
    pub wavelength: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpectrum {
    samples: Vec<SpectrumSample>,
    /// photons / m²
    fluence: f64,
    polarization_on: bool,
    beam_direction: Vector3<f64>,
}

impl BeamSpectrum {
    pub fn new(
        samples: Vec<SpectrumSample>,
        fluence: f64,
        polarization_on: bool,
        beam_direction: Vector3<f64>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("spectrum has no samples".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.wavelength.is_finite() && s.wavelength > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "spectrum sample {i}: wavelength {} must be > 0",
                    s.wavelength
                )));
            }
            if !(s.weight.is_finite() && s.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "spectrum sample {i}: weight {} must be finite and >= 0",
                    s.weight
                )));
            }
        }
        if !samples.iter().any(|s| s.weight > 0.0) {
            return Err(Error::InvalidArgument(
                "spectrum needs at least one sample with positive weight".into(),
            ));
        }
        if !(fluence.is_finite() && fluence >= 0.0) {
            return Err(Error::InvalidArgument(format!("fluence {fluence} must be >= 0")));
        }
        let norm = beam_direction.norm();
        if !(norm.is_finite() && (norm - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidGeometry(format!(
                "beam direction has length {norm}, expected 1"
            )));
        }
        Ok(BeamSpectrum {
            samples,
            fluence,
            polarization_on,
            beam_direction,
        })
    }

    /// Single wavelength along +z, unpolarized correction off.
    pub fn monochromatic(wavelength: f64, fluence: f64) -> Result<Self> {
        Self::new(
            vec![SpectrumSample {
                wavelength,
                weight: 1.0,
            }],
            fluence,
            false,
            Vector3::z(),
        )
    }

    pub fn samples(&self) -> &[SpectrumSample] {
        &self.samples
    }

    pub fn fluence(&self) -> f64 {
        self.fluence
    }

    pub fn polarization_on(&self) -> bool {
        self.polarization_on
    }

    pub fn beam_direction(&self) -> &Vector3<f64> {
        &self.beam_direction
    }

    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }

    pub fn with_fluence(&self, fluence: f64) -> Result<Self> {
        Self::new(self.samples.clone(), fluence, self.polarization_on, self.beam_direction)
    }

    pub fn with_polarization(&self, on: bool) -> Self {
        BeamSpectrum {
            polarization_on: on,
            ..self.clone()
        }
    }

    /// Thomson factor for an unpolarized beam, or 1 when the correction is off.
    #[inline]
    pub fn polarization_factor(&self, two_theta: f64) -> f64 {
        if !self.polarization_on {
            return 1.0;
        }
        let c = two_theta.cos();
        0.5 * (1.0 + c * c)
    }
}
