//! The two detector-filling kernels: Bragg spots and diffuse background.
//!
//! Each pixel is computed by a private, fully sequential accumulation, so the
//! value at a pixel never depends on how indices are scheduled.

use nalgebra::Vector3;

use super::buffer::PixelBuffer;
use crate::error::{Error, Result};
use crate::exec::{Executor, IndexFault};
use crate::model::{BackgroundProfile, BeamSpectrum, CrystalModel, DetectorPanel};

/// Classical electron radius squared, m².
pub const R_E_SQR: f64 = 7.94079248e-30;

pub const SPOTS_LABEL: &str = "nanoBraggSpots";
pub const BACKGROUND_LABEL: &str = "addBackground";
pub const ADD_ARRAY_LABEL: &str = "addArray";

const SIN_LIMIT: f64 = 1e-12;

/// Grating function `sin(n·x) / sin(x)`, with the analytic limit
/// `n·cos(n·x) / cos(x)` where `|sin x| < 1e-12`.
#[inline]
pub fn sincg(x: f64, n: u32) -> f64 {
    let n = f64::from(n);
    let s = x.sin();
    if s.abs() < SIN_LIMIT {
        n * (n * x).cos() / x.cos()
    } else {
        (n * x).sin() / s
    }
}

/// Shape transform of an `Na × Nb × Nc` block of cells at fractional `(h, k, l)`.
#[inline]
pub fn lattice_transform(crystal: &CrystalModel, h: f64, k: f64, l: f64) -> f64 {
    let [na, nb, nc] = crystal.n_cells();
    use std::f64::consts::PI;
    sincg(PI * h, na) * sincg(PI * k, nb) * sincg(PI * l, nc)
}

/// Everything the spots kernel reads. Plain values and read-only tables.
#[derive(Debug, Clone)]
pub struct SpotsContext {
    pub crystal: CrystalModel,
    pub panel: DetectorPanel,
    pub spectrum: BeamSpectrum,
    pub oversample: u32,
    pub r_e_sqr: f64,
}

impl SpotsContext {
    pub fn new(crystal: CrystalModel, panel: DetectorPanel, spectrum: BeamSpectrum, oversample: u32) -> Result<Self> {
        if oversample == 0 {
            return Err(Error::InvalidArgument("oversample must be >= 1".into()));
        }
        Ok(SpotsContext {
            crystal,
            panel,
            spectrum,
            oversample,
            r_e_sqr: R_E_SQR,
        })
    }
}

/// Unit scattered direction, solid angle and 2θ at a panel point.
#[inline]
fn scatter_geometry(panel: &DetectorPanel, incident: &Vector3<f64>, slow: f64, fast: f64) -> (Vector3<f64>, f64, f64) {
    let pos = panel.position_unchecked(slow, fast);
    let r = pos.norm();
    let omega = panel.solid_angle_unchecked(&pos, r);
    let dir = pos / r;
    let two_theta = dir.dot(incident).clamp(-1.0, 1.0).acos();
    (dir, omega, two_theta)
}

fn spot_pixel(ctx: &SpotsContext, index: usize) -> f64 {
    let fast_pixels = ctx.panel.fast_pixels();
    let (slow, fast) = ((index / fast_pixels) as f64, (index % fast_pixels) as f64);
    let os = ctx.oversample;
    let step = 1.0 / f64::from(os);
    let incident = ctx.spectrum.beam_direction();
    let table = ctx.crystal.sf_table();
    let n_domains = ctx.crystal.n_domains();

    let mut acc = 0.0;
    for ss in 0..os {
        for sf in 0..os {
            let (dir, omega, two_theta) = scatter_geometry(
                &ctx.panel,
                incident,
                slow + (f64::from(ss) + 0.5) * step,
                fast + (f64::from(sf) + 0.5) * step,
            );
            let polar = ctx.spectrum.polarization_factor(two_theta);
            let scatter = dir - incident;
            for sample in ctx.spectrum.samples() {
                let q = scatter / sample.wavelength;
                let mut domains = 0.0;
                for m in 0..n_domains {
                    let hkl = ctx.crystal.fractional_miller(m, &q);
                    let f = table.lookup_f(hkl.x, hkl.y, hkl.z) * lattice_transform(&ctx.crystal, hkl.x, hkl.y, hkl.z);
                    domains += f * f;
                }
                acc += sample.weight * omega * polar * domains;
            }
        }
    }
    let norm = ctx.spectrum.total_weight() * n_domains as f64 * f64::from(os * os);
    ctx.r_e_sqr * ctx.spectrum.fluence() * acc / norm
}

fn fault(kernel: &str, panel: &DetectorPanel, index: usize) -> Error {
    Error::NumericalFault {
        kernel: kernel.to_owned(),
        index,
        slow: index / panel.fast_pixels(),
        fast: index % panel.fast_pixels(),
    }
}

fn collapse(f: IndexFault<Error>) -> Error {
    f.error
}

/// Bragg-spot photons per pixel, averaged over sub-pixels, mosaic domains and
/// the weighted spectrum. Overwrites `out`.
pub fn nanobragg_spots(exec: &Executor, ctx: &SpotsContext, out: &mut PixelBuffer<f32>) -> Result<()> {
    out.expect_dims(ctx.panel.dims())?;
    exec.try_for_each_slot(SPOTS_LABEL, out.as_mut_slice(), |i, slot| {
        let v = spot_pixel(ctx, i) as f32;
        if !v.is_finite() {
            return Err(fault(SPOTS_LABEL, &ctx.panel, i));
        }
        *slot = v;
        Ok(())
    })
    .map_err(collapse)
}

/// Diffuse scattering from the medium around the crystal, from a tabulated
/// amplitude profile over sin(θ)/λ. Overwrites `out`.
pub fn add_background(
    exec: &Executor,
    profile: &BackgroundProfile,
    panel: &DetectorPanel,
    spectrum: &BeamSpectrum,
    thickness_factor: f64,
    out: &mut PixelBuffer<f32>,
) -> Result<()> {
    out.expect_dims(panel.dims())?;
    if !thickness_factor.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "thickness factor {thickness_factor} is not finite"
        )));
    }
    let scale = R_E_SQR * spectrum.fluence() * thickness_factor / spectrum.total_weight();
    let fast_pixels = panel.fast_pixels();
    let incident = *spectrum.beam_direction();
    exec.try_for_each_slot(BACKGROUND_LABEL, out.as_mut_slice(), |i, slot| {
        let (slow, fast) = ((i / fast_pixels) as f64 + 0.5, (i % fast_pixels) as f64 + 0.5);
        let (_, omega, two_theta) = scatter_geometry(panel, &incident, slow, fast);
        let polar = spectrum.polarization_factor(two_theta);
        let sin_theta = (0.5 * two_theta).sin();
        let mut acc = 0.0;
        for sample in spectrum.samples() {
            let f = profile.interp_background_f(sin_theta / sample.wavelength);
            acc += sample.weight * f * f;
        }
        let v = (scale * polar * omega * acc) as f32;
        if !v.is_finite() {
            return Err(fault(BACKGROUND_LABEL, panel, i));
        }
        *slot = v;
        Ok(())
    })
    .map_err(collapse)
}

/// `lhs[j] += f64::from(rhs[j])`.
pub fn add_array(exec: &Executor, lhs: &mut PixelBuffer<f64>, rhs: &PixelBuffer<f32>) -> Result<()> {
    lhs.expect_dims(rhs.dims())?;
    let rhs = rhs.as_slice();
    exec.try_for_each_slot::<_, std::convert::Infallible, _>(ADD_ARRAY_LABEL, lhs.as_mut_slice(), |j, slot| {
        *slot += f64::from(rhs[j]);
        Ok(())
    })
    .unwrap_or_else(|f| match f.error {});
    Ok(())
}
