//! One configured scene and the three-kernel pipeline that turns it into an
//! image: spots, background, then both accumulated into a 64-bit buffer.

use std::sync::Arc;

use crate::error::Result;
use crate::exec::Executor;
use crate::kernels::{
    add_array, add_background, nanobragg_spots, PixelBuffer, SpotsContext, ADD_ARRAY_LABEL, BACKGROUND_LABEL,
    SPOTS_LABEL,
};
use crate::model::{
    generate_mosaic_rotations, random_orientation, BackgroundProfile, BeamSpectrum, CrystalModel, DetectorPanel,
    MosaicDomainSet, Orientation, StructureFactorTable, UnitCell,
};

#[derive(Debug, Clone, PartialEq)]
pub enum OrientationSource {
    Fixed(Orientation),
    /// Drawn from the image seed, one fresh crystal per shot.
    RandomPerImage,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MosaicSource {
    Explicit(MosaicDomainSet),
    /// Regenerated from the image seed.
    Generated { count: usize, spread_deg: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSpec {
    pub profile: BackgroundProfile,
    pub thickness_factor: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub cell: UnitCell,
    pub n_cells: [u32; 3],
    pub orientation: OrientationSource,
    pub mosaic: MosaicSource,
    pub sf_table: Arc<StructureFactorTable>,
    pub panel: DetectorPanel,
    pub spectrum: BeamSpectrum,
    pub background: Option<BackgroundSpec>,
    pub oversample: u32,
}

impl Simulation {
    /// The crystal hit by the shot with this seed.
    pub fn crystal(&self, image_seed: u64) -> Result<CrystalModel> {
        let orientation = match &self.orientation {
            OrientationSource::Fixed(o) => *o,
            OrientationSource::RandomPerImage => random_orientation(image_seed),
        };
        let mosaic = match &self.mosaic {
            MosaicSource::Explicit(set) => set.clone(),
            MosaicSource::Generated { count, spread_deg } => {
                generate_mosaic_rotations(image_seed, *spread_deg, *count)?
            }
        };
        CrystalModel::new(self.cell, orientation, self.n_cells, mosaic, Arc::clone(&self.sf_table))
    }

    pub fn spots_context(&self, image_seed: u64) -> Result<SpotsContext> {
        SpotsContext::new(
            self.crystal(image_seed)?,
            self.panel.clone(),
            self.spectrum.clone(),
            self.oversample,
        )
    }

    /// Runs spots → background → two `add_array`s, timing each kernel on
    /// `exec`'s log, and returns the 64-bit accumulator.
    pub fn simulate(&self, exec: &Executor, image_seed: u64) -> Result<PixelBuffer<f64>> {
        let ctx = self.spots_context(image_seed)?;
        let (slow, fast) = self.panel.dims();

        let mut spots = PixelBuffer::<f32>::zeros(slow, fast);
        exec.kernel_timer(SPOTS_LABEL, || nanobragg_spots(exec, &ctx, &mut spots)).0?;

        let background = match &self.background {
            Some(bg) => {
                let mut out = PixelBuffer::<f32>::zeros(slow, fast);
                exec.kernel_timer(BACKGROUND_LABEL, || {
                    add_background(exec, &bg.profile, &self.panel, &self.spectrum, bg.thickness_factor, &mut out)
                })
                .0?;
                Some(out)
            }
            None => None,
        };

        let mut acc = PixelBuffer::<f64>::zeros(slow, fast);
        for rhs in std::iter::once(&spots).chain(background.as_ref()) {
            exec.kernel_timer(ADD_ARRAY_LABEL, || add_array(exec, &mut acc, rhs)).0?;
        }
        Ok(acc)
    }
}
