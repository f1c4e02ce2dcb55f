mod common;

use std::collections::HashMap;

use common::{max_rel_diff, reference_scene, rotation};
use xtrace::exec::Executor;
use xtrace::kernels::{add_background, nanobragg_spots, PixelBuffer};

#[test]
fn full_pipeline_matches_scalar_reference() {
    let scene = reference_scene();
    let expected = scene.pipeline();
    let got = scene.to_simulation().simulate(&Executor::serial(), 0).unwrap();
    let diff = max_rel_diff(got.as_slice(), &expected);
    assert!(diff <= 1e-6, "max relative difference {diff:e}");
}

#[test]
fn spots_alone_match_reference_on_rotated_panel() {
    let mut scene = reference_scene();
    scene.background = None;
    let tilt = rotation([0.0, 1.0, 0.0], 20.0);
    scene.fast_axis = [tilt[0][0], tilt[1][0], tilt[2][0]];
    scene.slow_axis = [0.0, 1.0, 0.0];
    scene.beam_center = (1.3, 2.6);
    scene.oversample = 3;
    let expected = scene.pipeline();
    let got = scene.to_simulation().simulate(&Executor::workers(3).unwrap(), 0).unwrap();
    let diff = max_rel_diff(got.as_slice(), &expected);
    assert!(diff <= 1e-6, "max relative difference {diff:e}");
}

#[test]
fn background_matches_reference_single_wavelength() {
    let mut scene = reference_scene();
    scene.spectrum = vec![(1.0, 1.0)];
    scene.background = Some(vec![(0.0, 4.0), (0.05, 9.0)]);
    let sim = scene.to_simulation();
    let bg = sim.background.as_ref().unwrap();
    let mut out = PixelBuffer::<f32>::zeros(4, 4);
    add_background(&Executor::serial(), &bg.profile, &sim.panel, &sim.spectrum, bg.thickness_factor, &mut out)
        .unwrap();
    for s in 0..4 {
        for f in 0..4 {
            let want = scene.background_pixel(s, f);
            let got = f64::from(out.get(s, f).unwrap());
            assert!((got - want).abs() <= 1e-6 * want, "({s},{f}): {got} vs {want}");
        }
    }
}

#[test]
fn unit_crystal_gives_thomson_image() {
    let mut scene = reference_scene();
    scene.n_cells = [1, 1, 1];
    scene.mosaic = vec![rotation([0.0, 0.0, 1.0], 0.0)];
    scene.spectrum = vec![(1.0, 1.0)];
    scene.oversample = 1;
    scene.polarization = false;
    scene.hkl = HashMap::new();
    scene.default_f = 7.0;
    let sim = scene.to_simulation();
    let ctx = sim.spots_context(0).unwrap();
    let mut out = PixelBuffer::<f32>::zeros(4, 4);
    nanobragg_spots(&Executor::serial(), &ctx, &mut out).unwrap();
    for s in 0..4 {
        for f in 0..4 {
            let pos = sim.panel.pixel_lab_position(s, f, 0.5, 0.5).unwrap();
            let omega = sim.panel.solid_angle(&pos).unwrap();
            let want = common::R_E_SQR * 1.0e24 * 49.0 * omega;
            let got = f64::from(out.get(s, f).unwrap());
            assert!((got - want).abs() <= 1e-6 * want, "({s},{f}): {got} vs {want}");
        }
    }
}

#[test]
fn zero_fluence_and_zero_thickness_give_zeros() {
    let mut scene = reference_scene();
    scene.fluence = 0.0;
    let img = scene.to_simulation().simulate(&Executor::serial(), 0).unwrap();
    assert!(img.as_slice().iter().all(|&v| v == 0.0));

    let mut scene = reference_scene();
    scene.thickness = 0.0;
    let sim = scene.to_simulation();
    let bg = sim.background.as_ref().unwrap();
    let mut out = PixelBuffer::<f32>::zeros(4, 4);
    add_background(&Executor::serial(), &bg.profile, &sim.panel, &sim.spectrum, 0.0, &mut out).unwrap();
    assert!(out.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn flat_background_follows_solid_angle() {
    let mut scene = reference_scene();
    scene.polarization = false;
    let sim = scene.to_simulation();
    let profile = xtrace::model::BackgroundProfile::new(vec![(0.0, 3.0), (1.0, 3.0)]).unwrap();
    let mut out = PixelBuffer::<f32>::zeros(4, 4);
    add_background(&Executor::serial(), &profile, &sim.panel, &sim.spectrum.with_polarization(false), 1.0, &mut out)
        .unwrap();
    let ratios: Vec<f64> = (0..16)
        .map(|i| {
            let pos = sim.panel.pixel_lab_position(i / 4, i % 4, 0.5, 0.5).unwrap();
            f64::from(out.as_slice()[i]) / sim.panel.solid_angle(&pos).unwrap()
        })
        .collect();
    for r in &ratios {
        assert!((r - ratios[0]).abs() <= 1e-6 * ratios[0]);
    }
}

#[test]
fn reference_scene_is_not_flat() {
    let mut scene = reference_scene();
    scene.background = None;
    let v = scene.pipeline();
    let max = v.iter().cloned().fold(0.0, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max > 100.0 * min, "spots span too little dynamic range: {min:e} .. {max:e}");
}
