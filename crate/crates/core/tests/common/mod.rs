//! Shared test support: an independent scalar reference pipeline, a bitwise
//! CRC-32, and small scene builders. The reference code shares nothing with
//! the library beyond plain numbers.

#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Matrix3;
use xtrace::model::{
    BackgroundProfile, BeamSpectrum, DetectorPanel, MosaicDomainSet, Orientation, SpectrumSample,
    StructureFactorTable, UnitCell,
};
use xtrace::sim::{BackgroundSpec, MosaicSource, OrientationSource, Simulation};

pub type V3 = [f64; 3];
pub type M3 = [[f64; 3]; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn mat_vec(m: &M3, v: V3) -> V3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// Everything the reference pipeline needs, as plain numbers.
#[derive(Clone, Debug)]
pub struct Scene {
    /// a, b, c (Å), alpha, beta, gamma (degrees)
    pub cell: [f64; 6],
    pub n_cells: [u32; 3],
    pub orientation: M3,
    pub mosaic: Vec<M3>,
    pub hkl: HashMap<(i32, i32, i32), f64>,
    pub default_f: f64,
    pub slow_pixels: usize,
    pub fast_pixels: usize,
    pub pixel_size: f64,
    pub distance: f64,
    pub beam_center: (f64, f64),
    pub fast_axis: V3,
    pub slow_axis: V3,
    /// (wavelength Å, weight)
    pub spectrum: Vec<(f64, f64)>,
    pub fluence: f64,
    pub polarization: bool,
    pub oversample: u32,
    /// (stol, amplitude)
    pub background: Option<Vec<(f64, f64)>>,
    pub thickness: f64,
}

pub const R_E_SQR: f64 = 7.94079248e-30;

fn real_axes(cell: [f64; 6]) -> [V3; 3] {
    let [a, b, c, al, be, ga] = cell;
    let (al, be, ga) = (al.to_radians(), be.to_radians(), ga.to_radians());
    let cy = (al.cos() - be.cos() * ga.cos()) / ga.sin();
    let cz = (1.0 - be.cos().powi(2) - cy * cy).sqrt();
    [
        [a, 0.0, 0.0],
        [b * ga.cos(), b * ga.sin(), 0.0],
        [c * be.cos(), c * cy, c * cz],
    ]
}

/// |Σₙ exp(2πi·x·n)|² for n in 0..count.
fn grating_power(x: f64, count: u32) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for n in 0..count {
        let phase = 2.0 * PI * x * f64::from(n);
        re += phase.cos();
        im += phase.sin();
    }
    re * re + im * im
}

fn round_half_away(x: f64) -> i32 {
    (x.signum() * (x.abs() + 0.5).floor()) as i32
}

fn interp(points: &[(f64, f64)], x: f64) -> f64 {
    if x <= points[0].0 {
        return points[0].1;
    }
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    points[points.len() - 1].1
}

impl Scene {
    fn position(&self, slow: f64, fast: f64) -> V3 {
        let ds = (slow - self.beam_center.0) * self.pixel_size;
        let df = (fast - self.beam_center.1) * self.pixel_size;
        [
            ds * self.slow_axis[0] + df * self.fast_axis[0],
            ds * self.slow_axis[1] + df * self.fast_axis[1],
            self.distance + ds * self.slow_axis[2] + df * self.fast_axis[2],
        ]
    }

    /// (unit direction, solid angle, polarization, cos 2θ) at a panel point.
    fn geometry(&self, slow: f64, fast: f64) -> (V3, f64, f64, f64) {
        let p = self.position(slow, fast);
        let r = norm(p);
        let n = cross(self.fast_axis, self.slow_axis);
        let omega = self.pixel_size * self.pixel_size / (r * r) * dot(p, n).abs() / r;
        let dir = [p[0] / r, p[1] / r, p[2] / r];
        let cos2t = dir[2];
        let polar = if self.polarization {
            0.5 * (1.0 + cos2t * cos2t)
        } else {
            1.0
        };
        (dir, omega, polar, cos2t)
    }

    /// Bragg-spot photons at one pixel, straight loops.
    pub fn spots_pixel(&self, slow: usize, fast: usize) -> f64 {
        let axes = real_axes(self.cell);
        let oriented: Vec<V3> = axes.iter().map(|&v| mat_vec(&self.orientation, v)).collect();
        let os = self.oversample;
        let mut sum = 0.0;
        for i in 0..os {
            for j in 0..os {
                let s = slow as f64 + (f64::from(i) + 0.5) / f64::from(os);
                let f = fast as f64 + (f64::from(j) + 0.5) / f64::from(os);
                let (dir, omega, polar, _) = self.geometry(s, f);
                for &(lambda, weight) in &self.spectrum {
                    let q = [dir[0] / lambda, dir[1] / lambda, (dir[2] - 1.0) / lambda];
                    for m in &self.mosaic {
                        let h = dot(mat_vec(m, oriented[0]), q);
                        let k = dot(mat_vec(m, oriented[1]), q);
                        let l = dot(mat_vec(m, oriented[2]), q);
                        let key = (round_half_away(h), round_half_away(k), round_half_away(l));
                        let amp = *self.hkl.get(&key).unwrap_or(&self.default_f);
                        let latt = grating_power(h, self.n_cells[0])
                            * grating_power(k, self.n_cells[1])
                            * grating_power(l, self.n_cells[2]);
                        sum += weight * omega * polar * amp * amp * latt;
                    }
                }
            }
        }
        let wsum: f64 = self.spectrum.iter().map(|s| s.1).sum();
        let norm = wsum * self.mosaic.len() as f64 * f64::from(os * os);
        R_E_SQR * self.fluence * sum / norm
    }

    /// Background photons at one pixel, evaluated at the pixel centre.
    pub fn background_pixel(&self, slow: usize, fast: usize) -> f64 {
        let Some(points) = &self.background else { return 0.0 };
        let (_, omega, polar, cos2t) = self.geometry(slow as f64 + 0.5, fast as f64 + 0.5);
        let sin_theta = ((1.0 - cos2t) / 2.0).sqrt();
        let mut sum = 0.0;
        for &(lambda, weight) in &self.spectrum {
            let f = interp(points, sin_theta / lambda);
            sum += weight * f * f;
        }
        let wsum: f64 = self.spectrum.iter().map(|s| s.1).sum();
        R_E_SQR * self.fluence * self.thickness * polar * omega * sum / wsum
    }

    /// Spots and background each rounded to 32-bit, then summed in 64-bit,
    /// like the accumulate stage.
    pub fn pipeline(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.slow_pixels * self.fast_pixels);
        for s in 0..self.slow_pixels {
            for f in 0..self.fast_pixels {
                let spots = self.spots_pixel(s, f) as f32;
                let bg = self.background_pixel(s, f) as f32;
                let mut acc = 0.0f64;
                acc += f64::from(spots);
                if self.background.is_some() {
                    acc += f64::from(bg);
                }
                out.push(acc);
            }
        }
        out
    }

    pub fn to_simulation(&self) -> Simulation {
        let [a, b, c, al, be, ga] = self.cell;
        let m = |r: &M3| Matrix3::from_fn(|i, j| r[i][j]);
        Simulation {
            cell: UnitCell::new(a, b, c, al, be, ga).unwrap(),
            n_cells: self.n_cells,
            orientation: OrientationSource::Fixed(Orientation::new(m(&self.orientation)).unwrap()),
            mosaic: MosaicSource::Explicit(
                MosaicDomainSet::explicit(self.mosaic.iter().map(m).collect(), 0.0).unwrap(),
            ),
            sf_table: StructureFactorTable::new(self.hkl.clone(), self.default_f).unwrap().into(),
            panel: DetectorPanel::new(
                self.slow_pixels,
                self.fast_pixels,
                self.pixel_size,
                self.distance,
                self.beam_center,
                self.fast_axis.into(),
                self.slow_axis.into(),
            )
            .unwrap(),
            spectrum: BeamSpectrum::new(
                self.spectrum
                    .iter()
                    .map(|&(wavelength, weight)| SpectrumSample { wavelength, weight })
                    .collect(),
                self.fluence,
                self.polarization,
                [0.0, 0.0, 1.0].into(),
            )
            .unwrap(),
            background: self.background.as_ref().map(|p| BackgroundSpec {
                profile: BackgroundProfile::new(p.clone()).unwrap(),
                thickness_factor: self.thickness,
            }),
            oversample: self.oversample,
        }
    }
}

/// Rotation by `deg` degrees about a (not necessarily unit) axis, written
/// out element by element.
pub fn rotation(axis: V3, deg: f64) -> M3 {
    let n = norm(axis);
    let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = deg.to_radians().sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

/// 4×4 panel, N = 5, two mosaic domains, two wavelengths, oversample 2,
/// polarization on, a small HKL table and a two-point background.
pub fn reference_scene() -> Scene {
    let mut hkl = HashMap::new();
    hkl.insert((1, 0, 0), 50.0);
    hkl.insert((0, 1, 0), 35.0);
    hkl.insert((1, 1, 0), 20.0);
    hkl.insert((-1, 0, 1), 12.5);
    hkl.insert((2, -1, 0), 7.0);
    Scene {
        cell: [100.0, 100.0, 100.0, 90.0, 90.0, 90.0],
        n_cells: [5, 5, 5],
        orientation: rotation([0.3, -0.5, 0.8], 17.0),
        mosaic: vec![rotation([1.0, 0.0, 0.0], 0.0), rotation([0.2, 1.0, -0.4], 0.35)],
        hkl,
        default_f: 3.0,
        slow_pixels: 4,
        fast_pixels: 4,
        pixel_size: 4.0e-3,
        distance: 0.08,
        beam_center: (2.0, 2.0),
        fast_axis: [1.0, 0.0, 0.0],
        slow_axis: [0.0, 1.0, 0.0],
        spectrum: vec![(1.0, 0.7), (1.02, 0.3)],
        fluence: 1.0e24,
        polarization: true,
        oversample: 2,
        background: Some(vec![(0.0, 2.5), (0.5, 7.5)]),
        thickness: 1.0e4,
    }
}

/// Standard reflected CRC-32 (polynomial 0xEDB88320), one bit at a time.
pub fn crc32_bitwise(bytes: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc ^= u32::from(b);
        for _ in 0..8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ 0xEDB8_8320 } else { crc >> 1 };
        }
    }
    !crc
}

/// Largest per-element relative difference.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn data_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

pub fn fixtures_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"))
}

/// Minimal config text on an `n`×`n` panel; no HKL file, no background.
pub fn small_config_toml(n: usize) -> String {
    format!(
        r#"
[crystal]
cell = [60.0, 70.0, 80.0, 90.0, 95.0, 90.0]
n_cells = [6, 6, 6]
default_f = 20.0
random_orientation = true
mosaic_domains = 2
mosaic_spread_deg = 0.1

[detector]
slow_pixels = {n}
fast_pixels = {n}
pixel_size_m = 1.5e-4
distance_m = 0.05

[beam]
wavelength_a = 1.1
fluence = 1.0e24

[background]
points = [[0.0, 2.0], [0.3, 6.0], [0.6, 3.0]]
thickness_factor = 1.0e4

[simulation]
seed = 99
"#
    )
}

/// (fixture, text the error must contain to locate the problem)
pub const HKL_FIXTURES: &[(&str, &str)] = &[
    ("three_fields.hkl", ":2:"),
    ("five_fields.hkl", ":1:"),
    ("fractional_index.hkl", ":2: h \"1.5\""),
    ("negative_amplitude.hkl", ":1: amplitude -5"),
    ("nan_amplitude.hkl", ":1: amplitude"),
    ("inf_amplitude.hkl", ":1: amplitude"),
    ("word_amplitude.hkl", ":1: amplitude \"fifty\""),
    ("header_without_hash.hkl", ":1: h \"h\""),
    ("index_overflow.hkl", ":1: h"),
    ("comma_separated.hkl", ":1:"),
    ("bad_line_later.hkl", ":5: amplitude \"x\""),
    ("hex_index.hkl", ":1: h \"0x1\""),
];

pub const BACKGROUND_FIXTURES: &[(&str, &str)] = &[
    ("single_point.bg", "found 1"),
    ("comments_only.bg", "found 0"),
    ("empty.bg", "found 0"),
    ("decreasing.bg", "on line 3 does not exceed stol 0.3 on line 2"),
    ("repeated_stol.bg", "on line 3 does not exceed stol 0.25 on line 2"),
    ("three_fields.bg", ":1:"),
    ("one_field.bg", ":2:"),
    ("negative_stol.bg", ":1: stol -0.1"),
    ("negative_amplitude.bg", ":2: amplitude -2"),
    ("nan_amplitude.bg", ":1: amplitude"),
    ("word_stol.bg", ":1: stol \"zero\""),
    ("inf_stol.bg", ":2: stol"),
];

pub const CONFIG_FIXTURES: &[(&str, &str)] = &[
    ("unknown_key.toml", "detectro_distance"),
    ("missing_fluence.toml", "fluence"),
    ("missing_cell.toml", "cell"),
    ("string_distance.toml", "distance_m"),
    ("negative_distance.toml", "detector.distance_m"),
    ("zero_pixel_size.toml", "detector.pixel_size_m"),
    ("degenerate_cell.toml", "crystal.cell"),
    ("short_cell.toml", "cell"),
    ("zero_n_cells.toml", "crystal.n_cells"),
    ("unknown_section.toml", "detectorx"),
    ("wavelength_and_spectrum.toml", "beam.spectrum"),
    ("zero_weights.toml", "beam.spectrum"),
    ("zero_oversample.toml", "simulation.oversample"),
    ("skewed_orientation.toml", "crystal.orientation"),
    ("missing_hkl_file.toml", "no_such_file.hkl"),
    ("unterminated_string.toml", "hkl_file"),
    ("zero_images.toml", "campaign.images"),
];

pub fn check_fixtures<T: std::fmt::Debug>(
    dir: &str,
    cases: &[(&str, &str)],
    load: impl Fn(&Path) -> xtrace::Result<T>,
) -> Vec<String> {
    assert!(cases.len() >= 10);
    let on_disk = std::fs::read_dir(fixtures_dir().join(dir)).unwrap().count();
    assert_eq!(on_disk, cases.len(), "every fixture in {dir}/ needs an expectation");
    let mut failures = Vec::new();
    for (name, needle) in cases {
        let path = fixtures_dir().join(dir).join(name);
        match load(&path) {
            Ok(v) => failures.push(format!("{name}: accepted as {v:?}")),
            Err(e) => {
                let msg = e.to_string();
                if !msg.contains(needle) {
                    failures.push(format!("{name}: {msg:?} lacks {needle:?}"));
                }
            }
        }
    }
    failures
}
