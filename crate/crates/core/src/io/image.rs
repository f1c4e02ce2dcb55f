//! Raw image output. `<stem>.bin` holds little-endian `f32` pixels, row-major
//! with the slow index outermost, downcast (round to nearest even) from the
//! 64-bit accumulator. `<stem>.json` is the sidecar: geometry, spectrum,
//! seed, a CRC-32 of the `.bin` bytes, and an echo of the config.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{PixelBuffer, PixelValue};
use crate::sim::Simulation;

pub const FORMAT: &str = "xtrace-raw-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    /// Records that pixels were narrowed from the 64-bit accumulator.
    pub downcast: String,
    pub slow_pixels: usize,
    pub fast_pixels: usize,
    pub pixel_size_m: f64,
    pub distance_m: f64,
    pub wavelengths_a: Vec<f64>,
    pub weights: Vec<f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_index: Option<u64>,
    pub crc32: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// Everything in a sidecar except what is derived from the pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMeta {
    pub pixel_size_m: f64,
    pub distance_m: f64,
    pub wavelengths_a: Vec<f64>,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub image_index: Option<u64>,
    pub config: Option<serde_json::Value>,
}

impl ImageMeta {
    pub fn for_image(sim: &Simulation, seed: u64, image_index: Option<u64>) -> Self {
        let samples = sim.spectrum.samples();
        ImageMeta {
            pixel_size_m: sim.panel.pixel_size(),
            distance_m: sim.panel.distance(),
            wavelengths_a: samples.iter().map(|s| s.wavelength).collect(),
            weights: samples.iter().map(|s| s.weight).collect(),
            seed,
            image_index,
            config: None,
        }
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = Some(config);
        self
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s: OsString = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// `(stem.bin, stem.json)`
pub fn image_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (with_ext(stem, "bin"), with_ext(stem, "json"))
}

/// Pixels narrowed to `f32` exactly as [`write_image`] stores them.
pub fn downcast(buf: &PixelBuffer<f64>) -> Vec<f32> {
    buf.as_slice().iter().map(|&v| v as f32).collect()
}

pub fn encode_payload(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Writes `<stem>.bin` and `<stem>.json`. Refuses non-finite pixels.
pub fn write_image(buf: &PixelBuffer<f64>, stem: impl AsRef<Path>, meta: &ImageMeta) -> Result<Sidecar> {
    let stem = stem.as_ref();
    let (slow, fast) = buf.dims();
    let narrowed = downcast(buf);
    // also catches finite f64 values that overflow f32
    if let Some(i) = narrowed.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalFault {
            kernel: "write_image".into(),
            index: i,
            slow: i / fast,
            fast: i % fast,
        });
    }
    let bytes = encode_payload(&narrowed);
    let sidecar = Sidecar {
        format: FORMAT.into(),
        dtype: "f32".into(),
        byte_order: "little".into(),
        layout: "row-major, slow outermost".into(),
        downcast: "f64 -> f32, round to nearest even".into(),
        slow_pixels: slow,
        fast_pixels: fast,
        pixel_size_m: meta.pixel_size_m,
        distance_m: meta.distance_m,
        wavelengths_a: meta.wavelengths_a.clone(),
        weights: meta.weights.clone(),
        seed: meta.seed,
        image_index: meta.image_index,
        crc32: crc32fast::hash(&bytes),
        config: meta.config.clone(),
    };
    let (bin, json) = image_paths(stem);
    std::fs::write(&bin, &bytes).map_err(|e| Error::io(&bin, e))?;
    let mut file = std::fs::File::create(&json).map_err(|e| Error::io(&json, e))?;
    serde_json::to_writer_pretty(&mut file, &sidecar)
        .map_err(|e| Error::io(&json, e.into()))?;
    file.write_all(b"\n").map_err(|e| Error::io(&json, e))?;
    Ok(sidecar)
}

/// Reads a `.bin` image and its `.json` sidecar, verifying the CRC.
pub fn read_image(bin_path: impl AsRef<Path>) -> Result<(PixelBuffer<f32>, Sidecar)> {
    let bin = bin_path.as_ref();
    let json = bin.with_extension("json");
    let text = std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: json.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let field_err = |key: &str, message: String| Error::Parse {
        path: json.clone(),
        line: field_line(&text, key),
        message: format!("`{key}`: {message}"),
    };
    for (key, got, want) in [
        ("format", &sidecar.format, FORMAT),
        ("dtype", &sidecar.dtype, "f32"),
        ("byte_order", &sidecar.byte_order, "little"),
    ] {
        if got != want {
            return Err(field_err(key, format!("expected {want:?}, found {got:?}")));
        }
    }
    let bytes = std::fs::read(bin).map_err(|e| Error::io(bin, e))?;
    let actual = crc32fast::hash(&bytes);
    if actual != sidecar.crc32 {
        return Err(Error::Crc {
            path: bin.to_path_buf(),
            expected: sidecar.crc32,
            actual,
        });
    }
    let expect_len = sidecar.slow_pixels * sidecar.fast_pixels * 4;
    if bytes.len() != expect_len {
        return Err(field_err(
            "slow_pixels",
            format!(
                "dims {}x{} need {expect_len} bytes but {} holds {}",
                sidecar.slow_pixels,
                sidecar.fast_pixels,
                bin.display(),
                bytes.len()
            ),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let buf = PixelBuffer::from_vec(sidecar.slow_pixels, sidecar.fast_pixels, values)?;
    Ok((buf, sidecar))
}

/// 1-based line of `"key"` in the sidecar text, 0 if absent.
fn field_line(text: &str, key: &str) -> usize {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map_or(0, |i| i + 1)
}

/// Lower-index percentile: the sorted value at `floor(q · (n - 1))`.
fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(q * (values.len() - 1) as f64).floor() as usize]
}

/// 8-bit gray levels, linear from 0 to the 99.9th percentile and clipped
/// above. A constant image maps to all zeros.
pub fn preview_levels<T: PixelValue>(buf: &PixelBuffer<T>) -> Result<Vec<u8>> {
    if buf.is_empty() {
        return Err(Error::InvalidArgument("cannot preview an empty image".into()));
    }
    let mut values: Vec<f64> = buf.as_slice().iter().map(|v| v.to_f64()).collect();
    let top = percentile(&mut values, 0.999);
    let (lo, hi) = (values[0], values[values.len() - 1]);
    if lo == hi || top.is_nan() || top <= 0.0 {
        return Ok(vec![0; buf.len()]);
    }
    Ok(buf
        .as_slice()
        .iter()
        .map(|v| (v.to_f64() / top * 255.0).clamp(0.0, 255.0).round() as u8)
        .collect())
}

/// Binary PGM (`P5`) preview.
pub fn write_preview<T: PixelValue>(buf: &PixelBuffer<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let levels = preview_levels(buf)?;
    let (slow, fast) = buf.dims();
    let mut out = format!("P5\n{fast} {slow}\n255\n").into_bytes();
    out.extend_from_slice(&levels);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
