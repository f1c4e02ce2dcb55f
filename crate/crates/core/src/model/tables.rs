use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Miller = (i32, i32, i32);

/// Structure-factor amplitudes keyed by integer Miller triple. Lookups of
/// absent triples return `default_f`, so lookup never fails.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StructureFactorTable {
    entries: HashMap<Miller, f64>,
    default_f: f64,
}

fn check_amplitude(f: f64) -> Result<()> {
    if f.is_finite() && f >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "structure factor amplitude {f} must be finite and >= 0"
        )))
    }
}

impl StructureFactorTable {
    pub fn new(entries: HashMap<Miller, f64>, default_f: f64) -> Result<Self> {
        check_amplitude(default_f)?;
        for f in entries.values() {
            check_amplitude(*f)?;
        }
        Ok(StructureFactorTable { entries, default_f })
    }

    pub fn empty(default_f: f64) -> Self {
        Self::new(HashMap::new(), default_f).expect("valid default amplitude")
    }

    pub fn entries(&self) -> &HashMap<Miller, f64> {
        &self.entries
    }

    pub fn default_f(&self) -> f64 {
        self.default_f
    }

    pub fn with_default(mut self, default_f: f64) -> Result<Self> {
        check_amplitude(default_f)?;
        self.default_f = default_f;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Amplitude at the nearest integer triple (ties round away from zero).
    #[inline]
    pub fn lookup_f(&self, h: f64, k: f64, l: f64) -> f64 {
        if self.entries.is_empty() {
            return self.default_f;
        }
        let key = (h.round() as i32, k.round() as i32, l.round() as i32);
        self.entries.get(&key).copied().unwrap_or(self.default_f)
    }
}

/// Piecewise-linear background amplitude versus sin(θ)/λ (Å⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundProfile {
    points: Vec<(f64, f64)>,
}

impl BackgroundProfile {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "background profile needs at least 2 points, got {}",
                points.len()
            )));
        }
        for (i, &(stol, f)) in points.iter().enumerate() {
            if !(stol.is_finite() && stol >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "background point {i}: stol {stol} must be finite and >= 0"
                )));
            }
            check_amplitude(f)
                .map_err(|_| Error::InvalidArgument(format!("background point {i}: amplitude {f} must be finite and >= 0")))?;
        }
        if let Some(i) = points.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument(format!(
                "background stol must strictly increase (point {} = {}, point {} = {})",
                i,
                points[i].0,
                i + 1,
                points[i + 1].0
            )));
        }
        Ok(BackgroundProfile { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Linear interpolation, clamped to the end values outside the table.
    pub fn interp_background_f(&self, stol: f64) -> f64 {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if stol <= first.0 {
            return first.1;
        }
        if stol >= last.0 {
            return last.1;
        }
        // first index with stol_i > stol; guaranteed in 1..len
        let hi = pts.partition_point(|p| p.0 <= stol);
        let (x0, y0) = pts[hi - 1];
        let (x1, y1) = pts[hi];
        y0 + (y1 - y0) * (stol - x0) / (x1 - x0)
    }
}
