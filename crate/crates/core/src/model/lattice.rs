use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::mosaic::MosaicDomainSet;
use super::tables::StructureFactorTable;
use crate::error::{Error, Result};

const ROTATION_TOL: f64 = 1e-10;

/// Unit cell edges in Å and angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCell {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl UnitCell {
    pub fn new(a: f64, b: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let cell = UnitCell {
            a,
            b,
            c,
            alpha,
            beta,
            gamma,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn cubic(a: f64) -> Result<Self> {
        Self::new(a, a, a, 90.0, 90.0, 90.0)
    }

    /// Metric determinants at or below this are treated as flat: angle sets
    /// that sum to a degenerate cell land here through round-off, not at 0.
    pub const MIN_METRIC_DETERMINANT: f64 = 1e-12;

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidCell(format!("edge {name} = {v} must be > 0")));
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0 && v < 180.0) {
                return Err(Error::InvalidCell(format!(
                    "angle {name} = {v} must lie in (0, 180) degrees"
                )));
            }
        }
        let det = self.metric_determinant();
        if det <= Self::MIN_METRIC_DETERMINANT {
            return Err(Error::InvalidCell(format!(
                "angles {}/{}/{} do not form a cell (metric determinant {det:e})",
                self.alpha, self.beta, self.gamma
            )));
        }
        Ok(())
    }

    /// Determinant of the normalized metric tensor,
    /// `1 - cos²α - cos²β - cos²γ + 2 cosα cosβ cosγ`.
    pub fn metric_determinant(&self) -> f64 {
        let (ca, cb, cg) = self.cosines();
        1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg
    }

    fn cosines(&self) -> (f64, f64, f64) {
        (
            self.alpha.to_radians().cos(),
            self.beta.to_radians().cos(),
            self.gamma.to_radians().cos(),
        )
    }

    /// Real-space basis, one vector per row: `a` along x, `b` in the x–y plane.
    pub fn real_basis(&self) -> Result<Matrix3<f64>> {
        let det = self.metric_determinant();
        if det <= Self::MIN_METRIC_DETERMINANT {
            return Err(Error::InvalidCell(format!(
                "metric determinant {det:e} is not positive"
            )));
        }
        let (ca, cb, cg) = self.cosines();
        let sg = self.gamma.to_radians().sin();
        let a = Vector3::new(self.a, 0.0, 0.0);
        let b = Vector3::new(self.b * cg, self.b * sg, 0.0);
        let c = Vector3::new(
            self.c * cb,
            self.c * (ca - cb * cg) / sg,
            self.c * det.sqrt() / sg,
        );
        Ok(Matrix3::from_rows(&[a.transpose(), b.transpose(), c.transpose()]))
    }

    pub fn volume(&self) -> f64 {
        self.a * self.b * self.c * self.metric_determinant().max(0.0).sqrt()
    }
}

/// Reciprocal basis rows `a*, b*, c*` in Å⁻¹, satisfying `aᵢ·a*ⱼ = δᵢⱼ`.
pub fn reciprocal_basis(cell: &UnitCell) -> Result<Matrix3<f64>> {
    let real = cell.real_basis()?;
    let (a, b, c) = (
        real.row(0).transpose(),
        real.row(1).transpose(),
        real.row(2).transpose(),
    );
    let volume = a.dot(&b.cross(&c));
    if !(volume.is_finite() && volume > 0.0) {
        return Err(Error::InvalidCell(format!("cell volume {volume:e} is not positive")));
    }
    let a_star = b.cross(&c) / volume;
    let b_star = c.cross(&a) / volume;
    let c_star = a.cross(&b) / volume;
    Ok(Matrix3::from_rows(&[
        a_star.transpose(),
        b_star.transpose(),
        c_star.transpose(),
    ]))
}

/// Checks `UᵀU = I` and `det U = +1` to within `1e-10`.
pub fn check_rotation(m: &Matrix3<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGeometry("rotation has non-finite entries".into()));
    }
    let off = (m.transpose() * m - Matrix3::identity()).abs().max();
    if off > ROTATION_TOL {
        return Err(Error::InvalidGeometry(format!(
            "matrix is not orthonormal (max |UᵀU - I| = {off:e})"
        )));
    }
    let det = m.determinant();
    if (det - 1.0).abs() > ROTATION_TOL {
        return Err(Error::InvalidGeometry(format!(
            "rotation determinant is {det}, expected +1"
        )));
    }
    Ok(())
}

/// Crystal orientation in the lab frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation(Matrix3<f64>);

impl Orientation {
    pub fn new(u: Matrix3<f64>) -> Result<Self> {
        check_rotation(&u)?;
        Ok(Orientation(u))
    }

    pub fn identity() -> Self {
        Orientation(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

impl Default for Orientation {
    fn default() -> Self {
        Self::identity()
    }
}

/// A crystal: cell, orientation, domain size, mosaic blocks, and amplitudes.
///
/// Construction precomputes one rotated real-space basis per mosaic domain,
/// so [`CrystalModel::fractional_miller`] is a single matrix-vector product.
#[derive(Debug, Clone)]
pub struct CrystalModel {
    cell: UnitCell,
    orientation: Orientation,
    n_cells: [u32; 3],
    mosaic: MosaicDomainSet,
    sf_table: Arc<StructureFactorTable>,
    domain_bases: Vec<Matrix3<f64>>,
}

impl CrystalModel {
    pub fn new(
        cell: UnitCell,
        orientation: Orientation,
        n_cells: [u32; 3],
        mosaic: MosaicDomainSet,
        sf_table: impl Into<Arc<StructureFactorTable>>,
    ) -> Result<Self> {
        cell.validate()?;
        if n_cells.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "cells per edge must be >= 1, got {n_cells:?}"
            )));
        }
        let real = cell.real_basis()?;
        // Row i of `real * Uᵀ * Mᵀ` is M·U·aᵢ.
        let domain_bases = mosaic
            .rotations()
            .iter()
            .map(|m| real * orientation.matrix().transpose() * m.transpose())
            .collect();
        Ok(CrystalModel {
            cell,
            orientation,
            n_cells,
            mosaic,
            sf_table: sf_table.into(),
            domain_bases,
        })
    }

    pub fn cell(&self) -> &UnitCell {
        &self.cell
    }

    pub fn orientation(&self) -> &Orientation {
        &self.orientation
    }

    pub fn n_cells(&self) -> [u32; 3] {
        self.n_cells
    }

    pub fn mosaic(&self) -> &MosaicDomainSet {
        &self.mosaic
    }

    pub fn sf_table(&self) -> &StructureFactorTable {
        &self.sf_table
    }

    pub fn n_domains(&self) -> usize {
        self.domain_bases.len()
    }

    /// Fractional Miller indices of scattering vector `q` (Å⁻¹) for one
    /// mosaic domain: the rotated real-space basis rows dotted with `q`.
    ///
    /// Panics if `mosaic_index` is out of range.
    pub fn fractional_miller(&self, mosaic_index: usize, q: &Vector3<f64>) -> Vector3<f64> {
        self.domain_bases[mosaic_index] * q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cubic_reciprocal_is_diagonal() {
        let r = reciprocal_basis(&UnitCell::cubic(100.0).unwrap()).unwrap();
        assert_relative_eq!(r, Matrix3::from_diagonal_element(0.01), epsilon = 1e-15);
    }

    #[test]
    fn orthorhombic_reciprocal() {
        let cell = UnitCell::new(10.0, 20.0, 40.0, 90.0, 90.0, 90.0).unwrap();
        let r = reciprocal_basis(&cell).unwrap();
        assert_relative_eq!(
            r,
            Matrix3::from_diagonal(&Vector3::new(0.1, 0.05, 0.025)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn triclinic_matches_inverse_transpose() {
        let cell = UnitCell::new(10.0, 12.0, 14.0, 80.0, 95.0, 100.0).unwrap();
        let real = cell.real_basis().unwrap();
        // LU inverse, an independent route from the cross-product construction.
        let oracle = real.try_inverse().unwrap().transpose();
        let r = reciprocal_basis(&cell).unwrap();
        for (x, y) in r.iter().zip(oracle.iter()) {
            assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn degenerate_angles_rejected() {
        // alpha = beta + gamma collapses the cell into a plane
        let err = UnitCell::new(10.0, 10.0, 10.0, 120.0, 60.0, 60.0).unwrap_err();
        assert!(matches!(err, Error::InvalidCell(_)), "{err}");
        assert!(UnitCell::new(10.0, 10.0, 10.0, 170.0, 170.0, 170.0).is_err());
        // analytically flat; round-off leaves a determinant of about 1e-16
        assert!(UnitCell::new(10.0, 10.0, 10.0, 120.0, 120.0, 120.0).is_err());
        assert!(UnitCell::new(10.0, 10.0, 10.0, 119.0, 119.0, 119.0).is_ok());
        assert!(UnitCell::new(0.0, 10.0, 10.0, 90.0, 90.0, 90.0).is_err());
        assert!(UnitCell::new(10.0, 10.0, 10.0, 180.0, 90.0, 90.0).is_err());
    }

    #[test]
    fn orientation_rejects_non_rotations() {
        assert!(Orientation::new(Matrix3::from_diagonal_element(2.0)).is_err());
        // reflection: orthonormal but det -1
        assert!(Orientation::new(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))).is_err());
        assert!(Orientation::new(Matrix3::identity()).is_ok());
    }

    fn unit_crystal(orientation: Orientation) -> CrystalModel {
        CrystalModel::new(
            UnitCell::cubic(100.0).unwrap(),
            orientation,
            [1, 1, 1],
            MosaicDomainSet::identity(),
            StructureFactorTable::empty(0.0),
        )
        .unwrap()
    }

    #[test]
    fn miller_at_forward_beam_is_zero() {
        let xtal = unit_crystal(Orientation::identity());
        assert_eq!(xtal.fractional_miller(0, &Vector3::zeros()), Vector3::zeros());
    }

    #[test]
    fn miller_exact_bragg() {
        let xtal = unit_crystal(Orientation::identity());
        let hkl = xtal.fractional_miller(0, &Vector3::new(0.01, 0.0, 0.0));
        assert_relative_eq!(hkl, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn miller_rotated_matches_explicit_algebra() {
        let u = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1).into_inner();
        let m = nalgebra::Rotation3::from_axis_angle(&Vector3::y_axis(), 0.002).into_inner();
        let cell = UnitCell::new(10.0, 12.0, 14.0, 80.0, 95.0, 100.0).unwrap();
        let xtal = CrystalModel::new(
            cell,
            Orientation::new(u).unwrap(),
            [1, 1, 1],
            MosaicDomainSet::explicit(vec![Matrix3::identity(), m], 0.0).unwrap(),
            StructureFactorTable::empty(0.0),
        )
        .unwrap();
        let q = Vector3::new(0.031, -0.052, 0.017);
        let real = cell.real_basis().unwrap();
        for (idx, mos) in [Matrix3::identity(), m].iter().enumerate() {
            let expect = Vector3::from_iterator((0..3).map(|i| {
                let axis = mos * (u * real.row(i).transpose());
                axis.dot(&q)
            }));
            assert_relative_eq!(xtal.fractional_miller(idx, &q), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_cells_rejected() {
        let err = CrystalModel::new(
            UnitCell::cubic(50.0).unwrap(),
            Orientation::identity(),
            [1, 0, 1],
            MosaicDomainSet::identity(),
            StructureFactorTable::empty(0.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }
}
