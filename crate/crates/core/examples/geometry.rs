// Crystal and detector geometry: reciprocal basis, Miller indices of a
// scattering vector, pixel positions and solid angles, mosaic domains.
//
// cargo run --example geometry

use nalgebra::Vector3;

use xtrace::model::{
    generate_mosaic_rotations, reciprocal_basis, CrystalModel, DetectorPanel, Orientation, StructureFactorTable,
    UnitCell,
};

pub fn run_example() -> xtrace::Result<()> {
    let cell = UnitCell::new(10.0, 12.0, 14.0, 80.0, 95.0, 100.0)?;
    let real = cell.real_basis()?;
    let recip = reciprocal_basis(&cell)?;
    println!("triclinic cell volume {:.3} A^3", cell.volume());
    println!("real basis (rows a, b, c):{real:.6}");
    println!("reciprocal basis (rows a*, b*, c*):{recip:.6}");
    println!("a_i . a*_j:{:.12}", real * recip.transpose());

    let mosaic = generate_mosaic_rotations(7, 0.1, 1000)?;
    let angles: Vec<f64> = mosaic
        .rotations()
        .iter()
        .map(|r| ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees())
        .collect();
    let mean = angles.iter().sum::<f64>() / angles.len() as f64;
    let max = angles.iter().cloned().fold(0.0, f64::max);
    println!("1000 mosaic domains, spread 0.1 deg: mean angle {mean:.4} deg, max {max:.4} deg");

    let crystal = CrystalModel::new(
        UnitCell::cubic(100.0)?,
        Orientation::identity(),
        [5, 5, 5],
        mosaic,
        StructureFactorTable::empty(1.0),
    )?;
    let hkl = crystal.fractional_miller(0, &Vector3::new(0.01, 0.0, 0.0));
    println!("cubic 100 A, q = (0.01, 0, 0) 1/A, domain 0 -> hkl {:.4} {:.4} {:.4}", hkl.x, hkl.y, hkl.z);

    let panel = DetectorPanel::square(64, 1.0e-4, 0.1)?;
    for (slow, fast) in [(32, 32), (32, 63), (0, 0)] {
        let pos = panel.pixel_lab_position(slow, fast, 0.0, 0.0)?;
        let omega = panel.solid_angle(&pos)?;
        println!(
            "pixel ({slow:2}, {fast:2}) at ({:+.5}, {:+.5}, {:.5}) m, solid angle {omega:.6e} sr",
            pos.x, pos.y, pos.z
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
