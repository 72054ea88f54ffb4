//! Stark map of the m = 49 block around n = 50 and quartic fits of the
//! clock and intermediate levels, printed as polynomial CSV.

use rydtrap::dressing::{EXCITED, GROUND, I_HIGH, I_LOW};
use rydtrap::stark::{self, FitOptions, StarkBasis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("alpha_g = {:.2} Hz/(V/m)^2", stark::polarizability_hz(&GROUND));
    println!("alpha_e = {:.2} Hz/(V/m)^2", stark::polarizability_hz(&EXCITED));
    println!("slope of {I_LOW} = {:.4e} Hz/(V/m)", stark::linear_stark_slope(&I_LOW));

    let fields: Vec<f64> = (0..=40).map(|k| 200.0 + 10.0 * k as f64).collect();
    let scan = stark::stark_scan(&StarkBasis::new(49, 50, 5)?, &fields)?;
    let mut polys = Vec::new();
    for level in [GROUND, I_LOW, I_HIGH] {
        polys.push(stark::fit_polynomial(level, &scan.series(&level).unwrap(), FitOptions::default())?);
    }
    let pert = stark::perturbative_energy(&GROUND, 400.0)?.shift_hz;
    println!("g at 400 V/m: diagonalized {:.1} Hz, second order {:.1} Hz", polys[0].value(400.0), pert);
    stark::write_polynomials_csv(std::io::stdout(), &polys)?;
    Ok(())
}
