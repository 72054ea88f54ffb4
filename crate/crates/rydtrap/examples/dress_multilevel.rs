//! Multilevel dressing of g and e with 6 manifolds and 4 photon blocks:
//! solve for the detuning at fixed Rabi frequency and report the residual
//! field sensitivity.

use rydtrap::dressing::{Dresser, MultilevelStrategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = Dresser::reference()?;
    let sol = d.solve_multilevel(400.0, MultilevelStrategy::fixed_rabi(200e6))?;
    println!("operating point {:?}", sol.op);
    println!("dressing frequency {:.4} GHz", d.dressing_frequency(&sol.op)? * 1e-9);
    println!("expansion {:?}", sol.expansion);
    println!("dispersion over +-1 V/m {:.2} Hz", sol.dispersion_hz);
    println!("shift for dOmega/Omega = 2e-7: {:.2} Hz", d.rabi_sensitivity(&sol.op, 2e-7)?);
    Ok(())
}
