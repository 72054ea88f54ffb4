//! Spontaneous emission between two gold mirrors 1 mm apart, versus atom
//! height, and the correction for a tilted quantization axis.

use rydtrap::emission::{self, CavitySpec, Orientation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>8} {:>14} {:>14}", "z [um]", "G0/G_par", "G_perp/G0");
    for z in [50e-6, 120e-6, 250e-6, 500e-6] {
        let cav = CavitySpec { l: 1e-3, z_atom: z, lambda: 6e-3, skin_depth: 30e-9 };
        let r = emission::emission_rates(&cav, 0.0)?;
        println!("{:>8.0} {:>14.1} {:>14.3}", z * 1e6, 1.0 / r.gamma_par, r.gamma_perp);
    }
    let cav = CavitySpec { l: 1e-3, z_atom: 120e-6, lambda: 6e-3, skin_depth: 30e-9 };
    let tilted = emission::emission_rates(&cav, (9.38e-3f64).powi(2))?;
    println!("with <theta^2> = (9.38 mrad)^2: G0/G_corr = {:.1}", 1.0 / tilted.gamma_corr);
    let perfect = CavitySpec { skin_depth: 0.0, ..cav };
    println!("perfect mirrors: G_par/G0 = {:.2e}", emission::decay_ratio(&perfect, Orientation::Parallel)?);
    Ok(())
}
