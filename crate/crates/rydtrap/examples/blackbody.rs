//! Blackbody-induced transfer out of the clock levels in the cavity.

use rydtrap::dressing::{EXCITED, GROUND};
use rydtrap::emission::{self, CavitySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cav = CavitySpec { l: 1e-3, z_atom: 120e-6, lambda: 6e-3, skin_depth: 30e-9 };
    for (name, level) in [("g", GROUND), ("e", EXCITED)] {
        for t in [1.0, 4.0] {
            let r = emission::blackbody_rates(&level, t, &cav)?;
            println!("{name} at {t} K: {:.3} 1/s ({:.2} 1/s per thermal photon, lifetime {:.1} s)", r.rate, r.rate_per_photon, 1.0 / r.rate);
        }
    }
    Ok(())
}
