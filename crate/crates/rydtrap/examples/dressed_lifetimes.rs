//! Lifetimes of the dressed clock levels in the cavity and the nearest
//! sigma resonances of the dressing field.

use rydtrap::dressing::{Dresser, OperatingPoint, EXCITED, GROUND};
use rydtrap::emission::CavitySpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = Dresser::reference()?;
    let op = OperatingPoint::multilevel_reference();
    let cav = CavitySpec { l: 1e-3, z_atom: 120e-6, lambda: 6e-3, skin_depth: 30e-9 };
    for level in [GROUND, EXCITED] {
        let l = d.dressed_lifetime(&level, &op, &cav)?;
        println!("{level}: pi cascade {:.2} s, with sigma channel {:.2} s", l.tau_pi_s, l.tau_s);
    }
    let mut res = d.sigma_resonance_scan(&op, 1e9)?;
    res.sort_by(|a, b| a.detuning_hz.abs().total_cmp(&b.detuning_hz.abs()));
    for r in res.iter().take(3) {
        println!("{} -> {} ({:+} photons): {:.1} MHz", r.target, r.partner, r.photon_offset, r.detuning_hz * 1e-6);
    }
    Ok(())
}
