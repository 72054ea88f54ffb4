//! Dipole blockade between two n = 50 atoms and patch fields above gold.

use rydtrap::estimates::{self, BlockadeInput};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = estimates::blockade_shift(&BlockadeInput { n: 50, r12: 1e-6, delta_dd: 3e9 })?;
    println!("W_dd = {:.3} GHz, blockade shift {:.3} GHz", b.w_dd_hz * 1e-9, b.shift_hz * 1e-9);
    println!("grain voltage {:.1} mV", estimates::gold_grain_voltage() * 1e3);
    for (name, d, dr) in [("trap A", 0.5e-3, 15e-6), ("trap B", 120e-6, 5e-6)] {
        let p = estimates::patch_field(&estimates::gold_patch(d, dr))?;
        println!("{name}: E = {:.2e} V/m, variation {:.2e} V/m", p.e_patch, p.de_patch);
    }
    Ok(())
}
