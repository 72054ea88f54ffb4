//! Secular frequencies of trap A from a simulated orbit, against the
//! Mathieu parameters of the drive.

use rydtrap::dressing::GROUND;
use rydtrap::dynamics::{self, AtomSpec, IntegratorOptions, State};
use rydtrap::presets::TRAP_A;
use rydtrap::stark::polarizability_hz;
use rydtrap::units;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hp = TRAP_A.potential()?;
    let d = TRAP_A.drive;
    let alpha = polarizability_hz(&GROUND);
    let q = dynamics::mathieu_q(&hp, &d, alpha, units::MASS_RB87);
    println!("q = {q:.4?}, {:?}", dynamics::stability_classify(q));
    println!("threshold drive frequency {:.1} Hz", dynamics::threshold_omega(&hp, &d, alpha, units::MASS_RB87) / units::TWO_PI);
    let atom = AtomSpec::bare(alpha);
    let s0 = State { r: [0.0; 3], v: [12e-3, 0.0, 12e-3] };
    let tr = dynamics::integrate(&atom, &hp, &d, s0, 1.0, &IntegratorOptions::for_drive(&d))?;
    let (fr, fz) = dynamics::macromotion_frequencies(&tr, &d)?;
    println!("macromotion: transverse {fr:.1} Hz, axial {fz:.1} Hz");
    Ok(())
}
