//! One thermal atom in trap A for 100 ms; prints a few samples and the
//! largest excursion. Pass a path to write the full trajectory CSV.

use rydtrap::dressing::GROUND;
use rydtrap::dynamics::{self, AtomSpec, InitialEnsemble, IntegratorOptions};
use rydtrap::presets::TRAP_A;
use rydtrap::stark::polarizability_hz;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hp = TRAP_A.potential()?;
    let atom = AtomSpec::bare(polarizability_hz(&GROUND));
    let s0 = InitialEnsemble::new(1, 300e-9, 1).state(0);
    let tr = dynamics::integrate(&atom, &hp, &TRAP_A.drive, s0, 0.1, &IntegratorOptions::for_drive(&TRAP_A.drive))?;
    println!("trapped: {}, samples: {}", tr.trapped, tr.samples.len());
    for s in tr.samples.iter().step_by(tr.samples.len() / 5) {
        println!("t = {:.4} s  r = ({:+.2e}, {:+.2e}, {:+.2e}) m  |E| = {:.3} V/m", s.t, s.r[0], s.r[1], s.r[2], s.e);
    }
    println!("max |r| = {:.2} um", dynamics::max_extension(&tr) * 1e6);
    if let Some(path) = std::env::args().nth(1) {
        dynamics::write_trajectory_csv(std::fs::File::create(path)?, &tr)?;
    }
    Ok(())
}
