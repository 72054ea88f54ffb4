//! Trapping efficiency of a 1 uK cloud in trap A against drive frequency.

use rydtrap::dressing::GROUND;
use rydtrap::dynamics::{self, AtomSpec, InitialEnsemble, IntegratorOptions};
use rydtrap::field::DriveSettings;
use rydtrap::par::WorkerPool;
use rydtrap::presets::TRAP_A;
use rydtrap::stark::polarizability_hz;
use rydtrap::units;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hp = TRAP_A.potential()?;
    let atom = AtomSpec::bare(polarizability_hz(&GROUND));
    let ens = InitialEnsemble::new(20, 1e-6, 3);
    let pool = WorkerPool::new(0);
    println!("f_hz,efficiency");
    for f in (0..8).map(|k| 360.0 + 20.0 * k as f64) {
        let d = DriveSettings { omega: units::TWO_PI * f, ..TRAP_A.drive };
        let opts = IntegratorOptions { stride: None, ..IntegratorOptions::ensemble(&d) };
        let r = dynamics::trapping_efficiency(&atom, &hp, &d, &ens, 0.5, &opts, &pool)?;
        println!("{f},{}", r.fraction);
    }
    Ok(())
}
