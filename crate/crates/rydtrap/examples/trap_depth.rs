//! Temperature at which half of a trap B-beta cloud survives 0.5 s.

use rydtrap::dressing::GROUND;
use rydtrap::dynamics::{self, AtomSpec, InitialEnsemble, IntegratorOptions};
use rydtrap::par::WorkerPool;
use rydtrap::presets::TRAP_B_BETA;
use rydtrap::stark::polarizability_hz;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = TRAP_B_BETA;
    let hp = p.potential()?;
    let atom = AtomSpec::bare(polarizability_hz(&GROUND));
    let ens = InitialEnsemble::new(24, 1e-6, 11);
    let opts = IntegratorOptions { stride: None, ..IntegratorOptions::ensemble(&p.drive) };
    let r = dynamics::trap_depth(&atom, &hp, &p.drive, &ens, (0.5e-6, 1e-3), 0.5, &opts, &WorkerPool::new(0))?;
    for (t, e) in &r.evaluations {
        println!("T0 = {:8.2} uK  efficiency {e:.2}", t * 1e6);
    }
    println!("depth {:.1} uK", r.t_d * 1e6);
    Ok(())
}
