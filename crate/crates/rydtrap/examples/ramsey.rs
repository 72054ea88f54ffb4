//! Ramsey contrast of a 300 nK cloud in trap A over the first 20 ms, with
//! each clock state on its own dressed trajectory.

use rydtrap::coherence::{self, ClockSurfaces, RamseyConfig};
use rydtrap::dressing::{Dresser, MultilevelStrategy, SurfaceOptions, EXCITED, GROUND};
use rydtrap::dynamics::{InitialEnsemble, ModeProfile};
use rydtrap::par::WorkerPool;
use rydtrap::presets::TRAP_A;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = Dresser::reference()?;
    let op = d.solve_multilevel(400.0, MultilevelStrategy::fixed_rabi(200e6))?.op;
    let surfaces = ClockSurfaces {
        g: d.fit_surface(&GROUND, &op, SurfaceOptions::default())?,
        e: d.fit_surface(&EXCITED, &op, SurfaceOptions::default())?,
        profile: ModeProfile::default(),
    };
    let hp = TRAP_A.potential()?;
    let times: Vec<f64> = (0..=10).map(|k| 2e-3 * k as f64).collect();
    let cfg = RamseyConfig::new(times, InitialEnsemble::new(20, 300e-9, 21), &TRAP_A.drive);
    let res = coherence::simulate_ramsey(&surfaces, &hp, &TRAP_A.drive, &cfg, &WorkerPool::new(0))?;
    coherence::write_contrast_csv(std::io::stdout(), &res)?;
    Ok(())
}
