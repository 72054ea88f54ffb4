//! Spin echo with a pi pulse at 50 ms, for the faithful state-dependent
//! model and for both clock energies evaluated along one shared path with
//! a uniform dressing amplitude.

use rydtrap::coherence::{self, ClockSurfaces, PathMode, RamseyConfig};
use rydtrap::dressing::{Dresser, MultilevelStrategy, SurfaceOptions, EXCITED, GROUND};
use rydtrap::dynamics::{InitialEnsemble, ModeProfile};
use rydtrap::par::WorkerPool;
use rydtrap::presets::TRAP_A;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = Dresser::reference()?;
    let op = d.solve_multilevel(400.0, MultilevelStrategy::fixed_rabi(200e6))?.op;
    let g = d.fit_surface(&GROUND, &op, SurfaceOptions::default())?;
    let e = d.fit_surface(&EXCITED, &op, SurfaceOptions::default())?;
    let hp = TRAP_A.potential()?;
    let pool = WorkerPool::new(0);
    for (label, node, paths) in [("state-dependent, cos profile", 1e-2, PathMode::StateDependent), ("shared path, uniform", f64::INFINITY, PathMode::Shared)] {
        let surfaces = ClockSurfaces { g: g.clone(), e: e.clone(), profile: ModeProfile { node } };
        let mut cfg = RamseyConfig::new(vec![0.0, 0.05, 0.1], InitialEnsemble::new(20, 300e-9, 21), &TRAP_A.drive);
        cfg.t_pi = Some(0.05);
        cfg.paths = paths;
        let r = coherence::simulate_ramsey(&surfaces, &hp, &TRAP_A.drive, &cfg, &pool)?;
        let echo = r.echo_contrast.as_ref().unwrap();
        println!("{label}: no echo C(100 ms) = {:.3}, echo C(100 ms) = {:.3}", r.contrast[2], echo[2]);
    }
    Ok(())
}
