//! Cancel the differential Stark shift at 400 V/m with a single g-i coupling.

use rydtrap::dressing::{self, StarkModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = StarkModel::reference()?;
    let s = dressing::solve_two_level(&model, 400.0)?;
    println!("detuning from shifted line   {:.3} MHz", s.delta0_hz * 1e-6);
    println!("detuning from zero-field g   {:.3} MHz", s.delta0_zero_field_g_hz * 1e-6);
    println!("Rabi frequency               {:.3} MHz", s.rabi_hz * 1e-6);
    println!("L = {:.2e} Hz/(V/m), Q = {:.2e} Hz/(V/m)^2", s.l, s.q);
    println!("max deviation over +-1 V/m   {:.3} Hz", s.max_deviation_hz);
    Ok(())
}
