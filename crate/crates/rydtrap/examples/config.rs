//! Run configuration from TOML with unit-suffixed quantities.

use rydtrap::presets::{RunConfig, PRESETS};

const TEXT: &str = r#"
geometry = "trapB-beta"

[drive]
u30 = "0.15 V"
frequency = "2.9 kHz"

[ensemble]
temperature = "500 nK"
count = 250
seed = 7

[run]
duration = "840 ms"
state = "e"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for p in PRESETS {
        println!("{:<12} {:?}", p.name, p.drive);
    }
    let cfg = RunConfig::from_toml_str(TEXT)?;
    println!("{cfg:#?}");
    match RunConfig::from_toml_str("[drive]\nu1 = \"0.2\"\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("a quantity without unit must be rejected"),
    }
    Ok(())
}
