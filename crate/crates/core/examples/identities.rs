//! Randomized identity battery and the assumption audit of every preset.
//!
//!     cargo run --release --example identities -- [trials]

use curl_dg::problems::{preset, PRESETS};
use curl_dg::verify::{audit_assumptions, identity_battery, write_identity_report};

fn main() -> curl_dg::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let mut out = std::io::stdout().lock();
    write_identity_report(&mut out, &identity_battery(0, trials)?)?;
    for name in PRESETS {
        let problem = preset(name, 1e-3)?;
        let audit = audit_assumptions(&problem.mesh(8)?, &problem, 10.0)?;
        println!("# {name}");
        audit.write_key_values(&mut out)?;
    }
    Ok(())
}
