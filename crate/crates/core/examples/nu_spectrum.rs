//! Per-bin tomography with boxcar (FFT) modes: the smallest symplectic
//! eigenvalue across the mechanical band.
//!
//!     cargo run --release --example nu_spectrum

use std::collections::BTreeMap;

use mechent::model::{nu2, table_s1, Engine, HomodyneAngles};
use mechent::pipeline::{nu_spectrum, AnglePair};
use mechent::synth::{synthesize_records, synthesize_shot_record, Sampling};
use mechent::{hz, to_hz};

fn main() -> mechent::Result<()> {
    let p = table_s1();
    let fm = to_hz(p.mech.omega_m);
    let fs = 16384.0;
    let s = Sampling::new(fs, 1 << 20, (fm - fs / 4.0).round())?;
    let base = HomodyneAngles::joint(0.0);
    let mut runs = BTreeMap::new();
    for (i, pair) in AnglePair::ALL.into_iter().enumerate() {
        runs.insert(
            pair,
            synthesize_records(&p, &pair.angles(&base), &s, 20 + i as u64)?,
        );
    }
    let shot = synthesize_shot_record(&s, 19)?;

    let spec = nu_spectrum(&runs, &shot, 9e-3, Some((fm - 4e3, fm + 4e3)))?;
    println!("{} samples per bin", spec.samples_per_bin);
    for k in (0..spec.frequencies_hz.len()).step_by(4) {
        let f = spec.frequencies_hz[k];
        println!(
            "{:>10.3} kHz  2ν = {:>7.4} ± {:.4}   model {:.4}",
            f / 1e3,
            spec.nu2[k],
            spec.nu2_error[k],
            nu2(Engine::Full, hz(f), &p)?
        );
    }
    Ok(())
}
