//! Joint fit of the optomechanical couplings and detunings to synthetic
//! spectra, starting 20% away from the truth.
//!
//!     cargo run --release --example fit_spectra

use mechent::fitting::{fit_spectra_joint, JointInit, SpectralFitOptions};
use mechent::model::{table_s1, HomodyneAngles};
use mechent::pipeline::{estimate_spectra, WelchOptions};
use mechent::synth::{synthesize_records, synthesize_shot_record, Sampling};
use mechent::to_hz;

fn main() -> mechent::Result<()> {
    let p = table_s1();
    let fm = to_hz(p.mech.omega_m);
    let fs = 65536.0;
    let s = Sampling::new(fs, 1 << 21, (fm - fs / 4.0).round())?;
    let x = HomodyneAngles::joint(0.0);
    let rx = synthesize_records(&p, &x, &s, 31)?;
    let ry = synthesize_records(&p, &x.conjugate(), &s, 32)?;
    let shot = synthesize_shot_record(&s, 33)?;
    let set = estimate_spectra(
        &rx,
        &ry,
        &shot,
        &WelchOptions::new(9e-3).with_band(fm - 10.5e3, fm + 10.5e3),
    )?;

    let truth = JointInit::from_params(&p);
    let init = truth.scaled([1.2, 0.8, 0.8, 1.2]);
    let r = fit_spectra_joint(&set, &p, &init, &SpectralFitOptions::default())?;
    println!(
        "converged {} after {} iterations, reduced χ² {:.3}",
        r.converged, r.iterations, r.reduced_chi2
    );
    for (name, want) in [
        ("g_a_hz", truth.g_a_hz),
        ("g_b_hz", truth.g_b_hz),
        ("delta_a_hz", truth.delta_a_hz),
        ("delta_b_hz", truth.delta_b_hz),
    ] {
        let v = r.value(name).unwrap_or(f64::NAN);
        let e = r.uncertainty(name).unwrap_or(f64::NAN);
        println!("{name:>11} {v:>14.1} ± {e:<10.1} truth {want:.1}");
    }
    Ok(())
}
