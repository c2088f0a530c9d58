//! Synthesizes one X-stage and one Y-stage record pair plus a shot-noise
//! reference, then compares Welch spectra with the model.
//!
//!     cargo run --release --example simulate_records

use mechent::model::{output_psd, table_s1, HomodyneAngles, Mode};
use mechent::pipeline::{estimate_spectra, WelchOptions, Window};
use mechent::synth::{synthesize_records, synthesize_shot_record, Sampling};
use mechent::{hz, to_hz};

fn main() -> mechent::Result<()> {
    let p = table_s1();
    let fm = to_hz(p.mech.omega_m);
    let fs = 65536.0;
    // 16 s of data with the resonance at a quarter of the sample rate.
    let s = Sampling::new(fs, 1 << 20, (fm - fs / 4.0).round())?;
    let x = HomodyneAngles::joint(0.0);
    let y = x.conjugate();
    let rx = synthesize_records(&p, &x, &s, 1)?;
    let ry = synthesize_records(&p, &y, &s, 2)?;
    let shot = synthesize_shot_record(&s, 3)?;

    let opts = WelchOptions::new(0.0625)
        .with_band(fm - 5e3, fm + 5e3)
        .with_window(Window::Hann, 0.5);
    let set = estimate_spectra(&rx, &ry, &shot, &opts)?;
    println!("{} segments, {} bins", set.n_segments, set.len());
    println!(
        "{:>12} {:>10} {:>10} {:>10} {:>10}",
        "f (kHz)", "Y_AA", "model", "Y_AB", "model"
    );
    for i in (0..set.len()).step_by(40) {
        let w = hz(set.frequencies_hz[i]);
        println!(
            "{:>12.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            set.frequencies_hz[i] / 1e3,
            set.y_aa[i],
            2.0 * output_psd(w, Mode::A, Mode::A, &y, &p),
            set.y_ab[i],
            2.0 * output_psd(w, Mode::A, Mode::B, &y, &p)
        );
    }
    Ok(())
}
