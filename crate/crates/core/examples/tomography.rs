//! Five-angle-pair tomography of one demodulated mode pair, with the DGCZ
//! inseparability and the smallest symplectic eigenvalue.
//!
//!     cargo run --release --example tomography

use std::collections::BTreeMap;

use mechent::entanglement::{log_negativity, symplectic_nu_min};
use mechent::model::{table_s1, HomodyneAngles};
use mechent::pipeline::{demod_tomography, mode_covariance, AnglePair, ModeResponse};
use mechent::synth::{synthesize_records, synthesize_shot_record, Kernel, Sampling};
use mechent::to_hz;

fn main() -> mechent::Result<()> {
    let p = table_s1();
    let fs = 65536.0;
    let s = Sampling::new(fs, 1 << 21, (to_hz(p.mech.omega_m) - fs / 4.0).round())?;
    let base = HomodyneAngles::joint(0.0);
    let mut runs = BTreeMap::new();
    for (i, pair) in AnglePair::ALL.into_iter().enumerate() {
        runs.insert(
            pair,
            synthesize_records(&p, &pair.angles(&base), &s, 10 + i as u64)?,
        );
    }
    let shot = synthesize_shot_record(&s, 9)?;

    let (f0, bw) = (1.1416e6, 200.0);
    let tomo = demod_tomography(&runs, &shot, f0, bw)?;
    let model = mode_covariance(f0, &base, &p, &ModeResponse::new(Kernel::Butterworth4, bw)?);
    println!("{} samples per run", tomo.samples);
    for i in 0..4 {
        let est: Vec<String> = (0..4)
            .map(|j| format!("{:>7.3}", tomo.reconstruction.cm.get(i, j)))
            .collect();
        let m: Vec<String> = (0..4)
            .map(|j| format!("{:>7.3}", model.get(i, j)))
            .collect();
        println!("{}    {}", est.join(" "), m.join(" "));
    }
    let d = &tomo.dgcz.inseparability;
    println!("I  = {:.4} ± {:.4}", d.value, d.std_error);
    println!(
        "2ν = {:.4} ± {:.4} (model {:.4}), E_N = {:.3}",
        tomo.nu2,
        tomo.nu2_error,
        2.0 * symplectic_nu_min(&model)?,
        log_negativity(tomo.nu2 / 2.0)?
    );
    Ok(())
}
