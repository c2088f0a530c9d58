//! Closed forms of the resolved-sideband toy model next to a brute-force
//! symplectic decomposition of its covariance matrix.
//!
//!     cargo run --example toy_model

use mechent::entanglement::symplectic_nu_min;
use mechent::model::{table_s1, toy_covariance, toy_inseparability, toy_nu_min};
use mechent::{hz, to_hz};

fn main() -> mechent::Result<()> {
    let p = table_s1();
    let fm = to_hz(p.mech.omega_m);
    let eta = p.measurement_efficiency();
    println!(
        "bounds: I ≥ {:.4}, 2ν ≥ {:.4}",
        1.0 - eta / 2.0,
        (1.0 - eta).sqrt()
    );
    println!(
        "{:>10} {:>10} {:>10} {:>12}",
        "Δf (Hz)", "I(Θ=0)", "2ν", "brute 2ν"
    );
    for df in [
        -5e3, -1e3, -300.0, -100.0, -30.0, 30.0, 100.0, 300.0, 1e3, 5e3,
    ] {
        let w = hz(fm + df);
        let brute = 2.0 * symplectic_nu_min(&toy_covariance(w, &p))?;
        println!(
            "{df:>10.0} {:>10.4} {:>10.4} {brute:>12.4}",
            toy_inseparability(w, 0.0, &p),
            toy_nu_min(w, &p)
        );
    }
    Ok(())
}
