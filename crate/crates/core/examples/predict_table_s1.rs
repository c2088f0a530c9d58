//! Entanglement predicted by the full three-mode model for the canonical
//! parameter set: derived rates, the inseparability minimum, and the
//! smallest symplectic eigenvalue with its log-negativity.
//!
//!     cargo run --release --example predict_table_s1

use mechent::entanglement::log_negativity;
use mechent::model::{min_inseparability, min_nu2, min_over_theta, table_s1, Engine, Grid};
use mechent::{hz, to_hz};

fn main() -> mechent::Result<()> {
    let p = table_s1();
    let fm = to_hz(p.mech.omega_m);
    println!("mechanical frequency     {:.4} MHz", fm / 1e6);
    println!(
        "backaction rates         A {:.0} Hz, B {:.0} Hz",
        to_hz(p.mode_a.qba_rate_resonant()),
        to_hz(p.mode_b.qba_rate_resonant())
    );
    println!(
        "measurement rates        A {:.0} Hz, B {:.0} Hz",
        to_hz(p.mode_a.measurement_rate()),
        to_hz(p.mode_b.measurement_rate())
    );
    println!(
        "thermal decoherence      {:.0} Hz",
        to_hz(p.mech.thermal_decoherence_rate())
    );
    println!(
        "total decoherence        {:.0} Hz",
        to_hz(p.decoherence_rate())
    );
    println!("measurement efficiency   {:.3}", p.measurement_efficiency());

    let band = Grid::new(hz(fm - 10e3), hz(fm + 10e3), 2001);
    let m = min_inseparability(Engine::Full, &p, band, 721);
    println!(
        "min I = {:.4} at {:.4} MHz, Θ = {:.3}",
        m.value,
        to_hz(m.omega) / 1e6,
        m.big_theta
    );
    let (theta, i) = min_over_theta(Engine::Full, hz(1.1416e6), &p, 721);
    println!("I(1.1416 MHz) = {i:.4} at Θ = {theta:.3}");

    let (w, nu2) = min_nu2(Engine::Full, &p, band)?;
    println!(
        "min 2ν = {nu2:.4} at {:.4} MHz, E_N = {:.3}",
        to_hz(w) / 1e6,
        log_negativity(nu2 / 2.0)?
    );
    Ok(())
}
