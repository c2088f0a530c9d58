//! Grid-plus-golden-section minimization of model quantities.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

use super::covariance::model_covariance_matrix;
use super::params::{HomodyneAngles, SystemParams};
use super::response::inseparability_spectrum;
use super::toy::{toy_inseparability, toy_nu_min};
use crate::entanglement::symplectic_nu_min;
use crate::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal `f` on [a, b]; returns (x, f(x)).
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Evenly spaced grid including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            lo,
            hi,
            points: points.max(2),
        }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn at(&self, i: usize) -> f64 {
        self.lo + self.step() * i as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.at(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum2 {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Coarse grid search followed by alternating golden-section refinement
/// within one grid cell of the best point.
pub fn minimize_2d(f: impl Fn(f64, f64) -> f64 + Sync, xs: Grid, ys: Grid) -> Minimum2 {
    let best = (0..xs.points)
        .into_par_iter()
        .map(|i| {
            let x = xs.at(i);
            (0..ys.points)
                .map(|k| {
                    let y = ys.at(k);
                    (x, y, f(x, y))
                })
                .fold(
                    (x, ys.lo, f64::INFINITY),
                    |a, b| if b.2 < a.2 { b } else { a },
                )
        })
        .reduce(
            || (0.0, 0.0, f64::INFINITY),
            |a, b| if b.2 < a.2 { b } else { a },
        );
    let (mut x, mut y, mut v) = best;
    let (hx, hy) = (xs.step(), ys.step());
    for _ in 0..4 {
        let (nx, _) = golden_section(
            |t| f(t, y),
            (x - hx).max(xs.lo),
            (x + hx).min(xs.hi),
            hx * 1e-7,
        );
        let (ny, nv) = golden_section(
            |t| f(nx, t),
            (y - hy).max(ys.lo),
            (y + hy).min(ys.hi),
            hy * 1e-7,
        );
        if nv <= v {
            x = nx;
            y = ny;
            v = nv;
        }
    }
    Minimum2 { x, y, value: v }
}

/// Which inseparability engine to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Engine {
    Full,
    Toy,
}

pub fn inseparability(engine: Engine, omega: f64, big_theta: f64, params: &SystemParams) -> f64 {
    match engine {
        Engine::Full => inseparability_spectrum(omega, big_theta, params),
        Engine::Toy => toy_inseparability(omega, big_theta, params),
    }
}

/// Location and value of an inseparability minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InseparabilityMinimum {
    pub omega: f64,
    pub big_theta: f64,
    pub value: f64,
}

/// Minimum of I over an (Ω, Θ) box, Θ ∈ [−π/2, π/2].
pub fn min_inseparability(
    engine: Engine,
    params: &SystemParams,
    omegas: Grid,
    theta_points: usize,
) -> InseparabilityMinimum {
    let m = minimize_2d(
        |w, t| inseparability(engine, w, t, params),
        omegas,
        Grid::new(-FRAC_PI_2, FRAC_PI_2, theta_points),
    );
    InseparabilityMinimum {
        omega: m.x,
        big_theta: m.y,
        value: m.value,
    }
}

/// Minimum of I over Θ ∈ [−π/2, π/2] at fixed Ω; returns (Θ, I).
pub fn min_over_theta(
    engine: Engine,
    omega: f64,
    params: &SystemParams,
    theta_points: usize,
) -> (f64, f64) {
    let g = Grid::new(-FRAC_PI_2, FRAC_PI_2, theta_points);
    let (k, _) = (0..g.points)
        .map(|k| (k, inseparability(engine, omega, g.at(k), params)))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let t = g.at(k);
    golden_section(
        |x| inseparability(engine, omega, x, params),
        t - g.step(),
        t + g.step(),
        1e-10,
    )
}

/// 2ν̃_− of the model at one frequency.
pub fn nu2(engine: Engine, omega: f64, params: &SystemParams) -> Result<f64> {
    match engine {
        Engine::Toy => Ok(toy_nu_min(omega, params)),
        Engine::Full => {
            let cm = model_covariance_matrix(omega, &HomodyneAngles::joint(0.0), params);
            Ok(2.0 * symplectic_nu_min(&cm)?)
        }
    }
}

/// Minimum of 2ν̃_− over a frequency grid, refined by golden section;
/// returns (Ω, 2ν̃_−).
pub fn min_nu2(engine: Engine, params: &SystemParams, omegas: Grid) -> Result<(f64, f64)> {
    let vals = omegas
        .values()
        .into_par_iter()
        .map(|w| nu2(engine, w, params).map(|v| (w, v)))
        .collect::<Result<Vec<_>>>()?;
    let (w, _) =
        vals.iter().copied().fold(
            (omegas.lo, f64::INFINITY),
            |a, b| if b.1 < a.1 { b } else { a },
        );
    let h = omegas.step();
    // Already validated on the grid; the refinement stays inside it.
    Ok(golden_section(
        |x| nu2(engine, x, params).unwrap_or(f64::INFINITY),
        (w - h).max(omegas.lo),
        (w + h).min(omegas.hi),
        h * 1e-7,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = golden_section(|x| (x - 0.3).powi(2) + 2.0, -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7 && (v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_search_refines_off_grid() {
        let m = minimize_2d(
            |x, y| (x - 0.123).powi(2) + 3.0 * (y + 0.456).powi(2),
            Grid::new(-1.0, 1.0, 21),
            Grid::new(-1.0, 1.0, 21),
        );
        assert!((m.x - 0.123).abs() < 1e-6 && (m.y + 0.456).abs() < 1e-6);
    }
}
