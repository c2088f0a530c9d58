//! Butterworth low-pass as a cascade of bilinear-transformed biquads.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    s: [f64; 2],
}

impl Biquad {
    fn lowpass(cutoff_hz: f64, sample_rate_hz: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / sample_rate_hz;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        // 1 − cos w0 without cancellation for narrow filters.
        let omc = 2.0 * (0.5 * w0).sin().powi(2);
        let a0 = 1.0 + alpha;
        Self {
            b: [0.5 * omc / a0, omc / a0, 0.5 * omc / a0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
            s: [0.0; 2],
        }
    }

    #[inline]
    fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.s[0];
        self.s[0] = self.b[1] * x - self.a[0] * y + self.s[1];
        self.s[1] = self.b[2] * x - self.a[1] * y;
        y
    }
}

/// Even-order digital Butterworth low-pass with unit DC gain.
#[derive(Debug, Clone)]
pub struct Butterworth {
    sections: Vec<Biquad>,
}

impl Butterworth {
    /// `order` must be even and positive; the cutoff must lie below Nyquist.
    pub fn lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Option<Self> {
        if order == 0 || !order.is_multiple_of(2) || !(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate_hz) {
            return None;
        }
        let sections = (0..order / 2)
            .map(|k| {
                let q = 1.0 / (2.0 * (PI * (2 * k + 1) as f64 / (2 * order) as f64).sin());
                Biquad::lowpass(cutoff_hz, sample_rate_hz, q)
            })
            .collect();
        Some(Self { sections })
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |v, s| s.step(v))
    }

    pub fn reset(&mut self) {
        for s in &mut self.sections {
            s.s = [0.0; 2];
        }
    }

    /// Σ h[n]² of the impulse response, summed until it has decayed.
    pub fn impulse_energy(&self, max_samples: usize) -> f64 {
        let mut f = self.clone();
        f.reset();
        let mut e = 0.0;
        let mut quiet = 0;
        for n in 0..max_samples {
            let h = f.step(if n == 0 { 1.0 } else { 0.0 });
            e += h * h;
            if h * h < 1e-20 * e {
                quiet += 1;
                if quiet > 1000 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        e
    }
}
