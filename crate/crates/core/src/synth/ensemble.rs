use serde::{Deserialize, Serialize};

use crate::model::{HomodyneAngles, Mode};
use crate::{Error, Result};

/// Temporal-mode kernel used to build an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Butterworth4,
    Boxcar,
}

/// Simultaneous quadrature samples (one per detector) of one temporal mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEnsemble {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Physical centre frequency of the mode (Hz).
    pub demod_frequency_hz: f64,
    /// Mode bandwidth (Hz): filter cutoff, or 1/T for boxcar modes.
    pub bandwidth_hz: f64,
    pub kernel: Kernel,
    /// Per-detector variance that corresponds to vacuum; 1/2 after
    /// normalization.
    pub shot_reference: [f64; 2],
    pub angles: HomodyneAngles,
}

impl QuadratureEnsemble {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn samples(&self, m: Mode) -> &[f64] {
        match m {
            Mode::A => &self.a,
            Mode::B => &self.b,
        }
    }

    /// Replaces the vacuum reference, typically with the measured variances
    /// of a shot-noise ensemble built the same way.
    pub fn with_shot_reference(mut self, reference: [f64; 2]) -> Result<Self> {
        if reference.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::input(format!(
                "shot reference must be positive, got {reference:?}"
            )));
        }
        self.shot_reference = reference;
        Ok(self)
    }

    /// Rescales both detectors so that vacuum reads 1/2. Idempotent.
    pub fn normalized(mut self) -> Self {
        for (i, data) in [&mut self.a, &mut self.b].into_iter().enumerate() {
            let s = (0.5 / self.shot_reference[i]).sqrt();
            if s != 1.0 {
                data.iter_mut().for_each(|x| *x *= s);
            }
        }
        self.shot_reference = [0.5; 2];
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_is_idempotent() {
        let e = QuadratureEnsemble {
            a: vec![1.0, -2.0, 3.0],
            b: vec![0.5, 0.25, -1.0],
            demod_frequency_hz: 1.0,
            bandwidth_hz: 0.1,
            kernel: Kernel::Butterworth4,
            shot_reference: [2.0, 8.0],
            angles: HomodyneAngles::joint(0.0),
        };
        let once = e.clone().normalized();
        assert_eq!(once.clone().normalized(), once);
        assert_eq!(once.a[0], 0.5);
        assert_eq!(once.b[0], 0.125);
        assert!(e.with_shot_reference([0.0, 1.0]).is_err());
    }
}
