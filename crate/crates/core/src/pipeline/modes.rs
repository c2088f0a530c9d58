//! Model predictions for finite-bandwidth temporal modes.
//!
//! A mode centred at f₀ with spectral kernel |H(δ)|² sees the weighted
//! average of the symmetrized spectra over f₀ + δ. Near the mechanical
//! feature the spectra change on the scale of a few hundred Hz, so the
//! averaging matters for bandwidths of that order.

use crate::entanglement::CovarianceMatrix4;
use crate::hz;
use crate::model::{model_covariance_matrix, HomodyneAngles, SystemParams};
use crate::synth::{Kernel, FILTER_ORDER};
use crate::{Error, Result};

/// Normalized power response of a temporal mode versus detuning from its
/// centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeResponse {
    pub kernel: Kernel,
    /// Filter cutoff, or 1/T for boxcar modes (Hz).
    pub bandwidth_hz: f64,
}

impl ModeResponse {
    pub fn new(kernel: Kernel, bandwidth_hz: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
            return Err(Error::param("bandwidth_hz", "must be positive"));
        }
        Ok(Self {
            kernel,
            bandwidth_hz,
        })
    }

    /// |H(δ)|², unity at δ = 0.
    pub fn weight(&self, detuning_hz: f64) -> f64 {
        let x = detuning_hz / self.bandwidth_hz;
        match self.kernel {
            Kernel::Butterworth4 => 1.0 / (1.0 + x.powi(2 * FILTER_ORDER as i32)),
            Kernel::Boxcar => {
                let px = std::f64::consts::PI * x;
                if px.abs() < 1e-12 {
                    1.0
                } else {
                    (px.sin() / px).powi(2)
                }
            }
        }
    }

    /// Integration half-width (Hz). The boxcar kernel has 1/δ² tails, so it
    /// needs a wider span for the same truncated mass.
    fn span(&self) -> f64 {
        match self.kernel {
            Kernel::Butterworth4 => 12.0 * self.bandwidth_hz,
            Kernel::Boxcar => 60.0 * self.bandwidth_hz,
        }
    }
}

/// Covariance matrix of the mode `response` centred at `center_hz`, read at
/// `angles`, in vacuum-1/2 units.
pub fn mode_covariance(
    center_hz: f64,
    angles: &HomodyneAngles,
    params: &SystemParams,
    response: &ModeResponse,
) -> CovarianceMatrix4 {
    let step = response.bandwidth_hz / 24.0;
    let n = (response.span() / step).ceil() as i64;
    let mut acc = [[0.0; 4]; 4];
    let mut norm = 0.0;
    for k in -n..=n {
        let d = k as f64 * step;
        let w = response.weight(d);
        let cm = model_covariance_matrix(hz(center_hz + d), angles, params);
        for (i, row) in acc.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += w * cm.get(i, j);
            }
        }
        norm += w;
    }
    for v in acc.iter_mut().flatten() {
        *v /= norm;
    }
    CovarianceMatrix4::symmetrized(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::table_s1;

    #[test]
    fn narrow_modes_approach_the_point_value() {
        let p = table_s1();
        let a = HomodyneAngles::joint(0.2);
        let point = model_covariance_matrix(hz(1.1416e6), &a, &p);
        for kernel in [Kernel::Butterworth4, Kernel::Boxcar] {
            let m = mode_covariance(1.1416e6, &a, &p, &ModeResponse::new(kernel, 1.0).unwrap());
            for i in 0..4 {
                for j in 0..4 {
                    assert!(
                        (m.get(i, j) - point.get(i, j)).abs() < 2e-3 * point.get(i, i).abs(),
                        "{kernel:?} {i}{j}"
                    );
                }
            }
        }
    }

    #[test]
    fn vacuum_is_unchanged() {
        let p = table_s1().uncoupled();
        let m = mode_covariance(
            1.14e6,
            &HomodyneAngles::joint(0.0),
            &p,
            &ModeResponse::new(Kernel::Boxcar, 111.0).unwrap(),
        );
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((m.get(i, j) - want).abs() < 1e-12);
            }
        }
    }
}
