//! Least-squares fits: Levenberg–Marquardt core, detection efficiency from
//! imprecision, joint spectral fits for couplings and detunings, and the
//! balanced-detector systematics model.

mod calibration;
mod efficiency;
mod lm;
mod spectral;

pub use calibration::{
    fit_shot_systematics, predict_shot_systematics, synthetic_shot_systematics, CalibrationFit,
    CalibrationModel, ShotDeviation,
};
pub use efficiency::{
    fit_efficiency, imprecision_psd, synthetic_imprecision, EfficiencyFit, ImprecisionPoint,
};
pub use lm::{ljung_box, lm_fit, FitReport, LmOptions, Parameter, ResidualTrace, Whiteness};
pub use spectral::{
    expected_spectra, fit_spectra_joint, fitted_params, JointInit, SpectralFitOptions,
    WindowKernel, JOINT_PARAMETERS,
};
