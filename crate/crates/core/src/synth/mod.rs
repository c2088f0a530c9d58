//! Synthetic homodyne records and their reduction to quadrature ensembles.

mod boxcar;
mod demod;
mod ensemble;
mod filter;
mod generate;
mod record;
mod transfer;

pub use boxcar::{boxcar_modes, BoxcarModes};
pub use demod::{demodulate, FILTER_ORDER, OVERSAMPLING};
pub use ensemble::{Kernel, QuadratureEnsemble};
pub use filter::Butterworth;
pub use generate::{gaussian_noise, synthesize_records, synthesize_shot_record, Sampling};
pub use record::{Channel, RecordKind, TimeSeriesRecord};
pub use transfer::{
    build_transfer_matrix, row_psd, transfer_rows, TransferMatrix, INPUT_LABELS, N_INPUTS,
};
