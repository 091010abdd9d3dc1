//! Maximum-likelihood state reconstruction from phase-tagged quadratures.

mod dataset;
mod mle;
mod povm;
mod report;

pub use dataset::{Binning, Cell, TomographyDataset, MIN_BIN_OCCUPANCY};
pub use mle::{bootstrap, mle_reconstruct, BootstrapSummary, MleOptions, MleResult};
pub use povm::{povm_element, povm_vector};
pub use report::{tomography_report, Fidelities, ReportOptions, TomographyReport};
