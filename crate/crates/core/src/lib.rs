//! Covariate-adjusted evaluation of continuous biomarkers.
//!
//! Case markers are modelled by linear quantile regression at the controlled
//! sensitivity level; specificity is the fraction of controls falling at or
//! below their covariate-specific thresholds. The coefficient path over all
//! sensitivity levels gives the covariate-adjusted ROC curve.

pub mod error;
pub mod inference;
pub mod io;
pub mod monotone;
pub mod qreg;
pub mod rng;
pub mod roc;
pub mod sample;
pub mod simulate;

pub use error::{QrocError, Result};
pub use sample::{BiomarkerDataset, CaseSample, ControlSample, Sample};
