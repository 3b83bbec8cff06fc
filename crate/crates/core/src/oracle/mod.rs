//! Ground-truth quantities of a synthetic mixture.

mod bayes;
mod diagnostic;
mod projected;
mod snr;
mod spectral;

pub use bayes::{bayes_classify, BayesClassifier};
pub use diagnostic::{linearization_diagnostic, quantile, DiagnosticReport, REPORT_QUANTILES};
pub use projected::{projected_params, ProjectedParams};
pub use snr::{snr_full_pair, snr_pair, snr_report, PairSnr, PairSolution, SnrReport, GRID_POINTS};
pub use spectral::{truth_spectral, TruthSpectral};
