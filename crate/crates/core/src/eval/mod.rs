//! Evaluation protocol: correlation metrics, logistic remapping and
//! repeated random splits.

pub mod logistic;
pub mod metrics;
pub mod trials;

pub use logistic::{fit_logistic, LogisticFit, LogisticParams};
pub use metrics::{fractional_ranks, plcc, rmse, srocc};
pub use trials::{
    run_trials, split_indices, summary_text, trial_seeds, trials_csv, MetricSummary, SplitMode, TrialConfig,
    TrialRecord, TrialSummary,
};

use crate::error::Result;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport<T> {
    /// Rank correlation of the raw predictions.
    pub srocc: T,
    /// Linear correlation after logistic remapping.
    pub plcc: T,
    /// Error after logistic remapping.
    pub rmse: T,
    pub logistic: LogisticParams<T>,
    pub logistic_converged: bool,
    pub n: usize,
}

/// SROCC on raw predictions; PLCC and RMSE after fitting the logistic map
/// from predictions to MOS on the same points.
pub fn evaluate_predictions<T: Real>(mos: &[T], predicted: &[T]) -> Result<EvalReport<T>> {
    let s = srocc(mos, predicted)?;
    let fit = fit_logistic(predicted, mos)?;
    let mapped = fit.params.map(predicted);
    Ok(EvalReport {
        srocc: s,
        plcc: plcc(mos, &mapped)?,
        rmse: rmse(mos, &mapped)?,
        logistic: fit.params,
        logistic_converged: fit.converged,
        n: mos.len(),
    })
}
