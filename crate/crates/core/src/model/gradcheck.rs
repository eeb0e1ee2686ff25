//! Central finite-difference check of analytic gradients.

use super::params::Parameterized;
use super::sab::{PoolVariant, ProductState, SabStack};
use crate::error::{Error, Result};
use crate::product::ProductGraphBundle;

pub const FD_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const MAX_PARAMETERS: usize = 10_000;
/// Denominator floor of the relative error, per unit of loss magnitude.
/// Central-difference roundoff grows like `ε·|f|/h`, so components far
/// below `RELATIVE_FLOOR·|f|` are compared absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// A scalar function of a flat parameter vector with an analytic gradient.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, theta: &[f64]) -> Result<f64>;
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>>;

    fn parameter_name(&self, index: usize) -> String {
        format!("theta[{index}]")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub worst_parameter: String,
    pub analytic: f64,
    pub numeric: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= self.tolerance
    }
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Floor used by [`grad_check`] for a loss value `f`.
pub fn relative_floor(loss: f64) -> f64 {
    RELATIVE_FLOOR * loss.abs().max(1.0)
}

pub fn grad_check(objective: &dyn Objective, theta: &[f64], tolerance: f64) -> Result<GradCheckReport> {
    if theta.len() != objective.dim() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters for an objective of dimension {}",
            theta.len(),
            objective.dim()
        )));
    }
    if theta.len() > MAX_PARAMETERS {
        return Err(Error::Scale {
            size: theta.len(),
            limit: MAX_PARAMETERS,
        });
    }
    let analytic = objective.gradient(theta)?;
    let floor = relative_floor(objective.value(theta)?);
    let mut probe = theta.to_vec();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: 0,
        worst_parameter: String::new(),
        analytic: 0.0,
        numeric: 0.0,
        tolerance,
    };
    for i in 0..theta.len() {
        probe[i] = theta[i] + FD_STEP;
        let plus = objective.value(&probe)?;
        probe[i] = theta[i] - FD_STEP;
        let minus = objective.value(&probe)?;
        probe[i] = theta[i];
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        if !numeric.is_finite() || !analytic[i].is_finite() {
            return Err(Error::NonFiniteGradient(objective.parameter_name(i)));
        }
        let err = relative_error(analytic[i], numeric, floor);
        if err > report.max_relative_error || i == 0 {
            report.max_relative_error = err;
            report.worst_index = i;
            report.analytic = analytic[i];
            report.numeric = numeric;
        }
    }
    report.worst_parameter = objective.parameter_name(report.worst_index);
    Ok(report)
}

/// `Σ readout(pool(SAB stack(X₀)))` as a function of the stack parameters.
pub struct PooledSabObjective<'a> {
    pub stack: SabStack,
    pub x0: &'a ProductState,
    pub bundle: &'a ProductGraphBundle,
    pub variant: PoolVariant,
}

impl PooledSabObjective<'_> {
    fn with(&self, theta: &[f64]) -> Result<SabStack> {
        let mut stack = self.stack.clone();
        stack.load_flat(theta)?;
        Ok(stack)
    }
}

impl Objective for PooledSabObjective<'_> {
    fn dim(&self) -> usize {
        self.stack.num_parameters()
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        Ok(self
            .with(theta)?
            .forward(self.x0, self.bundle, self.variant, None)?
            .sum())
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let (_, grad) = self
            .with(theta)?
            .loss_and_gradient(self.x0, self.bundle, self.variant)?;
        Ok(grad.to_flat())
    }

    fn parameter_name(&self, index: usize) -> String {
        match self.stack.locate(index) {
            Some((name, offset)) => format!("{name}[{offset}]"),
            None => format!("theta[{index}]"),
        }
    }
}
