use rand::seq::index;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed;

use super::{Matrix, ParamStore};

/// Denominator floor of the relative error, so gradients that are zero up to
/// rounding compare on an absolute scale.
const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub h: f64,
    pub tol: f64,
    pub max_coords: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            h: 1e-5,
            tol: 1e-4,
            max_coords: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamCheck {
    pub name: String,
    pub coords_checked: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ParamCheck> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares analytic gradients from `loss_fn` with central differences on up
/// to `max_coords` randomly chosen coordinates per parameter.
///
/// `loss_fn` returns the loss and its gradient for every parameter, in store order.
pub fn grad_check<F>(loss_fn: F, params: &ParamStore, opts: &GradCheckOptions) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore) -> Result<(f64, Vec<Matrix>)>,
{
    let (loss, analytic) = loss_fn(params)?;
    let (again, _) = loss_fn(params)?;
    if loss.to_bits() != again.to_bits() {
        return Err(Error::NonDeterministicLoss {
            first: loss,
            second: again,
        });
    }
    if analytic.len() != params.len() {
        return Err(Error::InvalidArgument(format!(
            "loss function returned {} gradients for {} parameters",
            analytic.len(),
            params.len()
        )));
    }

    let mut rng = seed::rng(seed::derive_seed(opts.seed, seed::streams::GRADCHECK, 0));
    let mut probe = params.clone();
    let mut report = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let size = params.value(p).len();
        let mut coords: Vec<usize> = if size <= opts.max_coords {
            (0..size).collect()
        } else {
            index::sample(&mut rng, size, opts.max_coords).into_vec()
        };
        coords.sort_unstable();

        let mut worst: f64 = 0.0;
        for &i in &coords {
            let original = params.value(p).as_slice()[i];
            probe.value_mut(p).as_mut_slice()[i] = original + opts.h;
            let (plus, _) = loss_fn(&probe)?;
            probe.value_mut(p).as_mut_slice()[i] = original - opts.h;
            let (minus, _) = loss_fn(&probe)?;
            probe.value_mut(p).as_mut_slice()[i] = original;

            let numeric = (plus - minus) / (2.0 * opts.h);
            worst = worst.max(relative_error(analytic[p].as_slice()[i], numeric));
        }
        report.push(ParamCheck {
            name: params.name(p).to_string(),
            coords_checked: coords.len(),
            max_rel_error: worst,
            passed: worst < opts.tol,
        });
    }
    Ok(GradCheckReport { params: report })
}
