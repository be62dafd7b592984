//! Central finite-difference gradient checking.
//!
//! Only forward values are used here, so the check stays independent of
//! the reverse sweep it validates.

use super::{ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    /// Finite-difference step.
    pub step: f64,
    /// Lower bound on the relative-error denominator, so that entries whose
    /// true gradient is ~0 are judged by absolute error instead.
    pub floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            floor: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub entries_checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(floor)
}

/// Compares reverse-mode gradients of the scalar built by `loss` against
/// central differences for every entry of every parameter in `params`.
pub fn check_gradients<F>(params: &ParamStore, cfg: GradCheckConfig, loss: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var>,
{
    let eval = |p: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new();
        let out = loss(&mut tape, p)?;
        tape.value(out)
            .item()
            .ok_or_else(|| Error::shape("gradcheck", "loss must be a scalar"))
    };

    let mut tape = Tape::new();
    let out = loss(&mut tape, params)?;
    let seed = Tensor::full(tape.value(out).shape(), 1.0);
    let grads = tape.backward(out, &seed)?;

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        entries_checked: 0,
    };
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in names {
        let n = params.get(&name)?.len();
        let zeros = Tensor::zeros(params.get(&name)?.shape());
        let analytic = grads.get(&name).unwrap_or(&zeros).clone();
        for i in 0..n {
            let original = params.get(&name)?.data()[i];
            probe.get_mut(&name)?.data_mut()[i] = original + cfg.step;
            let plus = eval(&probe)?;
            probe.get_mut(&name)?.data_mut()[i] = original - cfg.step;
            let minus = eval(&probe)?;
            probe.get_mut(&name)?.data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * cfg.step);
            let err = relative_error(analytic.data()[i], numeric, cfg.floor);
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((name.clone(), i));
            }
            report.entries_checked += 1;
        }
    }
    Ok(report)
}
