use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Gradients, Mode, ParamId, ParamStore, Tape, Var};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    pub h: f64,
    pub tol: f64,
    /// Errors are `|a - n| / max(|a|, |n|, floor)`; the floor keeps
    /// near-zero gradients from turning rounding noise into failures.
    pub floor: f64,
    /// Check at most this many entries per parameter tensor.
    pub max_per_param: Option<usize>,
    pub mode: Mode,
    /// Seed for the tape (dropout masks) and for entry sampling.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            h: 1e-4,
            tol: 1e-4,
            floor: 1e-2,
            max_per_param: None,
            mode: Mode::Eval,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradMismatch {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_error: f64,
    pub failures: Vec<GradMismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn eval_loss<F>(params: &ParamStore, f: &F, opts: &GradCheckOptions) -> Result<f64>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    let mut tape = Tape::new(params, opts.mode, opts.seed);
    let loss = f(&mut tape)?;
    Ok(tape.scalar(loss))
}

/// Compares reverse-mode gradients of `f` against central differences.
///
/// `f` must build the same scalar loss on every call; it receives a fresh
/// tape seeded with `opts.seed`, so dropout masks repeat.
pub fn finite_diff_check<F>(
    params: &mut ParamStore,
    f: F,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    let analytic = {
        let mut tape = Tape::new(params, opts.mode, opts.seed);
        let loss = f(&mut tape)?;
        tape.backward(loss)?
    };
    check_gradients(params, &analytic, f, opts)
}

/// Checks a supplied gradient against central differences of `f`.
pub fn check_gradients<F>(
    params: &mut ParamStore,
    analytic: &Gradients,
    f: F,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
    let mut report = GradCheckReport::default();
    let ids: Vec<ParamId> = params.ids().collect();
    for id in ids {
        let n = params.get(id).len();
        let entries: Vec<usize> = match opts.max_per_param {
            Some(k) if k < n => {
                let mut v = sample(&mut rng, n, k).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..n).collect(),
        };
        for idx in entries {
            let orig = params.get(id).data()[idx];
            params.get_mut(id).data_mut()[idx] = orig + opts.h;
            let plus = eval_loss(params, &f, opts)?;
            params.get_mut(id).data_mut()[idx] = orig - opts.h;
            let minus = eval_loss(params, &f, opts)?;
            params.get_mut(id).data_mut()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * opts.h);
            let a = analytic.get(id).data()[idx];
            let error = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.floor);
            report.checked += 1;
            if error > report.max_error || error.is_nan() {
                report.max_error = error;
            }
            if !(error <= opts.tol) {
                report.failures.push(GradMismatch {
                    param: params.info(id).name.clone(),
                    index: idx,
                    analytic: a,
                    numeric,
                    error,
                });
            }
        }
    }
    Ok(report)
}
