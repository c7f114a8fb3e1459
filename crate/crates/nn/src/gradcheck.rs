//! Central finite-difference gradient checks against the tape.
//!
//! The relative error of one coordinate is `|a − n| / max(|a|, |n|, floor)`,
//! where `a` is the analytic and `n` the numeric derivative. The floor keeps
//! coordinates whose true derivative is zero from dividing by rounding noise.

use crate::error::Result;
use crate::param::{ParamId, ParamStore};
use crate::session::{Mode, Session};
use crate::tape::Var;
use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_FLOOR: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn buffers(store: &ParamStore) -> Vec<(ParamId, Tensor)> {
    store
        .iter()
        .filter(|(_, p)| !p.trainable)
        .map(|(id, p)| (id, p.value.clone()))
        .collect()
}

fn restore(store: &mut ParamStore, saved: &[(ParamId, Tensor)]) {
    for (id, t) in saved {
        store.get_mut(*id).value = t.clone();
    }
}

/// Compares the tape gradient of the scalar built by `loss` with respect to
/// every trainable coordinate of `store` against central differences.
///
/// Buffers (running statistics) are restored after every evaluation so the
/// loss is a pure function of the trainable values. Gradients in the store
/// are zeroed on return.
pub fn grad_check<F>(store: &mut ParamStore, mode: Mode, h: f64, floor: f64, mut loss: F) -> Result<GradCheckReport>
where
    F: FnMut(&mut Session<'_>) -> Result<Var>,
{
    let saved = buffers(store);
    store.zero_grad();
    {
        let mut s = Session::new(store, mode, true);
        let l = loss(&mut s)?;
        s.backward(l)?;
    }
    restore(store, &saved);
    let analytic: Vec<Vec<f64>> = store.iter().map(|(_, p)| p.grad.clone()).collect();
    store.zero_grad();

    let mut eval = |store: &mut ParamStore| -> Result<f64> {
        let v = {
            let mut s = Session::new(store, mode, false);
            let l = loss(&mut s)?;
            s.value(l).item()
        };
        restore(store, &saved);
        Ok(v)
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        checked: 0,
    };
    let ids: Vec<ParamId> = store.iter().filter(|(_, p)| p.trainable).map(|(id, _)| id).collect();
    for id in ids {
        for i in 0..store.get(id).value.numel() {
            let orig = store.get(id).value.data()[i];
            store.get_mut(id).value.data_mut()[i] = orig + h;
            let plus = eval(store)?;
            store.get_mut(id).value.data_mut()[i] = orig - h;
            let minus = eval(store)?;
            store.get_mut(id).value.data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[id.index()][i];
            let err = relative_error(a, numeric, floor);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((store.get(id).name.clone(), i));
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}
