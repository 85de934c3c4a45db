//! Central-difference gradient checking.

use super::params::ParamStore;
use super::tape::{Tape, TapeError, Var};

/// Relative-error floor: when both gradients are this small the entry
/// counts as matching regardless of ratio.
const DENOM_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_err: f64,
    pub epsilon: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.entries {
            writeln!(f, "  {:<40} max rel err {:.3e}", e.name, e.max_rel_err)?;
        }
        writeln!(
            f,
            "overall max rel err {:.3e} (epsilon {:.1e}, tolerance {:.1e}): {}",
            self.max_rel_err,
            self.epsilon,
            self.tolerance,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Checks the tape-derived gradients of `build` (a closure constructing a
/// scalar loss) against central differences over every trainable parameter.
pub fn grad_check<F>(
    store: &mut ParamStore,
    epsilon: f64,
    tolerance: f64,
    build: F,
) -> Result<GradCheckReport, TapeError>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var, TapeError>,
{
    assert!(epsilon > 0.0, "epsilon must be positive");
    store.zero_grads();
    let mut tape = Tape::new();
    let loss = build(&mut tape, store)?;
    tape.backward(loss, store)?;
    let analytic: Vec<(String, Vec<f64>)> = store
        .iter()
        .filter(|(_, p)| p.trainable)
        .map(|(_, p)| (p.name.clone(), p.grad.data().to_vec()))
        .collect();

    let eval = |store: &ParamStore| -> Result<f64, TapeError> {
        let mut tape = Tape::new();
        let loss = build(&mut tape, store)?;
        Ok(tape.scalar_value(loss))
    };
    check_against_central_differences(store, &analytic, epsilon, tolerance, eval)
}

/// Compares supplied analytic gradients (name, flat values) against central
/// differences of `eval`. Split out from [`grad_check`] so tests can feed a
/// deliberately corrupted gradient and watch the check fail.
pub fn check_against_central_differences<F>(
    store: &mut ParamStore,
    analytic: &[(String, Vec<f64>)],
    epsilon: f64,
    tolerance: f64,
    eval: F,
) -> Result<GradCheckReport, TapeError>
where
    F: Fn(&ParamStore) -> Result<f64, TapeError>,
{
    let mut entries = Vec::new();
    let mut overall: f64 = 0.0;
    for (name, grads) in analytic {
        let id = store
            .id(name)
            .unwrap_or_else(|| panic!("unknown parameter {name:?}"));
        let mut worst: f64 = 0.0;
        for i in 0..grads.len() {
            let original = store.get(id).value.data()[i];
            store.get_mut(id).value.data_mut()[i] = original + epsilon;
            let plus = eval(store)?;
            store.get_mut(id).value.data_mut()[i] = original - epsilon;
            let minus = eval(store)?;
            store.get_mut(id).value.data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let denom = grads[i].abs().max(numeric.abs()).max(DENOM_FLOOR);
            worst = worst.max((grads[i] - numeric).abs() / denom);
        }
        overall = overall.max(worst);
        entries.push(GradCheckEntry {
            name: name.clone(),
            max_rel_err: worst,
        });
    }
    Ok(GradCheckReport {
        entries,
        max_rel_err: overall,
        epsilon,
        tolerance,
    })
}
