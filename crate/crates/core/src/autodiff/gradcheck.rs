use super::{AutodiffError, Tape, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Max over checked entries of `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Entries whose perturbation flipped (or touched) a relu kink.
    pub skipped: usize,
}

/// Compares tape gradients against central finite differences.
///
/// `builder` receives a fresh tape with one leaf per entry of `params`
/// (same order) and must return a scalar node. Entries for which the
/// `+step` or `-step` perturbation changes the activation pattern of any
/// relu, or where a relu input sits exactly at zero, are excluded.
pub fn grad_check<F, E>(params: &[Tensor], step: f64, builder: F) -> Result<GradCheckReport, E>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, E>,
    E: From<AutodiffError>,
{
    if !(step > 0.0 && step <= 1e-3) {
        return Err(AutodiffError::InvalidStep(step).into());
    }
    let run = |params: &[Tensor]| -> Result<(Tape, Var, Vec<Var>), E> {
        let mut tape = Tape::new();
        let leaves: Vec<Var> = params.iter().map(|p| tape.leaf(p.clone())).collect();
        let root = builder(&mut tape, &leaves)?;
        let v = tape.value(root).item();
        if !v.is_finite() {
            return Err(AutodiffError::NonFinite(v).into());
        }
        Ok((tape, root, leaves))
    };

    let (tape, root, leaves) = run(params)?;
    let base_pattern = tape.relu_pattern();
    let grads = tape.backward(root)?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    let mut work: Vec<Tensor> = params.to_vec();
    for (p, leaf) in leaves.iter().enumerate() {
        let analytic = grads
            .get(*leaf)
            .map(|g| g.values().to_vec())
            .unwrap_or_else(|| vec![0.0; params[p].len()]);
        for (i, &a) in analytic.iter().enumerate() {
            let orig = params[p].values()[i];
            work[p].values_mut()[i] = orig + step;
            let (tp, rp, _) = run(&work)?;
            work[p].values_mut()[i] = orig - step;
            let (tm, rm, _) = run(&work)?;
            work[p].values_mut()[i] = orig;

            let kink = tp.relu_pattern() != base_pattern || tm.relu_pattern() != base_pattern;
            if kink {
                report.skipped += 1;
                continue;
            }
            let numeric = (tp.value(rp).item() - tm.value(rm).item()) / (2.0 * step);
            let err = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            report.max_rel_error = report.max_rel_error.max(err);
            report.checked += 1;
        }
    }
    Ok(report)
}
