use std::fmt;

use ndarray::Array2;

use super::{Tape, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Central difference step.
    pub eps: f64,
    /// Maximum accepted relative error.
    pub tolerance: f64,
    /// Denominator floor of the relative error, so that entries whose
    /// analytic and numeric gradients are both ~0 compare absolutely.
    pub floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            tolerance: 1e-3,
            floor: 1e-6,
        }
    }
}

/// Outcome for one parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub index: usize,
    pub name: String,
    pub max_rel_error: f64,
    pub checked: usize,
    /// Entries skipped because the function has a kink within `eps`.
    pub kinks: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn total_kinks(&self) -> usize {
        self.params.iter().map(|p| p.kinks).sum()
    }

    pub fn total_checked(&self) -> usize {
        self.params.iter().map(|p| p.checked).sum()
    }

    /// Attaches names to the per-parameter rows.
    pub fn with_names<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        for p in &mut self.params {
            if let Some(n) = names.get(p.index) {
                p.name = n.as_ref().to_owned();
            }
        }
        self
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.params {
            writeln!(
                f,
                "{:<32} checked {:>5}  kinks {:>3}  max rel err {:.3e}  {}",
                if p.name.is_empty() { format!("#{}", p.index) } else { p.name.clone() },
                p.checked,
                p.kinks,
                p.max_rel_error,
                if p.passed { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "overall: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

fn evaluate<F>(f: &F, params: &[Array2<f64>]) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.leaf_array(p.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    let value = tape.scalar(loss);
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("loss evaluated to {value}")));
    }
    Ok(value)
}

/// Compares tape gradients of the scalar `f` at `params` with central finite
/// differences, entry by entry.
///
/// An entry whose central difference disagrees but whose analytic gradient
/// matches one of the one-sided slopes, while the two one-sided slopes
/// disagree, sits on a kink (e.g. ReLU at 0); it is counted and skipped.
pub fn grad_check<F>(f: F, params: &[Array2<f64>], cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.leaf_array(p.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    let base = tape.scalar(loss);
    if !base.is_finite() {
        return Err(Error::NonFinite(format!("loss evaluated to {base}")));
    }
    let grads = tape.backward(loss)?;
    let analytic: Vec<Array2<f64>> = vars
        .iter()
        .zip(params)
        .map(|(&v, p)| grads.get_or_zeros(v, p.dim()))
        .collect();
    drop(tape);

    let mut work: Vec<Array2<f64>> = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for (k, a) in analytic.iter().enumerate() {
        let mut check = ParamCheck {
            index: k,
            name: String::new(),
            max_rel_error: 0.0,
            checked: 0,
            kinks: 0,
            passed: true,
        };
        for idx in ndarray::indices(a.dim()) {
            let x0 = work[k][idx];
            work[k][idx] = x0 + cfg.eps;
            let plus = evaluate(&f, &work)?;
            work[k][idx] = x0 - cfg.eps;
            let minus = evaluate(&f, &work)?;
            work[k][idx] = x0;

            let g = a[idx];
            let numeric = (plus - minus) / (2.0 * cfg.eps);
            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(cfg.floor);
            if rel > cfg.tolerance {
                let right = (plus - base) / cfg.eps;
                let left = (base - minus) / cfg.eps;
                let gap = (right - left).abs();
                if (g - right).abs().min((g - left).abs()) < gap / 4.0 {
                    check.kinks += 1;
                    continue;
                }
            }
            check.checked += 1;
            check.max_rel_error = check.max_rel_error.max(rel);
        }
        check.passed = check.max_rel_error < cfg.tolerance;
        out.push(check);
    }
    let passed = out.iter().all(|p| p.passed);
    Ok(GradCheckReport {
        params: out,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn square_at_three() {
        let report = grad_check(
            |t, p| t.row_dot(p[0], p[0]),
            &[array![[3.0]]],
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(report.passed);
        assert!(report.params[0].max_rel_error < 1e-6);
        // analytic value
        let mut t = Tape::new();
        let x = t.leaf_array(array![[3.0]]);
        let y = t.row_dot(x, x).unwrap();
        let g = t.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap()[[0, 0]], 6.0);
    }

    #[test]
    fn relu_kink_is_excluded() {
        let report = grad_check(
            |t, p| {
                let r = t.relu(p[0]);
                Ok(t.sum(r))
            },
            &[array![[0.0]]],
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert_eq!(report.params[0].kinks, 1);
        assert_eq!(report.params[0].checked, 0);
        assert!(report.passed);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        // x² enters as a constant leaf, so the tape misses its gradient
        let report = grad_check(
            |t, p| {
                let v = t.value(p[0]).clone();
                let c = t.leaf_array(v.mapv(|x| x * x));
                let s = t.add(p[0], c)?;
                Ok(t.sum(s))
            },
            &[array![[2.0, -1.0]]],
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let r = grad_check(
            |t, p| {
                let v = t.value(p[0]).mapv(|x| x / 0.0);
                let c = t.leaf_array(v);
                let s = t.add(p[0], c)?;
                Ok(t.sum(s))
            },
            &[array![[1.0]]],
            &GradCheckConfig::default(),
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
