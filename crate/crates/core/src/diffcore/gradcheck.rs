//! Central-difference gradient oracle.

use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-5;

fn eval<F: FnMut(&[f64]) -> Result<f64>>(f: &mut F, x: &[f64]) -> Result<f64> {
    let v = f(x)?;
    if !v.is_finite() {
        return Err(Error::numerical(
            "finite difference",
            format!("function returned {v}"),
        ));
    }
    Ok(v)
}

/// Max over coordinates of `|analytic - central difference| / max(1, |analytic|)`.
pub fn finite_diff_check<F>(mut f: F, point: &[f64], analytic: &[f64], epsilon: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if epsilon <= 0.0 {
        return Err(Error::Input(format!("epsilon must be positive, got {epsilon}")));
    }
    if analytic.len() != point.len() {
        return Err(Error::Dimension(format!(
            "{} gradient entries for a {}-dimensional point",
            analytic.len(),
            point.len()
        )));
    }
    let mut x = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + epsilon;
        let up = eval(&mut f, &x)?;
        x[i] = orig - epsilon;
        let down = eval(&mut f, &x)?;
        x[i] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        worst = worst.max((analytic[i] - numeric).abs() / analytic[i].abs().max(1.0));
    }
    Ok(worst)
}

/// Same discrepancy measure along arbitrary directions instead of coordinate
/// axes; the analytic directional derivative is `analytic · d`.
pub fn directional_check<F>(
    mut f: F,
    point: &[f64],
    analytic: &[f64],
    directions: &[Vec<f64>],
    epsilon: f64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if epsilon <= 0.0 {
        return Err(Error::Input(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut worst = 0.0f64;
    for d in directions {
        if d.len() != point.len() || analytic.len() != point.len() {
            return Err(Error::Dimension("direction length differs from point".into()));
        }
        let shifted = |sign: f64| -> Vec<f64> {
            point.iter().zip(d).map(|(p, di)| p + sign * epsilon * di).collect()
        };
        let up = eval(&mut f, &shifted(1.0))?;
        let down = eval(&mut f, &shifted(-1.0))?;
        let numeric = (up - down) / (2.0 * epsilon);
        let exact: f64 = analytic.iter().zip(d).map(|(g, di)| g * di).sum();
        worst = worst.max((exact - numeric).abs() / exact.abs().max(1.0));
    }
    Ok(worst)
}
