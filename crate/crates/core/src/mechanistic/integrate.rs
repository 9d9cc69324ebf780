use crate::diffcore::Real;
use crate::{Error, Result};

use super::EpiState;

/// Blend weight of the renormalized candidate in [`stabilize`].
pub const MASS_BLEND: f64 = 0.9;

fn check_stage<T: Real>(stage: usize, values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.value().is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::numerical(
            format!("rk4 stage {stage}"),
            format!("component {i} is {}", values[i].value()),
        )),
    }
}

/// One classical Runge-Kutta step of `dy/dt = f(y)`.
pub fn rk4_step<T, F>(mut f: F, y: &[T], dt: f64) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    if !(dt > 0.0) {
        return Err(Error::Input(format!("step size must be positive, got {dt}")));
    }
    let half = 0.5 * dt;
    let advance = |k: &[T], h: f64| -> Vec<T> { y.iter().zip(k).map(|(&yi, &ki)| yi + ki.scale(h)).collect() };

    let k1 = f(y)?;
    check_stage(1, &k1)?;
    let k2 = f(&advance(&k1, half))?;
    check_stage(2, &k2)?;
    let k3 = f(&advance(&k2, half))?;
    check_stage(3, &k3)?;
    let k4 = f(&advance(&k3, dt))?;
    check_stage(4, &k4)?;

    let sixth = dt / 6.0;
    let next: Vec<T> = (0..y.len())
        .map(|i| y[i] + (k1[i] + k2[i].scale(2.0) + k3[i].scale(2.0) + k4[i]).scale(sixth))
        .collect();
    check_stage(5, &next)?;
    Ok(next)
}

/// Result of [`stabilize`].
#[derive(Debug, Clone)]
pub struct Stabilized<S> {
    pub state: S,
    /// The clamped candidate had zero mass, so `previous` was returned unchanged.
    pub degenerate: bool,
}

/// Clamp at zero, renormalize to unit mass, then blend with the previous state:
/// `alpha * y / |y|_1 + (1 - alpha) * previous`.
pub fn stabilize<T: Real>(candidate: &[T], previous: &[T], alpha: f64) -> Stabilized<Vec<T>> {
    let clamped: Vec<T> = candidate.iter().map(|c| c.clamp_nonneg()).collect();
    let total = clamped[1..].iter().fold(clamped[0], |acc, &c| acc + c);
    if !(total.value() > 0.0) || !total.value().is_finite() {
        log::warn!("degenerate state after clamping; keeping previous state");
        return Stabilized {
            state: previous.to_vec(),
            degenerate: true,
        };
    }
    let keep = 1.0 - alpha;
    let state = clamped
        .iter()
        .zip(previous)
        .map(|(&c, &p)| c.div(total).scale(alpha) + p.scale(keep))
        .collect();
    Stabilized {
        state,
        degenerate: false,
    }
}

/// [`stabilize`] on validated states.
pub fn stabilize_state(candidate: &[f64], previous: &EpiState, alpha: f64) -> Result<Stabilized<EpiState>> {
    if candidate.len() != previous.dim() {
        return Err(Error::Input(format!(
            "candidate has {} compartments, previous has {}",
            candidate.len(),
            previous.dim()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Input(format!("blend weight must lie in [0, 1], got {alpha}")));
    }
    let out = stabilize::<f64>(candidate, previous.values(), alpha);
    Ok(Stabilized {
        state: EpiState::from_raw(out.state),
        degenerate: out.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanistic::{ModelKind, RateTriple};

    fn sirs(rates: RateTriple) -> impl FnMut(&[f64]) -> Result<Vec<f64>> {
        move |y| ModelKind::Sirs.derivative(y, &rates)
    }

    #[test]
    fn zero_field_and_fixed_point() {
        let y = [0.2, 0.3, 0.5];
        assert_eq!(rk4_step(|y: &[f64]| Ok(vec![0.0; y.len()]), &y, 0.7).unwrap(), y.to_vec());
        let dfe = [1.0, 0.0, 0.0];
        assert_eq!(rk4_step(sirs(RateTriple::new(0.3, 0.1, 0.05)), &dfe, 1.0).unwrap(), dfe.to_vec());
    }

    #[test]
    fn one_step_matches_fine_euler() {
        let rates = RateTriple::new(0.3, 0.1, 0.05);
        let y0 = [0.9, 0.1, 0.0];
        let rk = rk4_step(sirs(rates), &y0, 1.0).unwrap();

        let mut y = y0.to_vec();
        let h = 1.0 / 1000.0;
        for _ in 0..1000 {
            let d = ModelKind::Sirs.derivative(&y, &rates).unwrap();
            for (yi, di) in y.iter_mut().zip(d) {
                *yi += h * di;
            }
        }
        for (a, b) in rk.iter().zip(&y) {
            assert!((a - b).abs() < 1e-5, "{rk:?} vs {y:?}");
        }
        assert!((rk.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_stage_is_named() {
        let err = rk4_step(|y: &[f64]| Ok(vec![f64::INFINITY; y.len()]), &[0.5, 0.5, 0.0], 1.0).unwrap_err();
        assert!(err.to_string().contains("rk4 stage 1"), "{err}");
        assert!(rk4_step(|y: &[f64]| Ok(y.to_vec()), &[1.0], 0.0).is_err());
    }

    #[test]
    fn stabilize_examples() {
        let prev = EpiState::new(vec![0.2, 0.3, 0.5]).unwrap();
        let out = stabilize_state(&[0.2, 0.3, 0.5], &prev, MASS_BLEND).unwrap();
        for (a, b) in out.state.values().iter().zip(prev.values()) {
            assert!((a - b).abs() < 1e-16);
        }

        let third = 1.0 / 3.0;
        let prev = EpiState::new(vec![third; 3]).unwrap();
        let out = stabilize_state(&[0.5, 0.5, 0.5], &prev, 0.9).unwrap();
        for v in out.state.values() {
            assert!((v - third).abs() < 1e-15);
        }

        let prev = EpiState::new(vec![0.6, 0.3, 0.1]).unwrap();
        let out = stabilize_state(&[0.7, -0.01, 0.32], &prev, 0.9).unwrap();
        assert!(out.state.values().iter().all(|&v| v >= 0.0));
        assert!((out.state.mass() - 1.0).abs() <= 1e-12);
        assert!(!out.degenerate);
    }

    #[test]
    fn degenerate_candidate_keeps_previous() {
        let prev = EpiState::new(vec![0.6, 0.3, 0.1]).unwrap();
        let out = stabilize_state(&[-0.1, 0.0, -2.0], &prev, 0.9).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.state, prev);
    }
}
