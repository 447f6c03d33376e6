//! Dormand-Prince 5(4) with step-size control, generic over the state element.

use crate::scalar::{PhaseElem, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    pub rtol: T,
    pub atol: T,
    pub max_step: T,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RkFailure<T> {
    /// The observer flagged an escape, or the state went non-finite.
    Diverged(T),
    StepUnderflow(T),
    TooManySteps(T),
}

impl<T: Real> RkFailure<T> {
    pub fn time(&self) -> T {
        match *self {
            RkFailure::Diverged(t) | RkFailure::StepUnderflow(t) | RkFailure::TooManySteps(t) => t,
        }
    }
}

/// Observer verdict for an error-accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    /// Redo the step with half the size.
    Shrink,
    Escape,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn err_norm<T: Real, X: PhaseElem<T>>(err: &[X], y0: &[X], y1: &[X], ctl: &StepControl<T>) -> T {
    let sum: T = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(&e, (&a, &b))| {
            let sc = ctl.atol + ctl.rtol * a.magnitude().max(b.magnitude());
            let r = e.magnitude() / sc;
            r * r
        })
        .sum();
    (sum / T::of(err.len() as f64)).sqrt()
}

/// Integrates `dy/dt = f(t, y)` from `t0`, returning the state at every
/// checkpoint. Checkpoints must be monotone in the direction of integration;
/// steps are clipped to land on them exactly.
pub fn dopri5<T, X, F, O>(
    mut rhs: F,
    t0: T,
    y0: &[X],
    checkpoints: &[T],
    ctl: &StepControl<T>,
    mut observe: O,
) -> Result<Vec<Vec<X>>, RkFailure<T>>
where
    T: Real,
    X: PhaseElem<T>,
    F: FnMut(T, &[X], &mut [X]),
    O: FnMut(T, &[X]) -> Verdict,
{
    let dim = y0.len();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<X>> = vec![vec![X::zero(); dim]; 7];
    let mut ytmp = vec![X::zero(); dim];
    let mut ynew = vec![X::zero(); dim];
    let mut yerr = vec![X::zero(); dim];
    rhs(t, &y, &mut k[0]);

    let Some(&last) = checkpoints.last() else {
        return Ok(out);
    };
    let dir = if last >= t0 { T::one() } else { -T::one() };

    // Starting step from the scale of y and f (simplified Hairer-Wanner).
    let d0 = err_norm(&y, &y, &y, ctl);
    let d1 = err_norm(&k[0], &y, &y, ctl);
    let mut h = if d0 < T::of(1e-5) || d1 < T::of(1e-5) {
        T::of(1e-6)
    } else {
        T::of(0.01) * d0 / d1
    };
    h = h.min(ctl.max_step);

    let mut steps = 0usize;
    for &target in checkpoints {
        if (target - t) * dir < T::zero() {
            panic!("checkpoints must be monotone in the integration direction");
        }
        while (target - t) * dir > T::zero() {
            let remaining = (target - t).abs();
            let hstep = h.min(remaining).min(ctl.max_step);
            let landing = hstep >= remaining;
            if hstep < T::of(1e-14) * t.abs().max(T::one()) && !landing {
                return Err(RkFailure::StepUnderflow(t));
            }
            steps += 1;
            if steps > ctl.max_steps {
                return Err(RkFailure::TooManySteps(t));
            }
            let hs = hstep * dir;
            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (r, &a) in A[s][..s].iter().enumerate() {
                        if a != 0.0 {
                            acc += k[r][i] * (hs * T::of(a));
                        }
                    }
                    ytmp[i] = acc;
                }
                rhs(t + hs * T::of(C[s]), &ytmp, &mut k[s]);
                if s == 6 {
                    ynew.copy_from_slice(&ytmp);
                }
            }
            for i in 0..dim {
                let mut e = X::zero();
                for (s, &c) in E.iter().enumerate() {
                    if c != 0.0 {
                        e += k[s][i] * (hs * T::of(c));
                    }
                }
                yerr[i] = e;
            }
            if ynew.iter().any(|v| !v.magnitude().is_finite()) {
                h = hstep * T::of(0.25);
                if h < T::of(1e-14) * t.abs().max(T::one()) {
                    return Err(RkFailure::Diverged(t));
                }
                continue;
            }
            let err = err_norm(&yerr, &y, &ynew, ctl);
            if err <= T::one() {
                let tnew = if landing { target } else { t + hs };
                match observe(tnew, &ynew) {
                    Verdict::Escape => return Err(RkFailure::Diverged(tnew)),
                    Verdict::Shrink => {
                        h = hstep * T::of(0.5);
                        if h < T::of(1e-14) * t.abs().max(T::one()) {
                            return Err(RkFailure::StepUnderflow(t));
                        }
                        continue;
                    }
                    Verdict::Accept => {}
                }
                t = tnew;
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                let fac = if err == T::zero() {
                    T::of(5.0)
                } else {
                    (T::of(0.9) * err.powf(T::of(-0.2))).min(T::of(5.0)).max(T::of(0.2))
                };
                // a step clipped to a checkpoint says little about the natural size
                let base = if landing { h.max(hstep) } else { hstep };
                h = base * fac;
            } else {
                let fac = (T::of(0.9) * err.powf(T::of(-0.2))).max(T::of(0.1));
                h = hstep * fac;
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
