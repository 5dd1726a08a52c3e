//! Adaptive explicit integration of controlled vector fields.
//!
//! The stepper is the Dormand-Prince embedded pair of orders 5(4) with
//! proportional-integral step-size control. Control-signal breakpoints are
//! forced step boundaries so piecewise-constant controls are integrated
//! exactly piece by piece. Every accepted state is guard-checked and angular
//! coordinates are wrapped to `[0, 2*pi)`.

use crate::control::{ControlSignal, ControlSystem};
use crate::error::{Error, Result};
use crate::poisson::{Observable, State};
use nalgebra::DVector;
use std::f64::consts::TAU;
use std::io::Write;

#[derive(Debug, Clone)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 1.0,
            initial_step: 1e-2,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tols(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParams("tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0 && self.initial_step > 0.0) {
            return Err(Error::InvalidParams("step sizes must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParams("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Time-ordered accepted states with the control applied at each sample.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// One entry per sample when a signal was supplied (the value active at
    /// that time; the final sample repeats the last piece), empty otherwise.
    pub controls: Vec<DVector<f64>>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal_state(&self) -> &State {
        self.states.last().expect("non-empty trajectory")
    }

    pub fn terminal_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "times": self.times,
            "states": self.states.iter().map(|s| s.iter().cloned().collect::<Vec<_>>()).collect::<Vec<_>>(),
            "controls": self.controls.iter().map(|u| u.iter().cloned().collect::<Vec<_>>()).collect::<Vec<_>>(),
            "steps_accepted": self.steps_accepted,
            "steps_rejected": self.steps_rejected,
        })
    }

    /// CSV with header `t,x1..xn[,u1..um]`, full double precision.
    pub fn write_csv<W: Write>(&self, coord_names: &[String], out: &mut W) -> std::io::Result<()> {
        write!(out, "t")?;
        for name in coord_names {
            write!(out, ",{name}")?;
        }
        if !self.controls.is_empty() {
            for i in 1..=self.controls[0].len() {
                write!(out, ",u{i}")?;
            }
        }
        writeln!(out)?;
        for k in 0..self.len() {
            write!(out, "{:.16e}", self.times[k])?;
            for v in self.states[k].iter() {
                write!(out, ",{v:.16e}")?;
            }
            if !self.controls.is_empty() {
                for v in self.controls[k].iter() {
                    write!(out, ",{v:.16e}")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Drift of one first integral along a trajectory.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IntegralDrift {
    pub label: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    pub max_rel_drift: f64,
}

/// Drift of each integral against its value at the initial state.
pub fn conservation_report(traj: &Trajectory, integrals: &[Observable]) -> Vec<IntegralDrift> {
    assert!(!traj.is_empty(), "conservation report needs a non-empty trajectory");
    integrals
        .iter()
        .map(|obs| {
            let initial = obs.value(&traj.states[0]);
            let max_abs_drift = traj
                .states
                .iter()
                .map(|x| (obs.value(x) - initial).abs())
                .fold(0.0_f64, f64::max);
            let max_rel_drift = if initial.abs() >= 1e-12 {
                max_abs_drift / initial.abs()
            } else {
                max_abs_drift
            };
            IntegralDrift {
                label: obs.label().to_string(),
                initial,
                max_abs_drift,
                max_rel_drift,
            }
        })
        .collect()
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const PI_BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Integrate `sys` from `x0` over `span`, applying `signal` if present.
///
/// The signal (when given) must cover the span and respect the system's
/// bound box. Returns the accepted-step trajectory; errors report the last
/// guard-valid state.
pub fn integrate(
    sys: &ControlSystem,
    x0: &State,
    signal: Option<&ControlSignal>,
    span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let (t_start, t_end) = span;
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    if !sys.guard(x0) {
        return Err(Error::InvalidParams(
            "initial state violates the domain guard".into(),
        ));
    }
    if !(t_end >= t_start) {
        return Err(Error::InvalidParams("span end must not precede its start".into()));
    }

    let m = sys.num_controls();
    let zero_u = DVector::zeros(m);
    if let Some(sig) = signal {
        sig.check_bounds(sys.bounds())?;
        if t_end > t_start && (sig.start() > t_start || sig.end() < t_end) {
            return Err(Error::InvalidSignal(format!(
                "signal span [{}, {}) does not cover [{t_start}, {t_end}]",
                sig.start(),
                sig.end()
            )));
        }
    }

    // Segment boundaries: the span endpoints plus any breakpoints inside.
    let mut boundaries = vec![t_start];
    if let Some(sig) = signal {
        for &b in sig.breakpoints() {
            if b > t_start && b < t_end {
                boundaries.push(b);
            }
        }
    }
    boundaries.push(t_end);

    let mut traj = Trajectory {
        times: vec![t_start],
        states: vec![x0.clone()],
        controls: Vec::new(),
        steps_accepted: 0,
        steps_rejected: 0,
    };

    let control_at = |t: f64| -> DVector<f64> {
        match signal {
            Some(sig) if sig.pieces() > 0 => {
                let t_query = t.min(sig.end() - f64::EPSILON * sig.end().abs().max(1.0));
                match sig.value(t_query) {
                    Ok(v) => DVector::from_column_slice(v),
                    Err(_) => zero_u.clone(),
                }
            }
            _ => zero_u.clone(),
        }
    };
    if signal.is_some() {
        traj.controls.push(control_at(t_start));
    }

    let mut state = x0.clone();
    let mut total_steps = 0usize;

    for seg in boundaries.windows(2) {
        let (seg_start, seg_end) = (seg[0], seg[1]);
        if seg_end <= seg_start {
            continue;
        }
        let u = control_at(seg_start);
        integrate_segment(
            sys,
            &mut state,
            &u,
            seg_start,
            seg_end,
            opts,
            &mut traj,
            signal.is_some(),
            &mut total_steps,
        )?;
    }

    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
fn integrate_segment(
    sys: &ControlSystem,
    state: &mut State,
    u: &DVector<f64>,
    seg_start: f64,
    seg_end: f64,
    opts: &IntegratorOptions,
    traj: &mut Trajectory,
    record_controls: bool,
    total_steps: &mut usize,
) -> Result<()> {
    let expo1 = 0.2 - PI_BETA * 0.75;
    let mut t = seg_start;
    let mut h = opts.initial_step.min(seg_end - seg_start).min(opts.max_step);
    let mut fac_old: f64 = 1e-4;
    let rhs = |x: &State| sys.rhs_unchecked(x, u);

    while t < seg_end {
        if *total_steps >= opts.max_steps {
            return Err(Error::StepLimitExceeded {
                t,
                max_steps: opts.max_steps,
            });
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
        let mut last = false;
        if t + 1.01 * h >= seg_end {
            h = seg_end - t;
            last = true;
        }

        let y = &*state;
        let k1 = rhs(y);
        let k2 = rhs(&(y + &k1 * (A21 * h)));
        let k3 = rhs(&(y + (&k1 * A31 + &k2 * A32) * h));
        let k4 = rhs(&(y + (&k1 * A41 + &k2 * A42 + &k3 * A43) * h));
        let k5 = rhs(&(y + (&k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h));
        let k6 = rhs(&(y + (&k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h));
        let y_new = y + (&k1 * B1 + &k3 * B3 + &k4 * B4 + &k5 * B5 + &k6 * B6) * h;
        let k7 = rhs(&y_new);
        let err_vec = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;

        // Scaled RMS error; NaN (e.g. from singular evaluations) rejects.
        let mut err_sq = 0.0;
        for i in 0..y.len() {
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (err_vec[i] / sc) * (err_vec[i] / sc);
        }
        let err = (err_sq / y.len() as f64).sqrt();
        *total_steps += 1;

        if err.is_finite() && err <= 1.0 {
            traj.steps_accepted += 1;
            t = if last { seg_end } else { t + h };
            *state = y_new;
            wrap_angular(state, sys.angular_mask());
            if !sys.guard(state) {
                return Err(Error::GuardViolation {
                    t,
                    last_time: *traj.times.last().unwrap(),
                    last_state: traj.states.last().unwrap().clone(),
                });
            }
            traj.times.push(t);
            traj.states.push(state.clone());
            if record_controls {
                traj.controls.push(u.clone());
            }
            let fac11 = err.powf(expo1);
            let fac = (fac11 / fac_old.powf(PI_BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            h = (h / fac).min(opts.max_step);
            fac_old = err.max(1e-4);
        } else {
            traj.steps_rejected += 1;
            let fac11 = if err.is_finite() { err.powf(expo1) } else { FAC_MAX };
            h /= (fac11 / SAFETY).clamp(1.0, 1.0 / FAC_MIN);
        }
    }
    Ok(())
}

fn wrap_angular(state: &mut State, angular: &[bool]) {
    for i in 0..state.len() {
        if angular[i] {
            state[i] = state[i].rem_euclid(TAU);
        }
    }
}
