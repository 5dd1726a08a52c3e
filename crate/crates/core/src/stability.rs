//! Empirical probes for the stability hypotheses behind the controllability
//! results: recurrence of the uncontrolled flow, nonwandering behavior, and
//! properness of conserved quantities.
//!
//! These produce evidence, never proof: return detection scans accepted
//! integration steps only, and properness scans report minimum norms over
//! sampled spheres.

use crate::control::ControlSystem;
use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorOptions, Trajectory};
use crate::poisson::State;
use crate::sample::{rejection_sample, sample_ball, stream, Rng};
use nalgebra::DVector;
use serde::Serialize;

/// First detected return of the uncontrolled flow into the ball around the
/// start point.
#[derive(Debug, Clone, Serialize)]
pub struct Recurrence {
    pub t_star: f64,
    pub dist: f64,
}

/// A ball sample whose trajectory re-entered the ball.
#[derive(Debug, Clone)]
pub struct NonwanderingEvidence {
    pub sample_index: usize,
    pub start: State,
    pub t: f64,
    pub dist: f64,
}

impl NonwanderingEvidence {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "sample_index": self.sample_index,
            "start": self.start.iter().cloned().collect::<Vec<_>>(),
            "t": self.t,
            "dist": self.dist,
        })
    }
}

/// Minimum norm of a map over sampled spheres of increasing radius.
#[derive(Debug, Clone, Serialize)]
pub struct PropernessProfile {
    pub radii: Vec<f64>,
    pub min_norms: Vec<f64>,
}

impl PropernessProfile {
    pub fn is_strictly_increasing(&self) -> bool {
        self.min_norms.windows(2).all(|w| w[1] > w[0])
    }
}

fn validate_window(radius: f64, t_min: f64, t_max: f64) -> Result<()> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParams("radius must be positive".into()));
    }
    if !(0.0 <= t_min && t_min < t_max) {
        return Err(Error::InvalidParams(
            "need 0 <= T_min < T_max for a return window".into(),
        ));
    }
    Ok(())
}

const CHUNK: f64 = 20.0;

/// Integrate the uncontrolled drift from `start` and return the first
/// accepted-step time `t > t_min` whose state lies within `radius` of
/// `center` (wrapped distance on angular coordinates).
fn first_return(
    sys: &ControlSystem,
    start: &State,
    center: &State,
    radius: f64,
    t_min: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<Option<(f64, f64)>> {
    let mut state = start.clone();
    let mut t = 0.0;
    while t < t_max {
        let t_end = (t + CHUNK).min(t_max);
        let traj: Trajectory = integrate(sys, &state, None, (t, t_end), opts)?;
        for (tk, xk) in traj.times.iter().zip(&traj.states) {
            if *tk > t_min {
                let d = sys.distance(xk, center, None);
                if d < radius {
                    return Ok(Some((*tk, d)));
                }
            }
        }
        state = traj.terminal_state().clone();
        t = t_end;
    }
    Ok(None)
}

/// Positive-Poisson-stability probe: first return time of the flow from `x0`
/// into its own `radius`-ball after `t_min`, or `None` before `t_max`.
pub fn recurrence_probe(
    sys: &ControlSystem,
    x0: &State,
    radius: f64,
    t_min: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<Option<Recurrence>> {
    validate_window(radius, t_min, t_max)?;
    sys.check_guard(x0, 0.0)?;
    Ok(first_return(sys, x0, x0, radius, t_min, t_max, opts)?
        .map(|(t_star, dist)| Recurrence { t_star, dist }))
}

/// Nonwandering probe: sample points in the ball around `x0` (sample 0 is
/// `x0` itself) and report the first whose trajectory re-enters the ball
/// after `t_min`.
#[allow(clippy::too_many_arguments)]
pub fn nonwandering_probe(
    sys: &ControlSystem,
    x0: &State,
    radius: f64,
    t_min: f64,
    t_max: f64,
    n_samples: usize,
    seed: u64,
    opts: &IntegratorOptions,
) -> Result<Option<NonwanderingEvidence>> {
    validate_window(radius, t_min, t_max)?;
    sys.check_guard(x0, 0.0)?;
    if n_samples == 0 {
        return Err(Error::InvalidParams("need at least one sample".into()));
    }
    for k in 0..n_samples {
        let y = if k == 0 {
            x0.clone()
        } else {
            let mut rng = stream(seed, k as u64);
            rejection_sample(
                &mut rng,
                10_000,
                |r| sample_ball(x0, radius, r),
                |x| sys.guard(x),
            )?
        };
        // A sample whose flow leaves the guarded domain simply yields no
        // return; other integration failures abort the probe.
        match first_return(sys, &y, x0, radius, t_min, t_max, opts) {
            Ok(Some((t, dist))) => {
                return Ok(Some(NonwanderingEvidence {
                    sample_index: k,
                    start: y,
                    t,
                    dist,
                }))
            }
            Ok(None) => {}
            Err(Error::GuardViolation { .. }) | Err(Error::StepUnderflow { .. }) => {}
            Err(other) => return Err(other),
        }
    }
    Ok(None)
}

/// Minimum of `||f||` over `n_per_sphere` accepted samples of each sphere.
///
/// `sampler(radius, rng)` draws candidate points of the given radius;
/// candidates failing `guard` are rejected and redrawn. Deterministic given
/// `seed`.
pub fn properness_scan<F, S>(
    f: F,
    sampler: S,
    guard: Option<&(dyn Fn(&State) -> bool + Sync)>,
    radii: &[f64],
    n_per_sphere: usize,
    seed: u64,
) -> Result<PropernessProfile>
where
    F: Fn(&State) -> DVector<f64>,
    S: Fn(f64, &mut Rng) -> State,
{
    if radii.is_empty() || n_per_sphere == 0 {
        return Err(Error::InvalidParams("need radii and a positive sample count".into()));
    }
    if radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidParams("radii must be positive and increasing".into()));
    }
    let accept = |x: &State| guard.map(|g| g(x)).unwrap_or(true);
    let mut min_norms = Vec::with_capacity(radii.len());
    for (i, radius) in radii.iter().enumerate() {
        let mut min_norm = f64::INFINITY;
        for k in 0..n_per_sphere {
            let mut rng = stream(seed, (i * n_per_sphere + k) as u64);
            let x = rejection_sample(&mut rng, 10_000, |r| sampler(*radius, r), accept)?;
            min_norm = min_norm.min(f(&x).norm());
        }
        min_norms.push(min_norm);
    }
    Ok(PropernessProfile {
        radii: radii.to_vec(),
        min_norms,
    })
}
