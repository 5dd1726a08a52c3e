//! Constructive controllability: find a bounded piecewise-constant control
//! taking the system from one state to within tolerance of another.
//!
//! The planner grows a tree of constant-control motions of duration
//! `dt_expand`. Because the drift can be fast compared to the control
//! authority, plain node-to-goal matching quantizes arrival too coarsely;
//! goal approaches therefore also watch the integrated arcs themselves: if
//! an edge's trajectory passes within tolerance of the goal, the final piece
//! is cut at the crossing and re-integrated exactly. Near misses trigger a
//! local refinement of a short control tail. Everything is deterministic
//! given the seed, and results are validated by independent replay.

use crate::control::{ControlSignal, ControlSystem};
use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorOptions};
use crate::poisson::State;
use crate::sample::stream;
use nalgebra::DVector;
use rand::Rng as _;
use rayon::prelude::*;
use std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct SteerOptions {
    pub goal_tol: f64,
    /// Duration of each constant-control tree edge.
    pub dt_expand: f64,
    /// Random control candidates per expansion (plus the zero control).
    pub n_control_samples: usize,
    /// Probability of steering toward the goal instead of a random target.
    pub goal_bias: f64,
    pub max_nodes: usize,
    pub seed: u64,
    /// Per-coordinate metric weights (ones when absent).
    pub metric_weights: Option<Vec<f64>>,
}

impl Default for SteerOptions {
    fn default() -> Self {
        Self {
            goal_tol: 1e-2,
            dt_expand: 0.1,
            n_control_samples: 8,
            goal_bias: 0.1,
            max_nodes: 20_000,
            seed: 0,
            metric_weights: None,
        }
    }
}

impl SteerOptions {
    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.goal_tol > 0.0 && self.dt_expand > 0.0) {
            return Err(Error::InvalidParams("goal tolerance and dt must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(Error::InvalidParams("goal bias must lie in [0, 1]".into()));
        }
        if self.max_nodes == 0 {
            return Err(Error::InvalidParams("max_nodes must be positive".into()));
        }
        if let Some(w) = &self.metric_weights {
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SteerResult {
    pub signal: ControlSignal,
    pub terminal_state: State,
    pub terminal_error: f64,
    pub nodes_expanded: usize,
}

impl SteerResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "signal": self.signal.to_json(),
            "terminal_state": self.terminal_state.iter().cloned().collect::<Vec<_>>(),
            "terminal_error": self.terminal_error,
            "nodes_expanded": self.nodes_expanded,
        })
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub terminal_error: f64,
}

// Goal-approach tuning (counts, not tolerances): how many greedy extensions
// one goal-biased draw may chain, the near-miss factor that triggers tail
// refinement, and the refinement effort.
const CONNECT_LIMIT: usize = 40;
const NEAR_MISS_FACTOR: f64 = 8.0;
const REFINE_PIECES: usize = 3;
const REFINE_ROUNDS: usize = 7;
const REFINE_TRIES: usize = 16;
const NEAREST_POOL: usize = 8;

struct Node {
    state: State,
    /// One-step drift prediction, used to rank goal-approach parents.
    flow_next: State,
    parent: usize,
    control: DVector<f64>,
}

/// Closest approach of the chord from `a` to `b` to the point `g`, in the
/// wrapped weighted metric. Returns `(parameter in [0, 1], distance)`.
fn chord_closest(
    a: &State,
    b: &State,
    g: &State,
    angular: &[bool],
    weights: Option<&[f64]>,
) -> (f64, f64) {
    let n = a.len();
    let mut ab = DVector::zeros(n);
    let mut ag = DVector::zeros(n);
    for i in 0..n {
        let w = weights.map(|w| w[i]).unwrap_or(1.0);
        let mut db = b[i] - a[i];
        let mut dg = g[i] - a[i];
        if angular[i] {
            db = wrap_half(db);
            dg = wrap_half(dg);
        }
        ab[i] = w * db;
        ag[i] = w * dg;
    }
    let denom = ab.norm_squared();
    if denom == 0.0 {
        return (0.0, ag.norm());
    }
    let s = (ag.dot(&ab) / denom).clamp(0.0, 1.0);
    (s, (ag - ab * s).norm())
}

fn wrap_half(d: f64) -> f64 {
    let mut d = d.rem_euclid(TAU);
    if d > TAU / 2.0 {
        d -= TAU;
    }
    d
}

/// Closest pass of a control tail to the goal: `(distance, piece index,
/// time within that piece)`.
struct ArcPass {
    dist: f64,
    piece: usize,
    t_in_piece: f64,
}

struct Shot {
    terminal: Option<State>,
    pass: Option<ArcPass>,
}

/// Integrate `pieces` of constant control (each of duration `dt`) from
/// `from`, recording the closest arc approach to `goal`.
fn shoot(
    sys: &ControlSystem,
    from: &State,
    pieces: &[DVector<f64>],
    dt: f64,
    goal: &State,
    weights: Option<&[f64]>,
    opts: &IntegratorOptions,
) -> Shot {
    let mut state = from.clone();
    let mut pass: Option<ArcPass> = None;
    for (pi, u) in pieces.iter().enumerate() {
        let sig = ControlSignal::constant(u.iter().cloned().collect(), 0.0, dt)
            .expect("constant piece");
        let Ok(traj) = integrate(sys, &state, Some(&sig), (0.0, dt), opts) else {
            return Shot { terminal: None, pass };
        };
        for k in 0..traj.len() - 1 {
            let (s, d) = chord_closest(
                &traj.states[k],
                &traj.states[k + 1],
                goal,
                sys.angular_mask(),
                weights,
            );
            let t = traj.times[k] + s * (traj.times[k + 1] - traj.times[k]);
            if t > 1e-9 && pass.as_ref().map(|p| d < p.dist).unwrap_or(true) {
                pass = Some(ArcPass {
                    dist: d,
                    piece: pi,
                    t_in_piece: t,
                });
            }
        }
        state = traj.terminal_state().clone();
    }
    Shot {
        terminal: Some(state),
        pass,
    }
}

/// Re-integrate a tail cut at the arc crossing; the caller checks the
/// resulting terminal error against its tolerance.
#[allow(clippy::too_many_arguments)]
fn finalize_tail(
    sys: &ControlSystem,
    from: &State,
    pieces: &[DVector<f64>],
    pass: &ArcPass,
    dt: f64,
    goal: &State,
    weights: Option<&[f64]>,
    opts: &IntegratorOptions,
) -> Option<(Vec<(DVector<f64>, f64)>, State, f64)> {
    let mut tail = Vec::new();
    for (pi, u) in pieces.iter().enumerate().take(pass.piece + 1) {
        let len = if pi == pass.piece { pass.t_in_piece } else { dt };
        if len <= 1e-9 {
            return None;
        }
        tail.push((u.clone(), len));
    }
    let mut state = from.clone();
    for (u, len) in &tail {
        let sig = ControlSignal::constant(u.iter().cloned().collect(), 0.0, *len).ok()?;
        state = integrate(sys, &state, Some(&sig), (0.0, *len), opts)
            .ok()?
            .terminal_state()
            .clone();
    }
    let err = sys.distance(&state, goal, weights);
    Some((tail, state, err))
}

/// Grow a tree of constant-control motions from `x_start` until a trajectory
/// reaches `goal_tol` of `x_goal`; returns the concatenated piecewise-constant
/// signal (the final piece may be shorter than `dt_expand` when the crossing
/// happens mid-edge). Deterministic given the seed.
pub fn steer(
    sys: &ControlSystem,
    x_start: &State,
    x_goal: &State,
    opts: &SteerOptions,
) -> Result<SteerResult> {
    opts.validate(sys.dim())?;
    sys.check_guard(x_start, 0.0)?;
    sys.check_guard(x_goal, 0.0)?;
    let weights = opts.metric_weights.as_deref();
    let dt = opts.dt_expand;

    let initial_dist = sys.distance(x_start, x_goal, weights);
    if initial_dist <= opts.goal_tol {
        return Ok(SteerResult {
            signal: ControlSignal::empty(0.0),
            terminal_state: x_start.clone(),
            terminal_error: initial_dist,
            nodes_expanded: 0,
        });
    }

    // Random targets come from the system's sampling box when it has one;
    // otherwise from the endpoint bounding box inflated to twice its width
    // (degenerate widths floored so every coordinate varies).
    let n = sys.dim();
    let (target_lo, target_hi) = match sys.sample_region() {
        Some(region) => {
            let mut lo = region.lower().to_vec();
            let mut hi = region.upper().to_vec();
            for i in 0..n {
                lo[i] = lo[i].min(x_start[i].min(x_goal[i]));
                hi[i] = hi[i].max(x_start[i].max(x_goal[i]));
            }
            (lo, hi)
        }
        None => {
            let mut lo = vec![0.0; n];
            let mut hi = vec![0.0; n];
            for i in 0..n {
                let a = x_start[i].min(x_goal[i]);
                let b = x_start[i].max(x_goal[i]);
                let half = (b - a).max(0.5);
                let center = 0.5 * (a + b);
                lo[i] = center - half;
                hi[i] = center + half;
            }
            (lo, hi)
        }
    };

    let integ_opts = IntegratorOptions {
        rel_tol: 1e-6,
        abs_tol: 1e-9,
        max_step: dt / 2.0,
        initial_step: dt / 4.0,
        max_steps: 100_000,
    };

    // Backward drift arc from the goal: targets on it pull the tree into the
    // goal's inflow corridor.
    let corridor: Vec<State> = {
        let reversed = sys.time_reversed();
        match integrate(
            &reversed,
            x_goal,
            None,
            (0.0, REFINE_PIECES as f64 * dt),
            &integ_opts,
        ) {
            Ok(traj) => traj.states,
            Err(_) => vec![x_goal.clone()],
        }
    };

    let flow_prediction = |x: &State| -> State { x + sys.drift().value(x) * dt };

    let mut rng = stream(opts.seed, 0);
    let mut nodes = vec![Node {
        state: x_start.clone(),
        flow_next: flow_prediction(x_start),
        parent: usize::MAX,
        control: DVector::zeros(sys.num_controls()),
    }];
    let mut best_error = initial_dist;

    let build_result = |nodes: &[Node],
                        parent_idx: usize,
                        tail: Vec<(DVector<f64>, f64)>,
                        terminal: State,
                        err: f64| {
        let mut edges: Vec<(DVector<f64>, f64)> = Vec::new();
        let mut cursor = parent_idx;
        while nodes[cursor].parent != usize::MAX {
            edges.push((nodes[cursor].control.clone(), dt));
            cursor = nodes[cursor].parent;
        }
        edges.reverse();
        edges.extend(tail);
        let mut breakpoints = vec![0.0];
        let mut values = Vec::new();
        for (u, len) in edges {
            breakpoints.push(breakpoints.last().unwrap() + len);
            values.push(u.iter().cloned().collect());
        }
        ControlSignal::new(breakpoints, values).map(|signal| SteerResult {
            signal,
            terminal_state: terminal,
            terminal_error: err,
            nodes_expanded: nodes.len(),
        })
    };

    while nodes.len() < opts.max_nodes {
        let toward_goal = rng.random::<f64>() < opts.goal_bias;
        let target = if toward_goal {
            if rng.random::<f64>() < 0.5 {
                x_goal.clone()
            } else {
                corridor[rng.random_range(0..corridor.len())].clone()
            }
        } else {
            DVector::from_iterator(
                n,
                (0..n).map(|i| target_lo[i] + rng.random::<f64>() * (target_hi[i] - target_lo[i])),
            )
        };

        // Goal approaches rank parents by where the drift will carry them and
        // rotate among the best few; exploration uses the plain nearest node.
        let mut from_idx = if toward_goal {
            let mut scored: Vec<(f64, usize)> = nodes
                .iter()
                .enumerate()
                .map(|(i, node)| (sys.distance(&node.flow_next, &target, weights), i))
                .collect();
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            scored[rng.random_range(0..scored.len().min(NEAREST_POOL))].1
        } else {
            nodes
                .iter()
                .enumerate()
                .map(|(i, node)| (sys.distance(&node.state, &target, weights), i))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                .map(|(_, i)| i)
                .unwrap()
        };

        let extensions = if toward_goal { CONNECT_LIMIT } else { 1 };
        for _ in 0..extensions {
            if nodes.len() >= opts.max_nodes {
                break;
            }
            let mut candidates: Vec<DVector<f64>> = vec![DVector::zeros(sys.num_controls())];
            for _ in 0..opts.n_control_samples {
                candidates.push(sys.bounds().sample(&mut rng));
            }

            let parent = nodes[from_idx].state.clone();
            let parent_dist = sys.distance(&parent, &target, weights);
            let shots: Vec<Shot> = candidates
                .par_iter()
                .map(|u| {
                    shoot(
                        sys,
                        &parent,
                        std::slice::from_ref(u),
                        dt,
                        x_goal,
                        weights,
                        &integ_opts,
                    )
                })
                .collect();

            let mut best_child: Option<(f64, usize)> = None;
            let mut best_arc: Option<(f64, usize)> = None;
            for (i, shot) in shots.iter().enumerate() {
                if let Some(terminal) = &shot.terminal {
                    let d = sys.distance(terminal, &target, weights);
                    if best_child.as_ref().map(|(bd, _)| d < *bd).unwrap_or(true) {
                        best_child = Some((d, i));
                    }
                }
                if let Some(pass) = &shot.pass {
                    if best_arc.as_ref().map(|(bd, _)| pass.dist < *bd).unwrap_or(true) {
                        best_arc = Some((pass.dist, i));
                    }
                }
            }

            // Direct arc crossing of the goal ball.
            if let Some((d, i)) = &best_arc {
                if *d <= opts.goal_tol {
                    let pass = shots[*i].pass.as_ref().unwrap();
                    if let Some((tail, terminal, err)) = finalize_checked(
                        sys,
                        &parent,
                        std::slice::from_ref(&candidates[*i]),
                        pass,
                        dt,
                        x_goal,
                        weights,
                        &integ_opts,
                        opts.goal_tol,
                    ) {
                        return build_result(&nodes, from_idx, tail, terminal, err);
                    }
                }
            }

            // Near miss: refine a short control tail with a shrinking search.
            if best_arc.map(|(d, _)| d <= NEAR_MISS_FACTOR * opts.goal_tol).unwrap_or(false) {
                let seed_u = candidates[best_arc.unwrap().1].clone();
                if let Some((tail, terminal, err)) = refine_tail(
                    sys,
                    &parent,
                    seed_u,
                    dt,
                    x_goal,
                    weights,
                    &integ_opts,
                    opts.goal_tol,
                    &mut rng,
                ) {
                    return build_result(&nodes, from_idx, tail, terminal, err);
                }
            }

            let Some((child_target_dist, chosen)) = best_child else {
                break;
            };
            let child_state = shots[chosen].terminal.clone().unwrap();
            let err = sys.distance(&child_state, x_goal, weights);
            best_error = best_error.min(err);
            nodes.push(Node {
                flow_next: flow_prediction(&child_state),
                state: child_state,
                parent: from_idx,
                control: candidates[chosen].clone(),
            });
            from_idx = nodes.len() - 1;
            if err <= opts.goal_tol {
                let terminal = nodes.last().unwrap().state.clone();
                return build_result(&nodes, from_idx, vec![], terminal, err);
            }
            if child_target_dist >= parent_dist {
                break;
            }
        }
    }

    Err(Error::SteerFailed {
        best_error,
        nodes_expanded: nodes.len(),
    })
}

#[allow(clippy::too_many_arguments)]
fn finalize_checked(
    sys: &ControlSystem,
    from: &State,
    pieces: &[DVector<f64>],
    pass: &ArcPass,
    dt: f64,
    goal: &State,
    weights: Option<&[f64]>,
    opts: &IntegratorOptions,
    goal_tol: f64,
) -> Option<(Vec<(DVector<f64>, f64)>, State, f64)> {
    let (tail, terminal, err) = finalize_tail(sys, from, pieces, pass, dt, goal, weights, opts)?;
    (err <= goal_tol).then_some((tail, terminal, err))
}

/// Shrinking random search over a short tail of control pieces around an
/// incumbent near miss.
#[allow(clippy::too_many_arguments)]
fn refine_tail(
    sys: &ControlSystem,
    parent: &State,
    seed_u: DVector<f64>,
    dt: f64,
    goal: &State,
    weights: Option<&[f64]>,
    opts: &IntegratorOptions,
    goal_tol: f64,
    rng: &mut crate::sample::Rng,
) -> Option<(Vec<(DVector<f64>, f64)>, State, f64)> {
    let m = sys.num_controls();
    let mut incumbent: Vec<DVector<f64>> = vec![seed_u];
    incumbent.resize(REFINE_PIECES, DVector::zeros(m));
    let mut incumbent_score = f64::INFINITY;
    let mut incumbent_pass: Option<ArcPass> = None;

    let lower = sys.bounds().lower().clone();
    let upper = sys.bounds().upper().clone();
    let mut radius = 0.6;
    for _ in 0..REFINE_ROUNDS {
        let proposals: Vec<Vec<DVector<f64>>> = (0..REFINE_TRIES)
            .map(|_| {
                incumbent
                    .iter()
                    .map(|c| {
                        DVector::from_iterator(
                            m,
                            (0..m).map(|i| {
                                let span = (upper[i] - lower[i]) / 2.0;
                                (c[i] + (rng.random::<f64>() * 2.0 - 1.0) * radius * span)
                                    .clamp(lower[i], upper[i])
                            }),
                        )
                    })
                    .collect()
            })
            .collect();
        let shots: Vec<Shot> = proposals
            .par_iter()
            .map(|seq| shoot(sys, parent, seq, dt, goal, weights, opts))
            .collect();
        for (seq, shot) in proposals.into_iter().zip(shots) {
            if let Some(pass) = shot.pass {
                if pass.dist < incumbent_score {
                    incumbent_score = pass.dist;
                    incumbent = seq;
                    incumbent_pass = Some(pass);
                }
            }
        }
        radius *= 0.55;
    }

    if incumbent_score <= goal_tol {
        let pass = incumbent_pass?;
        return finalize_checked(
            sys, parent, &incumbent, &pass, dt, goal, weights, opts, goal_tol,
        );
    }
    None
}

/// Independently re-integrate a signal and compare the terminal state with
/// the goal. Signals must respect the system's bound box.
pub fn verify_plan(
    sys: &ControlSystem,
    x_start: &State,
    signal: &ControlSignal,
    x_goal: &State,
    tol: f64,
    opts: &IntegratorOptions,
) -> Result<VerifyReport> {
    signal.check_bounds(sys.bounds())?;
    let traj = integrate(sys, x_start, Some(signal), (signal.start(), signal.end()), opts)?;
    let terminal_error = sys.distance(traj.terminal_state(), x_goal, None);
    Ok(VerifyReport {
        ok: terminal_error <= tol,
        terminal_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;
    use nalgebra::dvector;
    use std::f64::consts::PI;

    fn tight_opts() -> IntegratorOptions {
        IntegratorOptions::with_tols(1e-10, 1e-12)
    }

    #[test]
    fn identical_endpoints_need_no_control() {
        let sys = systems::three_wave_reduced(&systems::GuardMargins::default());
        let x = dvector![0.0, 1.0, 1.0, 1.0];
        let result = steer(&sys, &x, &x, &SteerOptions::default()).unwrap();
        assert_eq!(result.terminal_error, 0.0);
        assert_eq!(result.signal.pieces(), 0);
        assert_eq!(result.nodes_expanded, 0);
        let check = verify_plan(&sys, &x, &result.signal, &x, 1e-9, &tight_opts()).unwrap();
        assert!(check.ok);
    }

    #[test]
    fn hand_built_constant_control_rotates_the_bodies() {
        // On the zero-momentum slice the drift vanishes, so u = (1,0,0) for
        // time pi moves theta from 0 to pi exactly.
        let sys = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let sig = ControlSignal::constant(vec![1.0, 0.0, 0.0], 0.0, PI).unwrap();
        let x0 = dvector![0.0, 0.0, 0.0];
        let goal = dvector![PI, 0.0, 0.0];
        let report = verify_plan(&sys, &x0, &sig, &goal, 1e-6, &tight_opts()).unwrap();
        assert!(report.ok, "terminal error {}", report.terminal_error);
    }

    #[test]
    fn planner_steers_bodies_to_half_turn() {
        let sys = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let x0 = dvector![0.0, 0.0, 0.0];
        let goal = dvector![PI, 0.0, 0.0];
        let opts = SteerOptions {
            seed: 1,
            ..SteerOptions::default()
        };
        let result = steer(&sys, &x0, &goal, &opts).unwrap();
        assert!(result.terminal_error <= opts.goal_tol);
        let report =
            verify_plan(&sys, &x0, &result.signal, &goal, 2.0 * opts.goal_tol, &tight_opts())
                .unwrap();
        assert!(report.ok, "replay error {}", report.terminal_error);
    }

    #[test]
    fn planner_is_deterministic() {
        let sys = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let x0 = dvector![0.0, 0.0, 0.0];
        let goal = dvector![PI, 0.0, 0.0];
        let opts = SteerOptions {
            seed: 1,
            ..SteerOptions::default()
        };
        let a = steer(&sys, &x0, &goal, &opts).unwrap();
        let b = steer(&sys, &x0, &goal, &opts).unwrap();
        assert_eq!(a.signal, b.signal);
        assert_eq!(a.terminal_state, b.terminal_state);
        assert_eq!(a.nodes_expanded, b.nodes_expanded);
    }

    #[test]
    fn emitted_signals_respect_the_bound_box() {
        let sys = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let x0 = dvector![0.0, 0.0, 0.0];
        let goal = dvector![1.0, 0.1, -0.1];
        let opts = SteerOptions {
            seed: 3,
            goal_tol: 5e-2,
            ..SteerOptions::default()
        };
        let result = steer(&sys, &x0, &goal, &opts).unwrap();
        assert!(result.signal.check_bounds(sys.bounds()).is_ok());
        assert!(result.signal.breakpoints().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn out_of_bounds_signal_is_rejected_by_verify() {
        let sys = systems::three_wave_reduced(&systems::GuardMargins::default());
        let sig = ControlSignal::constant(vec![2.0, 0.0, 0.0], 0.0, 1.0).unwrap();
        let x = dvector![0.0, 1.0, 1.0, 1.0];
        assert!(matches!(
            verify_plan(&sys, &x, &sig, &x, 1.0, &tight_opts()),
            Err(Error::ControlOutOfBounds { .. })
        ));
    }

    #[test]
    fn three_wave_steer_crosses_leaves() {
        let sys = systems::three_wave_reduced(&systems::GuardMargins::default());
        let x0 = dvector![0.0, 1.0, 1.0, 1.0];
        let goal = dvector![0.1, 0.9, 1.1, 1.0];
        let opts = SteerOptions {
            goal_tol: 1e-2,
            seed: 2,
            n_control_samples: 16,
            goal_bias: 0.15,
            ..SteerOptions::default()
        };
        let result = steer(&sys, &x0, &goal, &opts).unwrap();
        assert!(result.terminal_error <= opts.goal_tol);
        let report =
            verify_plan(&sys, &x0, &result.signal, &goal, 2.0 * opts.goal_tol, &tight_opts())
                .unwrap();
        assert!(report.ok, "replay error {}", report.terminal_error);
        // Success must involve nonzero control: the endpoints sit on
        // different leaves.
        let w = |x: &State| 2.0 * x[2] * x[2] + x[3] * x[3];
        assert!((w(&x0) - w(&goal)).abs() > 0.1);
    }

    #[test]
    fn failure_reports_best_error() {
        // Unreachable goal with a node budget too small to matter.
        let sys = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let x0 = dvector![0.0, 0.0, 0.0];
        let goal = dvector![PI, 2.0, -2.0];
        let opts = SteerOptions {
            max_nodes: 20,
            seed: 0,
            ..SteerOptions::default()
        };
        match steer(&sys, &x0, &goal, &opts) {
            Err(Error::SteerFailed { best_error, nodes_expanded }) => {
                assert!(best_error > 0.0);
                assert!(nodes_expanded <= 20);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
