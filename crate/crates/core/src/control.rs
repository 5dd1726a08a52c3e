//! Control-affine systems `x' = f(x) + sum_i g_i(x) u_i` with bounded
//! piecewise-constant controls.

use crate::error::{Error, Result};
use crate::poisson::{Observable, PoissonStructure, State, VectorField};
use crate::sample::{rejection_sample, BoxSampler, Rng};
use crate::word::BracketWord;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Bounded control box `B = prod_i [lower_i, upper_i]`.
#[derive(Debug, Clone)]
pub struct Bounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParams(format!(
                    "bound box component {i} must be finite with lower <= upper"
                )));
            }
        }
        Ok(Self {
            lower: DVector::from_vec(lower),
            upper: DVector::from_vec(upper),
        })
    }

    /// The default box `[-1, 1]^m`.
    pub fn symmetric_unit(m: usize) -> Self {
        Self {
            lower: DVector::from_element(m, -1.0),
            upper: DVector::from_element(m, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, u: &DVector<f64>) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn check(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        for i in 0..u.len() {
            if !(u[i] >= self.lower[i] && u[i] <= self.upper[i]) {
                return Err(Error::ControlOutOfBounds { index: i });
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut Rng) -> DVector<f64> {
        use rand::Rng as _;
        DVector::from_iterator(
            self.dim(),
            self.lower
                .iter()
                .zip(self.upper.iter())
                .map(|(lo, hi)| lo + rng.random::<f64>() * (hi - lo)),
        )
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }
}

/// Piecewise-constant control schedule.
///
/// `breakpoints` is strictly increasing with one more entry than `values`;
/// `u(t) = values[k]` on `[t_k, t_{k+1})` (right-continuous at breakpoints).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    breakpoints: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl ControlSignal {
    pub fn new(breakpoints: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidSignal("at least one breakpoint required".into()));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidSignal(format!(
                "{} breakpoints require {} values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSignal("breakpoints must be strictly increasing".into()));
        }
        if !breakpoints.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidSignal("breakpoints must be finite".into()));
        }
        let m = values.first().map(|v| v.len());
        if let Some(m) = m {
            if values.iter().any(|v| v.len() != m) {
                return Err(Error::InvalidSignal("all control values must share a dimension".into()));
            }
        }
        Ok(Self { breakpoints, values })
    }

    /// Signal with a single breakpoint and no pieces (zero duration).
    pub fn empty(t0: f64) -> Self {
        Self {
            breakpoints: vec![t0],
            values: vec![],
        }
    }

    /// Constant control `u` on `[t0, t1)`.
    pub fn constant(u: Vec<f64>, t0: f64, t1: f64) -> Result<Self> {
        Self::new(vec![t0, t1], vec![u])
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> usize {
        self.values.len()
    }

    pub fn piece_value(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// `u(t)` for `t` in `[t_0, t_K)`.
    pub fn value(&self, t: f64) -> Result<&[f64]> {
        if self.values.is_empty() || t < self.start() || t >= self.end() {
            return Err(Error::SignalOutOfSpan {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        let k = self.breakpoints.partition_point(|b| *b <= t) - 1;
        Ok(&self.values[k])
    }

    /// Every value lies in `bounds`.
    pub fn check_bounds(&self, bounds: &Bounds) -> Result<()> {
        for v in &self.values {
            bounds.check(&DVector::from_vec(v.clone()))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("signal serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: ControlSignal = serde_json::from_str(s)?;
        Self::new(raw.breakpoints, raw.values)
    }
}

/// A control-affine system, optionally carrying its Poisson structure,
/// Hamiltonian, known first integrals, and Casimirs.
#[derive(Clone)]
pub struct ControlSystem {
    name: String,
    coord_names: Vec<String>,
    drift: VectorField,
    controls: Vec<VectorField>,
    bounds: Bounds,
    guard: Arc<dyn Fn(&State) -> bool + Send + Sync>,
    structure: Option<PoissonStructure>,
    hamiltonian: Option<Observable>,
    integrals: Vec<Observable>,
    casimirs: Vec<Observable>,
    angular: Vec<bool>,
    sample_box: Option<BoxSampler>,
    witnesses: Vec<BracketWord>,
}

impl ControlSystem {
    pub fn new(
        name: impl Into<String>,
        drift: VectorField,
        controls: Vec<VectorField>,
        bounds: Bounds,
    ) -> Self {
        let dim = drift.dim();
        assert!(controls.iter().all(|g| g.dim() == dim), "control field dimension mismatch");
        assert_eq!(bounds.dim(), controls.len(), "bound box dimension mismatch");
        Self {
            name: name.into(),
            coord_names: (1..=dim).map(|i| format!("x{i}")).collect(),
            drift,
            controls,
            bounds,
            guard: Arc::new(|_x| true),
            structure: None,
            hamiltonian: None,
            integrals: Vec::new(),
            casimirs: Vec::new(),
            angular: vec![false; dim],
            sample_box: None,
            witnesses: Vec::new(),
        }
    }

    pub fn with_guard<G>(mut self, guard: G) -> Self
    where
        G: Fn(&State) -> bool + Send + Sync + 'static,
    {
        self.guard = Arc::new(guard);
        self
    }

    pub fn with_structure(mut self, ps: PoissonStructure) -> Self {
        assert_eq!(ps.dim(), self.dim());
        self.structure = Some(ps);
        self
    }

    pub fn with_hamiltonian(mut self, h: Observable) -> Self {
        self.hamiltonian = Some(h);
        self
    }

    pub fn with_integrals(mut self, integrals: Vec<Observable>) -> Self {
        self.integrals = integrals;
        self
    }

    pub fn with_casimirs(mut self, casimirs: Vec<Observable>) -> Self {
        self.casimirs = casimirs;
        self
    }

    pub fn with_angular(mut self, angular: Vec<bool>) -> Self {
        assert_eq!(angular.len(), self.dim());
        self.angular = angular;
        self
    }

    pub fn with_coord_names(mut self, names: &[&str]) -> Self {
        assert_eq!(names.len(), self.dim());
        self.coord_names = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_sample_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.sample_box = Some(BoxSampler::new(lower, upper).expect("valid sample box"));
        self
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        assert_eq!(bounds.dim(), self.controls.len());
        self.bounds = bounds;
        self
    }

    /// Bracket words known to realize full rank (used by LARC checks before
    /// falling back to breadth-first discovery).
    pub fn with_witnesses(mut self, witnesses: Vec<BracketWord>) -> Self {
        self.witnesses = witnesses;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn num_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn drift(&self) -> &VectorField {
        &self.drift
    }

    pub fn controls(&self) -> &[VectorField] {
        &self.controls
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn structure(&self) -> Option<&PoissonStructure> {
        self.structure.as_ref()
    }

    pub fn hamiltonian(&self) -> Option<&Observable> {
        self.hamiltonian.as_ref()
    }

    pub fn integrals(&self) -> &[Observable] {
        &self.integrals
    }

    pub fn casimirs(&self) -> &[Observable] {
        &self.casimirs
    }

    pub fn angular_mask(&self) -> &[bool] {
        &self.angular
    }

    pub fn witnesses(&self) -> &[BracketWord] {
        &self.witnesses
    }

    pub fn guard(&self, x: &State) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && (self.guard)(x)
    }

    pub fn check_guard(&self, x: &State, t: f64) -> Result<()> {
        if self.guard(x) {
            Ok(())
        } else {
            Err(Error::GuardViolation {
                t,
                last_time: t,
                last_state: x.clone(),
            })
        }
    }

    /// `f(x) + sum_i u_i g_i(x)` with guard and bound checks.
    pub fn rhs(&self, x: &State, u: &DVector<f64>) -> Result<State> {
        self.check_guard(x, 0.0)?;
        self.bounds.check(u)?;
        Ok(self.rhs_unchecked(x, u))
    }

    pub(crate) fn rhs_unchecked(&self, x: &State, u: &DVector<f64>) -> State {
        let mut v = self.drift.value(x);
        for (g, ui) in self.controls.iter().zip(u.iter()) {
            if *ui != 0.0 {
                v += g.value(x) * *ui;
            }
        }
        v
    }

    /// Default region used by scans when the caller provides no sampler.
    pub fn sample_region(&self) -> Option<&BoxSampler> {
        self.sample_box.as_ref()
    }

    /// Guard-valid state from the system's default sampling box.
    pub fn sample_state(&self, rng: &mut Rng) -> Result<State> {
        let sampler = self.sample_region().ok_or_else(|| {
            Error::InvalidParams(format!("system {} has no default sampling box", self.name))
        })?;
        rejection_sample(rng, 10_000, |r| sampler.sample(r), |x| self.guard(x))
    }

    /// Product metric: wrapped absolute difference on angular coordinates,
    /// Euclidean elsewhere, with optional per-coordinate weights.
    pub fn distance(&self, a: &State, b: &State, weights: Option<&[f64]>) -> f64 {
        wrapped_distance(a, b, &self.angular, weights)
    }

    /// Uncontrolled copy with the drift negated (same guard and angular
    /// coordinates); used to trace inflow arcs backward in time.
    pub fn time_reversed(&self) -> ControlSystem {
        let drift = self.drift.clone();
        let dim = self.dim();
        let mut rev = ControlSystem::new(
            format!("{}-reversed", self.name),
            VectorField::new("-drift", dim, move |x| -drift.value(x)),
            vec![],
            Bounds::symmetric_unit(0),
        );
        rev.guard = self.guard.clone();
        rev.angular = self.angular.clone();
        rev
    }
}

impl std::fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ControlSystem({}, n={}, m={})",
            self.name,
            self.dim(),
            self.num_controls()
        )
    }
}

/// Weighted distance with 2*pi-wrapping on coordinates flagged angular.
pub fn wrapped_distance(a: &State, b: &State, angular: &[bool], weights: Option<&[f64]>) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut sum = 0.0;
    for i in 0..a.len() {
        let mut d = a[i] - b[i];
        if angular.get(i).copied().unwrap_or(false) {
            d = d.rem_euclid(TAU);
            if d > TAU / 2.0 {
                d = TAU - d;
            }
        }
        let w = weights.map(|w| w[i]).unwrap_or(1.0);
        sum += (w * d) * (w * d);
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn three_wave() -> ControlSystem {
        systems::three_wave_reduced(&systems::GuardMargins::default())
    }

    #[test]
    fn rhs_with_zero_control_is_drift() {
        let sys = three_wave();
        let x = dvector![0.3, 0.7, 1.2, 0.9];
        let u = DVector::zeros(3);
        assert_eq!(sys.rhs(&x, &u).unwrap(), sys.drift().value(&x));
    }

    #[test]
    fn rhs_adds_control_directions() {
        let sys = three_wave();
        let x = dvector![0.0, 1.0, 1.0, 1.0];
        let v = sys.rhs(&x, &dvector![1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(v, dvector![1.0, -1.0, -1.0, 2.0], epsilon = 1e-14);

        let bodies = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let v = bodies
            .rhs(&dvector![0.0, 0.0, 0.0], &dvector![0.0, 1.0, 0.0])
            .unwrap();
        assert_relative_eq!(v, dvector![0.0, 1.0, 0.0], epsilon = 1e-14);
    }

    #[test]
    fn rhs_rejects_guard_and_bound_violations() {
        let sys = three_wave();
        let bad_state = dvector![0.0, 1.0, -1.0, 1.0];
        assert!(matches!(
            sys.rhs(&bad_state, &DVector::zeros(3)),
            Err(Error::GuardViolation { .. })
        ));
        let x = dvector![0.0, 1.0, 1.0, 1.0];
        assert!(matches!(
            sys.rhs(&x, &dvector![2.0, 0.0, 0.0]),
            Err(Error::ControlOutOfBounds { index: 0 })
        ));
    }

    #[test]
    fn signal_lookup_is_right_continuous() {
        let sig = ControlSignal::new(
            vec![0.0, 1.0, 2.5],
            vec![vec![0.5, 0.0], vec![-0.5, 0.25]],
        )
        .unwrap();
        assert_eq!(sig.value(0.0).unwrap(), &[0.5, 0.0]);
        assert_eq!(sig.value(0.999).unwrap(), &[0.5, 0.0]);
        assert_eq!(sig.value(1.0).unwrap(), &[-0.5, 0.25]);
        assert!(matches!(sig.value(2.5), Err(Error::SignalOutOfSpan { .. })));
        assert!(matches!(sig.value(-0.1), Err(Error::SignalOutOfSpan { .. })));
    }

    #[test]
    fn single_piece_signal_returns_its_value() {
        let sig = ControlSignal::constant(vec![0.25], 0.0, 2.0).unwrap();
        assert_eq!(sig.value(1.3).unwrap(), &[0.25]);
    }

    #[test]
    fn signal_rejects_non_increasing_breakpoints() {
        assert!(ControlSignal::new(vec![0.0, 0.0], vec![vec![1.0]]).is_err());
        assert!(ControlSignal::new(vec![1.0, 0.5], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn signal_json_matches_documented_shape() {
        let sig = ControlSignal::new(vec![0.0, 0.1], vec![vec![1.0, -0.5, 0.0]]).unwrap();
        let json = sig.to_json();
        assert_eq!(json["breakpoints"], serde_json::json!([0.0, 0.1]));
        assert_eq!(json["values"], serde_json::json!([[1.0, -0.5, 0.0]]));
        let back = ControlSignal::from_json(&json.to_string()).unwrap();
        assert_eq!(back, sig);
    }

    #[test]
    fn drift_matches_structure_gradient_product() {
        let sys = three_wave();
        let field = sys
            .structure()
            .unwrap()
            .hamiltonian_field(sys.hamiltonian().unwrap());
        let mut rng = crate::sample::stream(2, 0);
        for _ in 0..200 {
            let x = sys.sample_state(&mut rng).unwrap();
            let d = sys.drift().value(&x);
            let h = field.value(&x);
            assert!((&d - &h).norm() < 1e-9 * (1.0 + d.norm()));
        }
    }

    #[test]
    fn wrapped_distance_handles_angle_wraparound() {
        let angular = [true, false];
        let a = dvector![0.1, 1.0];
        let b = dvector![TAU - 0.1, 1.0];
        let d = wrapped_distance(&a, &b, &angular, None);
        assert_relative_eq!(d, 0.2, epsilon = 1e-12);
        let d = wrapped_distance(&a, &b, &[false, false], None);
        assert!(d > 6.0);
    }

    proptest! {
        #[test]
        fn rhs_is_affine_in_u(
            alpha in 0.0..1.0f64,
            beta in 0.0..1.0f64,
            seed in 0u64..1000,
        ) {
            let sys = three_wave();
            let mut rng = crate::sample::stream(seed, 0);
            let x = sys.sample_state(&mut rng).unwrap();
            let u = sys.bounds().sample(&mut rng);
            let v = sys.bounds().sample(&mut rng);
            let (alpha, beta) = (alpha, beta * (1.0 - alpha));
            let mix = &u * alpha + &v * beta;
            let lhs = sys.rhs(&x, &mix).unwrap();
            let rhs = sys.rhs(&x, &u).unwrap() * alpha + sys.rhs(&x, &v).unwrap() * beta
                - sys.drift().value(&x) * (alpha + beta - 1.0);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn signal_json_round_trips(n in 1usize..6, seed in 0u64..500) {
            let mut rng = crate::sample::stream(seed, 1);
            use rand::Rng as _;
            let mut breakpoints = vec![0.0];
            for _ in 0..n {
                let last = *breakpoints.last().unwrap();
                breakpoints.push(last + 0.01 + rng.random::<f64>());
            }
            let values: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
                .collect();
            let sig = ControlSignal::new(breakpoints, values).unwrap();
            let back = ControlSignal::from_json(&sig.to_json().to_string()).unwrap();
            prop_assert_eq!(back, sig);
        }
    }
}
