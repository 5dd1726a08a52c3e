//! Poisson structures, scalar observables, and vector fields.
//!
//! A Poisson structure is represented by its state-dependent antisymmetric
//! matrix field `J(x)`, so that `{F, G}(x) = grad F . J(x) grad G`. The
//! diagnostics here (Jacobi residual, Casimir residual, kernel basis) validate
//! that a candidate matrix field actually defines a Poisson bracket and expose
//! its degenerate directions.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

/// State of a system: a real n-vector.
pub type State = DVector<f64>;

/// Central-difference step for coordinate `i`: `cbrt(eps) * max(1, |x_i|)`.
pub(crate) fn fd_step(x: &State, i: usize) -> f64 {
    f64::EPSILON.cbrt() * x[i].abs().max(1.0)
}

/// A labeled scalar function of the state with an optional analytic gradient.
///
/// When no gradient is supplied, [`Observable::gradient`] falls back to
/// second-order central finite differences.
#[derive(Clone)]
pub struct Observable {
    inner: Arc<ObservableInner>,
}

struct ObservableInner {
    label: String,
    dim: usize,
    eval: Box<dyn Fn(&State) -> f64 + Send + Sync>,
    grad: Option<Box<dyn Fn(&State) -> State + Send + Sync>>,
}

impl Observable {
    pub fn new<F>(label: impl Into<String>, dim: usize, eval: F) -> Self
    where
        F: Fn(&State) -> f64 + Send + Sync + 'static,
    {
        Self {
            inner: Arc::new(ObservableInner {
                label: label.into(),
                dim,
                eval: Box::new(eval),
                grad: None,
            }),
        }
    }

    pub fn with_gradient<G>(self, grad: G) -> Self
    where
        G: Fn(&State) -> State + Send + Sync + 'static,
    {
        let ObservableInner { label, dim, eval, .. } =
            Arc::try_unwrap(self.inner).unwrap_or_else(|_| panic!("observable is shared"));
        Self {
            inner: Arc::new(ObservableInner {
                label,
                dim,
                eval,
                grad: Some(Box::new(grad)),
            }),
        }
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn value(&self, x: &State) -> f64 {
        assert_eq!(x.len(), self.inner.dim, "observable dimension mismatch");
        (self.inner.eval)(x)
    }

    /// Analytic gradient when present, central finite differences otherwise.
    pub fn gradient(&self, x: &State) -> State {
        assert_eq!(x.len(), self.inner.dim, "observable dimension mismatch");
        if let Some(g) = &self.inner.grad {
            return g(x);
        }
        self.fd_gradient(x)
    }

    /// Finite-difference gradient, regardless of whether an analytic one exists.
    pub fn fd_gradient(&self, x: &State) -> State {
        let n = x.len();
        let mut g = DVector::zeros(n);
        let mut xp = x.clone();
        let mut xm = x.clone();
        for i in 0..n {
            let h = fd_step(x, i);
            xp[i] = x[i] + h;
            xm[i] = x[i] - h;
            g[i] = ((self.inner.eval)(&xp) - (self.inner.eval)(&xm)) / (2.0 * h);
            xp[i] = x[i];
            xm[i] = x[i];
        }
        g
    }

    pub fn has_gradient(&self) -> bool {
        self.inner.grad.is_some()
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({}, dim {})", self.inner.label, self.inner.dim)
    }
}

/// A labeled vector field on R^n with an optional analytic Jacobian.
#[derive(Clone)]
pub struct VectorField {
    inner: Arc<VectorFieldInner>,
}

struct VectorFieldInner {
    label: String,
    dim: usize,
    eval: Box<dyn Fn(&State) -> State + Send + Sync>,
    jac: Option<Box<dyn Fn(&State) -> DMatrix<f64> + Send + Sync>>,
}

impl VectorField {
    pub fn new<F>(label: impl Into<String>, dim: usize, eval: F) -> Self
    where
        F: Fn(&State) -> State + Send + Sync + 'static,
    {
        Self {
            inner: Arc::new(VectorFieldInner {
                label: label.into(),
                dim,
                eval: Box::new(eval),
                jac: None,
            }),
        }
    }

    pub fn with_jacobian<J>(self, jac: J) -> Self
    where
        J: Fn(&State) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let inner = Arc::try_unwrap(self.inner).unwrap_or_else(|_| panic!("vector field is shared"));
        Self {
            inner: Arc::new(VectorFieldInner {
                jac: Some(Box::new(jac)),
                label: inner.label,
                dim: inner.dim,
                eval: inner.eval,
            }),
        }
    }

    /// Constant unit field along coordinate `index`.
    pub fn coordinate(label: impl Into<String>, dim: usize, index: usize) -> Self {
        assert!(index < dim);
        Self::new(label, dim, move |_x| {
            let mut v = DVector::zeros(dim);
            v[index] = 1.0;
            v
        })
        .with_jacobian(move |_x| DMatrix::zeros(dim, dim))
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn value(&self, x: &State) -> State {
        assert_eq!(x.len(), self.inner.dim, "vector field dimension mismatch");
        (self.inner.eval)(x)
    }

    /// Analytic Jacobian when present, central finite differences otherwise.
    pub fn jacobian(&self, x: &State) -> DMatrix<f64> {
        if let Some(j) = &self.inner.jac {
            return j(x);
        }
        self.fd_jacobian(x)
    }

    /// Finite-difference Jacobian (column `i` differentiates coordinate `i`).
    pub fn fd_jacobian(&self, x: &State) -> DMatrix<f64> {
        let n = x.len();
        let mut jac = DMatrix::zeros(self.inner.dim, n);
        let mut xp = x.clone();
        let mut xm = x.clone();
        for i in 0..n {
            let h = fd_step(x, i);
            xp[i] = x[i] + h;
            xm[i] = x[i] - h;
            let col = ((self.inner.eval)(&xp) - (self.inner.eval)(&xm)) / (2.0 * h);
            jac.set_column(i, &col);
            xp[i] = x[i];
            xm[i] = x[i];
        }
        jac
    }

    pub fn has_jacobian(&self) -> bool {
        self.inner.jac.is_some()
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({}, dim {})", self.inner.label, self.inner.dim)
    }
}

/// A Poisson structure given by its antisymmetric matrix field `J(x)`.
#[derive(Clone)]
pub struct PoissonStructure {
    inner: Arc<PoissonInner>,
}

struct PoissonInner {
    label: String,
    dim: usize,
    matrix: Box<dyn Fn(&State) -> DMatrix<f64> + Send + Sync>,
}

impl PoissonStructure {
    pub fn new<F>(label: impl Into<String>, dim: usize, matrix: F) -> Self
    where
        F: Fn(&State) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            inner: Arc::new(PoissonInner {
                label: label.into(),
                dim,
                matrix: Box::new(matrix),
            }),
        }
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Evaluate the structure matrix `J(x)`.
    ///
    /// Guard validity is the caller's responsibility; only the dimension is
    /// checked here.
    pub fn matrix_at(&self, x: &State) -> Result<DMatrix<f64>> {
        if x.len() != self.inner.dim {
            return Err(Error::DimensionMismatch {
                expected: self.inner.dim,
                got: x.len(),
            });
        }
        Ok((self.inner.matrix)(x))
    }

    /// The Hamiltonian vector field `x -> J(x) grad H(x)`.
    ///
    /// Antisymmetry of `J` makes `grad H . field` vanish identically, i.e. the
    /// field conserves its own Hamiltonian.
    pub fn hamiltonian_field(&self, hamiltonian: &Observable) -> VectorField {
        let ps = self.clone();
        let h = hamiltonian.clone();
        let label = format!("X_{}", hamiltonian.label());
        VectorField::new(label, self.inner.dim, move |x| {
            let j = (ps.inner.matrix)(x);
            j * h.gradient(x)
        })
    }

    /// Max over index triples `(i, j, k)` of the cyclic Jacobi sum
    /// `|sum_l J_il d_l J_jk + J_jl d_l J_ki + J_kl d_l J_ij|`,
    /// with `d_l` by central differences. Zero (up to discretization error)
    /// iff the matrix field satisfies the Jacobi identity near `x`.
    pub fn jacobi_residual(&self, x: &State) -> Result<f64> {
        let n = self.inner.dim;
        let j = self.matrix_at(x)?;
        // dj[l] = dJ/dx_l
        let mut dj = Vec::with_capacity(n);
        let mut xp = x.clone();
        let mut xm = x.clone();
        for l in 0..n {
            let h = fd_step(x, l);
            xp[l] = x[l] + h;
            xm[l] = x[l] - h;
            dj.push(((self.inner.matrix)(&xp) - (self.inner.matrix)(&xm)) / (2.0 * h));
            xp[l] = x[l];
            xm[l] = x[l];
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for jj in (i + 1)..n {
                for k in (jj + 1)..n {
                    let mut sum = 0.0;
                    for l in 0..n {
                        sum += j[(i, l)] * dj[l][(jj, k)]
                            + j[(jj, l)] * dj[l][(k, i)]
                            + j[(k, l)] * dj[l][(i, jj)];
                    }
                    worst = worst.max(sum.abs());
                }
            }
        }
        Ok(worst)
    }

    /// `||J(x) grad C(x)||`; zero iff `C` is a Casimir candidate at `x`.
    pub fn casimir_residual(&self, candidate: &Observable, x: &State) -> Result<f64> {
        let j = self.matrix_at(x)?;
        Ok((j * candidate.gradient(x)).norm())
    }

    /// Orthonormal basis of the numerical nullspace of `J(x)`.
    ///
    /// Singular values at or below `tol * sigma_max` count as zero.
    pub fn kernel_basis(&self, x: &State, tol: f64) -> Result<Vec<State>> {
        let j = self.matrix_at(x)?;
        Ok(nullspace(&j, tol))
    }
}

impl fmt::Debug for PoissonStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PoissonStructure({}, dim {})", self.inner.label, self.inner.dim)
    }
}

/// Orthonormal basis of the numerical nullspace of `m` (relative threshold `tol`).
pub fn nullspace(m: &DMatrix<f64>, tol: f64) -> Vec<State> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("SVD with V requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return (0..n)
            .map(|i| {
                let mut e = DVector::zeros(n);
                e[i] = 1.0;
                e
            })
            .collect();
    }
    let mut kernel: Vec<(f64, State)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol * sigma_max)
        .map(|(i, s)| (*s, v_t.row(i).transpose()))
        .collect();
    // Rows of V^T beyond the number of singular values (if any) span the
    // remainder of the nullspace for wide decompositions; square inputs here,
    // so only sort for a stable order.
    kernel.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    kernel.into_iter().map(|(_, v)| v).collect()
}

/// Numerical rank of `m` with relative singular-value threshold `tol`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> (usize, Vec<f64>) {
    let svd = m.clone().svd(false, false);
    let mut sigma: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return (0, sigma);
    }
    let rank = sigma.iter().filter(|s| **s > tol * sigma_max).count();
    (rank, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn margins() -> systems::GuardMargins {
        systems::GuardMargins::default()
    }

    #[test]
    fn rigid_body_structure_matrix_is_the_constant_bracket() {
        let sys = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let ps = sys.structure().unwrap();
        let x = dvector![0.7, -0.3, 1.1];
        let j = ps.matrix_at(&x).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 1.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(j, expected);
    }

    #[test]
    fn three_wave_structure_matrix_at_reference_point() {
        let sys = systems::three_wave_reduced(&margins());
        let ps = sys.structure().unwrap();
        let x = dvector![0.0, 1.0, 1.0, 1.0];
        let j = ps.matrix_at(&x).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, -1.0, -1.0, 2.0, //
                1.0, 0.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0, //
                -2.0, 0.0, 0.0, 0.0,
            ],
        );
        assert_relative_eq!(j, expected, epsilon = 1e-15);
    }

    #[test]
    fn vortex_structure_matrix_at_unit_point() {
        let params = systems::VortexParams::new([1.0, 1.0, 1.0]).unwrap();
        let sys = systems::vortex_reduced(&params, &margins());
        let ps = sys.structure().unwrap();
        let x = dvector![0.0, 1.0, 0.0];
        let j = ps.matrix_at(&x).unwrap();
        let expected =
            4.0 * DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -2.0, 0.0, 0.0, -1.0, 2.0, 1.0, 0.0]);
        assert_relative_eq!(j, expected, epsilon = 1e-14);
    }

    #[test]
    fn structure_matrix_rejects_dimension_mismatch() {
        let sys = systems::three_wave_reduced(&margins());
        let ps = sys.structure().unwrap();
        assert!(matches!(
            ps.matrix_at(&dvector![1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn hamiltonian_field_matches_hand_values() {
        // Three-wave at (0,1,1,1): J grad H = (0,-1,-1,2).
        let sys = systems::three_wave_reduced(&margins());
        let field = sys
            .structure()
            .unwrap()
            .hamiltonian_field(sys.hamiltonian().unwrap());
        let v = field.value(&dvector![0.0, 1.0, 1.0, 1.0]);
        assert_relative_eq!(v, dvector![0.0, -1.0, -1.0, 2.0], epsilon = 1e-12);

        // Rigid bodies at the zero-momentum equilibrium.
        let bodies = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let bf = bodies
            .structure()
            .unwrap()
            .hamiltonian_field(bodies.hamiltonian().unwrap());
        assert_relative_eq!(bf.value(&dvector![0.0, 0.0, 0.0]), dvector![0.0, 0.0, 0.0]);

        // Vortex with equal circulations at (-1,0,0): all numerators cancel.
        let params = systems::VortexParams::new([1.0, 1.0, 1.0]).unwrap();
        let vortex = systems::vortex_reduced(&params, &margins());
        let vf = vortex
            .structure()
            .unwrap()
            .hamiltonian_field(vortex.hamiltonian().unwrap());
        assert_relative_eq!(
            vf.value(&dvector![-1.0, 0.0, 0.0]),
            dvector![0.0, 0.0, 0.0],
            epsilon = 1e-12
        );
    }

    #[test]
    fn hamiltonian_field_conserves_energy_pointwise() {
        let sys = systems::three_wave_reduced(&margins());
        let ps = sys.structure().unwrap();
        let h = sys.hamiltonian().unwrap();
        let field = ps.hamiltonian_field(h);
        let mut rng = crate::sample::stream(11, 0);
        for _ in 0..200 {
            let x = sys.sample_state(&mut rng).unwrap();
            let g = h.gradient(&x);
            let dot = g.dot(&field.value(&x));
            assert!(dot.abs() < 1e-12 * (1.0 + g.norm_squared()), "dot = {dot}");
        }
    }

    #[test]
    fn jacobi_residual_vanishes_for_shipped_structures() {
        let bodies = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let x = dvector![0.4, 1.0, -2.0];
        assert_eq!(bodies.structure().unwrap().jacobi_residual(&x).unwrap(), 0.0);

        let params = systems::VortexParams::new([1.0, 1.0, 1.0]).unwrap();
        let vortex = systems::vortex_reduced(&params, &margins());
        let r = vortex
            .structure()
            .unwrap()
            .jacobi_residual(&dvector![0.0, 1.0, 0.0])
            .unwrap();
        assert!(r < 1e-6, "vortex jacobi residual {r}");

        let tw = systems::three_wave_reduced(&margins());
        let r = tw
            .structure()
            .unwrap()
            .jacobi_residual(&dvector![0.0, 1.0, 1.0, 1.0])
            .unwrap();
        assert!(r < 1e-6, "three-wave jacobi residual {r}");
    }

    #[test]
    fn casimir_residuals_vanish() {
        let bodies = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let momentum = Observable::new("mu1+mu2", 3, |x: &State| x[1] + x[2])
            .with_gradient(|_x: &State| dvector![0.0, 1.0, 1.0]);
        let r = bodies
            .structure()
            .unwrap()
            .casimir_residual(&momentum, &dvector![1.3, 0.2, -0.7])
            .unwrap();
        assert!(r < 1e-12);

        let tw = systems::three_wave_reduced(&margins());
        let x = dvector![0.0, 1.0, 1.0, 1.0];
        for c in tw.casimirs() {
            let r = tw.structure().unwrap().casimir_residual(c, &x).unwrap();
            assert!(r < 1e-12, "{} residual {r}", c.label());
        }
    }

    #[test]
    fn kernel_bases_match_hand_kernels() {
        let bodies = systems::coupled_bodies(&systems::RigidBodyParams::unit());
        let kernel = bodies
            .structure()
            .unwrap()
            .kernel_basis(&dvector![0.9, 2.0, -1.0], 1e-8)
            .unwrap();
        assert_eq!(kernel.len(), 1);
        let expected = dvector![0.0, 1.0, 1.0] / 2.0_f64.sqrt();
        assert_relative_eq!(kernel[0].dot(&expected).abs(), 1.0, epsilon = 1e-12);

        let params = systems::VortexParams::new([1.0, 1.0, 1.0]).unwrap();
        let vortex = systems::vortex_reduced(&params, &margins());
        let kernel = vortex
            .structure()
            .unwrap()
            .kernel_basis(&dvector![0.0, 1.0, 0.0], 1e-8)
            .unwrap();
        assert_eq!(kernel.len(), 1);
        let expected = dvector![-1.0, 2.0, 0.0] / 5.0_f64.sqrt();
        assert_relative_eq!(kernel[0].dot(&expected).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn three_wave_kernel_is_two_dimensional_and_contains_casimir_gradients() {
        let tw = systems::three_wave_reduced(&margins());
        let ps = tw.structure().unwrap();
        let x = dvector![0.0, 1.0, 1.0, 1.0];
        let kernel = ps.kernel_basis(&x, 1e-8).unwrap();
        assert_eq!(kernel.len(), 2);
        let j = ps.matrix_at(&x).unwrap();
        for dir in [dvector![0.0, 0.0, 4.0, 2.0], dvector![0.0, 2.0, 2.0, 2.0]] {
            // Annihilated by J and inside the kernel span.
            assert!((&j * &dir).norm() < 1e-12);
            let proj: State = kernel.iter().map(|v| v * v.dot(&dir)).sum();
            assert_relative_eq!(proj, dir, epsilon = 1e-10);
        }
    }

    #[test]
    fn kernel_dimensions_at_sampled_states() {
        // Bodies: 1 everywhere; three-wave: 2; vortex: 1 at generic states.
        let cases: Vec<(crate::control::ControlSystem, usize)> = vec![
            (systems::coupled_bodies(&systems::RigidBodyParams::unit()), 1),
            (systems::three_wave_reduced(&margins()), 2),
            (
                systems::vortex_reduced(&systems::VortexParams::new([1.0, 1.0, 1.0]).unwrap(), &margins()),
                1,
            ),
        ];
        for (sys, expected) in &cases {
            let ps = sys.structure().unwrap();
            let mut rng = crate::sample::stream(31, 0);
            for _ in 0..50 {
                let x = sys.sample_state(&mut rng).unwrap();
                let kernel = ps.kernel_basis(&x, 1e-8).unwrap();
                assert_eq!(kernel.len(), *expected, "{} kernel at {x:?}", sys.name());
                // Returned vectors are genuinely annihilated by J.
                let j = ps.matrix_at(&x).unwrap();
                for v in &kernel {
                    assert!((&j * v).norm() <= 1e-8 * j.norm());
                }
            }
        }
    }

    #[test]
    fn kernel_of_zero_matrix_is_everything() {
        let ps = PoissonStructure::new("zero", 3, |_x| DMatrix::zeros(3, 3));
        let kernel = ps.kernel_basis(&dvector![1.0, 2.0, 3.0], 1e-8).unwrap();
        assert_eq!(kernel.len(), 3);
    }

    #[test]
    fn fd_gradient_matches_analytic_for_shipped_hamiltonians() {
        let tw = systems::three_wave_reduced(&margins());
        let h = tw.hamiltonian().unwrap();
        let mut rng = crate::sample::stream(5, 1);
        for _ in 0..100 {
            let x = tw.sample_state(&mut rng).unwrap();
            let a = h.gradient(&x);
            let f = h.fd_gradient(&x);
            assert_relative_eq!(a, f, epsilon = 1e-6, max_relative = 1e-6);
        }
    }
}
