//! The built-in example systems: planar three-vortex motion, the resonant
//! three-wave interaction, and two coupled planar rigid bodies.
//!
//! Each reduced system ships with its bracket matrix, Hamiltonian (analytic
//! gradient), known first integrals and Casimirs, a domain guard with a small
//! margin around singular sets, a default sampling box, and bracket words
//! known to realize full rank. The unreduced vortex and three-wave systems
//! carry their momentum maps.
//!
//! Two displayed formulas are corrected here so that drift, bracket matrix,
//! and Hamiltonian are mutually consistent (drift = J grad H and the stated
//! integrals are conserved): the sign of the (1,2)/(2,1) pair of the
//! three-wave bracket matrix, and the sign of the last term of the second
//! reduced vortex equation. Tests pin both choices against conservation.

use crate::control::{Bounds, ControlSystem};
use crate::error::{Error, Result};
use crate::poisson::{Observable, PoissonStructure, State, VectorField};
use crate::word::BracketWord;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Margin around singular sets (log arguments, denominators, collisions).
#[derive(Debug, Clone, Copy)]
pub struct GuardMargins {
    pub delta: f64,
}

impl Default for GuardMargins {
    fn default() -> Self {
        Self { delta: 1e-6 }
    }
}

impl GuardMargins {
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta.is_finite() {
            Ok(Self { delta })
        } else {
            Err(Error::InvalidParams("guard margin must be positive".into()))
        }
    }
}

/// An uncontrolled Hamiltonian system together with its momentum map.
pub struct Unreduced {
    pub system: ControlSystem,
    pub momentum: Vec<Observable>,
}

// ---------------------------------------------------------------------------
// Example 1: three point vortices in the plane
// ---------------------------------------------------------------------------

/// Circulations of the three vortices.
#[derive(Debug, Clone, Copy)]
pub struct VortexParams {
    pub gamma: [f64; 3],
}

impl VortexParams {
    pub fn new(gamma: [f64; 3]) -> Result<Self> {
        if gamma.iter().any(|g| *g == 0.0 || !g.is_finite()) {
            return Err(Error::InvalidParams("circulations must be finite and non-zero".into()));
        }
        Ok(Self { gamma })
    }
}

/// Reduced controlled vortex system on coordinates `(a1, a2, a3)` (n = 3,
/// m = 3, controls along all coordinate directions).
pub fn vortex_reduced(params: &VortexParams, margins: &GuardMargins) -> ControlSystem {
    let [g1, g2, g3] = params.gamma;
    let (g12, g13, g23) = (g1 * g2, g1 * g3, g2 * g3);
    let delta = margins.delta;

    let drift = VectorField::new("vortex drift", 3, move |a: &State| {
        let r = a.norm();
        let d12 = a[2] + r;
        let d13 = -a[2] + r;
        let d23 = -a[0] + r;
        DVector::from_vec(vec![
            (2.0 / PI) * (g12 * a[1] / d12 - g13 * a[1] / d13),
            (1.0 / PI)
                * (g12 * (-2.0 * a[0] + a[2] + r) / d12 + g13 * (2.0 * a[0] + a[2] - r) / d13
                    - g23 * a[2] / d23),
            (1.0 / PI) * (g23 * a[1] / d23 - g12 * a[1] / d12 - g13 * a[1] / d13),
        ])
    });

    let structure = PoissonStructure::new("vortex bracket", 3, |a: &State| {
        let r = a.norm();
        let mut j = DMatrix::zeros(3, 3);
        let (e12, e13, e23) = (4.0 * 2.0 * a[2], 4.0 * (-2.0 * a[1]), 4.0 * (2.0 * a[0] - r));
        j[(0, 1)] = e12;
        j[(1, 0)] = -e12;
        j[(0, 2)] = e13;
        j[(2, 0)] = -e13;
        j[(1, 2)] = e23;
        j[(2, 1)] = -e23;
        j
    });

    let hamiltonian = Observable::new("H", 3, move |a: &State| {
        let r = a.norm();
        -(1.0 / (4.0 * PI))
            * (g12 * ((a[2] + r) / 2.0).ln() + g13 * ((-a[2] + r) / 2.0).ln() + g23 * (-a[0] + r).ln())
    })
    .with_gradient(move |a: &State| {
        let r = a.norm();
        let d12 = a[2] + r;
        let d13 = -a[2] + r;
        let d23 = -a[0] + r;
        let mut grad = DVector::zeros(3);
        for i in 0..3 {
            let n = a[i] / r;
            let t12 = if i == 2 { 1.0 + n } else { n };
            let t13 = if i == 2 { -1.0 + n } else { n };
            let t23 = if i == 0 { -1.0 + n } else { n };
            grad[i] = -(1.0 / (4.0 * PI)) * (g12 * t12 / d12 + g13 * t13 / d13 + g23 * t23 / d23);
        }
        grad
    });

    let controls = (0..3)
        .map(|i| VectorField::coordinate(format!("d/da{}", i + 1), 3, i))
        .collect();

    ControlSystem::new("vortex", drift, controls, Bounds::symmetric_unit(3))
        .with_coord_names(&["a1", "a2", "a3"])
        .with_guard(move |a: &State| {
            let r = a.norm();
            r > delta && a[2] + r > delta && -a[2] + r > delta && -a[0] + r > delta
        })
        .with_structure(structure)
        .with_hamiltonian(hamiltonian.clone())
        .with_integrals(vec![hamiltonian])
        .with_sample_box(vec![-2.0, -2.0, -2.0], vec![2.0, 2.0, 2.0])
        .with_witnesses(vec![
            BracketWord::control(1),
            BracketWord::control(2),
            BracketWord::control(3),
        ])
}

/// Unreduced vortex motion on `(x1, y1, x2, y2, x3, y3)` in Kirchhoff
/// canonical form, with the SE(2) momentum map.
pub fn vortex_unreduced(params: &VortexParams, margins: &GuardMargins) -> Unreduced {
    let gamma = params.gamma;
    let delta = margins.delta;

    let grad_h = move |z: &State| -> State {
        // dH/dx_j = -(1/2pi) sum_{i != j} G_i G_j (x_j - x_i) / r_ij^2
        let mut grad = DVector::zeros(6);
        for j in 0..3 {
            let (mut gx, mut gy) = (0.0, 0.0);
            for i in 0..3 {
                if i == j {
                    continue;
                }
                let dx = z[2 * j] - z[2 * i];
                let dy = z[2 * j + 1] - z[2 * i + 1];
                let r2 = dx * dx + dy * dy;
                gx += gamma[i] * gamma[j] * dx / r2;
                gy += gamma[i] * gamma[j] * dy / r2;
            }
            grad[2 * j] = -gx / (2.0 * PI);
            grad[2 * j + 1] = -gy / (2.0 * PI);
        }
        grad
    };

    let hamiltonian = Observable::new("H", 6, move |z: &State| {
        let mut h = 0.0;
        for j in 1..3 {
            for i in 0..j {
                let dx = z[2 * j] - z[2 * i];
                let dy = z[2 * j + 1] - z[2 * i + 1];
                h += gamma[i] * gamma[j] * (dx * dx + dy * dy).sqrt().ln();
            }
        }
        -h / (2.0 * PI)
    })
    .with_gradient(grad_h);

    let drift = VectorField::new("vortex drift", 6, move |z: &State| {
        let g = grad_h(z);
        let mut v = DVector::zeros(6);
        for j in 0..3 {
            v[2 * j] = g[2 * j + 1] / gamma[j];
            v[2 * j + 1] = -g[2 * j] / gamma[j];
        }
        v
    });

    let structure = PoissonStructure::new("kirchhoff bracket", 6, move |_z: &State| {
        let mut j = DMatrix::zeros(6, 6);
        for k in 0..3 {
            j[(2 * k, 2 * k + 1)] = 1.0 / gamma[k];
            j[(2 * k + 1, 2 * k)] = -1.0 / gamma[k];
        }
        j
    });

    let momentum = vec![
        Observable::new("J1", 6, move |z: &State| {
            -(0..3)
                .map(|j| gamma[j] * (z[2 * j] * z[2 * j] + z[2 * j + 1] * z[2 * j + 1]))
                .sum::<f64>()
                / 2.0
        })
        .with_gradient(move |z: &State| {
            DVector::from_iterator(6, (0..6).map(|i| -gamma[i / 2] * z[i]))
        }),
        Observable::new("J2", 6, move |z: &State| {
            (0..3).map(|j| gamma[j] * z[2 * j + 1]).sum()
        })
        .with_gradient(move |_z: &State| {
            DVector::from_iterator(6, (0..6).map(|i| if i % 2 == 1 { gamma[i / 2] } else { 0.0 }))
        }),
        Observable::new("J3", 6, move |z: &State| {
            -(0..3).map(|j| gamma[j] * z[2 * j]).sum::<f64>()
        })
        .with_gradient(move |_z: &State| {
            DVector::from_iterator(6, (0..6).map(|i| if i % 2 == 0 { -gamma[i / 2] } else { 0.0 }))
        }),
    ];

    let mut integrals = vec![hamiltonian.clone()];
    integrals.extend(momentum.iter().cloned());

    let system = ControlSystem::new("vortex-unreduced", drift, vec![], Bounds::symmetric_unit(0))
        .with_coord_names(&["x1", "y1", "x2", "y2", "x3", "y3"])
        .with_guard(move |z: &State| {
            for j in 1..3 {
                for i in 0..j {
                    let dx = z[2 * j] - z[2 * i];
                    let dy = z[2 * j + 1] - z[2 * i + 1];
                    if (dx * dx + dy * dy).sqrt() <= delta {
                        return false;
                    }
                }
            }
            true
        })
        .with_structure(structure)
        .with_hamiltonian(hamiltonian)
        .with_integrals(integrals)
        .with_sample_box(vec![-2.0; 6], vec![2.0; 6]);

    Unreduced { system, momentum }
}

// ---------------------------------------------------------------------------
// Example 2: resonant three-wave interaction
// ---------------------------------------------------------------------------

/// Reduced controlled three-wave system on `(q, p, a, b)` (n = 4, m = 3,
/// controls on `q`, `p`, and `b`; none on `a`).
pub fn three_wave_reduced(margins: &GuardMargins) -> ControlSystem {
    let delta = margins.delta;

    let drift = VectorField::new("three-wave drift", 4, |x: &State| {
        let (q, p, a, b) = (x[0], x[1], x[2], x[3]);
        DVector::from_vec(vec![
            q * p * b / a - 2.0 * q * p * a / b,
            -a * b - q * q * b / a + 2.0 * q * q * a / b,
            -p * b,
            2.0 * p * a,
        ])
    })
    .with_jacobian(|x: &State| {
        let (q, p, a, b) = (x[0], x[1], x[2], x[3]);
        DMatrix::from_row_slice(
            4,
            4,
            &[
                p * b / a - 2.0 * p * a / b,
                q * b / a - 2.0 * q * a / b,
                -q * p * b / (a * a) - 2.0 * q * p / b,
                q * p / a + 2.0 * q * p * a / (b * b),
                //
                -2.0 * q * b / a + 4.0 * q * a / b,
                0.0,
                -b + q * q * b / (a * a) + 2.0 * q * q / b,
                -a - q * q / a - 2.0 * q * q * a / (b * b),
                //
                0.0,
                -b,
                0.0,
                -p,
                //
                0.0,
                2.0 * a,
                2.0 * p,
                0.0,
            ],
        )
    });

    // Displayed matrix with the (1,2)/(2,1) pair sign-corrected so that
    // J grad H reproduces the reduced equations and V is a Casimir.
    let structure = PoissonStructure::new("three-wave bracket", 4, |x: &State| {
        let (q, p, a, b) = (x[0], x[1], x[2], x[3]);
        let mut j = DMatrix::zeros(4, 4);
        let e12 = -1.0;
        let e13 = -p / a;
        let e14 = 2.0 * p / b;
        let e23 = q / a;
        let e24 = -2.0 * q / b;
        j[(0, 1)] = e12;
        j[(1, 0)] = -e12;
        j[(0, 2)] = e13;
        j[(2, 0)] = -e13;
        j[(0, 3)] = e14;
        j[(3, 0)] = -e14;
        j[(1, 2)] = e23;
        j[(2, 1)] = -e23;
        j[(1, 3)] = e24;
        j[(3, 1)] = -e24;
        j
    });

    let hamiltonian = Observable::new("H", 4, |x: &State| -x[2] * x[3] * x[0]).with_gradient(
        |x: &State| {
            let (q, _p, a, b) = (x[0], x[1], x[2], x[3]);
            DVector::from_vec(vec![-a * b, 0.0, -b * q, -a * q])
        },
    );
    let v = Observable::new("V", 4, |x: &State| x.norm_squared())
        .with_gradient(|x: &State| x * 2.0);
    let w = Observable::new("2a^2+b^2", 4, |x: &State| 2.0 * x[2] * x[2] + x[3] * x[3])
        .with_gradient(|x: &State| DVector::from_vec(vec![0.0, 0.0, 4.0 * x[2], 2.0 * x[3]]));

    let controls = vec![
        VectorField::coordinate("d/dq", 4, 0),
        VectorField::coordinate("d/dp", 4, 1),
        VectorField::coordinate("d/db", 4, 3),
    ];

    let deep_witness = BracketWord::bracket(
        BracketWord::control(3),
        BracketWord::bracket(BracketWord::control(2), BracketWord::drift()),
    );

    ControlSystem::new("threewave", drift, controls, Bounds::symmetric_unit(3))
        .with_coord_names(&["q", "p", "a", "b"])
        .with_guard(move |x: &State| x[2] > delta && x[3] > delta)
        .with_structure(structure)
        .with_hamiltonian(hamiltonian.clone())
        .with_integrals(vec![hamiltonian, v.clone(), w.clone()])
        .with_casimirs(vec![v, w])
        .with_sample_box(vec![-2.0, -2.0, 0.1, 0.1], vec![2.0, 2.0, 2.0, 2.0])
        .with_witnesses(vec![
            BracketWord::control(1),
            BracketWord::control(2),
            BracketWord::control(3),
            deep_witness,
        ])
}

/// Unreduced three-wave system on `(q1, p1, q2, p2, q3, p3)` with symplectic
/// weights `s * gamma = (1, 1, -2)` and the torus-action momentum map.
///
/// The second momentum component is derived from the stated action and
/// symplectic form (`|z2|^2 / 2 - |z3|^2 / 4`); it is conserved by the flow,
/// which the printed `(|z1|^2 - |z2|^2) / 2` is not.
pub fn three_wave_unreduced(margins: &GuardMargins) -> Unreduced {
    let delta = margins.delta;
    const C: [f64; 3] = [1.0, 1.0, -2.0];

    let zs = |x: &State| {
        [
            Complex64::new(x[0], x[1]),
            Complex64::new(x[2], x[3]),
            Complex64::new(x[4], x[5]),
        ]
    };
    // dH/d(conj z_j) for H = -(conj(z1) z2 conj(z3) + z1 conj(z2) z3) / 2.
    let wirtinger = move |x: &State| {
        let [z1, z2, z3] = zs(x);
        [
            -0.5 * z2 * z3.conj(),
            -0.5 * z1 * z3,
            -0.5 * z1.conj() * z2,
        ]
    };

    let hamiltonian = Observable::new("H", 6, move |x: &State| {
        let [z1, z2, z3] = zs(x);
        -(z1.conj() * z2 * z3.conj()).re
    })
    .with_gradient(move |x: &State| {
        let d = wirtinger(x);
        let mut grad = DVector::zeros(6);
        for j in 0..3 {
            grad[2 * j] = 2.0 * d[j].re;
            grad[2 * j + 1] = 2.0 * d[j].im;
        }
        grad
    });

    let drift = VectorField::new("three-wave drift", 6, move |x: &State| {
        let d = wirtinger(x);
        let mut v = DVector::zeros(6);
        for j in 0..3 {
            // q' = c dH/dp, p' = -c dH/dq
            v[2 * j] = C[j] * 2.0 * d[j].im;
            v[2 * j + 1] = -C[j] * 2.0 * d[j].re;
        }
        v
    });

    let structure = PoissonStructure::new("weighted canonical bracket", 6, |_x: &State| {
        let mut j = DMatrix::zeros(6, 6);
        for k in 0..3 {
            j[(2 * k, 2 * k + 1)] = C[k];
            j[(2 * k + 1, 2 * k)] = -C[k];
        }
        j
    });

    let momentum = vec![
        Observable::new("J1", 6, |x: &State| {
            0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3])
        })
        .with_gradient(|x: &State| {
            DVector::from_vec(vec![x[0], x[1], x[2], x[3], 0.0, 0.0])
        }),
        Observable::new("J2", 6, |x: &State| {
            0.5 * (x[2] * x[2] + x[3] * x[3]) - 0.25 * (x[4] * x[4] + x[5] * x[5])
        })
        .with_gradient(|x: &State| {
            DVector::from_vec(vec![0.0, 0.0, x[2], x[3], -0.5 * x[4], -0.5 * x[5]])
        }),
    ];

    let mut integrals = vec![hamiltonian.clone()];
    integrals.extend(momentum.iter().cloned());

    let system = ControlSystem::new("threewave-unreduced", drift, vec![], Bounds::symmetric_unit(0))
        .with_coord_names(&["q1", "p1", "q2", "p2", "q3", "p3"])
        .with_guard(move |x: &State| {
            x[0].hypot(x[1]) > delta && x[4].hypot(x[5]) > delta
        })
        .with_structure(structure)
        .with_hamiltonian(hamiltonian)
        .with_integrals(integrals)
        .with_sample_box(vec![-2.0; 6], vec![2.0; 6]);

    Unreduced { system, momentum }
}

// ---------------------------------------------------------------------------
// Example 3: two coupled planar rigid bodies
// ---------------------------------------------------------------------------

/// Masses, hinge offsets, and moments of inertia of the two bodies.
#[derive(Debug, Clone, Copy)]
pub struct RigidBodyParams {
    pub m1: f64,
    pub m2: f64,
    pub d1: f64,
    pub d2: f64,
    pub i1: f64,
    pub i2: f64,
}

impl RigidBodyParams {
    pub fn new(m1: f64, m2: f64, d1: f64, d2: f64, i1: f64, i2: f64) -> Result<Self> {
        let p = Self { m1, m2, d1, d2, i1, i2 };
        if !(m1 > 0.0 && m2 > 0.0 && i1 > 0.0 && i2 > 0.0 && d1 >= 0.0 && d2 >= 0.0) {
            return Err(Error::InvalidParams(
                "masses and inertias must be positive, offsets non-negative".into(),
            ));
        }
        if [m1, m2, d1, d2, i1, i2].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("rigid body parameters must be finite".into()));
        }
        Ok(p)
    }

    /// All masses, offsets, and inertias equal to one.
    pub fn unit() -> Self {
        Self {
            m1: 1.0,
            m2: 1.0,
            d1: 1.0,
            d2: 1.0,
            i1: 1.0,
            i2: 1.0,
        }
    }

    /// Reduced mass `m1 m2 / (m1 + m2)`.
    pub fn epsilon(&self) -> f64 {
        self.m1 * self.m2 / (self.m1 + self.m2)
    }

    /// Augmented moments of inertia `I_i + eps d_i^2`.
    pub fn i_tilde(&self) -> (f64, f64) {
        let eps = self.epsilon();
        (self.i1 + eps * self.d1 * self.d1, self.i2 + eps * self.d2 * self.d2)
    }

    pub fn lambda(&self, theta: f64) -> f64 {
        self.d1 * self.d2 * theta.cos()
    }

    /// `Delta(theta) = I~1 I~2 - eps^2 lambda(theta)^2`, positive for all theta.
    pub fn delta(&self, theta: f64) -> f64 {
        let (it1, it2) = self.i_tilde();
        let eps = self.epsilon();
        let lam = self.lambda(theta);
        it1 * it2 - eps * eps * lam * lam
    }

    /// Theta-independent lower bound `I1 I2 + I1 eps d2^2 + I2 eps d1^2`.
    pub fn delta_lower_bound(&self) -> f64 {
        let eps = self.epsilon();
        self.i1 * self.i2 + self.i1 * eps * self.d2 * self.d2 + self.i2 * eps * self.d1 * self.d1
    }

    fn grad_h(&self, x: &State) -> State {
        let (it1, it2) = self.i_tilde();
        let eps = self.epsilon();
        let (theta, mu1, mu2) = (x[0], x[1], x[2]);
        let lam = self.lambda(theta);
        let dlam = -self.d1 * self.d2 * theta.sin();
        let delta = it1 * it2 - eps * eps * lam * lam;
        let numerator = it2 * mu1 * mu1 - 2.0 * eps * lam * mu1 * mu2 + it1 * mu2 * mu2;
        let dnum = -2.0 * eps * mu1 * mu2 * dlam;
        let ddelta = -2.0 * eps * eps * lam * dlam;
        DVector::from_vec(vec![
            (dnum * delta - numerator * ddelta) / (2.0 * delta * delta),
            (it2 * mu1 - eps * lam * mu2) / delta,
            (-eps * lam * mu1 + it1 * mu2) / delta,
        ])
    }
}

/// Reduced controlled coupled rigid bodies on `(theta, mu1, mu2)` with theta
/// angular (n = 3, m = 3).
pub fn coupled_bodies(params: &RigidBodyParams) -> ControlSystem {
    let p = *params;

    let hamiltonian = Observable::new("H", 3, move |x: &State| {
        let (it1, it2) = p.i_tilde();
        let eps = p.epsilon();
        let lam = p.lambda(x[0]);
        let delta = p.delta(x[0]);
        (it2 * x[1] * x[1] - 2.0 * eps * lam * x[1] * x[2] + it1 * x[2] * x[2]) / (2.0 * delta)
    })
    .with_gradient(move |x: &State| p.grad_h(x));

    let drift = VectorField::new("bodies drift", 3, move |x: &State| {
        let g = p.grad_h(x);
        DVector::from_vec(vec![-g[1] + g[2], g[0], -g[0]])
    });

    let structure = PoissonStructure::new("bodies bracket", 3, |_x: &State| {
        DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 1.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0])
    });

    let momentum = Observable::new("mu1+mu2", 3, |x: &State| x[1] + x[2])
        .with_gradient(|_x: &State| DVector::from_vec(vec![0.0, 1.0, 1.0]));

    let controls = vec![
        VectorField::coordinate("d/dtheta", 3, 0),
        VectorField::coordinate("d/dmu1", 3, 1),
        VectorField::coordinate("d/dmu2", 3, 2),
    ];

    ControlSystem::new("bodies", drift, controls, Bounds::symmetric_unit(3))
        .with_coord_names(&["theta", "mu1", "mu2"])
        .with_angular(vec![true, false, false])
        .with_structure(structure)
        .with_hamiltonian(hamiltonian.clone())
        .with_integrals(vec![hamiltonian, momentum.clone()])
        .with_casimirs(vec![momentum])
        .with_sample_box(vec![0.0, -2.0, -2.0], vec![2.0 * PI, 2.0, 2.0])
        .with_witnesses(vec![
            BracketWord::control(1),
            BracketWord::control(2),
            BracketWord::control(3),
        ])
}

/// The proper coordinates `(theta, X, Y)` in which `H = (X^2 + Y^2) / (2 Delta)`.
pub fn bodies_proper_coordinates(params: &RigidBodyParams, state: &State) -> (f64, f64, f64) {
    let (it1, it2) = params.i_tilde();
    let eps = params.epsilon();
    let (theta, mu1, mu2) = (state[0], state[1], state[2]);
    let lam = params.lambda(theta);
    let x = it2.sqrt() * mu1 - eps * lam / it2.sqrt() * mu2;
    let y = (it1 - eps * eps * lam * lam / it2).sqrt() * mu2;
    (theta, x, y)
}

/// Inverse of [`bodies_proper_coordinates`].
pub fn bodies_from_proper_coordinates(
    params: &RigidBodyParams,
    theta: f64,
    x: f64,
    y: f64,
) -> State {
    let (it1, it2) = params.i_tilde();
    let eps = params.epsilon();
    let lam = params.lambda(theta);
    let mu2 = y / (it1 - eps * eps * lam * lam / it2).sqrt();
    let mu1 = (x + eps * lam / it2.sqrt() * mu2) / it2.sqrt();
    DVector::from_vec(vec![theta, mu1, mu2])
}

// ---------------------------------------------------------------------------
// Parameter files and lookup by name
// ---------------------------------------------------------------------------

/// JSON parameter file:
/// `{"system": "vortex"|"threewave"|"bodies", "gamma": [...], "m": [...],
///   "d": [...], "I": [...], "margin": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<[f64; 2]>,
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

impl SystemSpec {
    pub fn by_name(name: &str) -> Self {
        Self {
            system: name.to_string(),
            gamma: None,
            m: None,
            d: None,
            inertia: None,
            margin: None,
        }
    }

    pub fn margins(&self) -> Result<GuardMargins> {
        match self.margin {
            Some(delta) => GuardMargins::new(delta),
            None => Ok(GuardMargins::default()),
        }
    }

    pub fn vortex_params(&self) -> Result<VortexParams> {
        VortexParams::new(self.gamma.unwrap_or([1.0, 1.0, 1.0]))
    }

    pub fn body_params(&self) -> Result<RigidBodyParams> {
        let m = self.m.unwrap_or([1.0, 1.0]);
        let d = self.d.unwrap_or([1.0, 1.0]);
        let i = self.inertia.unwrap_or([1.0, 1.0]);
        RigidBodyParams::new(m[0], m[1], d[0], d[1], i[0], i[1])
    }

    /// Build the reduced system this spec describes.
    pub fn build(&self) -> Result<ControlSystem> {
        let margins = self.margins()?;
        match self.system.as_str() {
            "vortex" => Ok(vortex_reduced(&self.vortex_params()?, &margins)),
            "threewave" => Ok(three_wave_reduced(&margins)),
            "bodies" => Ok(coupled_bodies(&self.body_params()?)),
            other => Err(Error::InvalidParams(format!(
                "unknown system '{other}' (expected vortex, threewave, or bodies)"
            ))),
        }
    }
}

/// Properness evidence for the conserved map each built-in system relies on:
/// the momentum map norm over unreduced spheres for the vortex problem, the
/// conserved `V` on the reduced space for the three-wave system, and `H` over
/// the cylinder spheres `{X^2 + Y^2 = R^2}` for the rigid bodies.
pub fn properness_profile(
    spec: &SystemSpec,
    radii: &[f64],
    n_per_sphere: usize,
    seed: u64,
) -> Result<crate::stability::PropernessProfile> {
    use crate::sample::sample_sphere;
    use crate::stability::properness_scan;

    let margins = spec.margins()?;
    match spec.system.as_str() {
        "vortex" => {
            let u = vortex_unreduced(&spec.vortex_params()?, &margins);
            let momentum = u.momentum;
            let guard = move |x: &State| u.system.guard(x);
            properness_scan(
                |x| DVector::from_iterator(momentum.len(), momentum.iter().map(|j| j.value(x))),
                |r, rng| sample_sphere(6, r, rng),
                Some(&guard),
                radii,
                n_per_sphere,
                seed,
            )
        }
        "threewave" => {
            let sys = three_wave_reduced(&margins);
            let guard = move |x: &State| sys.guard(x);
            properness_scan(
                |x| DVector::from_vec(vec![x.norm_squared()]),
                |r, rng| sample_sphere(4, r, rng),
                Some(&guard),
                radii,
                n_per_sphere,
                seed,
            )
        }
        "bodies" => {
            let params = spec.body_params()?;
            let sys = coupled_bodies(&params);
            properness_scan(
                move |x: &State| DVector::from_vec(vec![sys.hamiltonian().unwrap().value(x)]),
                move |r, rng| {
                    use rand::Rng as _;
                    let theta = rng.random::<f64>() * std::f64::consts::TAU;
                    let phi = rng.random::<f64>() * std::f64::consts::TAU;
                    bodies_from_proper_coordinates(&params, theta, r * phi.cos(), r * phi.sin())
                },
                None,
                radii,
                n_per_sphere,
                seed,
            )
        }
        other => Err(Error::InvalidParams(format!(
            "no properness subject for system '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{conservation_report, integrate, IntegratorOptions};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn margins() -> GuardMargins {
        GuardMargins::default()
    }

    #[test]
    fn vortex_drift_vanishes_at_collinear_equilibrium() {
        let sys = vortex_reduced(&VortexParams::new([1.0, 1.0, 1.0]).unwrap(), &margins());
        let v = sys.drift().value(&dvector![-1.0, 0.0, 0.0]);
        assert_relative_eq!(v, dvector![0.0, 0.0, 0.0], epsilon = 1e-14);
    }

    #[test]
    fn vortex_hamiltonian_value() {
        let sys = vortex_reduced(&VortexParams::new([1.0, 1.0, 1.0]).unwrap(), &margins());
        let h = sys.hamiltonian().unwrap().value(&dvector![0.0, 1.0, 0.0]);
        assert_relative_eq!(h, 2.0_f64.ln() / (2.0 * PI), epsilon = 1e-14);
    }

    #[test]
    fn vortex_guard_excludes_positive_a1_ray() {
        let sys = vortex_reduced(&VortexParams::new([1.0, 1.0, 1.0]).unwrap(), &margins());
        assert!(!sys.guard(&dvector![1.0, 0.0, 0.0]));
        assert!(!sys.guard(&dvector![0.0, 0.0, 0.0]));
        assert!(!sys.guard(&dvector![0.0, 0.0, 1.5]));
        assert!(sys.guard(&dvector![-1.0, 0.3, 0.2]));
    }

    #[test]
    fn vortex_drift_equals_bracket_gradient_product() {
        // The corrected second reduced equation: the displayed one (with
        // + on the G2 G3 term) fails conservation of H.
        let params = VortexParams::new([1.0, 1.0, 1.0]).unwrap();
        let sys = vortex_reduced(&params, &margins());
        let field = sys
            .structure()
            .unwrap()
            .hamiltonian_field(sys.hamiltonian().unwrap());
        let mut rng = crate::sample::stream(4, 2);
        for _ in 0..300 {
            let x = sys.sample_state(&mut rng).unwrap();
            let d = sys.drift().value(&x);
            let jh = field.value(&x);
            assert!(
                (&d - &jh).norm() <= 1e-9 * (1.0 + d.norm()),
                "mismatch at {x:?}: {d:?} vs {jh:?}"
            );
        }
    }

    #[test]
    fn vortex_displayed_second_equation_breaks_conservation() {
        // With the printed sign the drift does not annihilate grad H.
        let params = VortexParams::new([1.0, 1.0, 1.0]).unwrap();
        let sys = vortex_reduced(&params, &margins());
        let x = dvector![0.0, 1.0, 1.0];
        let mut displayed = sys.drift().value(&x);
        let r: f64 = x.norm();
        let g23 = 1.0;
        // Flip the last term of the second component back to the printed sign.
        displayed[1] += 2.0 * (1.0 / PI) * g23 * x[2] / (-x[0] + r);
        let grad = sys.hamiltonian().unwrap().gradient(&x);
        assert!(grad.dot(&displayed).abs() > 1e-3);
        assert!(grad.dot(&sys.drift().value(&x)).abs() < 1e-14);
    }

    #[test]
    fn unreduced_vortex_momentum_values() {
        let u = vortex_unreduced(&VortexParams::new([1.0, 1.0, 1.0]).unwrap(), &margins());
        let z = dvector![1.0, 0.0, -1.0, 0.0, 0.0, 1.0];
        let j: Vec<f64> = u.momentum.iter().map(|obs| obs.value(&z)).collect();
        assert_relative_eq!(j[0], -1.5, epsilon = 1e-14);
        assert_relative_eq!(j[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(j[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn unreduced_vortex_conserves_momentum_pointwise() {
        let u = vortex_unreduced(&VortexParams::new([1.0, 1.0, 1.0]).unwrap(), &margins());
        let z = dvector![1.0, 0.0, -1.0, 0.0, 0.0, 1.0];
        let drift = u.system.drift().value(&z);
        for obs in &u.momentum {
            assert!(obs.gradient(&z).dot(&drift).abs() < 1e-10, "{}", obs.label());
        }
    }

    #[test]
    fn unreduced_vortex_guard_rejects_collisions() {
        let u = vortex_unreduced(&VortexParams::new([1.0, 1.0, 1.0]).unwrap(), &margins());
        assert!(!u.system.guard(&dvector![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]));
        assert!(u.system.guard(&dvector![1.0, 0.0, -1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn three_wave_drift_and_hamiltonian_values() {
        let sys = three_wave_reduced(&margins());
        let v = sys.drift().value(&dvector![0.0, 1.0, 1.0, 1.0]);
        assert_relative_eq!(v, dvector![0.0, -1.0, -1.0, 2.0], epsilon = 1e-14);
        let h = sys.hamiltonian().unwrap().value(&dvector![1.0, 0.0, 2.0, 3.0]);
        assert_relative_eq!(h, -6.0, epsilon = 1e-14);
    }

    #[test]
    fn three_wave_drift_matches_structure_gradient_product() {
        let sys = three_wave_reduced(&margins());
        let x = dvector![0.0, 1.0, 1.0, 1.0];
        let j = sys.structure().unwrap().matrix_at(&x).unwrap();
        let jh = j * sys.hamiltonian().unwrap().gradient(&x);
        assert!((jh - sys.drift().value(&x)).norm() < 1e-12);
    }

    #[test]
    fn three_wave_displayed_sign_fails_v_conservation() {
        // grad V . drift with the displayed (1,2) = +1 matrix is 4abp != 0.
        let sys = three_wave_reduced(&margins());
        let x = dvector![0.0, 1.0, 1.0, 1.0];
        let grad_h = sys.hamiltonian().unwrap().gradient(&x);
        let mut displayed = sys.structure().unwrap().matrix_at(&x).unwrap();
        displayed[(0, 1)] = 1.0;
        displayed[(1, 0)] = -1.0;
        let drift_displayed = displayed * grad_h;
        let grad_v = &x * 2.0;
        let (q, p, a, b) = (x[0], x[1], x[2], x[3]);
        assert_relative_eq!(grad_v.dot(&drift_displayed), 4.0 * a * b * p, epsilon = 1e-12);
        assert!(grad_v.dot(&drift_displayed).abs() > 0.1);
        let _ = q;
        // The corrected matrix annihilates grad V exactly.
        assert!(grad_v.dot(&sys.drift().value(&x)).abs() < 1e-14);
    }

    #[test]
    fn three_wave_drift_jacobian_matches_finite_differences() {
        let sys = three_wave_reduced(&margins());
        let mut rng = crate::sample::stream(8, 0);
        for _ in 0..50 {
            let x = sys.sample_state(&mut rng).unwrap();
            let analytic = sys.drift().jacobian(&x);
            let fd = sys.drift().fd_jacobian(&x);
            assert_relative_eq!(analytic, fd, epsilon = 1e-5, max_relative = 1e-5);
        }
    }

    #[test]
    fn unreduced_three_wave_values() {
        let u = three_wave_unreduced(&margins());
        let z111 = dvector![1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        assert_relative_eq!(u.system.hamiltonian().unwrap().value(&z111), -1.0, epsilon = 1e-14);
        // J1 has the printed form; J2 is the derived conserved component.
        let z = dvector![1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert_relative_eq!(u.momentum[0].value(&z), 0.5, epsilon = 1e-14);
        assert_relative_eq!(u.momentum[1].value(&z), -0.25, epsilon = 1e-14);
    }

    #[test]
    fn unreduced_three_wave_momentum_conserved_pointwise() {
        let u = three_wave_unreduced(&margins());
        let mut rng = crate::sample::stream(21, 0);
        for _ in 0..100 {
            let z = u.system.sample_state(&mut rng).unwrap();
            let drift = u.system.drift().value(&z);
            for obs in &u.momentum {
                assert!(
                    obs.gradient(&z).dot(&drift).abs() < 1e-10,
                    "{} not conserved at {z:?}",
                    obs.label()
                );
            }
        }
    }

    #[test]
    fn printed_second_momentum_component_is_not_conserved() {
        // (|z1|^2 - |z2|^2) / 2 as printed drifts under the (1, 1, -2) flow;
        // checked here so the deviation stays documented.
        let u = three_wave_unreduced(&margins());
        let printed = Observable::new("J2-printed", 6, |x: &State| {
            0.5 * (x[0] * x[0] + x[1] * x[1] - x[2] * x[2] - x[3] * x[3])
        });
        let x0 = dvector![1.0, 0.5, 0.8, -0.3, 1.1, 0.2];
        let traj = integrate(
            &u.system,
            &x0,
            None,
            (0.0, 5.0),
            &IntegratorOptions::with_tols(1e-10, 1e-12),
        )
        .unwrap();
        let report = conservation_report(&traj, &[printed]);
        assert!(report[0].max_abs_drift > 1e-2, "drift {}", report[0].max_abs_drift);
        let good = conservation_report(&traj, &u.momentum);
        for entry in &good {
            assert!(entry.max_abs_drift < 1e-7, "{}: {}", entry.label, entry.max_abs_drift);
        }
    }

    #[test]
    fn bodies_hamiltonian_and_drift_at_reference_point() {
        let sys = coupled_bodies(&RigidBodyParams::unit());
        let x = dvector![0.0, 1.0, 1.0];
        assert_relative_eq!(sys.hamiltonian().unwrap().value(&x), 0.5, epsilon = 1e-14);
        assert_relative_eq!(sys.drift().value(&x), dvector![0.0, 0.0, 0.0], epsilon = 1e-14);
    }

    #[test]
    fn bodies_momentum_is_structurally_conserved() {
        let sys = coupled_bodies(&RigidBodyParams::unit());
        let mut rng = crate::sample::stream(12, 0);
        for _ in 0..100 {
            let x = sys.sample_state(&mut rng).unwrap();
            let v = sys.drift().value(&x);
            assert_eq!(v[1] + v[2], 0.0);
        }
    }

    #[test]
    fn bodies_delta_stays_above_lower_bound() {
        let p = RigidBodyParams::new(2.0, 0.5, 1.5, 0.7, 0.8, 1.2).unwrap();
        let bound = p.delta_lower_bound();
        assert!(bound > 0.0);
        for k in 0..100 {
            let theta = k as f64 * 2.0 * PI / 100.0;
            assert!(p.delta(theta) >= bound - 1e-12);
        }
    }

    #[test]
    fn proper_coordinates_match_reference_values() {
        let p = RigidBodyParams::unit();
        let (theta, x, y) = bodies_proper_coordinates(&p, &dvector![0.0, 1.0, 1.0]);
        assert_eq!(theta, 0.0);
        assert_relative_eq!(x, 1.0 / 1.5_f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(y, (4.0 / 3.0_f64).sqrt(), epsilon = 1e-12);
        // Zero momenta map to the origin.
        let (_, x0, y0) = bodies_proper_coordinates(&p, &dvector![1.3, 0.0, 0.0]);
        assert_eq!((x0, y0), (0.0, 0.0));
    }

    #[test]
    fn proper_coordinates_express_hamiltonian_as_weighted_square() {
        let p = RigidBodyParams::new(2.0, 0.5, 1.5, 0.7, 0.8, 1.2).unwrap();
        let sys = coupled_bodies(&p);
        let mut rng = crate::sample::stream(13, 0);
        for _ in 0..200 {
            let state = sys.sample_state(&mut rng).unwrap();
            let (theta, x, y) = bodies_proper_coordinates(&p, &state);
            let h = sys.hamiltonian().unwrap().value(&state);
            let via_xy = (x * x + y * y) / (2.0 * p.delta(theta));
            assert!((h - via_xy).abs() < 1e-12 * (1.0 + h.abs()), "{h} vs {via_xy}");
            // Round trip through the inverse map.
            let back = bodies_from_proper_coordinates(&p, theta, x, y);
            assert_relative_eq!(back, state, epsilon = 1e-10);
        }
    }

    #[test]
    fn all_reduced_drifts_match_hamiltonian_fields() {
        let systems: Vec<ControlSystem> = vec![
            vortex_reduced(&VortexParams::new([1.0, 2.0, 0.5]).unwrap(), &margins()),
            three_wave_reduced(&margins()),
            coupled_bodies(&RigidBodyParams::new(2.0, 0.5, 1.5, 0.7, 0.8, 1.2).unwrap()),
            vortex_unreduced(&VortexParams::new([1.0, 2.0, 0.5]).unwrap(), &margins()).system,
            three_wave_unreduced(&margins()).system,
        ];
        for sys in &systems {
            let field = sys
                .structure()
                .unwrap()
                .hamiltonian_field(sys.hamiltonian().unwrap());
            let mut rng = crate::sample::stream(99, 0);
            for _ in 0..200 {
                let x = sys.sample_state(&mut rng).unwrap();
                let d = sys.drift().value(&x);
                assert!(
                    (&d - field.value(&x)).norm() <= 1e-9 * (1.0 + d.norm()),
                    "{} drift mismatch at {x:?}",
                    sys.name()
                );
            }
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(VortexParams::new([1.0, 0.0, 1.0]).is_err());
        assert!(RigidBodyParams::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(RigidBodyParams::new(1.0, 1.0, -0.1, 1.0, 1.0, 1.0).is_err());
        assert!(GuardMargins::new(0.0).is_err());
    }

    #[test]
    fn system_spec_round_trips_and_builds() {
        let text = r#"{"system": "vortex", "gamma": [1.0, 2.0, 3.0], "margin": 1e-7}"#;
        let spec: SystemSpec = serde_json::from_str(text).unwrap();
        let sys = spec.build().unwrap();
        assert_eq!(sys.name(), "vortex");
        let spec: SystemSpec =
            serde_json::from_str(r#"{"system": "bodies", "m": [2.0, 0.5], "d": [1.5, 0.7], "I": [0.8, 1.2]}"#)
                .unwrap();
        assert_eq!(spec.body_params().unwrap().m1, 2.0);
        assert!(spec.build().is_ok());
        let bad: SystemSpec = serde_json::from_str(r#"{"system": "nope"}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
