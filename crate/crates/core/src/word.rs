//! Bracket words: formal iterated Lie brackets of a system's generators.
//!
//! Leaves index the generators (0 is the drift `f`, `i >= 1` is the control
//! `g_i`); internal nodes denote `[left, right]`. Words are rendered as
//! `f`, `g1`, `[g3,[g2,f]]`, ...

use crate::control::ControlSystem;
use crate::poisson::{State, VectorField};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BracketWord {
    /// Generator index: 0 = drift, i = control g_i.
    Leaf(usize),
    Bracket(Box<BracketWord>, Box<BracketWord>),
}

impl BracketWord {
    pub fn drift() -> Self {
        BracketWord::Leaf(0)
    }

    /// Control generator `g_i` (1-based).
    pub fn control(i: usize) -> Self {
        assert!(i >= 1, "control generators are 1-based");
        BracketWord::Leaf(i)
    }

    pub fn bracket(left: BracketWord, right: BracketWord) -> Self {
        BracketWord::Bracket(Box::new(left), Box::new(right))
    }

    /// Number of bracket applications (internal nodes).
    pub fn depth(&self) -> usize {
        match self {
            BracketWord::Leaf(_) => 0,
            BracketWord::Bracket(l, r) => 1 + l.depth() + r.depth(),
        }
    }

    /// Realize the word as a vector field of `sys`.
    ///
    /// Leaves use the system's fields (with analytic Jacobians when present);
    /// composite levels differentiate by central finite differences.
    pub fn field(&self, sys: &ControlSystem) -> VectorField {
        match self {
            BracketWord::Leaf(0) => sys.drift().clone(),
            BracketWord::Leaf(i) => sys.controls()[i - 1].clone(),
            BracketWord::Bracket(l, r) => {
                let lf = l.field(sys);
                let rf = r.field(sys);
                let label = self.to_string();
                let dim = sys.dim();
                VectorField::new(label, dim, move |x| crate::larc::lie_bracket(&lf, &rf, x))
            }
        }
    }

    pub fn value(&self, sys: &ControlSystem, x: &State) -> State {
        self.field(sys).value(x)
    }
}

impl fmt::Display for BracketWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketWord::Leaf(0) => write!(f, "f"),
            BracketWord::Leaf(i) => write!(f, "g{i}"),
            BracketWord::Bracket(l, r) => write!(f, "[{l},{r}]"),
        }
    }
}
