//! Numerical Lie-bracket generation and rank evaluation.
//!
//! The rank check asks whether the Lie algebra generated by the drift and the
//! control fields spans the tangent space at a point. Systems may carry
//! bracket words already known to realize full rank (the certificates stated
//! for the built-in systems); those are evaluated first, and breadth-first
//! discovery over bracket words fills any remaining rank deficit.

use crate::control::ControlSystem;
use crate::error::{Error, Result};
use crate::poisson::{numerical_rank, State, VectorField};
use crate::sample::{rejection_sample, stream, BoxSampler};
use crate::word::BracketWord;
use nalgebra::DMatrix;
use rayon::prelude::*;

/// `[X, Y](x) = DY(x) X(x) - DX(x) Y(x)`.
///
/// Jacobians are analytic when the fields carry them, central finite
/// differences otherwise.
pub fn lie_bracket(x_field: &VectorField, y_field: &VectorField, at: &State) -> State {
    y_field.jacobian(at) * x_field.value(at) - x_field.jacobian(at) * y_field.value(at)
}

/// Rank of the generated Lie algebra at one point.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub point: State,
    pub rank: usize,
    /// Singular values of the selected witness matrix, descending.
    pub singular_values: Vec<f64>,
    /// Words whose values realize the rank (one per rank increment).
    pub witnesses: Vec<BracketWord>,
    pub tol: f64,
}

impl RankReport {
    pub fn is_full(&self, dim: usize) -> bool {
        self.rank == dim
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "point": self.point.iter().cloned().collect::<Vec<_>>(),
            "rank": self.rank,
            "singular_values": self.singular_values,
            "witnesses": self.witnesses.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            "tol": self.tol,
        })
    }
}

/// Result of a sampled rank scan.
#[derive(Debug)]
pub struct LarcScan {
    pub min_rank: usize,
    pub dim: usize,
    /// Indices of samples whose rank fell short of the dimension.
    pub failing: Vec<usize>,
    pub reports: Vec<RankReport>,
}

impl LarcScan {
    pub fn is_full(&self) -> bool {
        self.failing.is_empty() && self.min_rank == self.dim
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "min_rank": self.min_rank,
            "dim": self.dim,
            "samples": self.reports.len(),
            "failing_points": self.failing,
            "reports": self.reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// Greedy rank evaluation at `x` over bracket words of depth at most
/// `max_depth`.
///
/// A word is kept iff its value raises the numerical rank of the selected set
/// (singular values above `tol * sigma_max`). The system's witness
/// certificate is tried first, then generators and discovered brackets in
/// breadth-first order, stopping at full rank.
pub fn larc_rank(
    sys: &ControlSystem,
    x: &State,
    max_depth: usize,
    tol: f64,
) -> Result<RankReport> {
    sys.check_guard(x, 0.0)?;
    let n = sys.dim();

    let mut selected_values: Vec<State> = Vec::new();
    let mut witnesses: Vec<BracketWord> = Vec::new();
    let mut rank = 0usize;
    let mut sigma: Vec<f64> = Vec::new();

    let try_word = |word: &BracketWord,
                        selected_values: &mut Vec<State>,
                        witnesses: &mut Vec<BracketWord>,
                        rank: &mut usize,
                        sigma: &mut Vec<f64>| {
        let value = word.value(sys, x);
        if !value.iter().all(|v| v.is_finite()) {
            return;
        }
        let mut columns = selected_values.clone();
        columns.push(value);
        let matrix = DMatrix::from_columns(&columns);
        let (new_rank, new_sigma) = numerical_rank(&matrix, tol);
        if new_rank > *rank {
            *rank = new_rank;
            *sigma = new_sigma;
            selected_values.push(columns.pop().unwrap());
            witnesses.push(word.clone());
        }
    };

    for word in sys.witnesses() {
        if rank == n {
            break;
        }
        if word.depth() <= max_depth {
            try_word(word, &mut selected_values, &mut witnesses, &mut rank, &mut sigma);
        }
    }

    if rank < n {
        // Breadth-first discovery: controls first, then the drift, then
        // brackets of previously generated words.
        let mut levels: Vec<Vec<BracketWord>> = Vec::with_capacity(max_depth + 1);
        let mut generators: Vec<BracketWord> =
            (1..=sys.num_controls()).map(BracketWord::control).collect();
        generators.push(BracketWord::drift());
        levels.push(generators);

        'depths: for depth in 0..=max_depth {
            while levels.len() <= depth {
                let d = levels.len();
                let mut next = Vec::new();
                for d_left in 0..d {
                    let d_right = d - 1 - d_left;
                    if d_right < d_left {
                        break;
                    }
                    for (i, left) in levels[d_left].iter().enumerate() {
                        let right_words = &levels[d_right];
                        let start = if d_left == d_right { i + 1 } else { 0 };
                        for right in &right_words[start..] {
                            next.push(BracketWord::bracket(left.clone(), right.clone()));
                        }
                    }
                }
                levels.push(next);
            }
            for word in &levels[depth] {
                if witnesses.contains(word) {
                    continue;
                }
                try_word(word, &mut selected_values, &mut witnesses, &mut rank, &mut sigma);
                if rank == n {
                    break 'depths;
                }
            }
        }
    }

    Ok(RankReport {
        point: x.clone(),
        rank,
        singular_values: sigma,
        witnesses,
        tol,
    })
}

/// Sampled surrogate for the everywhere-quantified rank condition.
///
/// Deterministic given `seed`: sample `k` draws from the stream
/// `(seed, k)`, so results do not depend on scheduling. Falls back to the
/// system's default sampling box when `sampler` is `None`.
pub fn larc_scan(
    sys: &ControlSystem,
    sampler: Option<&BoxSampler>,
    n_samples: usize,
    max_depth: usize,
    tol: f64,
    seed: u64,
) -> Result<LarcScan> {
    let sampler = match sampler {
        Some(s) => s,
        None => sys.sample_region().ok_or_else(|| {
            Error::InvalidParams(format!("system {} has no default sampling box", sys.name()))
        })?,
    };
    let reports: Vec<Result<RankReport>> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k as u64);
            let x = rejection_sample(&mut rng, 10_000, |r| sampler.sample(r), |x| sys.guard(x))?;
            larc_rank(sys, &x, max_depth, tol)
        })
        .collect();
    let reports: Vec<RankReport> = reports.into_iter().collect::<Result<_>>()?;
    let min_rank = reports.iter().map(|r| r.rank).min().unwrap_or(0);
    let failing = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rank < sys.dim())
        .map(|(i, _)| i)
        .collect();
    Ok(LarcScan {
        min_rank,
        dim: sys.dim(),
        failing,
        reports,
    })
}

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-6;
/// Default bracket nesting depth.
pub const DEFAULT_MAX_DEPTH: usize = 3;
