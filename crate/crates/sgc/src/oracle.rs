//! Brute-force oracles: exhaustive signed-walk enumeration, the Taylor-series
//! matrix exponential, and exhaustive frustration minimization.
//!
//! Nothing here is fast, and that is the point: these routines are
//! unquestionably correct at small scale and serve as independent referees
//! for the spectral machinery. Enumeration sizes are gated so a misuse fails
//! loudly instead of hanging.

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use nalgebra::DMatrix;

/// Enumeration gate for walk counting: n^k must not exceed this.
const WALK_GATE: f64 = 1e7;

/// Enumeration gate for bipartitions: at most 2^(MAX_FRUSTRATION_NODES − 1).
const MAX_FRUSTRATION_NODES: usize = 20;

/// Counts of positive and negative walks of a fixed length between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkCount {
    pub mu_plus: u64,
    pub mu_minus: u64,
}

/// Result of exhaustive frustration minimization.
///
/// Each minimizer is a length-n ±1 faction assignment, canonicalized so the
/// entry of node 0 is +1; the trivial one-faction split is included in the
/// enumeration. Frustrated edges are positive edges across factions plus
/// negative edges within a faction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrustrationResult {
    pub min_frustration: usize,
    pub minimizers: Vec<Vec<i8>>,
}

/// Exhaustively enumerates all length-`k` walks from `i` to `j`, classified
/// by the sign product of their edges.
///
/// `mu_plus − mu_minus` equals `(A^k)_{ij}` and `mu_plus + mu_minus` equals
/// `(|A|^k)_{ij}`. Gated to `n^k ≤ 10^7`.
pub fn count_signed_walks(g: &SignedGraph, i: usize, j: usize, k: usize) -> Result<WalkCount> {
    let n = g.n();
    if i >= n || j >= n {
        return Err(Error::usage(format!(
            "node index out of range: i = {i}, j = {j}, n = {n}"
        )));
    }
    check_walk_gate(n, k)?;
    let mut count = WalkCount {
        mu_plus: 0,
        mu_minus: 0,
    };
    let mut record = |node: usize, sign: i8| {
        if node == j {
            if sign > 0 {
                count.mu_plus += 1;
            } else {
                count.mu_minus += 1;
            }
        }
    };
    // Iterative depth-first enumeration: stack of (node, depth, sign so far).
    let mut stack = vec![(i, 0usize, 1i8)];
    while let Some((u, depth, sign)) = stack.pop() {
        if depth == k {
            record(u, sign);
            continue;
        }
        for (v, s) in g.neighbors(u) {
            stack.push((v, depth + 1, sign * s));
        }
    }
    Ok(count)
}

/// Walk counts for all node pairs and all lengths `0..=kmax` in one sweep.
///
/// Returns one `(mu_plus, mu_minus)` matrix pair per length. Same gate as
/// [`count_signed_walks`].
pub fn count_all_signed_walks(
    g: &SignedGraph,
    kmax: usize,
) -> Result<Vec<(DMatrix<u64>, DMatrix<u64>)>> {
    let n = g.n();
    check_walk_gate(n, kmax)?;
    let mut per_k: Vec<(DMatrix<u64>, DMatrix<u64>)> = (0..=kmax)
        .map(|_| (DMatrix::zeros(n, n), DMatrix::zeros(n, n)))
        .collect();
    for start in 0..n {
        let mut stack = vec![(start, 0usize, 1i8)];
        while let Some((u, depth, sign)) = stack.pop() {
            let (plus, minus) = &mut per_k[depth];
            if sign > 0 {
                plus[(start, u)] += 1;
            } else {
                minus[(start, u)] += 1;
            }
            if depth == kmax {
                continue;
            }
            for (v, s) in g.neighbors(u) {
                stack.push((v, depth + 1, sign * s));
            }
        }
    }
    Ok(per_k)
}

fn check_walk_gate(n: usize, k: usize) -> Result<()> {
    if (n as f64).powi(k as i32) > WALK_GATE {
        return Err(Error::usage(format!(
            "walk enumeration gate exceeded: n^k = {n}^{k} > 1e7"
        )));
    }
    Ok(())
}

/// Exact integer `k`-th power of a square integer matrix.
pub fn matrix_power_i64(m: &DMatrix<i64>, k: usize) -> DMatrix<i64> {
    let n = m.nrows();
    let mut acc = DMatrix::<i64>::identity(n, n);
    for _ in 0..k {
        acc *= m;
    }
    acc
}

/// Matrix exponential by direct Taylor summation: Σ S^k / k!, truncated when
/// the max-norm of the added term drops below `tol`.
pub fn taylor_exp(s: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::usage(format!("taylor_exp tolerance {tol} must be > 0")));
    }
    if s.nrows() != s.ncols() {
        return Err(Error::data("taylor_exp requires a square matrix"));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("taylor_exp input has non-finite entries"));
    }
    let n = s.nrows();
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    // Terms of exp(S) eventually decay factorially; 10000 is far beyond any
    // k where S^k/k! could still exceed tol for inputs that fit in memory.
    for k in 1..=10_000 {
        term = (&term * s) / (k as f64);
        sum += &term;
        if term.amax() < tol {
            return Ok(sum);
        }
    }
    Err(Error::numerical(
        "taylor_exp did not converge within 10000 terms",
    ))
}

/// Frustration count of a fixed ±1 faction assignment: positive edges across
/// factions plus negative edges within a faction.
pub fn frustration_of(g: &SignedGraph, assignment: &[i8]) -> usize {
    g.edges()
        .filter(|&(i, j, s)| i32::from(s) != i32::from(assignment[i] * assignment[j]))
        .count()
}

/// Exhaustively minimizes frustration over all 2^(n−1) canonical bipartitions
/// (node 0 fixed to +1; the trivial one-faction split included).
///
/// Returns the exact minimum and every assignment attaining it. Gated to
/// n ≤ 20.
pub fn min_frustration_bipartitions(g: &SignedGraph) -> Result<FrustrationResult> {
    let n = g.n();
    if n > MAX_FRUSTRATION_NODES {
        return Err(Error::usage(format!(
            "frustration enumeration gate exceeded: n = {n} > {MAX_FRUSTRATION_NODES}"
        )));
    }
    let edges: Vec<(usize, usize, i8)> = g.edges().collect();
    let mut best = usize::MAX;
    let mut minimizers: Vec<Vec<i8>> = Vec::new();
    let mut assignment = vec![1i8; n];
    for mask in 0u64..(1u64 << (n - 1)) {
        for (v, slot) in assignment.iter_mut().enumerate().skip(1) {
            *slot = if mask >> (v - 1) & 1 == 1 { -1 } else { 1 };
        }
        let frustration = edges
            .iter()
            .filter(|&&(i, j, s)| s != assignment[i] * assignment[j])
            .count();
        if frustration < best {
            best = frustration;
            minimizers.clear();
        }
        if frustration == best {
            minimizers.push(assignment.clone());
        }
    }
    Ok(FrustrationResult {
        min_frustration: best,
        minimizers,
    })
}
