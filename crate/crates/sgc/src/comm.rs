//! The spectral core: communicability Γ = exp(A) and the geometry it
//! induces — squared distances M, angles θ, cosines ρ, the chord metric d_θ,
//! hyperspherical position vectors, closed forms for balanced complete
//! graphs, and the matrix-exponential balance criterion.
//!
//! Γ_ij is a walk generating function: it counts positive walks minus
//! negative walks from i to j, weighting length-k walks by 1/k!. Positive
//! Γ_ij marks effective allies, negative Γ_ij effective enemies. Writing
//! Γ = XᵀX with X = exp(Λ/2)Uᵀ places every node at a point x_i with
//! x_i·x_j = Γ_ij, so ξ_ij = √(Γ_ii + Γ_jj − 2Γ_ij) is a Euclidean distance
//! and θ_ij = arccos(Γ_ij / √(Γ_ii Γ_jj)) the angle between nodes.

use crate::eigen::{eig_sym, EigenDecomposition};
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use nalgebra::{DMatrix, DVector};

/// Default relative tolerance for [`balance_via_exponential`].
pub const DEFAULT_BALANCE_TOL: f64 = 1e-8;

/// Eigenvalue gaps below this mark the spectrum as degenerate (position
/// vectors become basis-dependent; Γ and everything derived from it do not).
pub const DEGENERACY_GAP: f64 = 1e-9;

/// Cosine clamp excesses above this indicate numerical trouble and are
/// surfaced as warnings by the pipeline.
pub const CLAMP_WARN: f64 = 1e-9;

/// All geometry matrices derived from one communicability matrix.
///
/// - `gamma`: Γ = exp(A), symmetric positive definite;
/// - `edm`: M = s1ᵀ + 1sᵀ − 2Γ with s = diag(Γ), the matrix of squared
///   communicability distances ξ², zero diagonal;
/// - `rho`: cosines Γ_ij/√(Γ_ii Γ_jj), a correlation matrix;
/// - `theta`: angles arccos(ρ) in [0, π];
/// - `d_theta`: 2 − 2ρ, the squared Euclidean distance between
///   unit-normalized position vectors, in [0, 4];
/// - `spectrum`: eigenvalues of A, non-increasing;
/// - `clamp_excess`: largest amount by which a raw cosine exceeded [−1, 1]
///   before clamping (0 when no clamping occurred).
#[derive(Debug, Clone, PartialEq)]
pub struct CommunicabilitySet {
    pub gamma: DMatrix<f64>,
    pub edm: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    pub rho: DMatrix<f64>,
    pub d_theta: DMatrix<f64>,
    pub spectrum: DVector<f64>,
    pub clamp_excess: f64,
}

impl CommunicabilitySet {
    /// Communicability distances ξ_ij = √(M_ij), entrywise.
    pub fn xi(&self) -> DMatrix<f64> {
        self.edm.map(|m| m.max(0.0).sqrt())
    }

    /// True when the adjacency spectrum has an eigenvalue gap below
    /// [`DEGENERACY_GAP`].
    pub fn degenerate_spectrum(&self) -> bool {
        let n = self.spectrum.len();
        (1..n).any(|k| (self.spectrum[k - 1] - self.spectrum[k]).abs() < DEGENERACY_GAP)
    }
}

/// Hyperspherical position vectors: column i of `coords` is
/// x_i = (e^{λ_1/2}ψ_1(i), …, e^{λ_n/2}ψ_n(i))ᵀ, so X = exp(Λ/2)·Uᵀ and
/// XᵀX = Γ.
///
/// `degenerate` is true when some eigenvalue gap is below
/// [`DEGENERACY_GAP`]; in that case the individual coordinates depend on the
/// solver's choice of basis inside the degenerate eigenspaces (inner
/// products, and hence all of [`CommunicabilitySet`], do not).
#[derive(Debug, Clone, PartialEq)]
pub struct PositionVectors {
    pub coords: DMatrix<f64>,
    pub degenerate: bool,
}

/// Closed-form reference values for a balanced complete graph K_n (any
/// balanced split; the values depend only on n and on whether the pair is
/// within one faction or across factions).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteClosedForms {
    pub n: usize,
    /// Γ_ii = (e^{n−1} + (n−1)e^{−1}) / n
    pub gamma_diag: f64,
    /// Γ_ij for a same-faction pair: (e^n − 1)/(n e)
    pub gamma_same: f64,
    /// Γ_ij for a cross-faction pair: −(e^n − 1)/(n e)
    pub gamma_cross: f64,
    /// cos θ_ij within a faction: (e^n − 1)/(e^n + n − 1)
    pub cos_same: f64,
    /// cos θ_ij across factions: −(e^n − 1)/(e^n + n − 1)
    pub cos_cross: f64,
    /// ξ_ij across factions: √(2(2e^n + n − 2)/(n e))
    pub xi_cross: f64,
}

/// The matrix exponential of a symmetric matrix, computed spectrally as
/// U·exp(Λ)·Uᵀ and re-symmetrized.
pub fn matrix_exponential(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = eig_sym(s)?;
    Ok(symmetrize(e.spectral_map(f64::exp)))
}

/// The communicability matrix Γ = exp(A) of a signed graph.
pub fn communicability_matrix(g: &SignedGraph) -> Result<DMatrix<f64>> {
    matrix_exponential(&g.adjacency())
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Computes Γ and every geometry matrix derived from it in one pass.
///
/// Cosine arguments are clamped to [−1, 1] before arccos; the largest clamp
/// excess is recorded rather than failing, since exact-arithmetic cosines of
/// a Gram matrix cannot leave [−1, 1].
pub fn communicability_set(g: &SignedGraph) -> Result<CommunicabilitySet> {
    let decomp = eig_sym(&g.adjacency())?;
    let gamma = symmetrize(decomp.spectral_map(f64::exp));
    geometry_from_gamma(gamma, decomp.eigenvalues)
}

/// Derives all geometry matrices (EDM, θ, ρ, d_θ) from an explicit
/// communicability matrix. Exposed so geometry can be recomputed from a
/// reconstructed Γ (e.g. after eigenbasis changes) and compared: everything
/// here is a function of Γ alone.
pub fn geometry_from_gamma(
    gamma: DMatrix<f64>,
    spectrum: DVector<f64>,
) -> Result<CommunicabilitySet> {
    let n = gamma.nrows();
    for i in 0..n {
        if gamma[(i, i)].is_nan() || gamma[(i, i)] <= 0.0 {
            return Err(Error::numerical(format!(
                "communicability diagonal entry {i} is {} (must be positive)",
                gamma[(i, i)]
            )));
        }
    }
    let mut edm = DMatrix::<f64>::zeros(n, n);
    let mut rho = DMatrix::<f64>::identity(n, n);
    let mut theta = DMatrix::<f64>::zeros(n, n);
    let mut d_theta = DMatrix::<f64>::zeros(n, n);
    let mut clamp_excess = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let m_ij = gamma[(i, i)] + gamma[(j, j)] - 2.0 * gamma[(i, j)];
            let raw = gamma[(i, j)] / (gamma[(i, i)] * gamma[(j, j)]).sqrt();
            clamp_excess = clamp_excess.max(raw.abs() - 1.0).max(0.0);
            let cos = raw.clamp(-1.0, 1.0);
            edm[(i, j)] = m_ij;
            edm[(j, i)] = m_ij;
            rho[(i, j)] = cos;
            rho[(j, i)] = cos;
            let angle = cos.acos();
            theta[(i, j)] = angle;
            theta[(j, i)] = angle;
            let chord = 2.0 - 2.0 * cos;
            d_theta[(i, j)] = chord;
            d_theta[(j, i)] = chord;
        }
    }
    Ok(CommunicabilitySet {
        gamma,
        edm,
        theta,
        rho,
        d_theta,
        spectrum,
        clamp_excess,
    })
}

/// Least-squares circumcenter of a point set given as matrix columns.
///
/// Solves the linear system 2(x_i − x_0)ᵀc = ‖x_i‖² − ‖x_0‖² in the
/// least-squares sense and returns the center together with every point's
/// distance to it. For a spherical distance matrix the distances agree.
pub fn circumcenter(points: &DMatrix<f64>) -> Result<(DVector<f64>, Vec<f64>)> {
    let dim = points.nrows();
    let m = points.ncols();
    if m < 2 {
        return Err(Error::usage("circumcenter requires at least 2 points"));
    }
    let x0 = points.column(0);
    let norm0 = x0.norm_squared();
    let mut system = DMatrix::<f64>::zeros(m - 1, dim);
    let mut rhs = DVector::<f64>::zeros(m - 1);
    for i in 1..m {
        let xi = points.column(i);
        for c in 0..dim {
            system[(i - 1, c)] = 2.0 * (xi[c] - x0[c]);
        }
        rhs[i - 1] = xi.norm_squared() - norm0;
    }
    let svd = system.svd(true, true);
    let center = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::numerical(format!("circumcenter solve failed: {e}")))?;
    let radii = (0..m)
        .map(|i| (points.column(i) - &center).norm())
        .collect();
    Ok((center, radii))
}

/// Position vectors X = exp(Λ/2)·Uᵀ; column i is node i's point on the
/// communicability hypersphere.
pub fn position_vectors(g: &SignedGraph) -> Result<PositionVectors> {
    let decomp = eig_sym(&g.adjacency())?;
    let coords = position_coords(&decomp);
    let degenerate = decomp.min_eigenvalue_gap() < DEGENERACY_GAP;
    Ok(PositionVectors { coords, degenerate })
}

/// X = exp(Λ/2)·Uᵀ for an existing decomposition.
pub fn position_coords(decomp: &EigenDecomposition) -> DMatrix<f64> {
    let n = decomp.eigenvalues.len();
    let mut x = decomp.eigenvectors.transpose();
    for k in 0..n {
        let scale = (decomp.eigenvalues[k] / 2.0).exp();
        x.row_mut(k).scale_mut(scale);
    }
    x
}

/// Matrix-exponential balance test: the graph is balanced iff
/// |exp(A)| = exp(|A|) entrywise (compared within `tol` relative to the
/// largest entry of exp(|A|)).
pub fn balance_via_exponential(g: &SignedGraph, tol: f64) -> Result<bool> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::usage(format!("balance tolerance {tol} must be > 0")));
    }
    let gamma_signed = communicability_matrix(g)?;
    let gamma_underlying = communicability_matrix(&g.underlying())?;
    let scale = gamma_underlying.amax();
    let worst = (0..g.n())
        .flat_map(|i| (0..g.n()).map(move |j| (i, j)))
        .map(|(i, j)| (gamma_signed[(i, j)].abs() - gamma_underlying[(i, j)]).abs())
        .fold(0.0f64, f64::max);
    Ok(worst <= tol * scale)
}

/// Evaluates the balanced-complete-graph closed forms for K_n.
pub fn complete_closed_forms(n: usize) -> Result<CompleteClosedForms> {
    if n < 2 {
        return Err(Error::usage("complete_closed_forms requires n >= 2"));
    }
    let nf = n as f64;
    let e = std::f64::consts::E;
    let en = nf.exp();
    let gamma_same = (en - 1.0) / (nf * e);
    let cos_same = (en - 1.0) / (en + nf - 1.0);
    Ok(CompleteClosedForms {
        n,
        gamma_diag: ((nf - 1.0).exp() + (nf - 1.0) / e) / nf,
        gamma_same,
        gamma_cross: -gamma_same,
        cos_same,
        cos_cross: -cos_same,
        xi_cross: (2.0 * (2.0 * en + nf - 2.0) / (nf * e)).sqrt(),
    })
}
