//! Dimensionality reduction and polarization scoring: classical (Torgerson)
//! metric MDS, optional SMACOF stress-majorization refinement, PCA-based
//! polarization scores, and Gaussian kernel density estimation.
//!
//! The pipeline embeds the squared chord metric d_θ = 2 − 2cos θ by default;
//! embedding the squared communicability distances M instead demonstrates
//! how the Γ_ii magnitudes bias distance-based faction detection.

use crate::eigen::eig_sym;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Relative tolerance for validating MDS inputs (symmetry, zero diagonal,
/// non-negativity).
const INPUT_TOL: f64 = 1e-9;

/// Default number of grid points for [`default_kde_grid`].
pub const KDE_GRID_POINTS: usize = 512;

/// Default kernel bandwidth for polarization densities.
pub const KDE_DEFAULT_BANDWIDTH: f64 = 0.05;

/// Default grid bounds: the normalized polarization range plus margin.
pub const KDE_GRID_RANGE: (f64, f64) = (-1.25, 1.25);

/// A low-dimensional point configuration produced by MDS.
///
/// `coords` is n×d with columns ordered by descending MDS eigenvalue and
/// column means zero. `mds_eigenvalues` is the full length-n spectrum of the
/// double-centered matrix B (descending); `negative_mass` is
/// Σ|negative eigenvalues| / Σ|eigenvalues|, a diagnostic for how
/// non-Euclidean the input was. `stress` is set by SMACOF refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: DMatrix<f64>,
    pub mds_eigenvalues: Vec<f64>,
    pub negative_mass: f64,
    pub stress: Option<f64>,
}

/// Per-node polarization scores in [−1, 1] (largest magnitude exactly 1
/// unless all scores are 0) plus the fraction of variance explained by the
/// scoring axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationScores {
    pub scores: Vec<f64>,
    pub explained_fraction: f64,
}

fn validate_squared_distance_matrix(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::data(format!(
            "distance matrix must be square and nonempty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("distance matrix has non-finite entries"));
    }
    let scale = m.amax().max(1.0);
    for i in 0..n {
        if m[(i, i)].abs() > INPUT_TOL * scale {
            return Err(Error::data(format!(
                "distance matrix diagonal entry {i} is {}, expected 0",
                m[(i, i)]
            )));
        }
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > INPUT_TOL * scale {
                return Err(Error::data(format!(
                    "distance matrix is not symmetric at ({i},{j})"
                )));
            }
            if m[(i, j)] < -INPUT_TOL * scale {
                return Err(Error::data(format!(
                    "distance matrix entry ({i},{j}) is negative: {}",
                    m[(i, j)]
                )));
            }
        }
    }
    Ok(scale)
}

/// Classical (Torgerson) metric MDS of a squared-distance matrix.
///
/// Double-centers M into B = −½·J·M·J, eigendecomposes B, and places the
/// points along the top `d` eigenvectors scaled by √max(λ, 0). Negative
/// eigenvalues are clipped to zero and reported through `negative_mass`
/// rather than treated as errors.
pub fn classical_mds(m: &DMatrix<f64>, d: usize) -> Result<Embedding> {
    let scale = validate_squared_distance_matrix(m)?;
    let n = m.nrows();
    if n < 2 {
        return Err(Error::usage("classical_mds requires at least 2 points"));
    }
    if d < 1 || d > n - 1 {
        return Err(Error::usage(format!(
            "embedding dimension {d} out of range 1..={}",
            n - 1
        )));
    }
    let _ = scale;
    // B = −½·J·M·J with J = I − 11ᵀ/n, computed via row/column mean removal.
    let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / n as f64).collect();
    let grand_mean = row_means.iter().sum::<f64>() / n as f64;
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = -0.5 * (m[(i, j)] - row_means[i] - row_means[j] + grand_mean);
        }
    }
    let decomp = eig_sym(&b)?;
    let total: f64 = decomp.eigenvalues.iter().map(|l| l.abs()).sum();
    let negative: f64 = decomp
        .eigenvalues
        .iter()
        .filter(|l| **l < 0.0)
        .map(|l| l.abs())
        .sum();
    let negative_mass = if total > 0.0 { negative / total } else { 0.0 };

    let mut coords = DMatrix::<f64>::zeros(n, d);
    for k in 0..d {
        let lambda = decomp.eigenvalues[k].max(0.0);
        let s = lambda.sqrt();
        for i in 0..n {
            coords[(i, k)] = decomp.eigenvectors[(i, k)] * s;
        }
    }
    center_columns(&mut coords);
    Ok(Embedding {
        coords,
        mds_eigenvalues: decomp.eigenvalues.iter().copied().collect(),
        negative_mass,
        stress: None,
    })
}

fn center_columns(coords: &mut DMatrix<f64>) {
    let n = coords.nrows();
    for k in 0..coords.ncols() {
        let mean = coords.column(k).sum() / n as f64;
        coords.column_mut(k).add_scalar_mut(-mean);
    }
}

/// Pairwise Euclidean distances between the rows of a coordinate matrix.
pub fn pairwise_distances(coords: &DMatrix<f64>) -> DMatrix<f64> {
    let n = coords.nrows();
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (coords.row(i) - coords.row(j)).norm();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    d
}

/// Raw stress Σ_{i<j} (D_ij − ‖y_i − y_j‖)² of configuration `coords`
/// against target distances `d_target`.
pub fn raw_stress(coords: &DMatrix<f64>, d_target: &DMatrix<f64>) -> f64 {
    let n = coords.nrows();
    let mut stress = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (coords.row(i) - coords.row(j)).norm();
            let diff = d_target[(i, j)] - dist;
            stress += diff * diff;
        }
    }
    stress
}

/// SMACOF stress majorization: iterates the Guttman transform from `init`
/// toward the target (non-squared) distances `d_target`.
///
/// Raw stress is monotonically non-increasing across iterations; the loop
/// stops when the relative stress decrease drops below `tol` or after
/// `max_iter` iterations. Zero-distance point pairs are skipped in the
/// update (the majorization weight is undefined there).
pub fn smacof_refine(
    init: &Embedding,
    d_target: &DMatrix<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<Embedding> {
    let n = init.coords.nrows();
    if d_target.nrows() != n || d_target.ncols() != n {
        return Err(Error::data(format!(
            "target distance matrix is {}x{}, expected {n}x{n}",
            d_target.nrows(),
            d_target.ncols()
        )));
    }
    // The validator accepts any symmetric non-negative hollow matrix; the
    // entries here are plain distances rather than squared ones.
    validate_squared_distance_matrix(d_target)?;
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::usage(format!("smacof tolerance {tol} must be >= 0")));
    }
    let mut coords = init.coords.clone();
    let mut stress = raw_stress(&coords, d_target);
    for _ in 0..max_iter {
        // Guttman transform: Y⁺ = (1/n)·B(Y)·Y.
        let mut bmat = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dist = (coords.row(i) - coords.row(j)).norm();
                if dist > 0.0 {
                    bmat[(i, j)] = -d_target[(i, j)] / dist;
                }
            }
        }
        for i in 0..n {
            let off: f64 = bmat.row(i).sum();
            bmat[(i, i)] = -off;
        }
        let next = (&bmat * &coords) / (n as f64);
        let next_stress = raw_stress(&next, d_target);
        let decrease = stress - next_stress;
        coords = next;
        let relative = if stress > 0.0 { decrease / stress } else { 0.0 };
        stress = next_stress;
        if relative < tol {
            break;
        }
    }
    center_columns(&mut coords);
    Ok(Embedding {
        coords,
        mds_eigenvalues: init.mds_eigenvalues.clone(),
        negative_mass: init.negative_mass,
        stress: Some(stress),
    })
}

/// Polarization scores: projections of the (centered) embedding onto its
/// first principal axis, normalized so the largest magnitude is 1, with the
/// axis sign fixed so node 0 scores non-negatively.
///
/// Zero-variance configurations yield all-zero scores and explained
/// fraction 0 rather than an error.
pub fn pca_polarization(e: &Embedding) -> Result<PolarizationScores> {
    let n = e.coords.nrows();
    let d = e.coords.ncols();
    if n < 2 {
        return Err(Error::usage("pca_polarization requires at least 2 points"));
    }
    let mut x = e.coords.clone();
    center_columns(&mut x);
    let cov = (x.transpose() * &x) / ((n - 1) as f64);
    let decomp = eig_sym(&cov)?;
    let clipped: Vec<f64> = decomp.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let trace: f64 = clipped.iter().sum();
    let tiny = 1e-12 * e.coords.amax().max(1.0);
    if trace <= tiny * tiny {
        return Ok(PolarizationScores {
            scores: vec![0.0; n],
            explained_fraction: 0.0,
        });
    }
    let axis = decomp.eigenvectors.column(0);
    let mut scores: Vec<f64> = (0..n)
        .map(|i| (0..d).map(|k| x[(i, k)] * axis[k]).sum())
        .collect();
    let maxabs = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if maxabs <= tiny {
        return Ok(PolarizationScores {
            scores: vec![0.0; n],
            explained_fraction: 0.0,
        });
    }
    for s in &mut scores {
        *s /= maxabs;
    }
    if let Some(first) = scores.iter().copied().find(|s| s.abs() > 1e-12) {
        if first < 0.0 {
            for s in &mut scores {
                *s = -*s;
            }
        }
    }
    Ok(PolarizationScores {
        scores,
        explained_fraction: clipped[0] / trace,
    })
}

/// Gaussian kernel density estimate of `scores` evaluated at `grid`:
/// f(x) = (1/(n·h·√(2π))) Σ_i exp(−(x − s_i)²/(2h²)).
pub fn gaussian_kde(scores: &[f64], bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::usage("gaussian_kde requires at least one score"));
    }
    if bandwidth.is_nan() || bandwidth <= 0.0 {
        return Err(Error::usage(format!(
            "kde bandwidth {bandwidth} must be > 0"
        )));
    }
    let norm = 1.0 / (scores.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&x| {
            norm * scores
                .iter()
                .map(|&s| (-(x - s) * (x - s) / (2.0 * bandwidth * bandwidth)).exp())
                .sum::<f64>()
        })
        .collect())
}

/// The default KDE evaluation grid: 512 evenly spaced points over
/// [−1.25, 1.25].
pub fn default_kde_grid() -> Vec<f64> {
    let (lo, hi) = KDE_GRID_RANGE;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    (0..KDE_GRID_POINTS).map(|i| lo + step * i as f64).collect()
}
