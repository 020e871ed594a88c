//! End-to-end analysis: angle (or distance) matrix → low-dimensional
//! embedding → clustering, plus balance detection, polarization scoring,
//! and ingestion of vote matrices into signed graphs.
//!
//! The pipeline is deterministic given (input, seed); a report serialized
//! twice from the same run inputs is byte-identical (timings are recorded
//! only on request precisely to keep that property by default).

use crate::cluster::{
    agglomerative, newick, select_cut_with_curve, select_k_with_curve, ClusterLabels,
    Dendrogram, Linkage, Merge,
};
use crate::comm::{balance_via_exponential, communicability_set, CLAMP_WARN, DEFAULT_BALANCE_TOL};
use crate::embed::{classical_mds, pairwise_distances, pca_polarization, smacof_refine};
use crate::error::{Error, Result};
use crate::graph::{detect_balance, SignedGraph};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

/// Largest k tried by default when selecting the cluster count (capped by
/// n − 1).
pub const DEFAULT_KMAX_CAP: usize = 10;

/// Iteration cap for the optional stress-majorization refinement.
pub const DEFAULT_SMACOF_MAX_ITER: usize = 300;

/// Relative stress-decrease stopping threshold for the refinement.
pub const DEFAULT_SMACOF_TOL: f64 = 1e-10;

/// Which node-pair geometry drives embedding and clustering.
///
/// `Angle` embeds d_θ = 2 − 2cosθ (the squared chord distance between
/// unit-normalized position vectors); `Distance` embeds the squared
/// communicability distance ξ². The angle is the default because raw
/// distances are biased by self-communicability differences: a weakly
/// connected node is far from everything in ξ even when it clearly sides
/// with one faction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Angle,
    Distance,
}

/// Embedding method: classical (Torgerson) MDS, optionally refined by
/// SMACOF stress majorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Embedder {
    #[serde(rename = "classical")]
    Classical,
    #[serde(rename = "classical+smacof")]
    ClassicalSmacof,
}

/// Clustering route: silhouette-selected k-means on embedding coordinates,
/// Ward linkage on embedding coordinates, or average linkage directly on
/// the metric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clusterer {
    KmeansSilhouette,
    Ward,
    Average,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angle" => Ok(Metric::Angle),
            "distance" => Ok(Metric::Distance),
            other => Err(Error::usage(format!(
                "unknown metric '{other}' (expected 'angle' or 'distance')"
            ))),
        }
    }
}

impl std::str::FromStr for Embedder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Embedder::Classical),
            "classical+smacof" => Ok(Embedder::ClassicalSmacof),
            other => Err(Error::usage(format!(
                "unknown embedder '{other}' (expected 'classical' or 'classical+smacof')"
            ))),
        }
    }
}

impl std::str::FromStr for Clusterer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" | "kmeans_silhouette" => Ok(Clusterer::KmeansSilhouette),
            "ward" => Ok(Clusterer::Ward),
            "average" => Ok(Clusterer::Average),
            other => Err(Error::usage(format!(
                "unknown clusterer '{other}' (expected 'kmeans', 'ward', or 'average')"
            ))),
        }
    }
}

/// Full configuration of one analysis run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub metric: Metric,
    pub embed_dim: usize,
    pub embedder: Embedder,
    pub clusterer: Clusterer,
    pub kmin: usize,
    /// `None` resolves to min(10, n − 1) once the graph size is known.
    pub kmax: Option<usize>,
    pub seed: u64,
    pub balance_tol: f64,
    /// Record wall-clock stage timings in the report. Off by default so
    /// repeated runs serialize byte-identically.
    pub record_timings: bool,
}

impl PipelineConfig {
    pub fn new(seed: u64) -> Self {
        PipelineConfig {
            metric: Metric::Angle,
            embed_dim: 2,
            embedder: Embedder::Classical,
            clusterer: Clusterer::KmeansSilhouette,
            kmin: 2,
            kmax: None,
            seed,
            balance_tol: DEFAULT_BALANCE_TOL,
            record_timings: false,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::new(0)
    }
}

/// Configuration echoed into the report, with `kmax` resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub metric: Metric,
    pub embed_dim: usize,
    pub embedder: Embedder,
    pub clusterer: Clusterer,
    pub kmin: usize,
    pub kmax: usize,
    pub seed: u64,
    pub balance_tol: f64,
}

/// Balance verdict: the BFS structural test plus the matrix-exponential
/// criterion, with the two-coloring (when balanced) or a violating cycle
/// (when not), expressed in node labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSummary {
    pub balanced: bool,
    pub indicator: Option<Vec<i8>>,
    pub frustrated_cycle: Option<Vec<String>>,
    pub exponential_test_agrees: bool,
}

/// Communicability health summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub n: usize,
    pub edges: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub degenerate_spectrum: bool,
    pub cosine_clamp_excess: f64,
}

/// Embedding coordinates (rows = nodes, in label order) with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSummary {
    pub nodes: Vec<String>,
    pub dim: usize,
    pub coords: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub negative_mass: f64,
    pub stress: Option<f64>,
}

/// One point of the silhouette-by-k model-selection curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub score: f64,
}

/// The chosen flat clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsSummary {
    pub method: Clusterer,
    pub k: usize,
    pub assignments: Vec<usize>,
    pub mean_silhouette: Option<f64>,
    pub inertia: Option<f64>,
}

/// One merge of the hierarchical tree (ids < n are leaves).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// JSON form of the dendrogram produced by the hierarchical routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendrogramSummary {
    pub linkage: String,
    pub merges: Vec<MergeRecord>,
}

/// Polarization scores (normalized first principal component, in [−1, 1])
/// and the variance fraction that component explains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationSummary {
    pub scores: Vec<f64>,
    pub explained_fraction: f64,
}

/// Complete result of one analysis run. Serializes with a stable key set:
/// `config`, `balance`, `gamma_summary`, `embedding`, `silhouette_curve`,
/// `labels`, `dendrogram`, `polarization`, `warnings`, `timings_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: ConfigEcho,
    pub balance: BalanceSummary,
    pub gamma_summary: GammaSummary,
    pub embedding: EmbeddingSummary,
    pub silhouette_curve: Vec<CurvePoint>,
    pub labels: LabelsSummary,
    pub dendrogram: Option<DendrogramSummary>,
    pub polarization: Option<PolarizationSummary>,
    pub warnings: Vec<String>,
    pub timings_ms: BTreeMap<String, u64>,
}

impl AnalysisReport {
    /// Reconstructs the dendrogram structure from its report form.
    pub fn dendrogram_tree(&self) -> Option<Dendrogram> {
        let summary = self.dendrogram.as_ref()?;
        let linkage = match summary.linkage.as_str() {
            "ward" => Linkage::Ward,
            _ => Linkage::Average,
        };
        Some(Dendrogram {
            n_leaves: self.gamma_summary.n,
            linkage,
            merges: summary
                .merges
                .iter()
                .map(|m| Merge {
                    left: m.left,
                    right: m.right,
                    height: m.height,
                    size: m.size,
                })
                .collect(),
        })
    }

    /// Newick serialization of the dendrogram, if the run produced one.
    pub fn dendrogram_newick(&self) -> Option<String> {
        let tree = self.dendrogram_tree()?;
        newick(&tree, &self.embedding.nodes).ok()
    }
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// The squared-distance matrix the given metric embeds: d_θ for angles,
/// ξ² (the EDM) for distances.
pub fn metric_matrix(comm: &crate::comm::CommunicabilitySet, metric: Metric) -> DMatrix<f64> {
    match metric {
        Metric::Angle => comm.d_theta.clone(),
        Metric::Distance => comm.edm.clone(),
    }
}

/// Embeds a connected signed graph by the configured metric and embedder.
/// This is stage 2 of [`analyze`] as a standalone operation (it is fully
/// deterministic — no seed involved).
pub fn embed_graph(
    g: &SignedGraph,
    metric: Metric,
    dim: usize,
    embedder: Embedder,
) -> Result<crate::embed::Embedding> {
    if !g.is_connected() {
        return Err(Error::data(format!(
            "embedding requires a connected graph; this one has {} components",
            g.components().len()
        )));
    }
    let comm = communicability_set(g)?;
    let squared = metric_matrix(&comm, metric);
    let mut embedding = classical_mds(&squared, dim)?;
    if embedder == Embedder::ClassicalSmacof {
        let target = squared.map(|v| v.max(0.0).sqrt());
        embedding = smacof_refine(
            &embedding,
            &target,
            DEFAULT_SMACOF_MAX_ITER,
            DEFAULT_SMACOF_TOL,
        )?;
    }
    Ok(embedding)
}

/// Runs the full framework on a connected signed graph:
///
/// 1. communicability geometry (Γ and the chosen metric matrix),
/// 2. classical MDS embedding (optionally SMACOF-refined),
/// 3. cluster-count selection and clustering by the configured route,
///
/// plus balance detection and polarization scoring. Numerical-health
/// conditions (cosine clamps, discarded negative MDS mass, disagreeing
/// balance tests, degenerate spectra) become warnings, not failures.
pub fn analyze(g: &SignedGraph, cfg: &PipelineConfig) -> Result<AnalysisReport> {
    let n = g.n();
    if n < 3 {
        return Err(Error::data(format!(
            "analysis requires at least 3 nodes to select a clustering, got {n}"
        )));
    }
    if !g.is_connected() {
        return Err(Error::data(format!(
            "analysis requires a connected graph; this one has {} components",
            g.components().len()
        )));
    }
    if cfg.embed_dim < 1 || cfg.embed_dim > n - 1 {
        return Err(Error::usage(format!(
            "embed_dim = {} out of range 1..={}",
            cfg.embed_dim,
            n - 1
        )));
    }
    let kmax = cfg.kmax.unwrap_or_else(|| DEFAULT_KMAX_CAP.min(n - 1));
    if !(2 <= cfg.kmin && cfg.kmin <= kmax && kmax < n) {
        return Err(Error::usage(format!(
            "k range {}..={} invalid: need 2 <= kmin <= kmax <= n-1 = {}",
            cfg.kmin,
            kmax,
            n - 1
        )));
    }
    let mut warnings = Vec::new();
    let mut timings = BTreeMap::new();
    let clock = Instant::now();

    // Stage 1: communicability geometry and balance.
    let comm = communicability_set(g)?;
    let balance = detect_balance(g)?;
    let exp_balanced = balance_via_exponential(g, cfg.balance_tol)?;
    let exponential_test_agrees = exp_balanced == balance.balanced;
    if !exponential_test_agrees {
        warnings.push(format!(
            "balance tests disagree: structural test says {}, exponential test says {}",
            balance.balanced, exp_balanced
        ));
    }
    if comm.clamp_excess > CLAMP_WARN {
        warnings.push(format!(
            "cosine arguments exceeded [-1, 1] by up to {:.3e} before clamping",
            comm.clamp_excess
        ));
    }
    if comm.degenerate_spectrum() {
        warnings.push(
            "adjacency spectrum has (near-)repeated eigenvalues; position vectors are \
             basis-dependent but all reported geometry depends only on exp(A)"
                .to_string(),
        );
    }
    if cfg.record_timings {
        timings.insert("communicability".to_string(), clock.elapsed().as_millis() as u64);
    }

    // Stage 2: embedding of the chosen squared-distance matrix.
    let stage = Instant::now();
    let squared = metric_matrix(&comm, cfg.metric);
    let mut embedding = classical_mds(&squared, cfg.embed_dim)?;
    if cfg.embedder == Embedder::ClassicalSmacof {
        let target = squared.map(|v| v.max(0.0).sqrt());
        embedding = smacof_refine(
            &embedding,
            &target,
            DEFAULT_SMACOF_MAX_ITER,
            DEFAULT_SMACOF_TOL,
        )?;
    }
    if embedding.negative_mass > 1e-8 {
        warnings.push(format!(
            "MDS discarded negative eigenvalue mass {:.3e}; the metric matrix is not \
             exactly Euclidean at working precision",
            embedding.negative_mass
        ));
    }
    if cfg.record_timings {
        timings.insert("embedding".to_string(), stage.elapsed().as_millis() as u64);
    }

    // Stage 3: cluster-count selection and clustering.
    let stage = Instant::now();
    let (chosen, curve, dendrogram) = match cfg.clusterer {
        Clusterer::KmeansSilhouette => {
            let (labels, curve) =
                select_k_with_curve(&embedding.coords, cfg.kmin, kmax, cfg.seed)?;
            (labels, curve, None)
        }
        Clusterer::Ward => {
            let dist = pairwise_distances(&embedding.coords);
            let tree = agglomerative(&dist, Linkage::Ward)?;
            let (labels, curve) = select_cut_with_curve(&tree, &dist, cfg.kmin, kmax)?;
            (labels, curve, Some(tree))
        }
        Clusterer::Average => {
            // The "cluster the metric matrix directly" route: dissimilarity
            // is the angle θ itself (or the distance ξ), not its square.
            let dissim = match cfg.metric {
                Metric::Angle => comm.theta.clone(),
                Metric::Distance => comm.edm.map(|v| v.max(0.0).sqrt()),
            };
            let tree = agglomerative(&dissim, Linkage::Average)?;
            let (labels, curve) = select_cut_with_curve(&tree, &dissim, cfg.kmin, kmax)?;
            (labels, curve, Some(tree))
        }
    };
    if cfg.record_timings {
        timings.insert("clustering".to_string(), stage.elapsed().as_millis() as u64);
    }

    // Polarization from the embedding's principal axis.
    let stage = Instant::now();
    let polarization = pca_polarization(&embedding)?;
    if cfg.record_timings {
        timings.insert("polarization".to_string(), stage.elapsed().as_millis() as u64);
        timings.insert("total".to_string(), clock.elapsed().as_millis() as u64);
    }

    Ok(AnalysisReport {
        config: ConfigEcho {
            metric: cfg.metric,
            embed_dim: cfg.embed_dim,
            embedder: cfg.embedder,
            clusterer: cfg.clusterer,
            kmin: cfg.kmin,
            kmax,
            seed: cfg.seed,
            balance_tol: cfg.balance_tol,
        },
        balance: BalanceSummary {
            balanced: balance.balanced,
            indicator: balance.indicator.map(|d| d.signs().to_vec()),
            frustrated_cycle: balance
                .witness
                .map(|cycle| cycle.iter().map(|&i| g.label(i).to_string()).collect()),
            exponential_test_agrees,
        },
        gamma_summary: GammaSummary {
            n,
            edges: g.edge_count(),
            gamma_min: comm.gamma.min(),
            gamma_max: comm.gamma.max(),
            lambda_max: comm.spectrum[0],
            lambda_min: comm.spectrum[n - 1],
            degenerate_spectrum: comm.degenerate_spectrum(),
            cosine_clamp_excess: comm.clamp_excess,
        },
        embedding: EmbeddingSummary {
            nodes: g.labels().to_vec(),
            dim: cfg.embed_dim,
            coords: matrix_to_rows(&embedding.coords),
            eigenvalues: embedding.mds_eigenvalues.clone(),
            negative_mass: embedding.negative_mass,
            stress: embedding.stress,
        },
        silhouette_curve: curve
            .into_iter()
            .map(|(k, score)| CurvePoint { k, score })
            .collect(),
        labels: summarize_labels(cfg.clusterer, &chosen),
        dendrogram: dendrogram.map(|tree| DendrogramSummary {
            linkage: tree.linkage.name().to_string(),
            merges: tree
                .merges
                .iter()
                .map(|m| MergeRecord {
                    left: m.left,
                    right: m.right,
                    height: m.height,
                    size: m.size,
                })
                .collect(),
        }),
        polarization: Some(PolarizationSummary {
            scores: polarization.scores.clone(),
            explained_fraction: polarization.explained_fraction,
        }),
        warnings,
        timings_ms: timings,
    })
}

fn summarize_labels(method: Clusterer, chosen: &ClusterLabels) -> LabelsSummary {
    LabelsSummary {
        method,
        k: chosen.k,
        assignments: chosen.labels.clone(),
        mean_silhouette: chosen.mean_silhouette,
        inertia: chosen.inertia,
    }
}

/// True when two label vectors describe the same partition of `0..n`
/// (cluster numbering ignored).
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    canonical_partition(a) == canonical_partition(b)
}

fn canonical_partition(labels: &[usize]) -> Vec<usize> {
    let mut remap = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = remap.len();
            *remap.entry(l).or_insert(next)
        })
        .collect()
}

/// A voters × ballots matrix of votes: +1 yes, −1 no, 0 absent/abstain.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMatrix {
    voters: Vec<String>,
    ballots: Vec<String>,
    votes: DMatrix<i8>,
}

/// Denominator convention for vote similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteDenominator {
    /// Divide (agreements − disagreements) by the total ballot count;
    /// abstentions dilute the similarity.
    AllBallots,
    /// Divide by the number of ballots both voters actually voted on.
    BothVoted,
}

impl VoteMatrix {
    /// Validates and wraps a vote matrix: at least 2 voters and 1 ballot,
    /// entries in {−1, 0, +1}, distinct voter labels.
    pub fn new(voters: Vec<String>, ballots: Vec<String>, votes: DMatrix<i8>) -> Result<Self> {
        if voters.len() < 2 {
            return Err(Error::data("vote matrix needs at least 2 voters"));
        }
        if ballots.is_empty() {
            return Err(Error::data("vote matrix needs at least 1 ballot"));
        }
        if votes.nrows() != voters.len() || votes.ncols() != ballots.len() {
            return Err(Error::data(format!(
                "vote matrix is {}x{} but there are {} voters and {} ballots",
                votes.nrows(),
                votes.ncols(),
                voters.len(),
                ballots.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for v in &voters {
            if !seen.insert(v.as_str()) {
                return Err(Error::data(format!("duplicate voter label '{v}'")));
            }
        }
        if votes.iter().any(|&v| !(-1..=1).contains(&v)) {
            return Err(Error::data("vote entries must be -1, 0, or +1"));
        }
        Ok(VoteMatrix {
            voters,
            ballots,
            votes,
        })
    }

    pub fn voters(&self) -> &[String] {
        &self.voters
    }

    pub fn ballots(&self) -> &[String] {
        &self.ballots
    }

    pub fn vote(&self, voter: usize, ballot: usize) -> i8 {
        self.votes[(voter, ballot)]
    }
}

/// Builds a signed graph from voting records: the similarity of two voters
/// is (agreements − disagreements) divided by the ballot count for the
/// chosen denominator, and an edge with the similarity's sign is kept iff
/// |s| exceeds `threshold`. Voters with no recorded votes are rejected;
/// the resulting graph keeps every voter as a node and may be disconnected
/// (callers decide whether that matters).
pub fn ingest_vote_matrix_with(
    v: &VoteMatrix,
    threshold: f64,
    denominator: VoteDenominator,
) -> Result<SignedGraph> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::usage(format!(
            "threshold {threshold} out of range [0, 1)"
        )));
    }
    let n = v.voters.len();
    let b = v.ballots.len();
    for i in 0..n {
        if (0..b).all(|j| v.votes[(i, j)] == 0) {
            return Err(Error::data(format!(
                "voter '{}' has no recorded votes",
                v.voters[i]
            )));
        }
    }
    let mut adj = DMatrix::<i8>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut agree = 0i64;
            let mut disagree = 0i64;
            let mut both = 0i64;
            for ballot in 0..b {
                let (vi, vj) = (v.votes[(i, ballot)], v.votes[(j, ballot)]);
                if vi != 0 && vj != 0 {
                    both += 1;
                    if vi == vj {
                        agree += 1;
                    } else {
                        disagree += 1;
                    }
                }
            }
            let denom = match denominator {
                VoteDenominator::AllBallots => b as i64,
                VoteDenominator::BothVoted => both,
            };
            if denom == 0 {
                continue; // no shared ballots: no evidence either way
            }
            let s = (agree - disagree) as f64 / denom as f64;
            if s.abs() > threshold {
                let sign = if s > 0.0 { 1 } else { -1 };
                adj[(i, j)] = sign;
                adj[(j, i)] = sign;
            }
        }
    }
    SignedGraph::from_adjacency(v.voters.clone(), adj)
}

/// [`ingest_vote_matrix_with`] using the all-ballots denominator.
pub fn ingest_vote_matrix(v: &VoteMatrix, threshold: f64) -> Result<SignedGraph> {
    ingest_vote_matrix_with(v, threshold, VoteDenominator::AllBallots)
}
