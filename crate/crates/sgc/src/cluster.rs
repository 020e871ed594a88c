//! Clustering: k-means++ with silhouette-driven model selection, and
//! agglomerative hierarchical clustering (Ward and average linkage) with
//! dendrogram cutting and Newick export.
//!
//! Everything is deterministic given (input, seed): k-means restarts use
//! independent counter-derived RNG streams and an order-independent
//! argmin reduction; agglomerative merges break distance ties by the
//! lexicographically smallest cluster-id pair.

use crate::embed::pairwise_distances;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Default number of k-means restarts when a caller does not choose one.
pub const DEFAULT_RESTARTS: usize = 20;

/// Maximum Lloyd iterations per k-means run.
const MAX_LLOYD_ITER: usize = 300;

/// Odd multiplier decorrelating per-restart RNG streams from a single seed.
const RESTART_STREAM_STEP: u64 = 0x9E37_79B9_7F4A_7C15;

/// A flat clustering: cluster index per node, cluster count, and optional
/// quality measures (inertia from k-means, mean silhouette when evaluated).
///
/// Labels are canonicalized by first occurrence: node 0's cluster is 0, the
/// next new cluster encountered is 1, and so on. Every index in `0..k` is
/// used by at least one node.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLabels {
    pub labels: Vec<usize>,
    pub k: usize,
    pub inertia: Option<f64>,
    pub mean_silhouette: Option<f64>,
}

/// Linkage rule for agglomerative clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    /// Ward's minimum-variance criterion (Lance–Williams on squared
    /// dissimilarities; merge heights reported in distance units).
    Ward,
    /// Unweighted average linkage (UPGMA).
    Average,
}

impl Linkage {
    pub fn name(self) -> &'static str {
        match self {
            Linkage::Ward => "ward",
            Linkage::Average => "average",
        }
    }
}

/// One agglomerative merge: the two cluster ids joined, the height (linkage
/// dissimilarity) at which they join, and the size of the resulting cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// A full merge tree over `n_leaves` observations: leaves carry ids
/// `0..n_leaves`, the merge recorded at position `m` creates cluster id
/// `n_leaves + m`. Heights are non-decreasing along the sequence for both
/// supported linkages.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
}

/// Relabels cluster indices by order of first occurrence (node 0 → 0, …).
fn canonicalize(labels: &mut [usize], k: usize) {
    let mut remap = vec![usize::MAX; k];
    let mut next = 0;
    for l in labels.iter_mut() {
        if remap[*l] == usize::MAX {
            remap[*l] = next;
            next += 1;
        }
        *l = remap[*l];
    }
}

fn validate_coords(coords: &DMatrix<f64>) -> Result<()> {
    if coords.nrows() == 0 || coords.ncols() == 0 {
        return Err(Error::data("coordinate matrix must be nonempty"));
    }
    if coords.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("coordinate matrix has non-finite entries"));
    }
    Ok(())
}

/// K-means clustering of the rows of `coords` into `k` clusters.
///
/// Each restart draws k-means++ initial centers from its own seeded RNG
/// stream and runs Lloyd iterations to an assignment fixed point (at most
/// 300). Empty clusters are repaired by reseeding from the point farthest
/// from its centroid. The best of `restarts` runs by (inertia, restart
/// index) wins, so the result is deterministic given `seed` even with
/// parallel restarts.
pub fn kmeans(coords: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<ClusterLabels> {
    validate_coords(coords)?;
    let n = coords.nrows();
    if k < 1 || k > n {
        return Err(Error::usage(format!("k = {k} out of range 1..={n}")));
    }
    if restarts < 1 {
        return Err(Error::usage("kmeans requires at least one restart"));
    }
    let runs: Vec<(f64, Vec<usize>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let stream_seed = seed.wrapping_add((r as u64).wrapping_mul(RESTART_STREAM_STEP));
            kmeans_single(coords, k, stream_seed)
        })
        .collect();
    let (_, mut labels) = runs
        .into_iter()
        .enumerate()
        .map(|(idx, (inertia, labels))| ((inertia, idx), labels))
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite inertia"))
        .expect("at least one restart");
    canonicalize(&mut labels, k);
    let inertia = inertia_of(coords, &labels, k);
    Ok(ClusterLabels {
        labels,
        k,
        inertia: Some(inertia),
        mean_silhouette: None,
    })
}

fn sq_dist(coords: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    (0..coords.ncols())
        .map(|c| {
            let d = coords[(i, c)] - center[c];
            d * d
        })
        .sum()
}

fn centroids_of(coords: &DMatrix<f64>, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = coords.ncols();
    let mut centers = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for c in 0..d {
            centers[l][c] += coords[(i, c)];
        }
    }
    for (center, &count) in centers.iter_mut().zip(&counts) {
        if count > 0 {
            for v in center.iter_mut() {
                *v /= count as f64;
            }
        }
    }
    centers
}

fn inertia_of(coords: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let centers = centroids_of(coords, labels, k);
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(coords, i, &centers[l]))
        .sum()
}

/// One k-means run: k-means++ seeding followed by Lloyd iterations with
/// empty-cluster repair. Returns (inertia, labels).
fn kmeans_single(coords: &DMatrix<f64>, k: usize, stream_seed: u64) -> (f64, Vec<usize>) {
    let n = coords.nrows();
    let d = coords.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);

    // k-means++ seeding: first center uniform, then D²-weighted choices.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    centers.push((0..d).map(|c| coords[(first, c)]).collect());
    let mut best_sq: Vec<f64> = (0..n).map(|i| sq_dist(coords, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = best_sq.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in best_sq.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All points coincide with existing centers; any point works.
            0
        };
        let center: Vec<f64> = (0..d).map(|c| coords[(chosen, c)]).collect();
        for (i, best) in best_sq.iter_mut().enumerate() {
            *best = best.min(sq_dist(coords, i, &center));
        }
        centers.push(center);
    }

    let mut labels = vec![0usize; n];
    let mut previous: Option<Vec<usize>> = None;
    for _ in 0..MAX_LLOYD_ITER {
        // Assignment step: nearest center, ties to the lowest index.
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let dist = sq_dist(coords, i, center);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            *label = best;
        }
        // Empty-cluster repair: reseed each empty cluster from the point
        // farthest from its centroid (among clusters with ≥ 2 members).
        loop {
            let mut counts = vec![0usize; k];
            for &l in &labels {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let centers_now = centroids_of(coords, &labels, k);
            let farthest = (0..n)
                .filter(|&i| counts[labels[i]] >= 2)
                .max_by(|&a, &b| {
                    sq_dist(coords, a, &centers_now[labels[a]])
                        .total_cmp(&sq_dist(coords, b, &centers_now[labels[b]]))
                        .then(b.cmp(&a)) // ties → smallest index
                })
                .expect("k <= n guarantees a donor cluster");
            labels[farthest] = empty;
        }
        if previous.as_deref() == Some(labels.as_slice()) {
            break;
        }
        previous = Some(labels.clone());
        centers = centroids_of(coords, &labels, k);
    }
    (inertia_of(coords, &labels, k), labels)
}

/// Mean silhouette of a clustering over a precomputed distance matrix.
///
/// Per node: a = mean distance to its own cluster (excluding itself),
/// b = smallest mean distance to any other cluster, score = (b−a)/max(a,b)
/// with singletons scoring 0 and 0/0 := 0.
pub fn silhouette(dist: &DMatrix<f64>, clustering: &ClusterLabels) -> Result<f64> {
    let n = dist.nrows();
    if clustering.labels.len() != n || dist.ncols() != n {
        return Err(Error::usage(format!(
            "distance matrix is {}x{} but there are {} labels",
            dist.nrows(),
            dist.ncols(),
            clustering.labels.len()
        )));
    }
    let k = clustering.k;
    if k < 2 {
        return Err(Error::usage("silhouette requires at least 2 clusters"));
    }
    let mut sizes = vec![0usize; k];
    for &l in &clustering.labels {
        if l >= k {
            return Err(Error::usage(format!("label {l} out of range 0..{k}")));
        }
        sizes[l] += 1;
    }
    if sizes.contains(&0) {
        return Err(Error::usage("silhouette requires every cluster non-empty"));
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = clustering.labels[i];
        if sizes[own] == 1 {
            continue; // singleton scores 0
        }
        let mut sums = vec![0.0f64; k];
        for j in 0..n {
            if j != i {
                sums[clustering.labels[j]] += dist[(i, j)];
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        } // 0/0 := 0 contributes nothing
    }
    Ok(total / n as f64)
}

/// Runs k-means for every k in `kmin..=kmax` and returns the silhouette
/// maximizer together with the full (k, silhouette) curve. Ties break toward
/// smaller k. Silhouettes are evaluated on Euclidean distances of `coords`.
pub fn select_k_with_curve(
    coords: &DMatrix<f64>,
    kmin: usize,
    kmax: usize,
    seed: u64,
) -> Result<(ClusterLabels, Vec<(usize, f64)>)> {
    validate_coords(coords)?;
    let n = coords.nrows();
    if !(2 <= kmin && kmin <= kmax && kmax <= n.saturating_sub(1)) {
        return Err(Error::usage(format!(
            "k range {kmin}..={kmax} invalid: need 2 <= kmin <= kmax <= n-1 = {}",
            n.saturating_sub(1)
        )));
    }
    let dist = pairwise_distances(coords);
    let mut curve = Vec::with_capacity(kmax - kmin + 1);
    let mut best: Option<ClusterLabels> = None;
    let mut best_score = f64::NEG_INFINITY;
    for k in kmin..=kmax {
        let mut labels = kmeans(coords, k, seed, DEFAULT_RESTARTS)?;
        let score = silhouette(&dist, &labels)?;
        labels.mean_silhouette = Some(score);
        curve.push((k, score));
        if score > best_score {
            best_score = score;
            best = Some(labels);
        }
    }
    Ok((best.expect("k range nonempty"), curve))
}

/// Silhouette-maximizing k-means clustering over a range of k.
pub fn select_k(
    coords: &DMatrix<f64>,
    kmin: usize,
    kmax: usize,
    seed: u64,
) -> Result<ClusterLabels> {
    select_k_with_curve(coords, kmin, kmax, seed).map(|(best, _)| best)
}

fn validate_dissimilarity(d: &DMatrix<f64>) -> Result<()> {
    let n = d.nrows();
    if n == 0 || d.ncols() != n {
        return Err(Error::data(format!(
            "dissimilarity matrix must be square and nonempty, got {}x{}",
            d.nrows(),
            d.ncols()
        )));
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("dissimilarity matrix has non-finite entries"));
    }
    let scale = d.amax().max(1.0);
    for i in 0..n {
        if d[(i, i)].abs() > 1e-9 * scale {
            return Err(Error::data(format!(
                "dissimilarity diagonal entry {i} is {}, expected 0",
                d[(i, i)]
            )));
        }
        for j in (i + 1)..n {
            if (d[(i, j)] - d[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::data(format!(
                    "dissimilarity matrix is not symmetric at ({i},{j})"
                )));
            }
            if d[(i, j)] < 0.0 {
                return Err(Error::data(format!(
                    "dissimilarity entry ({i},{j}) is negative: {}",
                    d[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

/// Agglomerative hierarchical clustering by Lance–Williams updates.
///
/// Average linkage merges on the weighted arithmetic mean of
/// dissimilarities; Ward linkage applies the standard Lance–Williams Ward
/// coefficients to squared dissimilarities and reports heights back in
/// distance units (so Ward input should be Euclidean-compatible, e.g.
/// embedding distances). Distance ties break toward the lexicographically
/// smallest (id, id) pair, making the dendrogram reproducible.
pub fn agglomerative(dissimilarity: &DMatrix<f64>, linkage: Linkage) -> Result<Dendrogram> {
    validate_dissimilarity(dissimilarity)?;
    let n = dissimilarity.nrows();
    let total_ids = 2 * n - 1;
    // Working distances between live clusters, indexed by cluster id.
    let mut dist = DMatrix::<f64>::zeros(total_ids, total_ids);
    for i in 0..n {
        for j in 0..n {
            let v = dissimilarity[(i, j)];
            dist[(i, j)] = match linkage {
                Linkage::Ward => v * v,
                Linkage::Average => v,
            };
        }
    }
    let mut size = vec![0usize; total_ids];
    let mut alive = vec![false; total_ids];
    for i in 0..n {
        size[i] = 1;
        alive[i] = true;
    }
    let mut live_ids: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        // Smallest pairwise distance; ids ascend, so strict `<` keeps the
        // lexicographically smallest pair on ties.
        let (mut pick_a, mut pick_b, mut best) = (usize::MAX, usize::MAX, f64::INFINITY);
        for (ai, &a) in live_ids.iter().enumerate() {
            for &b in &live_ids[ai + 1..] {
                let v = dist[(a, b)];
                if v < best {
                    best = v;
                    pick_a = a;
                    pick_b = b;
                }
            }
        }
        let new_id = n + step;
        let (sa, sb) = (size[pick_a] as f64, size[pick_b] as f64);
        let height = match linkage {
            Linkage::Ward => best.max(0.0).sqrt(),
            Linkage::Average => best,
        };
        // Lance–Williams update against every other live cluster.
        for &c in &live_ids {
            if c == pick_a || c == pick_b {
                continue;
            }
            let sc = size[c] as f64;
            let (dac, dbc, dab) = (dist[(pick_a, c)], dist[(pick_b, c)], dist[(pick_a, pick_b)]);
            let updated = match linkage {
                Linkage::Average => (sa * dac + sb * dbc) / (sa + sb),
                Linkage::Ward => {
                    ((sa + sc) * dac + (sb + sc) * dbc - sc * dab) / (sa + sb + sc)
                }
            };
            dist[(new_id, c)] = updated;
            dist[(c, new_id)] = updated;
        }
        alive[pick_a] = false;
        alive[pick_b] = false;
        alive[new_id] = true;
        size[new_id] = size[pick_a] + size[pick_b];
        live_ids.retain(|&x| x != pick_a && x != pick_b);
        live_ids.push(new_id);
        merges.push(Merge {
            left: pick_a,
            right: pick_b,
            height,
            size: size[new_id],
        });
    }
    Ok(Dendrogram {
        n_leaves: n,
        linkage,
        merges,
    })
}

/// Flat clustering from the first `n − k` merges of a dendrogram (i.e. the
/// last `k − 1` merges undone). Labels canonicalized by first occurrence.
pub fn cut_dendrogram(dendrogram: &Dendrogram, k: usize) -> Result<ClusterLabels> {
    let n = dendrogram.n_leaves;
    if k < 1 || k > n {
        return Err(Error::usage(format!("cut k = {k} out of range 1..={n}")));
    }
    let total_ids = 2 * n - 1;
    let mut parent: Vec<usize> = (0..total_ids).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (step, merge) in dendrogram.merges.iter().take(n - k).enumerate() {
        let new_id = n + step;
        let ra = find(&mut parent, merge.left);
        let rb = find(&mut parent, merge.right);
        parent[ra] = new_id;
        parent[rb] = new_id;
    }
    let mut roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut remap = std::collections::HashMap::new();
    for r in &mut roots {
        let next = remap.len();
        *r = *remap.entry(*r).or_insert(next);
    }
    debug_assert_eq!(remap.len(), k);
    Ok(ClusterLabels {
        labels: roots,
        k,
        inertia: None,
        mean_silhouette: None,
    })
}

/// Chooses the silhouette-maximizing cut of a dendrogram over `kmin..=kmax`,
/// evaluated on the given distance matrix; returns the winning cut and the
/// (k, silhouette) curve. Ties break toward smaller k.
pub fn select_cut_with_curve(
    dendrogram: &Dendrogram,
    dist: &DMatrix<f64>,
    kmin: usize,
    kmax: usize,
) -> Result<(ClusterLabels, Vec<(usize, f64)>)> {
    let n = dendrogram.n_leaves;
    if !(2 <= kmin && kmin <= kmax && kmax <= n.saturating_sub(1)) {
        return Err(Error::usage(format!(
            "k range {kmin}..={kmax} invalid: need 2 <= kmin <= kmax <= n-1 = {}",
            n.saturating_sub(1)
        )));
    }
    let mut curve = Vec::with_capacity(kmax - kmin + 1);
    let mut best: Option<ClusterLabels> = None;
    let mut best_score = f64::NEG_INFINITY;
    for k in kmin..=kmax {
        let mut cut = cut_dendrogram(dendrogram, k)?;
        let score = silhouette(dist, &cut)?;
        cut.mean_silhouette = Some(score);
        curve.push((k, score));
        if score > best_score {
            best_score = score;
            best = Some(cut);
        }
    }
    Ok((best.expect("k range nonempty"), curve))
}

/// Serializes a dendrogram as a Newick tree with branch lengths equal to
/// height deltas between parent and child (leaves sit at height 0).
pub fn newick(dendrogram: &Dendrogram, labels: &[String]) -> Result<String> {
    let n = dendrogram.n_leaves;
    if labels.len() != n {
        return Err(Error::usage(format!(
            "{} labels for {} leaves",
            labels.len(),
            n
        )));
    }
    fn quote(label: &str) -> String {
        if label
            .chars()
            .any(|c| c.is_whitespace() || "()[]':;,".contains(c))
        {
            format!("'{}'", label.replace('\'', "''"))
        } else {
            label.to_string()
        }
    }
    fn subtree(
        id: usize,
        dendrogram: &Dendrogram,
        labels: &[String],
        out: &mut String,
    ) -> f64 {
        let n = dendrogram.n_leaves;
        if id < n {
            out.push_str(&quote(&labels[id]));
            0.0
        } else {
            let merge = &dendrogram.merges[id - n];
            out.push('(');
            let hl = subtree(merge.left, dendrogram, labels, out);
            out.push(':');
            out.push_str(&format_branch(merge.height - hl));
            out.push(',');
            let hr = subtree(merge.right, dendrogram, labels, out);
            out.push(':');
            out.push_str(&format_branch(merge.height - hr));
            out.push(')');
            merge.height
        }
    }
    fn format_branch(len: f64) -> String {
        format!("{:.10}", len.max(0.0))
    }
    let mut out = String::new();
    if n == 1 {
        out.push_str(&quote(&labels[0]));
    } else {
        subtree(2 * n - 2, dendrogram, labels, &mut out);
    }
    out.push(';');
    Ok(out)
}
