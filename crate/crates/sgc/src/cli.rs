//! Command-line surface.
//!
//! Each subcommand validates its flags before any computation, writes all
//! file output atomically, and maps library errors to exit codes: 0 success,
//! 1 usage, 2 data, 3 numerical failure. `SGC_THREADS` caps internal
//! parallelism (0 or unset = automatic).

use crate::cluster::{Dendrogram, Linkage};
use crate::comm::{communicability_set, DEFAULT_BALANCE_TOL};
use crate::embed::pca_polarization;
use crate::error::{Error, Result};
use crate::graph::{
    detect_balance, gen_balanced_complete, gen_clique_ring, gen_pendant_clique, gen_pentagon,
    gen_random_balanced, load_edge_list, SignedGraph,
};
use crate::io::{
    atomic_write, emit_plot_data, format_float, kde_csv, load_groups, load_vote_matrix,
    matrix_to_csv, matrix_to_json, report_to_json, write_report,
};
use crate::oracle::{count_all_signed_walks, min_frustration_bipartitions, taylor_exp};
use crate::pipeline::{
    analyze, embed_graph, ingest_vote_matrix_with, Embedder, Metric, PipelineConfig,
    VoteDenominator,
};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "sgc",
    version,
    about = "Communicability geometry for signed graphs: balance, factions, polarization",
    long_about = "Analyzes signed graphs through the geometry of the matrix exponential: \
                  structural balance detection, communicability distances and angles, \
                  hyperspherical embedding, faction detection, and polarization scoring."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand that runs the metric→embedding route.
#[derive(Args, Debug)]
struct RouteArgs {
    /// Node-pair geometry: 'angle' (default) or 'distance'
    #[arg(long, default_value = "angle")]
    metric: String,
    /// Embedding dimension
    #[arg(long = "embed-dim", default_value_t = 2)]
    embed_dim: usize,
    /// Embedding method: 'classical' or 'classical+smacof'
    #[arg(long, default_value = "classical")]
    embedder: String,
}

impl RouteArgs {
    fn metric(&self) -> Result<Metric> {
        self.metric.parse()
    }
    fn embedder(&self) -> Result<Embedder> {
        self.embedder.parse()
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test structural balance; print the two-coloring or a violating cycle
    Balance {
        /// Signed edge list (TSV/CSV: source, target, ±1)
        input: PathBuf,
    },
    /// Export a node-pair matrix of the graph
    Matrix {
        input: PathBuf,
        /// Which matrix: adjacency, gamma, edm, xi, theta, rho, or dtheta
        #[arg(long, default_value = "gamma")]
        what: String,
        /// Output format: 'csv' (headerless) or 'json' (with node labels)
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed the graph and write node coordinates as CSV
    Embed {
        input: PathBuf,
        #[command(flatten)]
        route: RouteArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster the graph and write node,cluster assignments as CSV
    Cluster {
        input: PathBuf,
        #[command(flatten)]
        route: RouteArgs,
        /// Clustering route: 'kmeans', 'ward', or 'average'
        #[arg(long, default_value = "kmeans")]
        clusterer: String,
        #[arg(long, default_value_t = 2)]
        kmin: usize,
        /// Largest k tried (default min(10, n-1))
        #[arg(long)]
        kmax: Option<usize>,
        /// RNG seed (required for reproducibility)
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full analysis and write a JSON report
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        route: RouteArgs,
        /// Clustering route: 'kmeans', 'ward', or 'average'
        #[arg(long, default_value = "kmeans")]
        clusterer: String,
        #[arg(long, default_value_t = 2)]
        kmin: usize,
        #[arg(long)]
        kmax: Option<usize>,
        /// RNG seed (required for reproducibility)
        #[arg(long)]
        seed: u64,
        /// Relative tolerance of the exponential balance test
        #[arg(long = "balance-tol", default_value_t = DEFAULT_BALANCE_TOL)]
        balance_tol: f64,
        /// Record wall-clock stage timings (makes reports run-dependent)
        #[arg(long)]
        timings: bool,
        /// Report file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write plot-ready CSV/Newick files into this directory
        #[arg(long = "plot-dir")]
        plot_dir: Option<PathBuf>,
        /// Optional label,group sidecar CSV for grouped KDE output
        #[arg(long)]
        groups: Option<PathBuf>,
    },
    /// Score polarization along the embedding's principal axis
    Polarize {
        input: PathBuf,
        #[command(flatten)]
        route: RouteArgs,
        /// Also write a kernel density estimate of the scores to this file
        #[arg(long)]
        kde: Option<PathBuf>,
        /// Optional label,group sidecar CSV for grouped KDE output
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a named fixture graph as a signed edge list
    Generate {
        /// pentagon | balanced-complete | clique-ring | pendant-clique |
        /// random-balanced
        kind: String,
        /// Node count (balanced-complete, random-balanced)
        #[arg(long)]
        n: Option<usize>,
        /// Size of the second faction (balanced-complete)
        #[arg(long)]
        split: Option<usize>,
        /// Clique size (clique-ring)
        #[arg(long)]
        k: Option<usize>,
        /// Number of cliques on the ring (clique-ring)
        #[arg(long)]
        r: Option<usize>,
        /// Clique size before the tail (pendant-clique)
        #[arg(long)]
        q: Option<usize>,
        /// Edge probability (random-balanced)
        #[arg(long)]
        p: Option<f64>,
        /// Fraction of the second faction (random-balanced)
        #[arg(long = "sign-flip")]
        sign_flip: Option<f64>,
        /// RNG seed (random-balanced)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a signed graph from a voter,ballots CSV of votes
    IngestVotes {
        input: PathBuf,
        /// Keep an edge iff |similarity| exceeds this (in [0, 1))
        #[arg(long)]
        threshold: f64,
        /// Similarity denominator: 'all-ballots' or 'both-voted'
        #[arg(long, default_value = "all-ballots")]
        denominator: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact small-graph oracles (cross-checking aid)
    #[command(hide = true)]
    Oracle {
        input: PathBuf,
        /// walks | frustration | taylor-gamma
        #[arg(long)]
        what: String,
        /// Maximum walk length (walks)
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Entry point: parses `argv`, runs the subcommand, and returns the process
/// exit code (0 success, 1 usage, 2 data error, 3 numerical failure).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    configure_threads();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Applies `SGC_THREADS` (0 or unset = automatic) to the global thread pool.
fn configure_threads() {
    if let Ok(raw) = std::env::var("SGC_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(0) => {}
            Ok(n) => {
                // Err only when a pool already exists, which is fine.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            Err(_) => eprintln!("warning: ignoring non-numeric SGC_THREADS='{raw}'"),
        }
    }
}

/// Writes to the given path atomically, or to stdout when no path is given.
fn write_out(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => atomic_write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn coordinate_name(i: usize) -> String {
    match i {
        0 => "x".to_string(),
        1 => "y".to_string(),
        2 => "z".to_string(),
        other => format!("c{}", other + 1),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Balance { input } => {
            let g = load_edge_list(&input)?;
            let result = detect_balance(&g)?;
            let mut text = String::new();
            if result.balanced {
                text.push_str("balanced\n");
                let indicator = result.indicator.expect("balanced graphs carry a coloring");
                for (label, sign) in g.labels().iter().zip(indicator.signs()) {
                    text.push_str(&format!(
                        "{}\t{}\n",
                        if *sign > 0 { "+1" } else { "-1" },
                        label
                    ));
                }
            } else {
                text.push_str("unbalanced\n");
                let cycle = result.witness.expect("unbalanced graphs carry a witness");
                let labels: Vec<&str> = cycle.iter().map(|&i| g.label(i)).collect();
                text.push_str(&format!("cycle\t{}\n", labels.join("\t")));
            }
            print!("{text}");
            Ok(())
        }
        Command::Matrix {
            input,
            what,
            format,
            out,
        } => {
            let g = load_edge_list(&input)?;
            let matrix = match what.as_str() {
                "adjacency" => g.adjacency(),
                _ => {
                    let comm = communicability_set(&g)?;
                    match what.as_str() {
                        "gamma" => comm.gamma,
                        "edm" => comm.edm,
                        "xi" => comm.xi(),
                        "theta" => comm.theta,
                        "rho" => comm.rho,
                        "dtheta" => comm.d_theta,
                        other => {
                            return Err(Error::usage(format!(
                                "unknown matrix '{other}' (expected adjacency, gamma, edm, \
                                 xi, theta, rho, or dtheta)"
                            )))
                        }
                    }
                }
            };
            let text = match format.as_str() {
                "csv" => matrix_to_csv(&matrix),
                "json" => matrix_to_json(Some(g.labels()), &matrix),
                other => {
                    return Err(Error::usage(format!(
                        "unknown format '{other}' (expected csv or json)"
                    )))
                }
            };
            write_out(out.as_deref(), &text)
        }
        Command::Embed { input, route, out } => {
            let g = load_edge_list(&input)?;
            let embedding = embed_graph(&g, route.metric()?, route.embed_dim, route.embedder()?)?;
            let mut text = String::from("label");
            for c in 0..embedding.coords.ncols() {
                text.push(',');
                text.push_str(&coordinate_name(c));
            }
            text.push('\n');
            for (i, label) in g.labels().iter().enumerate() {
                text.push_str(&csv_escape(label));
                for c in 0..embedding.coords.ncols() {
                    text.push(',');
                    text.push_str(&format_float(embedding.coords[(i, c)]));
                }
                text.push('\n');
            }
            write_out(out.as_deref(), &text)
        }
        Command::Cluster {
            input,
            route,
            clusterer,
            kmin,
            kmax,
            seed,
            out,
        } => {
            let g = load_edge_list(&input)?;
            let cfg = PipelineConfig {
                metric: route.metric()?,
                embed_dim: route.embed_dim,
                embedder: route.embedder()?,
                clusterer: clusterer.parse()?,
                kmin,
                kmax,
                seed,
                balance_tol: DEFAULT_BALANCE_TOL,
                record_timings: false,
            };
            let report = analyze(&g, &cfg)?;
            let mut text = String::from("label,cluster\n");
            for (label, cluster) in g.labels().iter().zip(&report.labels.assignments) {
                text.push_str(&format!("{},{}\n", csv_escape(label), cluster));
            }
            eprintln!(
                "selected k = {} (mean silhouette {})",
                report.labels.k,
                report
                    .labels
                    .mean_silhouette
                    .map(|s| format!("{s:.4}"))
                    .unwrap_or_else(|| "n/a".to_string())
            );
            write_out(out.as_deref(), &text)
        }
        Command::Analyze {
            input,
            route,
            clusterer,
            kmin,
            kmax,
            seed,
            balance_tol,
            timings,
            out,
            plot_dir,
            groups,
        } => {
            let g = load_edge_list(&input)?;
            let cfg = PipelineConfig {
                metric: route.metric()?,
                embed_dim: route.embed_dim,
                embedder: route.embedder()?,
                clusterer: clusterer.parse()?,
                kmin,
                kmax,
                seed,
                balance_tol,
                record_timings: timings,
            };
            let report = analyze(&g, &cfg)?;
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            match &out {
                Some(path) => write_report(path, &report)?,
                None => print!("{}", report_to_json(&report)),
            }
            if let Some(dir) = plot_dir {
                let group_pairs = groups.as_deref().map(load_groups).transpose()?;
                emit_plot_data(&report, &dir, group_pairs.as_deref())?;
            }
            Ok(())
        }
        Command::Polarize {
            input,
            route,
            kde,
            groups,
            out,
        } => {
            let g = load_edge_list(&input)?;
            let embedding = embed_graph(&g, route.metric()?, route.embed_dim, route.embedder()?)?;
            let polarization = pca_polarization(&embedding)?;
            let mut text = String::from("label,score\n");
            for (label, score) in g.labels().iter().zip(&polarization.scores) {
                text.push_str(&format!("{},{}\n", csv_escape(label), format_float(*score)));
            }
            eprintln!(
                "principal axis explains {:.1}% of embedding variance",
                100.0 * polarization.explained_fraction
            );
            write_out(out.as_deref(), &text)?;
            if let Some(path) = kde {
                let group_pairs = groups.as_deref().map(load_groups).transpose()?;
                let csv = kde_csv(g.labels(), &polarization.scores, group_pairs.as_deref())?;
                atomic_write(&path, &csv)?;
            }
            Ok(())
        }
        Command::Generate {
            kind,
            n,
            split,
            k,
            r,
            q,
            p,
            sign_flip,
            seed,
            out,
        } => {
            let g = generate_fixture(&kind, n, split, k, r, q, p, sign_flip, seed)?;
            write_out(out.as_deref(), &g.to_edge_list())
        }
        Command::IngestVotes {
            input,
            threshold,
            denominator,
            out,
        } => {
            let denominator = match denominator.as_str() {
                "all-ballots" => VoteDenominator::AllBallots,
                "both-voted" => VoteDenominator::BothVoted,
                other => {
                    return Err(Error::usage(format!(
                        "unknown denominator '{other}' (expected all-ballots or both-voted)"
                    )))
                }
            };
            let votes = load_vote_matrix(&input)?;
            let g = ingest_vote_matrix_with(&votes, threshold, denominator)?;
            if !g.is_connected() {
                eprintln!(
                    "warning: resulting graph is disconnected ({} components)",
                    g.components().len()
                );
            }
            write_out(out.as_deref(), &g.to_edge_list())
        }
        Command::Oracle {
            input,
            what,
            kmax,
            out,
        } => {
            let g = load_edge_list(&input)?;
            let text = match what.as_str() {
                "walks" => {
                    let per_k = count_all_signed_walks(&g, kmax)?;
                    let mut text = String::from("k,i,j,mu_plus,mu_minus\n");
                    for (k, (plus, minus)) in per_k.iter().enumerate() {
                        for i in 0..g.n() {
                            for j in 0..g.n() {
                                text.push_str(&format!(
                                    "{k},{i},{j},{},{}\n",
                                    plus[(i, j)],
                                    minus[(i, j)]
                                ));
                            }
                        }
                    }
                    text
                }
                "frustration" => {
                    let result = min_frustration_bipartitions(&g)?;
                    let mut text = format!(
                        "min_frustration\t{}\nminimizers\t{}\n",
                        result.min_frustration,
                        result.minimizers.len()
                    );
                    for assignment in &result.minimizers {
                        let signs: Vec<String> =
                            assignment.iter().map(|s| s.to_string()).collect();
                        text.push_str(&signs.join("\t"));
                        text.push('\n');
                    }
                    text
                }
                "taylor-gamma" => matrix_to_csv(&taylor_exp(&g.adjacency(), 1e-16)?),
                other => {
                    return Err(Error::usage(format!(
                        "unknown oracle '{other}' (expected walks, frustration, or \
                         taylor-gamma)"
                    )))
                }
            };
            write_out(out.as_deref(), &text)
        }
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[allow(clippy::too_many_arguments)]
fn generate_fixture(
    kind: &str,
    n: Option<usize>,
    split: Option<usize>,
    k: Option<usize>,
    r: Option<usize>,
    q: Option<usize>,
    p: Option<f64>,
    sign_flip: Option<f64>,
    seed: Option<u64>,
) -> Result<SignedGraph> {
    fn need<T>(value: Option<T>, flag: &str, kind: &str) -> Result<T> {
        value.ok_or_else(|| Error::usage(format!("generate {kind} requires --{flag}")))
    }
    match kind {
        "pentagon" => Ok(gen_pentagon()),
        "balanced-complete" => gen_balanced_complete(
            need(n, "n", kind)?,
            need(split, "split", kind)?,
        ),
        "clique-ring" => gen_clique_ring(need(k, "k", kind)?, need(r, "r", kind)?),
        "pendant-clique" => gen_pendant_clique(need(q, "q", kind)?),
        "random-balanced" => gen_random_balanced(
            need(n, "n", kind)?,
            need(p, "p", kind)?,
            need(sign_flip, "sign-flip", kind)?,
            need(seed, "seed", kind)?,
        ),
        other => Err(Error::usage(format!(
            "unknown fixture '{other}' (expected pentagon, balanced-complete, clique-ring, \
             pendant-clique, or random-balanced)"
        ))),
    }
}

/// Hierarchical-cut helper shared by tests and downstream tooling: rebuilds
/// a dendrogram from report data and cuts it at `k`.
pub fn cut_report_dendrogram(
    report: &crate::pipeline::AnalysisReport,
    cut_k: usize,
) -> Result<Vec<usize>> {
    let tree: Dendrogram = report
        .dendrogram_tree()
        .ok_or_else(|| Error::usage("report has no dendrogram"))?;
    debug_assert!(matches!(tree.linkage, Linkage::Ward | Linkage::Average));
    Ok(crate::cluster::cut_dendrogram(&tree, cut_k)?.labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_vec(args: &[&str]) -> i32 {
        run(args.iter().map(|s| s.to_string()))
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run_vec(&["sgc", "--help"]), 0);
        assert_eq!(run_vec(&["sgc", "--version"]), 0);
    }

    #[test]
    fn unknown_flags_and_subcommands_are_usage_errors() {
        assert_eq!(run_vec(&["sgc", "frobnicate"]), 1);
        assert_eq!(run_vec(&["sgc", "balance", "x.tsv", "--bogus"]), 1);
        assert_eq!(run_vec(&["sgc"]), 1);
    }

    #[test]
    fn missing_input_file_is_a_usage_error() {
        assert_eq!(run_vec(&["sgc", "balance", "/nonexistent/graph.tsv"]), 1);
    }

    #[test]
    fn generate_validates_kind_parameters() {
        assert!(generate_fixture("pentagon", None, None, None, None, None, None, None, None)
            .is_ok());
        assert!(generate_fixture(
            "balanced-complete",
            Some(6),
            None,
            None,
            None,
            None,
            None,
            None,
            None
        )
        .is_err());
        assert!(generate_fixture("nope", None, None, None, None, None, None, None, None)
            .is_err());
    }
}
