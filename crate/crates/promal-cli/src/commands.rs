//! Subcommand definitions and implementations.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use promal::align::{align, AlignConfig, AlignMethod, Reference};
use promal::cluster::{agglomerate, cut, Linkage};
use promal::distance::{offdiag_correlation, DistanceForm, DistanceKind, DistanceMatrix};
use promal::embed::{classical_mds, smacof, stress_scan, Embedding, SmacofInit};
use promal::io;
use promal::prior::{PriorKind, PriorSpec};
use promal::simulate::{
    generate, RotationScheme, ScaleScheme, SimSpec, TranslationScheme, RNG_ALGORITHM,
};

use crate::config::FlatConfig;
use crate::svg;

/// Stress threshold used to mark the working dimension in scan output.
const STRESS_MARK: f64 = 0.05;

#[derive(Parser)]
#[command(
    name = "promal",
    version,
    about = "Procrustes alignment of matrix sets, alignment-based distances, and their downstream embedding/clustering"
)]
pub struct Cli {
    /// Worker thread cap (defaults to PROMAL_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset from the perturbation model.
    Simulate(SimulateArgs),
    /// Align a dataset into a common space.
    Align(AlignArgs),
    /// Compute a pairwise distance matrix.
    Dist(DistArgs),
    /// Embed a distance matrix with multidimensional scaling.
    Mds(MdsArgs),
    /// Hierarchically cluster a distance matrix.
    Cluster(ClusterArgs),
    /// Run simulate → align → dist → mds (and optionally cluster) from one
    /// config file.
    Pipeline(PipelineArgs),
}

pub enum Outcome {
    Ok,
    Warn(String),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Opp,
    Gpa,
    Promises,
    Efficient,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    Mean,
    First,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Residual,
    Rotational,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Squared,
    Root,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Classical,
    Smacof,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkageArg {
    Single,
    Complete,
    Average,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Identity,
    Random,
    Grouped,
}

impl From<FormArg> for DistanceForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Squared => DistanceForm::Squared,
            FormArg::Root => DistanceForm::Root,
        }
    }
}

impl From<KindArg> for DistanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Residual => DistanceKind::Residual,
            KindArg::Rotational => DistanceKind::Rotational,
            KindArg::Raw => DistanceKind::Raw,
        }
    }
}

impl From<LinkageArg> for Linkage {
    fn from(l: LinkageArg) -> Self {
        match l {
            LinkageArg::Single => Linkage::Single,
            LinkageArg::Complete => Linkage::Complete,
            LinkageArg::Average => Linkage::Average,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Rows per matrix.
    #[arg(long)]
    n: usize,
    /// Columns per matrix.
    #[arg(long)]
    m: usize,
    /// Number of matrices.
    #[arg(long = "N", visible_alias = "count")]
    count: usize,
    /// Standard deviation of the additive noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Random)]
    scheme: SchemeArg,
    /// Group sizes for the grouped scheme, e.g. `6,6`.
    #[arg(long, value_delimiter = ',')]
    groups: Vec<usize>,
    /// Within-group rotation jitter for the grouped scheme.
    #[arg(long, default_value_t = 0.05)]
    jitter: f64,
    /// Scale range `lo,hi`; omitted means all scales are 1.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    scales: Vec<f64>,
    /// Standard deviation of random translations; omitted means none.
    #[arg(long)]
    translation_sd: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AlignArgs {
    /// Dataset manifest file.
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Gpa)]
    method: MethodArg,
    /// Prior strength; 0 disables the prior.
    #[arg(long, default_value_t = 0.0)]
    k: f64,
    /// Kernel bandwidth for the coordinate prior (default: median pairwise
    /// distance).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Fix all scales at 1 instead of estimating them.
    #[arg(long)]
    no_scaling: bool,
    /// Skip column centering.
    #[arg(long)]
    no_centering: bool,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = ReferenceArg::Mean)]
    reference: ReferenceArg,
    /// Restrict estimates to proper rotations (determinant +1).
    #[arg(long)]
    rotation_only: bool,
    /// Optional n×n row covariance (CSV).
    #[arg(long)]
    sigma_n: Option<PathBuf>,
    /// Optional m×m column covariance (CSV).
    #[arg(long)]
    sigma_m: Option<PathBuf>,
    /// Output directory for the alignment artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistArgs {
    /// Alignment directory (residual/rotational) or dataset manifest (raw).
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, value_enum, default_value_t = FormArg::Squared)]
    form: FormArg,
    /// Skip column centering of raw inputs.
    #[arg(long)]
    no_centering: bool,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Print the Pearson correlation against another distance CSV.
    #[arg(long)]
    compare: Option<PathBuf>,
}

#[derive(Args)]
struct MdsArgs {
    /// Distance matrix CSV.
    input: PathBuf,
    /// Embedding dimension.
    #[arg(long)]
    dims: Option<usize>,
    /// Run a stress scan for k = 1..=SCAN.
    #[arg(long)]
    scan: Option<usize>,
    #[arg(long, value_enum, default_value_t = EngineArg::Smacof)]
    engine: EngineArg,
    /// How the values in the input CSV are to be read.
    #[arg(long, value_enum, default_value_t = FormArg::Squared)]
    input_form: FormArg,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// 1-based dimensions drawn as x,y in the scatter plot.
    #[arg(long, default_value = "1,2")]
    plot_dims: String,
    /// Per-label covariate CSV used to color points.
    #[arg(long)]
    color_csv: Option<PathBuf>,
    /// Column of --color-csv to use.
    #[arg(long)]
    color_col: Option<String>,
    /// Output prefix; files are <prefix>.embedding.csv, <prefix>.scan.csv,
    /// <prefix>.svg.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Distance matrix CSV.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = LinkageArg::Average)]
    linkage: LinkageArg,
    /// Number of flat clusters to cut.
    #[arg(long)]
    k: usize,
    /// How the values in the input CSV are to be read.
    #[arg(long, value_enum, default_value_t = FormArg::Squared)]
    input_form: FormArg,
    /// Output prefix; files are <prefix>.merges.csv and <prefix>.clusters.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// Flat `key = value` configuration file.
    config: PathBuf,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("PROMAL_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("worker pool already initialized")?;
    }

    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Align(args) => cmd_align(&args),
        Command::Dist(args) => cmd_dist(&args),
        Command::Mds(args) => cmd_mds(&args),
        Command::Cluster(args) => cmd_cluster(&args),
        Command::Pipeline(args) => cmd_pipeline(&args),
    }
}

fn build_sim_spec(args: &SimulateArgs) -> Result<SimSpec> {
    let rotation_scheme = match args.scheme {
        SchemeArg::Identity => RotationScheme::Identity,
        SchemeArg::Random => RotationScheme::Random,
        SchemeArg::Grouped => {
            if args.groups.is_empty() {
                bail!("--scheme grouped requires --groups, e.g. --groups 6,6");
            }
            RotationScheme::Grouped {
                groups: args.groups.clone(),
                within_group_jitter: args.jitter,
            }
        }
    };
    let scales = if args.scales.len() == 2 {
        ScaleScheme::RandomRange {
            lo: args.scales[0],
            hi: args.scales[1],
        }
    } else {
        ScaleScheme::AllOne
    };
    let translations = match args.translation_sd {
        Some(sd) => TranslationScheme::RandomSd(sd),
        None => TranslationScheme::Zero,
    };
    Ok(SimSpec {
        rows: args.n,
        cols: args.m,
        count: args.count,
        noise_sd: args.noise,
        rotation_scheme,
        scales,
        translations,
        seed: args.seed,
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let spec = build_sim_spec(args)?;
    let (set, truth) = generate(&spec)?;
    let comments = vec![
        format!("generator: {RNG_ALGORITHM}"),
        format!("seed: {}", args.seed),
        format!(
            "spec: n={} m={} N={} noise={} scheme={:?}",
            args.n,
            args.m,
            args.count,
            args.noise,
            match args.scheme {
                SchemeArg::Identity => "identity",
                SchemeArg::Random => "random",
                SchemeArg::Grouped => "grouped",
            }
        ),
    ];
    let manifest = io::save_dataset(&args.out, &set, Some(&truth), &comments)?;
    println!("wrote dataset: {}", manifest.display());
    Ok(Outcome::Ok)
}

fn build_align_config(args: &AlignArgs, has_coords: bool) -> AlignConfig {
    let prior = if args.k > 0.0 {
        let kind = if has_coords {
            PriorKind::SimilarityGaussian {
                bandwidth: args.bandwidth,
            }
        } else {
            log::warn!("no column coordinates in the dataset; using the identity location matrix");
            PriorKind::Identity
        };
        PriorSpec { kind, k: args.k }
    } else {
        PriorSpec::none()
    };
    AlignConfig {
        method: match args.method {
            MethodArg::Opp => AlignMethod::Opp,
            MethodArg::Gpa => AlignMethod::Gpa,
            MethodArg::Promises => AlignMethod::Promises,
            MethodArg::Efficient => AlignMethod::EfficientPromises,
        },
        scaling: !args.no_scaling,
        centering: !args.no_centering,
        max_iter: args.max_iter,
        tol: args.tol,
        prior,
        sigma_n: None,
        sigma_m: None,
        reference: match args.reference {
            ReferenceArg::Mean => Reference::Mean,
            ReferenceArg::First => Reference::FirstMatrix,
        },
        rotation_only: args.rotation_only,
    }
}

fn cmd_align(args: &AlignArgs) -> Result<Outcome> {
    let set = io::load_dataset(&args.manifest)
        .with_context(|| format!("loading dataset {}", args.manifest.display()))?;
    if matches!(args.method, MethodArg::Opp) && set.len() != 2 {
        bail!(
            "--method opp aligns exactly 2 matrices; the dataset has {} (use gpa/promises for larger sets)",
            set.len()
        );
    }
    let mut cfg = build_align_config(args, set.coords().is_some());
    if let Some(path) = &args.sigma_n {
        cfg.sigma_n = Some(io::read_matrix_csv(path)?);
    }
    if let Some(path) = &args.sigma_m {
        cfg.sigma_m = Some(io::read_matrix_csv(path)?);
    }

    let result = align(&set, &cfg)?;
    io::save_alignment(&result, &args.out)?;
    println!(
        "aligned {} matrices in {} iteration(s); final objective {:.6e}",
        result.len(),
        result.iterations(),
        result.final_objective()
    );
    if result.non_unique {
        log::warn!(
            "at least one rotation is not unique (rank-deficient cross-product); consider --method promises with --k > 0"
        );
    }
    if !result.converged {
        return Ok(Outcome::Warn(format!(
            "alignment stopped at max_iter={} before reaching tol={}",
            cfg.max_iter, cfg.tol
        )));
    }
    Ok(Outcome::Ok)
}

fn cmd_dist(args: &DistArgs) -> Result<Outcome> {
    let form: DistanceForm = args.form.into();
    let d = match args.kind {
        KindArg::Raw => {
            if args.input.is_dir() {
                bail!(
                    "--kind raw expects a dataset manifest file, got directory {}",
                    args.input.display()
                );
            }
            let set = io::load_dataset(&args.input)?;
            DistanceMatrix::raw(&set, form, !args.no_centering)?
        }
        KindArg::Residual | KindArg::Rotational => {
            if !args.input.is_dir() {
                bail!(
                    "--kind {} expects an alignment directory, got {}",
                    DistanceKind::from(args.kind).name(),
                    args.input.display()
                );
            }
            let result = io::load_alignment(&args.input)?;
            if matches!(args.kind, KindArg::Residual) {
                DistanceMatrix::residual(&result, form)?
            } else {
                DistanceMatrix::rotational(&result, form)?
            }
        }
    };
    io::write_distance_csv(&args.out, &d)?;
    println!(
        "wrote {} {} distances for {} items: {}",
        d.form().name(),
        d.kind().name(),
        d.len(),
        args.out.display()
    );

    if let Some(other_path) = &args.compare {
        let other = io::read_distance_csv(other_path, d.kind(), d.form())?;
        let r = offdiag_correlation(&d, &other)?;
        println!(
            "correlation({}, {}) = {:.6}",
            args.out.display(),
            other_path.display(),
            r
        );
    }
    Ok(Outcome::Ok)
}

fn parse_plot_dims(raw: &str, dims: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        bail!("--plot-dims expects two comma-separated 1-based indices, got '{raw}'");
    }
    let i: usize = parts[0].trim().parse().context("--plot-dims x index")?;
    let j: usize = parts[1].trim().parse().context("--plot-dims y index")?;
    if i == 0 || j == 0 || i > dims || j > dims {
        bail!("--plot-dims {raw} out of range for a {dims}-dimensional embedding");
    }
    Ok((i - 1, j - 1))
}

fn load_color_map(args: &MdsArgs) -> Result<Option<HashMap<String, f64>>> {
    let Some(path) = &args.color_csv else {
        return Ok(None);
    };
    let column = args
        .color_col
        .as_ref()
        .ok_or_else(|| anyhow!("--color-csv requires --color-col"))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty covariate CSV"))?;
    let col_idx = header
        .split(',')
        .position(|h| h.trim() == column)
        .ok_or_else(|| anyhow!("column '{column}' not found in {}", path.display()))?;
    let mut map = HashMap::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if let (Some(label), Some(value)) = (fields.first(), fields.get(col_idx)) {
            if let Ok(v) = value.trim().parse::<f64>() {
                map.insert(label.trim().to_string(), v);
            }
        }
    }
    Ok(Some(map))
}

fn cmd_mds(args: &MdsArgs) -> Result<Outcome> {
    if args.dims.is_none() && args.scan.is_none() {
        bail!("mds needs --dims K and/or --scan K_MAX");
    }
    let d = io::read_distance_csv(&args.input, DistanceKind::Raw, args.input_form.into())?;
    let mut warn: Option<String> = None;

    if let Some(k_max) = args.scan {
        let scan = stress_scan(&d, k_max, args.max_iter, args.tol)?;
        let path = prefixed(&args.out, "scan.csv");
        io::write_scan_csv(&path, &scan)?;
        println!("wrote stress scan: {}", path.display());
        match scan.iter().find(|(_, s)| *s < STRESS_MARK) {
            Some((k, s)) => println!("first k with stress1 < {STRESS_MARK}: k={k} (stress1={s:.4})"),
            None => println!("no k <= {k_max} reaches stress1 < {STRESS_MARK}"),
        }
    }

    if let Some(k) = args.dims {
        let embedding = match args.engine {
            EngineArg::Classical => classical_mds(&d, k)?,
            EngineArg::Smacof => smacof(&d, k, SmacofInit::Classical, args.max_iter, args.tol)?,
        };
        let path = prefixed(&args.out, "embedding.csv");
        io::write_embedding_csv(&path, &embedding)?;
        println!(
            "wrote {}-dimensional embedding (stress1 {:.4}, {} iterations): {}",
            k,
            embedding.stress1,
            embedding.iterations,
            path.display()
        );

        let (xi, yi) = parse_plot_dims(&args.plot_dims, k)?;
        let colors = load_color_map(args)?;
        let svg_path = prefixed(&args.out, "svg");
        std::fs::write(&svg_path, render_embedding(&embedding, xi, yi, colors.as_ref()))
            .with_context(|| format!("writing {}", svg_path.display()))?;
        println!("wrote scatter plot: {}", svg_path.display());

        if !embedding.converged {
            warn = Some(format!(
                "stress majorization stopped at max_iter={}",
                args.max_iter
            ));
        }
    }

    Ok(match warn {
        Some(w) => Outcome::Warn(w),
        None => Outcome::Ok,
    })
}

fn render_embedding(
    e: &Embedding,
    xi: usize,
    yi: usize,
    colors: Option<&HashMap<String, f64>>,
) -> String {
    let points = e
        .labels
        .iter()
        .enumerate()
        .map(|(row, label)| svg::Point {
            x: e.coords.get(row, xi),
            y: e.coords.get(row, yi),
            label: label.clone(),
            color_value: colors.and_then(|m| m.get(label).copied()),
        })
        .collect();
    svg::render(&svg::Scatter {
        title: format!("fitted configurations (stress1 {:.4})", e.stress1),
        x_label: format!("dimension {}", xi + 1),
        y_label: format!("dimension {}", yi + 1),
        points,
    })
}

fn cmd_cluster(args: &ClusterArgs) -> Result<Outcome> {
    let d = io::read_distance_csv(&args.input, DistanceKind::Raw, args.input_form.into())?;
    let dend = agglomerate(&d, args.linkage.into())?;
    let merges_path = prefixed(&args.out, "merges.csv");
    io::write_dendrogram_csv(&merges_path, &dend)?;
    let assignment = cut(&dend, args.k)?;
    let clusters_path = prefixed(&args.out, "clusters.csv");
    io::write_clusters_csv(&clusters_path, dend.leaf_labels.as_slice(), &assignment)?;
    println!(
        "wrote {} merges and a {}-cluster cut: {}, {}",
        dend.merges.len(),
        args.k,
        merges_path.display(),
        clusters_path.display()
    );
    Ok(Outcome::Ok)
}

/// `<prefix>.<suffix>`, creating parent directories as needed.
fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push('.');
    name.push_str(suffix);
    let path = prefix.with_file_name(name);
    if let Some(parent) = path.parent() {
        let _ = std::fs::create_dir_all(parent);
    }
    path
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<Outcome> {
    let cfg = FlatConfig::load(&args.config)?;
    let out = PathBuf::from(cfg.require("out")?);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut warnings: Vec<String> = Vec::new();

    // simulate
    let sim_args = SimulateArgs {
        n: cfg.parse("n")?.context("config needs n")?,
        m: cfg.parse("m")?.context("config needs m")?,
        count: cfg.parse("N")?.context("config needs N")?,
        noise: cfg.parse_or("noise", 0.0)?,
        scheme: match cfg.get("scheme").unwrap_or("random") {
            "identity" => SchemeArg::Identity,
            "random" => SchemeArg::Random,
            "grouped" => SchemeArg::Grouped,
            other => bail!("config scheme '{other}' is not identity|random|grouped"),
        },
        groups: match cfg.get("groups") {
            Some(raw) => raw
                .split(',')
                .map(|g| g.trim().parse().context("config groups"))
                .collect::<Result<Vec<usize>>>()?,
            None => Vec::new(),
        },
        jitter: cfg.parse_or("jitter", 0.05)?,
        scales: match (cfg.parse("scale_lo")?, cfg.parse("scale_hi")?) {
            (Some(lo), Some(hi)) => vec![lo, hi],
            _ => Vec::new(),
        },
        translation_sd: cfg.parse("translation_sd")?,
        seed: cfg.parse_or("seed", 0)?,
        out: out.join("dataset"),
    };
    cmd_simulate(&sim_args)?;

    // align
    let align_args = AlignArgs {
        manifest: out.join("dataset").join("manifest.txt"),
        method: match cfg.get("method").unwrap_or("promises") {
            "opp" => MethodArg::Opp,
            "gpa" => MethodArg::Gpa,
            "promises" => MethodArg::Promises,
            "efficient" => MethodArg::Efficient,
            other => bail!("config method '{other}' is not opp|gpa|promises|efficient"),
        },
        k: cfg.parse_or("k", 0.0)?,
        bandwidth: cfg.parse("bandwidth")?,
        no_scaling: !cfg.parse_or("scaling", true)?,
        no_centering: !cfg.parse_or("centering", true)?,
        tol: cfg.parse_or("tol", 1e-8)?,
        max_iter: cfg.parse_or("max_iter", 100)?,
        reference: match cfg.get("reference").unwrap_or("mean") {
            "mean" => ReferenceArg::Mean,
            "first" => ReferenceArg::First,
            other => bail!("config reference '{other}' is not mean|first"),
        },
        rotation_only: cfg.parse_or("rotation_only", false)?,
        sigma_n: None,
        sigma_m: None,
        out: out.join("alignment"),
    };
    if let Outcome::Warn(w) = cmd_align(&align_args)? {
        warnings.push(w);
    }

    // dist
    let kind = match cfg.get("dist_kind").unwrap_or("rotational") {
        "residual" => KindArg::Residual,
        "rotational" => KindArg::Rotational,
        "raw" => KindArg::Raw,
        other => bail!("config dist_kind '{other}' is not residual|rotational|raw"),
    };
    let form = match cfg.get("dist_form").unwrap_or("squared") {
        "squared" => FormArg::Squared,
        "root" => FormArg::Root,
        other => bail!("config dist_form '{other}' is not squared|root"),
    };
    let dist_out = out.join(format!(
        "dist_{}.csv",
        DistanceKind::from(kind).name()
    ));
    let dist_args = DistArgs {
        input: match kind {
            KindArg::Raw => out.join("dataset").join("manifest.txt"),
            _ => out.join("alignment"),
        },
        kind,
        form,
        no_centering: !cfg.parse_or("centering", true)?,
        out: dist_out.clone(),
        compare: None,
    };
    cmd_dist(&dist_args)?;

    // mds
    let mds_args = MdsArgs {
        input: dist_out.clone(),
        dims: cfg.parse("mds_dims")?,
        scan: cfg.parse("mds_scan")?,
        engine: match cfg.get("engine").unwrap_or("smacof") {
            "classical" => EngineArg::Classical,
            "smacof" => EngineArg::Smacof,
            other => bail!("config engine '{other}' is not classical|smacof"),
        },
        input_form: form,
        max_iter: cfg.parse_or("mds_max_iter", 500)?,
        tol: cfg.parse_or("mds_tol", 1e-9)?,
        plot_dims: cfg.get("plot_dims").unwrap_or("1,2").to_string(),
        color_csv: cfg.get("color_csv").map(PathBuf::from),
        color_col: cfg.get("color_col").map(String::from),
        out: out.join("mds"),
    };
    if mds_args.dims.is_some() || mds_args.scan.is_some() {
        if let Outcome::Warn(w) = cmd_mds(&mds_args)? {
            warnings.push(w);
        }
    }

    // cluster (optional)
    if let Some(k) = cfg.parse("cluster_k")? {
        let cluster_args = ClusterArgs {
            input: dist_out,
            linkage: match cfg.get("cluster_linkage").unwrap_or("average") {
                "single" => LinkageArg::Single,
                "complete" => LinkageArg::Complete,
                "average" => LinkageArg::Average,
                other => bail!("config cluster_linkage '{other}' is not single|complete|average"),
            },
            k,
            input_form: form,
            out: out.join("cluster"),
        };
        cmd_cluster(&cluster_args)?;
    }

    Ok(if warnings.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Warn(warnings.join("; "))
    })
}
