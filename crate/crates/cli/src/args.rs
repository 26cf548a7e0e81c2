use std::path::PathBuf;

use causal_embed::embedding::Method;
use causal_embed::fixtures::EcosystemLayout;
use causal_embed::{Distance, Layer};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "causal-embed",
    version,
    about = "Causal embeddings of structural causal models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the JSON report to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a model, print its induced graph and its exact distributions.
    Validate(ValidateArgs),
    /// Latent projection and mediated edges of a graph, or completion of a
    /// high-level model with `--complete`.
    Project(ProjectArgs),
    /// Structural and graphical α-embedding checks.
    CheckEmbedding(CheckArgs),
    /// L1/L2 embedding error.
    EmbedError(ErrorArgs),
    /// Reduce a marginal problem and certify its candidate.
    Certify(CertifyArgs),
    /// Write the ecosystem datasets, or sample any model with `--model`.
    GenEcosystem(GenArgs),
    /// Transform, concatenate and impute datasets onto one schema.
    Merge(MergeArgs),
    /// KL divergence of histogram estimates against a reference dataset.
    Kl(KlArgs),
    /// Export or check the bundled fixtures.
    Fixtures(FixturesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LayerArg {
    #[value(name = "L1", alias = "l1")]
    L1,
    #[value(name = "L2", alias = "l2")]
    L2,
}

impl From<LayerArg> for Layer {
    fn from(l: LayerArg) -> Layer {
        match l {
            LayerArg::L1 => Layer::L1,
            LayerArg::L2 => Layer::L2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    Tv,
    Kl,
}

impl From<DistanceArg> for Distance {
    fn from(d: DistanceArg) -> Distance {
        match d {
            DistanceArg::Tv => Distance::TotalVariation,
            DistanceArg::Kl => Distance::KullbackLeibler,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Projection,
    Mediated,
    Both,
}

impl MethodArg {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Projection => vec![Method::Projection],
            MethodArg::Mediated => vec![Method::Mediated],
            MethodArg::Both => vec![Method::Projection, Method::Mediated],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Figure,
    Prose,
}

impl From<LayoutArg> for EcosystemLayout {
    fn from(l: LayoutArg) -> EcosystemLayout {
        match l {
            LayoutArg::Figure => EcosystemLayout::Figure,
            LayoutArg::Prose => EcosystemLayout::Prose,
        }
    }
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Model file.
    #[arg(long, visible_alias = "low", value_name = "FILE")]
    pub model: PathBuf,
    /// Hard intervention applied before anything else, e.g. `X=1,Y=0`.
    #[arg(long = "do", value_name = "ASSIGNMENT")]
    pub intervene: Option<String>,
    /// Query targets, e.g. `Z` or `Y,Z`.
    #[arg(long, value_name = "VARS")]
    pub query: Option<String>,
    /// Conditioning (L1) or intervened (L2) values for `--query`.
    #[arg(long, value_name = "ASSIGNMENT", requires = "query")]
    pub given: Option<String>,
    /// Layer of `--query`; required with it.
    #[arg(long, value_enum, requires = "query")]
    pub layer: Option<LayerArg>,
    /// Write the induced graph here.
    #[arg(long, value_name = "FILE")]
    pub graph_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    /// Graph file in edge-list format.
    #[arg(long, value_name = "FILE", conflicts_with = "low")]
    pub graph: Option<PathBuf>,
    /// Model whose induced graph is used; the low-level model with `--complete`.
    #[arg(long, value_name = "FILE")]
    pub low: Option<PathBuf>,
    /// Vertices to keep.
    #[arg(long, value_name = "VARS", required_unless_present = "complete")]
    pub relevant: Option<String>,
    /// Build a high-level model on `--high-graph` consistent with `--low` under `--phi`.
    #[arg(long, requires_all = ["low", "phi", "high_graph", "dir"])]
    pub complete: bool,
    /// Variable map for `--complete`, e.g. `X1=X',X2=X',Y=Y'`.
    #[arg(long, value_name = "MAP")]
    pub phi: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub high_graph: Option<PathBuf>,
    /// Directory for the completed model and embedding.
    #[arg(long, value_name = "DIR")]
    pub dir: Option<PathBuf>,
    /// Write the projected graph here.
    #[arg(long, value_name = "FILE")]
    pub graph_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long, value_name = "FILE")]
    pub low: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub high: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub embedding: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub method: MethodArg,
}

#[derive(Args, Debug)]
pub struct ErrorArgs {
    #[arg(long, value_name = "FILE")]
    pub low: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub high: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub embedding: PathBuf,
    #[arg(long, value_enum)]
    pub layer: LayerArg,
    #[arg(long, value_enum, default_value = "tv")]
    pub distance: DistanceArg,
    /// Include every evaluated query cell in the report.
    #[arg(long)]
    pub cells: bool,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// Problem file listing models, embeddings and an optional candidate.
    #[arg(long, value_name = "FILE")]
    pub problem: PathBuf,
    #[arg(long, value_enum)]
    pub layer: LayerArg,
    /// Include the pushed query tables in the report.
    #[arg(long)]
    pub summaries: bool,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub dir: PathBuf,
    /// Which dataset drops which variables.
    #[arg(long, value_enum, default_value = "figure")]
    pub layout: LayoutArg,
    /// Sample this model instead of the ecosystem.
    #[arg(long, value_name = "FILE", requires = "rows")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub rows: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MergeArgs {
    /// `DATA.csv@EMBEDDING.toml`; repeat once per dataset.
    #[arg(long = "input", value_name = "FILE@EMBEDDING", required = true)]
    pub inputs: Vec<String>,
    /// Target schema; defaults to the embeddings' targets in order of appearance.
    #[arg(long, value_name = "VARS")]
    pub schema: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Merged dataset output.
    #[arg(long, value_name = "FILE")]
    pub csv: PathBuf,
    /// Reference dataset for the KL table.
    #[arg(long, value_name = "FILE[@EMBEDDING]", requires = "vars")]
    pub reference: Option<String>,
    #[arg(long, value_name = "VARS", requires = "reference")]
    pub vars: Option<String>,
    #[command(flatten)]
    pub bins: BinArgs,
}

#[derive(Args, Debug)]
pub struct KlArgs {
    /// Reference dataset.
    #[arg(long, value_name = "FILE[@EMBEDDING]")]
    pub reference: String,
    #[arg(long, value_name = "VARS")]
    pub vars: String,
    /// Estimate datasets.
    #[arg(value_name = "FILE[@EMBEDDING]", required = true)]
    pub estimates: Vec<String>,
    #[command(flatten)]
    pub bins: BinArgs,
}

#[derive(Args, Debug)]
pub struct BinArgs {
    /// Default bin width.
    #[arg(long, value_name = "WIDTH")]
    pub bins: Option<f64>,
    /// Per-variable bins, `VAR=WIDTH` or `VAR=WIDTH:ORIGIN`.
    #[arg(long = "bin", value_name = "SPEC")]
    pub per_variable: Vec<String>,
}

#[derive(Args, Debug)]
pub struct FixturesArgs {
    #[command(subcommand)]
    pub action: FixturesAction,
}

#[derive(Subcommand, Debug)]
pub enum FixturesAction {
    /// Write bundles as model, embedding, graph and problem files.
    Export {
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
        /// Only this bundle.
        #[arg(long)]
        bundle: Option<String>,
    },
    /// Evaluate every bundle's expectations.
    Check {
        #[arg(long)]
        bundle: Option<String>,
    },
}
