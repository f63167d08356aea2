use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "curalens",
    version,
    about = "Audit dataset documentation against a data-curation rubric"
)]
pub struct Cli {
    /// Store root directory.
    #[arg(
        short = 's',
        long,
        env = "CURALENS_STORE",
        default_value = "curalens-store",
        global = true
    )]
    pub store: PathBuf,
    /// Campaign to operate on.
    #[arg(short = 'c', long, env = "CURALENS_CAMPAIGN", global = true)]
    pub campaign: Option<String>,
    /// Output format.
    #[arg(short = 'f', long, value_enum, default_value_t = Format::Human, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Plain text for people.
    Human,
    /// Pretty JSON documents, identical to the HTTP API bodies.
    Doc,
    /// Delimited table (report commands only).
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rubric documents.
    #[command(subcommand)]
    Rubric(RubricCmd),
    /// Campaign setup.
    #[command(subcommand)]
    Campaign(CampaignCmd),
    /// Rounds and their lifecycle.
    #[command(subcommand)]
    Round(RoundCmd),
    /// Evaluation cells.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Reliability and disagreement statistics.
    #[command(subcommand)]
    Stats(StatsCmd),
    /// Disagreement records.
    #[command(subcommand)]
    Resolve(ResolveCmd),
    /// Report documents and tables.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Debug, Subcommand)]
pub enum RubricCmd {
    /// Parse and validate a rubric document.
    Validate { file: PathBuf },
    /// Print the built-in rubric.
    ShowDefault,
    /// Validate a rubric document and add it to the store.
    Import { file: PathBuf },
    /// List stored rubrics.
    List,
}

#[derive(Debug, Subcommand)]
pub enum CampaignCmd {
    /// Create a campaign and print its bearer tokens.
    New {
        /// Campaign id (defaults to --campaign).
        #[arg(long)]
        id: Option<String>,
        /// Rubric as `id` or `id@version`.
        #[arg(short = 'r', long, default_value = "data-curation-rubric")]
        rubric: String,
        /// Comma-separated rater ids.
        #[arg(long, value_delimiter = ',', required = true)]
        raters: Vec<String>,
        /// Let raters see each other's ratings while a round is collecting.
        #[arg(long)]
        no_blind: bool,
    },
    /// Print the campaign summary.
    Show,
    /// Print the bearer tokens of the operator and every rater.
    Tokens,
    /// List campaigns in the store.
    List,
    /// Close the campaign to further changes.
    Archive,
}

#[derive(Debug, Subcommand)]
pub enum RoundCmd {
    /// Add a round in draft.
    Add {
        #[arg(short = 'l', long)]
        label: String,
        /// One dataset id per line, or a JSON array of ids or dataset entries.
        #[arg(short = 'd', long)]
        datasets: PathBuf,
    },
    /// Move a round to its next status. Entering `resolving` also opens
    /// the round's disagreement records.
    Transition {
        #[arg(short = 'r', long)]
        round: u32,
        #[arg(short = 't', long)]
        to: String,
    },
    /// Freeze a resolving round.
    Freeze {
        #[arg(short = 'r', long)]
        round: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    /// Upsert cells from a CSV file.
    Import { file: PathBuf },
    /// Write every cell as CSV.
    Export {
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Upsert one cell.
    Record {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        element: String,
        #[arg(long)]
        standard: String,
        #[arg(long)]
        rater: String,
        #[arg(long)]
        rating: String,
        #[arg(long, default_value = "")]
        comment: String,
        /// Fail unless the stored revision equals this (0 for a new cell).
        #[arg(long)]
        expected_revision: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    #[default]
    Combined,
    Minimum,
    Excellence,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    /// Read each round's ratings as they stood when it entered resolving.
    #[arg(long)]
    pub pre_resolution: bool,
    /// Do not count disagreements closed as standing.
    #[arg(long)]
    pub exclude_standing: bool,
    /// Which standards feed the ICC matrix.
    #[arg(long, value_enum, default_value_t = ScopeArg::Combined)]
    pub scope: ScopeArg,
}

#[derive(Debug, Subcommand)]
pub enum StatsCmd {
    /// ICC(C,k) per dataset.
    Icc {
        #[arg(short = 'd', long, conflicts_with = "all")]
        dataset: Option<String>,
        /// Every dataset (the default).
        #[arg(short = 'a', long)]
        all: bool,
        #[arg(long, value_enum, default_value_t = ScopeArg::Combined)]
        scope: ScopeArg,
    },
    /// Disagreement rates per round or per element.
    Disagreements {
        #[arg(long, conflicts_with = "by_round")]
        by_element: bool,
        /// Per-round rates (the default).
        #[arg(long)]
        by_round: bool,
        #[command(flatten)]
        basis: BasisArgs,
    },
    /// Missing cells per round.
    Completeness {
        #[arg(short = 'r', long)]
        round: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ResolveCmd {
    /// Open records for the non-unanimous cells of a resolving round.
    Detect {
        #[arg(short = 'r', long)]
        round: u32,
    },
    /// List records.
    List {
        #[arg(short = 'r', long)]
        round: Option<u32>,
        /// open, resolved-converged or resolved-standing
        #[arg(long)]
        status: Option<String>,
    },
    /// Record a rater's agree/disagree response.
    Act {
        /// `dataset:element:standard`
        #[arg(short = 'k', long)]
        key: String,
        #[arg(long)]
        rater: String,
        #[arg(long)]
        stance: String,
        #[arg(long, default_value = "")]
        comment: String,
        #[arg(long)]
        new_rating: Option<String>,
    },
    /// Close a record whose ratings stay split.
    Close {
        #[arg(short = 'k', long)]
        key: String,
        #[arg(long)]
        closer: String,
        #[arg(long)]
        rationale: String,
    },
    /// Tag a record with a challenge kind.
    Tag {
        #[arg(short = 'k', long)]
        key: String,
        /// false-friends, interpretative-flexibility, depth-of-analysis or scoping
        #[arg(long)]
        kind: String,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Attach the reference comment raters compare against.
    Reference {
        #[arg(short = 'k', long)]
        key: String,
        #[arg(long)]
        author: String,
        #[arg(long)]
        text: String,
        #[arg(long)]
        proposed_rating: String,
    },
    /// Status, tags and counts per round.
    Summary {
        #[arg(short = 'r', long)]
        round: u32,
    },
    /// Write the resolution table as CSV.
    Export {
        #[arg(short = 'r', long)]
        round: Option<u32>,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Write to this file instead of stdout.
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    /// Per-dataset ICC across rounds.
    Irr(ReportArgs),
    /// Disagreement rate per round.
    Rounds(ReportArgs),
    /// Per-element inconsistency across rounds.
    Elements(ReportArgs),
    /// Versioned plot-data document for charting.
    PlotData {
        /// irr or rounds
        #[arg(long, default_value = "irr")]
        series: String,
        #[command(flatten)]
        args: ReportArgs,
    },
}
