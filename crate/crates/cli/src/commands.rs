use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use curalens_core::campaign::exchange::{export_evaluations, import_evaluations, ImportSummary};
use curalens_core::campaign::{Campaign, CampaignOptions, DatasetEntry, Rater, OPERATOR};
use curalens_core::report::{
    render_document, write_elements_csv, write_icc_csv, write_irr_csv, write_rounds_csv, RatingBasis,
};
use curalens_core::resolution::{
    export_resolution_table, ChallengeKind, ChallengeTag, DisagreementRecord, DisagreementStatus, ReferenceComment,
    ResolutionAction, Stance,
};
use curalens_core::rubric::{default_rubric, load_rubric, validate_rubric, RubricSpec};
use curalens_core::service::{self, IccQuery, PlotKind, PlotQuery, SeriesQuery};
use curalens_core::stats::MatrixScope;
use curalens_core::{CellKey, Coded, Error, ErrorClass, EvaluationInput, Rating, RoundStatus, Standard, Store};

use crate::args::{
    BasisArgs, CampaignCmd, Cli, Command, EvalCmd, Format, ReportArgs, ReportCmd, ResolveCmd, RoundCmd, RubricCmd,
    ScopeArg, StatsCmd,
};
use crate::human;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(Error),
    #[error("no campaign selected: pass --campaign or set CURALENS_CAMPAIGN")]
    NoCampaign,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Output(String),
    #[error("{0}")]
    Usage(String),
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(err: E) -> Self {
        CliError::Core(err.into())
    }
}

impl Coded for CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::NoCampaign => "no_campaign",
            CliError::Io { .. } => "io",
            CliError::Output(_) => "output",
            CliError::Usage(_) => "usage",
        }
    }

    fn class(&self) -> ErrorClass {
        match self {
            CliError::Core(e) => e.class(),
            CliError::NoCampaign | CliError::Usage(_) => ErrorClass::Malformed,
            CliError::Io { .. } | CliError::Output(_) => ErrorClass::Internal,
        }
    }
}

type Result<T = (), E = CliError> = std::result::Result<T, E>;

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T>
where
    T::Err: Into<Error>,
{
    s.parse::<T>().map_err(CliError::from)
}

/// Where command output goes: stdout, or a file given with `--out`.
struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    fn stdout() -> Self {
        Sink { out: None }
    }

    fn to(out: Option<PathBuf>) -> Self {
        Sink { out }
    }

    fn text(&self, text: &str) -> Result {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            }),
            None => {
                let mut stdout = io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::Output(e.to_string()))
            }
        }
    }

    fn csv(&self, write: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), String>) -> Result {
        let mut buf = Vec::new();
        write(&mut buf).map_err(CliError::Output)?;
        self.text(&String::from_utf8(buf).map_err(|e| CliError::Output(e.to_string()))?)
    }
}

struct Ctx {
    store: Store,
    campaign: Option<String>,
    format: Format,
}

impl Ctx {
    fn campaign(&self) -> Result<&str> {
        self.campaign.as_deref().ok_or(CliError::NoCampaign)
    }

    /// Prints `value` as a document or as text.
    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce(&T) -> String) -> Result {
        self.emit_to(&Sink::stdout(), value, text)
    }

    fn emit_to<T: Serialize>(&self, sink: &Sink, value: &T, text: impl FnOnce(&T) -> String) -> Result {
        match self.format {
            Format::Doc => sink.text(&render_document(value)),
            Format::Human => sink.text(&text(value)),
            Format::Csv => Err(CliError::Usage(
                "--format csv is only available for stats icc and report commands".into(),
            )),
        }
    }

    fn update<T>(
        &self,
        actor: &str,
        f: impl FnOnce(&mut Campaign, &RubricSpec) -> curalens_core::Result<T>,
    ) -> Result<(T, u64)> {
        let (out, version) = service::update_campaign(&self.store, self.campaign()?, actor, f)?;
        Ok((out, version.sequence))
    }
}

pub fn run(cli: Cli) -> Result {
    let ctx = Ctx {
        store: Store::open(&cli.store)?,
        campaign: cli.campaign,
        format: cli.format,
    };
    match cli.command {
        Command::Rubric(cmd) => rubric(&ctx, cmd),
        Command::Campaign(cmd) => campaign(&ctx, cmd),
        Command::Round(cmd) => round(&ctx, cmd),
        Command::Eval(cmd) => eval(&ctx, cmd),
        Command::Stats(cmd) => stats(&ctx, cmd),
        Command::Resolve(cmd) => resolve(&ctx, cmd),
        Command::Report(cmd) => report(&ctx, cmd),
    }
}

fn rubric(ctx: &Ctx, cmd: RubricCmd) -> Result {
    match cmd {
        RubricCmd::Validate { file } => {
            let spec: RubricSpec = serde_json::from_str(&read_file(&file)?)
                .map_err(|e| curalens_core::rubric::RubricError::Parse(e.to_string()))?;
            let report = validate_rubric(&spec);
            ctx.emit(&report, human::validation)?;
            if !report.is_clean() {
                return Err(curalens_core::rubric::RubricError::Invalid(report).into());
            }
            Ok(())
        }
        RubricCmd::ShowDefault => ctx.emit(&default_rubric(), human::rubric),
        RubricCmd::Import { file } => {
            let spec = load_rubric(&read_file(&file)?)?;
            let reference = ctx.store.put_rubric(&spec)?;
            ctx.emit(&reference, |r| format!("stored rubric {r}\n"))
        }
        RubricCmd::List => {
            let refs = ctx.store.rubric_refs()?;
            ctx.emit(&refs, |refs| refs.iter().map(|r| format!("{r}\n")).collect())
        }
    }
}

#[derive(Serialize)]
struct CreatedCampaign {
    campaign: String,
    sequence: u64,
    tokens: std::collections::BTreeMap<String, String>,
}

fn campaign(ctx: &Ctx, cmd: CampaignCmd) -> Result {
    match cmd {
        CampaignCmd::New {
            id,
            rubric,
            raters,
            no_blind,
        } => {
            let id = id.or_else(|| ctx.campaign.clone()).ok_or(CliError::NoCampaign)?;
            let rubric = ctx.store.find_rubric(&rubric)?;
            let mut campaign = Campaign::create(
                &id,
                &rubric,
                raters.iter().map(Rater::new).collect(),
                CampaignOptions { blind: !no_blind },
            )?;
            let version = ctx.store.create_campaign(&mut campaign)?;
            let created = CreatedCampaign {
                tokens: service::campaign_tokens(&ctx.store, &id)?,
                campaign: id,
                sequence: version.sequence,
            };
            ctx.emit(&created, |c| {
                let mut out = format!("created campaign {}\n", c.campaign);
                out.push_str(&human::tokens(&c.tokens));
                out
            })
        }
        CampaignCmd::Show => {
            let campaign = ctx.store.load_campaign(ctx.campaign()?)?;
            ctx.emit(&human::CampaignSummary::from(&campaign), human::campaign)
        }
        CampaignCmd::Tokens => {
            let tokens = service::campaign_tokens(&ctx.store, ctx.campaign()?)?;
            ctx.emit(&tokens, human::tokens)
        }
        CampaignCmd::List => {
            let ids = ctx.store.campaign_ids()?;
            ctx.emit(&ids, |ids| ids.iter().map(|i| format!("{i}\n")).collect())
        }
        CampaignCmd::Archive => {
            let ((), sequence) = ctx.update(OPERATOR, |c, _| Ok(c.archive()?))?;
            ctx.emit(&Sequenced { sequence, value: () }, |_| "campaign archived\n".into())
        }
    }
}

/// A mutation result together with the event sequence it was stored at.
#[derive(Serialize)]
struct Sequenced<T> {
    sequence: u64,
    #[serde(flatten)]
    value: T,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DatasetSpec {
    Id(String),
    Entry(DatasetEntry),
}

fn read_datasets(path: &Path) -> Result<Vec<DatasetEntry>> {
    let text = read_file(path)?;
    if text.trim_start().starts_with('[') {
        let specs: Vec<DatasetSpec> =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        return Ok(specs
            .into_iter()
            .map(|s| match s {
                DatasetSpec::Id(id) => DatasetEntry::new(id),
                DatasetSpec::Entry(e) => e,
            })
            .collect());
    }
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(DatasetEntry::new)
        .collect())
}

#[derive(Serialize)]
struct RoundRef {
    round: curalens_core::campaign::Round,
    opened_disagreements: usize,
}

fn round(ctx: &Ctx, cmd: RoundCmd) -> Result {
    let (round, opened, sequence) = match cmd {
        RoundCmd::Add { label, datasets } => {
            let datasets = read_datasets(&datasets)?;
            let (round, sequence) = ctx.update(OPERATOR, |c, _| {
                let ix = c.add_round(&label, datasets)?;
                Ok(c.round(ix)?.clone())
            })?;
            (round, 0, sequence)
        }
        RoundCmd::Transition { round, to } => {
            let to: RoundStatus = parse(&to)?;
            let ((r, opened), sequence) = ctx.update(OPERATOR, |c, rubric| {
                c.transition_round(round, to)?;
                let opened = if to == RoundStatus::Resolving {
                    c.detect_disagreements(rubric, round)?.len()
                } else {
                    0
                };
                Ok((c.round(round)?.clone(), opened))
            })?;
            (r, opened, sequence)
        }
        RoundCmd::Freeze { round } => {
            let (r, sequence) = ctx.update(OPERATOR, |c, _| Ok(c.freeze_round(round)?.clone()))?;
            (r, 0, sequence)
        }
    };
    let value = Sequenced {
        sequence,
        value: RoundRef {
            round,
            opened_disagreements: opened,
        },
    };
    ctx.emit(&value, |v| {
        let r = &v.value.round;
        let mut out = format!(
            "round {} ({}): {}, {} datasets\n",
            r.index,
            r.label,
            r.status,
            r.datasets.len()
        );
        if v.value.opened_disagreements > 0 {
            out.push_str(&format!(
                "opened {} disagreement records\n",
                v.value.opened_disagreements
            ));
        }
        out
    })
}

#[derive(Serialize)]
struct Recorded {
    dataset: String,
    element: String,
    standard: Standard,
    rater: String,
    rating: Rating,
    revision: u32,
}

fn eval(ctx: &Ctx, cmd: EvalCmd) -> Result {
    match cmd {
        EvalCmd::Import { file } => {
            let text = read_file(&file)?;
            let (summary, sequence) = ctx.update(OPERATOR, |c, rubric| {
                Ok(import_evaluations(c, rubric, text.as_bytes())?)
            })?;
            ctx.emit(
                &Sequenced {
                    sequence,
                    value: summary,
                },
                |s: &Sequenced<ImportSummary>| format!("imported {} rows\n", s.value.rows),
            )
        }
        EvalCmd::Export { out } => {
            let campaign = ctx.store.load_campaign(ctx.campaign()?)?;
            Sink::to(out).csv(|buf| export_evaluations(&campaign, buf).map_err(|e| e.to_string()))
        }
        EvalCmd::Record {
            dataset,
            element,
            standard,
            rater,
            rating,
            comment,
            expected_revision,
        } => {
            let standard: Standard = parse(&standard)?;
            let rating: Rating = parse(&rating)?;
            let mut input = EvaluationInput::new(&dataset, &element, standard, &rater, rating).with_comment(comment);
            input.expected_revision = expected_revision;
            let (revision, sequence) = ctx.update(&rater, |c, rubric| Ok(c.record_evaluation(rubric, input)?))?;
            let value = Sequenced {
                sequence,
                value: Recorded {
                    dataset,
                    element,
                    standard,
                    rater,
                    rating,
                    revision,
                },
            };
            ctx.emit(&value, |v| {
                let r = &v.value;
                format!(
                    "{}:{}:{} {} = {} (revision {})\n",
                    r.dataset, r.element, r.standard, r.rater, r.rating, r.revision
                )
            })
        }
    }
}

fn scope(arg: ScopeArg) -> MatrixScope {
    match arg {
        ScopeArg::Combined => MatrixScope::Combined,
        ScopeArg::Minimum => MatrixScope::Minimum,
        ScopeArg::Excellence => MatrixScope::Excellence,
    }
}

fn series_query(args: &BasisArgs) -> SeriesQuery {
    SeriesQuery {
        basis: if args.pre_resolution {
            RatingBasis::PreResolution
        } else {
            RatingBasis::Latest
        },
        scope: scope(args.scope),
        count_standing: !args.exclude_standing,
    }
}

fn stats(ctx: &Ctx, cmd: StatsCmd) -> Result {
    let id = ctx.campaign()?;
    match cmd {
        StatsCmd::Icc {
            dataset,
            all: _,
            scope: s,
        } => {
            let stats = service::icc_document(
                &ctx.store,
                id,
                &IccQuery {
                    dataset,
                    scope: scope(s),
                },
            )?;
            match ctx.format {
                Format::Csv => Sink::stdout().csv(|buf| write_icc_csv(&stats, buf).map_err(|e| e.to_string())),
                _ => ctx.emit(&stats, human::icc),
            }
        }
        StatsCmd::Disagreements { by_element, basis, .. } => {
            let query = series_query(&basis);
            if by_element {
                ctx.emit(&service::elements_document(&ctx.store, id, &query)?, human::elements)
            } else {
                ctx.emit(&service::rounds_document(&ctx.store, id, &query)?, human::rounds)
            }
        }
        StatsCmd::Completeness { round } => ctx.emit(&service::completeness_document(&ctx.store, id, round)?, |r| {
            human::completeness(r)
        }),
    }
}

fn record_key(key: &str) -> Result<CellKey> {
    parse(key)
}

fn resolve(ctx: &Ctx, cmd: ResolveCmd) -> Result {
    let id = ctx.campaign()?;
    let changed = |ctx: &Ctx, record: DisagreementRecord, sequence: u64| {
        ctx.emit(
            &Sequenced {
                sequence,
                value: record,
            },
            |v| human::record(&v.value),
        )
    };
    match cmd {
        ResolveCmd::Detect { round } => {
            let (open, _) = ctx.update(OPERATOR, |c, rubric| Ok(c.detect_disagreements(rubric, round)?))?;
            ctx.emit(&open, |r| human::records(r))
        }
        ResolveCmd::List { round, status } => {
            let status: Option<DisagreementStatus> = status
                .map(|s| {
                    serde_json::from_value(serde_json::Value::String(s.clone()))
                        .map_err(|_| CliError::Usage(format!("unknown status {s:?}")))
                })
                .transpose()?;
            let campaign = ctx.store.load_campaign(id)?;
            if let Some(r) = round {
                campaign.round(r)?;
            }
            let records: Vec<DisagreementRecord> = campaign
                .all_disagreements()
                .filter(|r| round.is_none_or(|ix| r.round == ix))
                .filter(|r| status.is_none_or(|s| r.status == s))
                .cloned()
                .collect();
            ctx.emit(&records, |r| human::records(r))
        }
        ResolveCmd::Act {
            key,
            rater,
            stance,
            comment,
            new_rating,
        } => {
            let key = record_key(&key)?;
            let action = ResolutionAction {
                rater: rater.clone(),
                stance: parse::<Stance>(&stance)?,
                comment,
                new_rating: new_rating.as_deref().map(parse::<Rating>).transpose()?,
                timestamp: Utc::now(),
            };
            let (record, sequence) = ctx.update(&rater, |c, _| Ok(c.submit_resolution(&key, action)?.clone()))?;
            changed(ctx, record, sequence)
        }
        ResolveCmd::Close { key, closer, rationale } => {
            let key = record_key(&key)?;
            let (record, sequence) = ctx.update(&closer, |c, _| {
                Ok(c.close_standing(&key, &closer, &rationale, Utc::now())?.clone())
            })?;
            changed(ctx, record, sequence)
        }
        ResolveCmd::Tag { key, kind, note } => {
            let key = record_key(&key)?;
            let tag = ChallengeTag::new(parse::<ChallengeKind>(&kind)?, note);
            let (record, sequence) = ctx.update(OPERATOR, |c, _| Ok(c.tag_challenge(&key, tag)?.clone()))?;
            changed(ctx, record, sequence)
        }
        ResolveCmd::Reference {
            key,
            author,
            text,
            proposed_rating,
        } => {
            let comment = ReferenceComment {
                key: record_key(&key)?,
                author: author.clone(),
                text,
                proposed_rating: parse(&proposed_rating)?,
            };
            let (record, sequence) = ctx.update(&author, |c, _| Ok(c.set_reference_comment(comment)?.clone()))?;
            changed(ctx, record, sequence)
        }
        ResolveCmd::Summary { round } => {
            let campaign = ctx.store.load_campaign(id)?;
            ctx.emit(&campaign.resolution_summary(round)?, human::summary)
        }
        ResolveCmd::Export { round, out } => {
            let campaign = ctx.store.load_campaign(id)?;
            Sink::to(out).csv(|buf| export_resolution_table(&campaign, round, buf).map_err(|e| e.to_string()))
        }
    }
}

fn report(ctx: &Ctx, cmd: ReportCmd) -> Result {
    let id = ctx.campaign()?;
    match cmd {
        ReportCmd::Irr(ReportArgs { basis, out }) => {
            let series = service::irr_document(&ctx.store, id, &series_query(&basis))?;
            let sink = Sink::to(out);
            match ctx.format {
                Format::Csv => sink.csv(|buf| write_irr_csv(&series, buf).map_err(|e| e.to_string())),
                _ => ctx.emit_to(&sink, &series, human::irr),
            }
        }
        ReportCmd::Rounds(ReportArgs { basis, out }) => {
            let series = service::rounds_document(&ctx.store, id, &series_query(&basis))?;
            let sink = Sink::to(out);
            match ctx.format {
                Format::Csv => sink.csv(|buf| write_rounds_csv(&series, buf).map_err(|e| e.to_string())),
                _ => ctx.emit_to(&sink, &series, human::rounds),
            }
        }
        ReportCmd::Elements(ReportArgs { basis, out }) => {
            let table = service::elements_document(&ctx.store, id, &series_query(&basis))?;
            let sink = Sink::to(out);
            match ctx.format {
                Format::Csv => sink.csv(|buf| write_elements_csv(&table, buf).map_err(|e| e.to_string())),
                _ => ctx.emit_to(&sink, &table, human::elements),
            }
        }
        ReportCmd::PlotData { series, args } => {
            let kind: PlotKind = serde_json::from_value(serde_json::Value::String(series.clone()))
                .map_err(|_| CliError::Usage(format!("unknown plot series {series:?}, expected irr or rounds")))?;
            let doc = service::plot_document(&ctx.store, id, &PlotQuery::new(kind, series_query(&args.basis)))?;
            // Plot data is a document whatever the requested format.
            Sink::to(args.out).text(&render_document(&doc))
        }
    }
}
