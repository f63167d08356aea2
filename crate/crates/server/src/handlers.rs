use std::collections::BTreeMap;
use std::str::FromStr;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::Utc;
use serde::{Deserialize, Serialize};

use curalens_core::auth::{verify_token, AuthError};
use curalens_core::campaign::{Campaign, CampaignOptions, CampaignStatus, DatasetEntry, Rater, Round, OPERATOR};
use curalens_core::report::render_document;
use curalens_core::resolution::{
    ChallengeKind, ChallengeTag, DisagreementRecord, DisagreementStatus, ResolutionAction, Stance,
};
use curalens_core::rubric::{GuidanceAsset, RubricRef};
use curalens_core::service::{self, IccQuery, PlotQuery, SeriesQuery};
use curalens_core::{
    default_rubric, CellKey, Error, EvaluationCell, EvaluationInput, Rating, RoundStatus, Standard, Store,
};

use crate::error::ApiError;

type ApiResult = Result<Response, ApiError>;

fn document<T: Serialize>(status: StatusCode, value: &T) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        render_document(value),
    )
        .into_response()
}

fn ok<T: Serialize>(value: &T) -> ApiResult {
    Ok(document(StatusCode::OK, value))
}

/// Runs store work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::malformed(e.body_text()))
}

fn query<T>(params: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    params.map(|Query(v)| v).map_err(|e| ApiError::malformed(e.body_text()))
}

fn literal<T: FromStr>(s: &str) -> Result<T, ApiError>
where
    T::Err: Into<Error>,
{
    s.parse::<T>().map_err(|e| ApiError::from(e.into()))
}

/// The authenticated caller of a campaign-scoped route.
struct Caller {
    subject: String,
}

impl Caller {
    fn is_operator(&self) -> bool {
        self.subject == OPERATOR
    }

    fn require_operator(&self) -> Result<(), ApiError> {
        if self.is_operator() {
            Ok(())
        } else {
            Err(ApiError::forbidden("this route requires the operator token"))
        }
    }

    /// Operators may act for any rater; raters only for themselves.
    fn acting_as(&self, rater: Option<String>) -> Result<String, ApiError> {
        match rater {
            Some(r) if r != self.subject && !self.is_operator() => Err(ApiError::forbidden(format!(
                "token for {:?} cannot act as {r:?}",
                self.subject
            ))),
            Some(r) => Ok(r),
            None => Ok(self.subject.clone()),
        }
    }
}

fn authenticate(store: &Store, campaign: &str, headers: &HeaderMap) -> Result<Caller, ApiError> {
    let secret = store.campaign_secret(campaign)?;
    let value = headers.get(header::AUTHORIZATION).ok_or(AuthError::Missing)?;
    let token = value
        .to_str()
        .ok()
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or(AuthError::Malformed)?;
    let subject = verify_token(&secret, campaign, token.trim())?;
    Ok(Caller { subject })
}

/// `<campaign>:<dataset>:<element>:<standard>`
fn parse_record_key(raw: &str) -> Result<(String, CellKey), ApiError> {
    let (campaign, cell) = raw
        .split_once(':')
        .ok_or_else(|| ApiError::malformed(format!("disagreement key {raw:?} has no campaign prefix")))?;
    Ok((campaign.to_owned(), literal::<CellKey>(cell)?))
}

pub async fn not_found(uri: Uri) -> ApiError {
    ApiError::new(
        StatusCode::NOT_FOUND,
        "no_route",
        format!("no route for {}", uri.path()),
    )
}

pub async fn get_rubric(State(store): State<Store>, Path(id): Path<String>) -> ApiResult {
    let rubric = blocking(move || Ok(store.find_rubric(&id)?)).await?;
    ok(&rubric)
}

#[derive(Serialize)]
struct GuidanceDocument {
    rubric: RubricRef,
    assets: Vec<GuidanceAsset>,
    /// Guidance asset ids per element id.
    elements: BTreeMap<String, Vec<String>>,
}

pub async fn get_guidance(State(store): State<Store>, Path(id): Path<String>) -> ApiResult {
    let rubric = blocking(move || Ok(store.find_rubric(&id)?)).await?;
    ok(&GuidanceDocument {
        rubric: rubric.reference(),
        elements: rubric
            .elements()
            .map(|e| (e.id.clone(), e.guidance_refs.clone()))
            .collect(),
        assets: rubric.guidance,
    })
}

fn default_blind() -> bool {
    CampaignOptions::default().blind
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewCampaign {
    id: String,
    /// `id` or `id@version`; the default rubric when absent.
    #[serde(default)]
    rubric: Option<String>,
    raters: Vec<String>,
    #[serde(default = "default_blind")]
    blind: bool,
}

#[derive(Serialize)]
struct CreatedCampaign {
    campaign: String,
    rubric: RubricRef,
    sequence: u64,
    /// Bearer token per subject: the operator and each rater.
    tokens: BTreeMap<String, String>,
}

pub async fn create_campaign(
    State(store): State<Store>,
    payload: Result<Json<NewCampaign>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    let created = blocking(move || {
        let rubric = match &req.rubric {
            Some(spec) => store.find_rubric(spec)?,
            None => default_rubric(),
        };
        let mut campaign = Campaign::create(
            &req.id,
            &rubric,
            req.raters.iter().map(Rater::new).collect(),
            CampaignOptions { blind: req.blind },
        )?;
        let version = store.create_campaign(&mut campaign)?;
        Ok(CreatedCampaign {
            tokens: service::campaign_tokens(&store, &campaign.id)?,
            campaign: campaign.id,
            rubric: campaign.rubric,
            sequence: version.sequence,
        })
    })
    .await?;
    Ok(document(StatusCode::CREATED, &created))
}

/// A campaign without its ratings, which blind mode may hide.
#[derive(Serialize)]
struct CampaignSummary {
    id: String,
    rubric: RubricRef,
    raters: Vec<Rater>,
    blind: bool,
    status: CampaignStatus,
    rounds: Vec<Round>,
    sequence: u64,
}

pub async fn get_campaign(State(store): State<Store>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult {
    let summary = blocking(move || {
        authenticate(&store, &id, &headers)?;
        let c = store.load_campaign(&id)?;
        Ok(CampaignSummary {
            id: c.id,
            rubric: c.rubric,
            raters: c.raters,
            blind: c.blind,
            status: c.status,
            rounds: c.rounds,
            sequence: c.last_sequence,
        })
    })
    .await?;
    ok(&summary)
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum DatasetSpec {
    Id(String),
    Entry(DatasetEntry),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewRound {
    label: String,
    datasets: Vec<DatasetSpec>,
}

#[derive(Serialize)]
struct RoundChange {
    round: Round,
    sequence: u64,
}

pub async fn add_round(
    State(store): State<Store>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<NewRound>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    let change = blocking(move || {
        let caller = authenticate(&store, &id, &headers)?;
        caller.require_operator()?;
        let datasets = req
            .datasets
            .into_iter()
            .map(|d| match d {
                DatasetSpec::Id(id) => DatasetEntry::new(id),
                DatasetSpec::Entry(entry) => entry,
            })
            .collect();
        let (round, version) = service::update_campaign(&store, &id, &caller.subject, |c, _| {
            let ix = c.add_round(&req.label, datasets)?;
            Ok(c.round(ix)?.clone())
        })?;
        Ok(RoundChange {
            round,
            sequence: version.sequence,
        })
    })
    .await?;
    ok(&change)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    to: String,
}

pub async fn transition_round(
    State(store): State<Store>,
    Path((id, ix)): Path<(String, u32)>,
    headers: HeaderMap,
    payload: Result<Json<Transition>, JsonRejection>,
) -> ApiResult {
    let to: RoundStatus = literal(&body(payload)?.to)?;
    let change = blocking(move || {
        let caller = authenticate(&store, &id, &headers)?;
        caller.require_operator()?;
        // Entering resolving opens the round's disagreement records in the
        // same write, so an incomplete round stays collecting.
        let (round, version) = service::update_campaign(&store, &id, &caller.subject, |c, rubric| {
            c.transition_round(ix, to)?;
            if to == RoundStatus::Resolving {
                c.detect_disagreements(rubric, ix)?;
            }
            Ok(c.round(ix)?.clone())
        })?;
        Ok(RoundChange {
            round,
            sequence: version.sequence,
        })
    })
    .await?;
    ok(&change)
}

/// Literal fields stay strings so bad values surface as domain errors
/// (`off_scale`) rather than parse failures.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationBody {
    dataset: String,
    element: String,
    standard: String,
    #[serde(default)]
    rater: Option<String>,
    rating: String,
    #[serde(default)]
    comment: String,
    #[serde(default)]
    expected_revision: Option<u32>,
}

#[derive(Serialize)]
struct StoredEvaluation {
    cell: EvaluationCell,
    revision: u32,
    sequence: u64,
}

pub async fn put_evaluation(
    State(store): State<Store>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<EvaluationBody>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    let standard: Standard = literal(&req.standard)?;
    let rating: Rating = literal(&req.rating)?;
    let stored = blocking(move || {
        let caller = authenticate(&store, &id, &headers)?;
        let rater = caller.acting_as(req.rater)?;
        let mut input =
            EvaluationInput::new(req.dataset, req.element, standard, rater.clone(), rating).with_comment(req.comment);
        input.expected_revision = req.expected_revision;
        let key = CellKey::new(input.dataset.clone(), input.element.clone(), standard);
        let (cell, version) = service::update_campaign(&store, &id, &caller.subject, |c, rubric| {
            c.record_evaluation(rubric, input)?;
            Ok(c.cell(&key, &rater).expect("cell just recorded").clone())
        })?;
        Ok(StoredEvaluation {
            revision: cell.revision,
            cell,
            sequence: version.sequence,
        })
    })
    .await?;
    ok(&stored)
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationFilter {
    rater: Option<String>,
    dataset: Option<String>,
    element: Option<String>,
}

/// A cell's ratings are visible to other raters once its round has left
/// collection, or always when the campaign is not blind.
fn visible_to(campaign: &Campaign, caller: &Caller, cell: &EvaluationCell) -> bool {
    !campaign.blind
        || caller.is_operator()
        || cell.rater == caller.subject
        || campaign
            .round_of_dataset(&cell.dataset)
            .is_some_and(|r| r.status.is_closed())
}

pub async fn list_evaluations(
    State(store): State<Store>,
    Path(id): Path<String>,
    headers: HeaderMap,
    params: Result<Query<EvaluationFilter>, QueryRejection>,
) -> ApiResult {
    let filter = query(params)?;
    let cells = blocking(move || {
        let caller = authenticate(&store, &id, &headers)?;
        let campaign = store.load_campaign(&id)?;
        if let Some(dataset) = &filter.dataset {
            if campaign.round_of_dataset(dataset).is_none() {
                return Err(curalens_core::CampaignError::UnknownDataset(dataset.clone()).into());
            }
        }
        if let Some(rater) = &filter.rater {
            if campaign.rater(rater).is_none() {
                return Err(curalens_core::CampaignError::UnknownRater(rater.clone()).into());
            }
            let hidden = campaign.blind
                && !caller.is_operator()
                && *rater != caller.subject
                && campaign
                    .rounds
                    .iter()
                    .filter(|r| filter.dataset.as_ref().is_none_or(|d| r.has_dataset(d)))
                    .any(|r| !r.status.is_closed());
            if hidden {
                return Err(ApiError::forbidden(format!(
                    "blind campaign: ratings of {rater:?} are hidden until the round is resolving"
                )));
            }
        }
        let cells: Vec<EvaluationCell> = campaign
            .evaluations()
            .filter(|c| filter.rater.as_ref().is_none_or(|r| &c.rater == r))
            .filter(|c| filter.dataset.as_ref().is_none_or(|d| &c.dataset == d))
            .filter(|c| filter.element.as_ref().is_none_or(|e| &c.element == e))
            .filter(|c| visible_to(&campaign, &caller, c))
            .cloned()
            .collect();
        Ok(cells)
    })
    .await?;
    ok(&cells)
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RoundFilter {
    round: Option<u32>,
}

pub async fn completeness(
    State(store): State<Store>,
    Path(id): Path<String>,
    headers: HeaderMap,
    params: Result<Query<RoundFilter>, QueryRejection>,
) -> ApiResult {
    let filter = query(params)?;
    let reports = blocking(move || {
        authenticate(&store, &id, &headers)?;
        Ok(service::completeness_document(&store, &id, filter.round)?)
    })
    .await?;
    ok(&reports)
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DisagreementFilter {
    round: Option<u32>,
    status: Option<DisagreementStatus>,
}

pub async fn list_disagreements(
    State(store): State<Store>,
    Path(id): Path<String>,
    headers: HeaderMap,
    params: Result<Query<DisagreementFilter>, QueryRejection>,
) -> ApiResult {
    let filter = query(params)?;
    let records = blocking(move || {
        authenticate(&store, &id, &headers)?;
        let campaign = store.load_campaign(&id)?;
        if let Some(round) = filter.round {
            campaign.round(round)?;
        }
        let records: Vec<DisagreementRecord> = campaign
            .all_disagreements()
            .filter(|r| filter.round.is_none_or(|ix| r.round == ix))
            .filter(|r| filter.status.is_none_or(|s| r.status == s))
            .cloned()
            .collect();
        Ok(records)
    })
    .await?;
    ok(&records)
}

#[derive(Serialize)]
struct RecordChange {
    record: DisagreementRecord,
    sequence: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionBody {
    #[serde(default)]
    rater: Option<String>,
    stance: String,
    #[serde(default)]
    comment: String,
    #[serde(default)]
    new_rating: Option<String>,
}

pub async fn submit_action(
    State(store): State<Store>,
    Path(key): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<ActionBody>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    let (id, key) = parse_record_key(&key)?;
    let stance: Stance = literal(&req.stance)?;
    let new_rating = req.new_rating.as_deref().map(literal::<Rating>).transpose()?;
    let change = blocking(move || {
        let caller = authenticate(&store, &id, &headers)?;
        let rater = caller.acting_as(req.rater)?;
        let action = ResolutionAction {
            rater,
            stance,
            comment: req.comment,
            new_rating,
            timestamp: Utc::now(),
        };
        let (record, version) = service::update_campaign(&store, &id, &caller.subject, |c, _| {
            Ok(c.submit_resolution(&key, action)?.clone())
        })?;
        Ok(RecordChange {
            record,
            sequence: version.sequence,
        })
    })
    .await?;
    ok(&change)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagBody {
    kind: String,
    #[serde(default)]
    note: String,
}

pub async fn add_tag(
    State(store): State<Store>,
    Path(key): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<TagBody>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    let (id, key) = parse_record_key(&key)?;
    let tag = ChallengeTag::new(literal::<ChallengeKind>(&req.kind)?, req.note);
    let change = blocking(move || {
        let caller = authenticate(&store, &id, &headers)?;
        let (record, version) = service::update_campaign(&store, &id, &caller.subject, |c, _| {
            Ok(c.tag_challenge(&key, tag)?.clone())
        })?;
        Ok(RecordChange {
            record,
            sequence: version.sequence,
        })
    })
    .await?;
    ok(&change)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloseBody {
    /// Defaults to the caller; only the operator may name someone else.
    #[serde(default)]
    closer: Option<String>,
    rationale: String,
}

pub async fn close_standing(
    State(store): State<Store>,
    Path(key): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<CloseBody>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    let (id, key) = parse_record_key(&key)?;
    let change = blocking(move || {
        let caller = authenticate(&store, &id, &headers)?;
        let closer = caller.acting_as(req.closer)?;
        let (record, version) = service::update_campaign(&store, &id, &caller.subject, |c, _| {
            Ok(c.close_standing(&key, &closer, &req.rationale, Utc::now())?.clone())
        })?;
        Ok(RecordChange {
            record,
            sequence: version.sequence,
        })
    })
    .await?;
    ok(&change)
}

pub async fn stats_icc(
    State(store): State<Store>,
    Path(id): Path<String>,
    headers: HeaderMap,
    params: Result<Query<IccQuery>, QueryRejection>,
) -> ApiResult {
    let q = query(params)?;
    let stats = blocking(move || {
        authenticate(&store, &id, &headers)?;
        Ok(service::icc_document(&store, &id, &q)?)
    })
    .await?;
    ok(&stats)
}

pub async fn stats_rounds(
    State(store): State<Store>,
    Path(id): Path<String>,
    headers: HeaderMap,
    params: Result<Query<SeriesQuery>, QueryRejection>,
) -> ApiResult {
    let q = query(params)?;
    let series = blocking(move || {
        authenticate(&store, &id, &headers)?;
        Ok(service::rounds_document(&store, &id, &q)?)
    })
    .await?;
    ok(&series)
}

pub async fn stats_elements(
    State(store): State<Store>,
    Path(id): Path<String>,
    headers: HeaderMap,
    params: Result<Query<SeriesQuery>, QueryRejection>,
) -> ApiResult {
    let q = query(params)?;
    let table = blocking(move || {
        authenticate(&store, &id, &headers)?;
        Ok(service::elements_document(&store, &id, &q)?)
    })
    .await?;
    ok(&table)
}

pub async fn plot_data(
    State(store): State<Store>,
    Path(id): Path<String>,
    headers: HeaderMap,
    params: Result<Query<PlotQuery>, QueryRejection>,
) -> ApiResult {
    let q = query(params)?;
    let doc = blocking(move || {
        authenticate(&store, &id, &headers)?;
        Ok(service::plot_document(&store, &id, &q)?)
    })
    .await?;
    ok(&doc)
}
