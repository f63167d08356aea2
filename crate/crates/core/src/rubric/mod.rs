//! Rubric documents: groups of elements, each graded at a minimum
//! standard (pass/fail) and a standard of excellence (none/partial/full).
//!
//! Rubric documents are JSON with the top-level fields `id`, `version`,
//! `groups` and `guidance`. Unknown fields are rejected at every level.

mod default;
mod version;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Coded, ErrorClass};
use crate::scale::{Rating, Scale, Standard};

pub use default::{default_rubric, DEFAULT_RUBRIC_JSON};
pub use version::RubricVersion;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricSpec {
    pub id: String,
    pub version: RubricVersion,
    pub groups: Vec<ElementGroup>,
    #[serde(default)]
    pub guidance: Vec<GuidanceAsset>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementGroup {
    pub id: String,
    pub title: String,
    pub elements: Vec<RubricElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricElement {
    pub id: String,
    pub title: String,
    /// Optional in the document so that a missing level surfaces as a
    /// validation finding rather than a parse error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimum: Option<Criterion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excellence: Option<Criterion>,
    #[serde(default)]
    pub guidance_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub scale: Scale,
    /// What the documentation has to show at this standard.
    pub summary: String,
    /// Prose describing when each rating on the scale applies.
    #[serde(default)]
    pub levels: Vec<LevelText>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelText {
    pub rating: Rating,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuidanceKind {
    Glossary,
    Faq,
    Principle,
    ExampleEvaluation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceAsset {
    pub id: String,
    pub kind: GuidanceKind,
    pub title: String,
    pub body: String,
}

/// Identifies an exact rubric revision.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricRef {
    pub id: String,
    pub version: RubricVersion,
}

impl fmt::Display for RubricRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.id, self.version)
    }
}

impl RubricSpec {
    pub fn reference(&self) -> RubricRef {
        RubricRef {
            id: self.id.clone(),
            version: self.version.clone(),
        }
    }

    /// Elements in document order across all groups.
    pub fn elements(&self) -> impl Iterator<Item = &RubricElement> {
        self.groups.iter().flat_map(|g| g.elements.iter())
    }

    pub fn element(&self, id: &str) -> Option<&RubricElement> {
        self.elements().find(|e| e.id == id)
    }

    pub fn element_count(&self) -> usize {
        self.groups.iter().map(|g| g.elements.len()).sum()
    }

    /// Every gradable `(element, standard)` pair, in document order.
    pub fn subjects(&self) -> impl Iterator<Item = (&str, Standard)> {
        self.elements()
            .flat_map(|e| Standard::ALL.into_iter().map(move |s| (e.id.as_str(), s)))
    }

    pub fn guidance_for<'a>(&'a self, element: &'a RubricElement) -> impl Iterator<Item = &'a GuidanceAsset> {
        element
            .guidance_refs
            .iter()
            .filter_map(move |r| self.guidance.iter().find(|g| &g.id == r))
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("rubric serializes");
        out.push('\n');
        out
    }
}

/// Parses and validates a rubric document.
pub fn load_rubric(source: &str) -> Result<RubricSpec, RubricError> {
    let spec: RubricSpec = serde_json::from_str(source).map_err(|e| RubricError::Parse(e.to_string()))?;
    let report = validate_rubric(&spec);
    if report.is_clean() {
        Ok(spec)
    } else {
        Err(RubricError::Invalid(report))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingCode {
    UnversionedSpec,
    InvalidIdentifier,
    DuplicateGroupId,
    DuplicateElementId,
    DuplicateGuidanceId,
    EmptyRubric,
    EmptyGroup,
    MissingLevel,
    WrongScale,
    LevelOffScale,
    DuplicateLevelText,
    UnknownGuidanceRef,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::UnversionedSpec => "unversioned spec",
            FindingCode::InvalidIdentifier => "invalid identifier",
            FindingCode::DuplicateGroupId => "duplicate group id",
            FindingCode::DuplicateElementId => "duplicate element id",
            FindingCode::DuplicateGuidanceId => "duplicate guidance id",
            FindingCode::EmptyRubric => "empty rubric",
            FindingCode::EmptyGroup => "empty group",
            FindingCode::MissingLevel => "missing level",
            FindingCode::WrongScale => "wrong scale",
            FindingCode::LevelOffScale => "level off scale",
            FindingCode::DuplicateLevelText => "duplicate level text",
            FindingCode::UnknownGuidanceRef => "unknown guidance ref",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    /// Dotted location inside the document, e.g. `groups[2].elements[0]`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code.as_str(), self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has(&self, code: FindingCode) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }

    fn push(&mut self, code: FindingCode, path: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            code,
            path: path.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Identifiers are restricted so they can be embedded in cell keys and URLs.
pub fn is_valid_identifier(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

/// Checks every structural invariant of a rubric. Never fails; problems are
/// reported as findings.
pub fn validate_rubric(spec: &RubricSpec) -> ValidationReport {
    let mut report = ValidationReport::default();

    if spec.version.as_str().trim().is_empty() {
        report.push(FindingCode::UnversionedSpec, "version", "version string is empty");
    }
    if !is_valid_identifier(&spec.id) {
        report.push(FindingCode::InvalidIdentifier, "id", format!("rubric id {:?}", spec.id));
    }

    let mut guidance_ids = BTreeSet::new();
    for (i, asset) in spec.guidance.iter().enumerate() {
        let path = format!("guidance[{i}]");
        if !is_valid_identifier(&asset.id) {
            report.push(
                FindingCode::InvalidIdentifier,
                &path,
                format!("guidance id {:?}", asset.id),
            );
        }
        if !guidance_ids.insert(asset.id.as_str()) {
            report.push(
                FindingCode::DuplicateGuidanceId,
                &path,
                format!("guidance id {:?} repeated", asset.id),
            );
        }
    }

    if spec.groups.is_empty() {
        report.push(FindingCode::EmptyRubric, "groups", "rubric has no element groups");
    }
    let mut group_ids = BTreeSet::new();
    let mut element_ids: BTreeMap<&str, String> = BTreeMap::new();
    for (gi, group) in spec.groups.iter().enumerate() {
        let gpath = format!("groups[{gi}]");
        if !is_valid_identifier(&group.id) {
            report.push(
                FindingCode::InvalidIdentifier,
                &gpath,
                format!("group id {:?}", group.id),
            );
        }
        if !group_ids.insert(group.id.as_str()) {
            report.push(
                FindingCode::DuplicateGroupId,
                &gpath,
                format!("group id {:?} repeated", group.id),
            );
        }
        if group.elements.is_empty() {
            report.push(
                FindingCode::EmptyGroup,
                &gpath,
                format!("group {:?} has no elements", group.id),
            );
        }
        for (ei, element) in group.elements.iter().enumerate() {
            let epath = format!("{gpath}.elements[{ei}]");
            if !is_valid_identifier(&element.id) {
                report.push(
                    FindingCode::InvalidIdentifier,
                    &epath,
                    format!("element id {:?}", element.id),
                );
            }
            if let Some(first) = element_ids.get(element.id.as_str()) {
                report.push(
                    FindingCode::DuplicateElementId,
                    &epath,
                    format!("element id {:?} already defined at {first}", element.id),
                );
            } else {
                element_ids.insert(element.id.as_str(), epath.clone());
            }
            for standard in Standard::ALL {
                let criterion = match standard {
                    Standard::Minimum => element.minimum.as_ref(),
                    Standard::Excellence => element.excellence.as_ref(),
                };
                let cpath = format!("{epath}.{standard}");
                match criterion {
                    None => report.push(
                        FindingCode::MissingLevel,
                        &cpath,
                        format!("element {:?} has no {standard} criterion", element.id),
                    ),
                    Some(c) => check_criterion(&mut report, &cpath, standard, c),
                }
            }
            for r in &element.guidance_refs {
                if !guidance_ids.contains(r.as_str()) {
                    report.push(FindingCode::UnknownGuidanceRef, &epath, format!("guidance ref {r:?}"));
                }
            }
        }
    }
    report
}

fn check_criterion(report: &mut ValidationReport, path: &str, standard: Standard, c: &Criterion) {
    if c.scale != standard.scale() {
        report.push(
            FindingCode::WrongScale,
            path,
            format!(
                "{standard} criterion must use the {} scale, found {}",
                standard.scale(),
                c.scale
            ),
        );
    }
    let mut seen = BTreeSet::new();
    for level in &c.levels {
        if !level.rating.is_on_scale_for(standard) {
            report.push(
                FindingCode::LevelOffScale,
                path,
                format!("{} is not a {standard} rating", level.rating),
            );
        }
        if !seen.insert(level.rating) {
            report.push(
                FindingCode::DuplicateLevelText,
                path,
                format!("{} described twice", level.rating),
            );
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RubricError {
    #[error("malformed rubric document: {0}")]
    Parse(String),
    #[error("rubric failed validation: {0}")]
    Invalid(ValidationReport),
}

impl Coded for RubricError {
    fn code(&self) -> &'static str {
        match self {
            RubricError::Parse(_) => "rubric_parse",
            RubricError::Invalid(_) => "rubric_invalid",
        }
    }

    fn class(&self) -> ErrorClass {
        match self {
            RubricError::Parse(_) => ErrorClass::Malformed,
            RubricError::Invalid(_) => ErrorClass::Domain,
        }
    }
}
