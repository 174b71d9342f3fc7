//! Turning class labels into the text that gets embedded.
//!
//! Three families of prompt exist:
//!
//! - label only, in one of four [`PromptFormat`]s (`dog barking`,
//!   `dog barking.`, `Dog barking`, `Dog barking.`);
//! - template + label, e.g. `A sound clip of dog barking.`;
//! - label + description, e.g. `Toot. A short, high-pitched sound ...`.
//!
//! Templates and descriptions are never combined in one prompt.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::{DatasetManifest, DescriptionVariant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("label is empty")]
    EmptyLabel,
    #[error("template is empty; use a label-only prompt instead")]
    EmptyTemplate,
    #[error("description is empty")]
    EmptyDescription,
    #[error("a prompt spec cannot combine template `{0}` with a description")]
    TemplateWithDescription(String),
    #[error("unknown template id `{0}`")]
    UnknownTemplate(String),
    #[error("class `{class_id}` has no {variant} description")]
    MissingDescription {
        class_id: String,
        variant: DescriptionVariant,
    },
    #[error("rendered prompt for class {class_index} contains an underscore: {text:?}")]
    Underscore { class_index: usize, text: String },
    #[error("invalid prompt spec `{spec}`: {reason}")]
    BadSpec { spec: String, reason: String },
    #[error("template registry line {line}: {reason}")]
    BadTemplate { line: usize, reason: String },
}

/// Casing and punctuation of a label-only prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptFormat {
    Lower,
    LowerPeriod,
    Upper,
    UpperPeriod,
}

impl PromptFormat {
    pub const ALL: [PromptFormat; 4] = [
        PromptFormat::Lower,
        PromptFormat::LowerPeriod,
        PromptFormat::Upper,
        PromptFormat::UpperPeriod,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptFormat::Lower => "lower",
            PromptFormat::LowerPeriod => "lower_period",
            PromptFormat::Upper => "upper",
            PromptFormat::UpperPeriod => "upper_period",
        }
    }

    fn is_upper(self) -> bool {
        matches!(self, PromptFormat::Upper | PromptFormat::UpperPeriod)
    }

    fn has_period(self) -> bool {
        matches!(self, PromptFormat::LowerPeriod | PromptFormat::UpperPeriod)
    }
}

impl fmt::Display for PromptFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptFormat::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| alloc::format!("unknown prompt format `{s}`"))
    }
}

/// How the text behind one text-embedding matrix was built.
///
/// String form: `<format>[,template=<id>][,desc=<variant>]`, for example
/// `upper_period`, `upper_period,template=7` or `upper_period,desc=base`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PromptSpecFields")]
pub struct PromptSpec {
    format: PromptFormat,
    template_id: Option<String>,
    description_variant: Option<DescriptionVariant>,
}

#[derive(Deserialize)]
struct PromptSpecFields {
    format: PromptFormat,
    #[serde(default)]
    template_id: Option<String>,
    #[serde(default)]
    description_variant: Option<DescriptionVariant>,
}

impl TryFrom<PromptSpecFields> for PromptSpec {
    type Error = PromptError;

    fn try_from(f: PromptSpecFields) -> Result<Self, Self::Error> {
        PromptSpec::new(f.format, f.template_id, f.description_variant)
    }
}

impl PromptSpec {
    /// `template_id` of `"none"` is the same as no template.
    pub fn new(
        format: PromptFormat,
        template_id: Option<String>,
        description_variant: Option<DescriptionVariant>,
    ) -> Result<Self, PromptError> {
        let template_id = template_id.filter(|t| t != "none");
        if let (Some(t), Some(_)) = (&template_id, description_variant) {
            return Err(PromptError::TemplateWithDescription(t.clone()));
        }
        Ok(Self {
            format,
            template_id,
            description_variant,
        })
    }

    pub fn class_only(format: PromptFormat) -> Self {
        Self {
            format,
            template_id: None,
            description_variant: None,
        }
    }

    pub fn with_template(format: PromptFormat, template_id: impl Into<String>) -> Self {
        Self {
            format,
            template_id: Some(template_id.into()),
            description_variant: None,
        }
        .normalize_none()
    }

    pub fn with_description(format: PromptFormat, variant: DescriptionVariant) -> Self {
        Self {
            format,
            template_id: None,
            description_variant: Some(variant),
        }
    }

    fn normalize_none(mut self) -> Self {
        if self.template_id.as_deref() == Some("none") {
            self.template_id = None;
        }
        self
    }

    pub fn format(&self) -> PromptFormat {
        self.format
    }

    pub fn template_id(&self) -> Option<&str> {
        self.template_id.as_deref()
    }

    pub fn description_variant(&self) -> Option<DescriptionVariant> {
        self.description_variant
    }

    /// Label-only prompt: no template, no description.
    pub fn is_class_only(&self) -> bool {
        self.template_id.is_none() && self.description_variant.is_none()
    }
}

impl fmt::Display for PromptSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.format.as_str())?;
        if let Some(t) = &self.template_id {
            write!(f, ",template={t}")?;
        }
        if let Some(v) = self.description_variant {
            write!(f, ",desc={v}")?;
        }
        Ok(())
    }
}

impl FromStr for PromptSpec {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: String| PromptError::BadSpec {
            spec: s.to_string(),
            reason,
        };
        let mut parts = s.split(',').map(str::trim);
        let format: PromptFormat = parts.next().unwrap_or_default().parse().map_err(bad)?;
        let mut template_id = None;
        let mut variant = None;
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(alloc::format!("expected key=value, got `{part}`")))?;
            match key.trim() {
                "template" if template_id.is_none() && !value.trim().is_empty() => {
                    template_id = Some(value.trim().to_string())
                }
                "desc" if variant.is_none() => variant = Some(value.trim().parse().map_err(bad)?),
                other => return Err(bad(alloc::format!("unexpected or repeated key `{other}`"))),
            }
        }
        PromptSpec::new(format, template_id, variant)
    }
}

/// Replaces underscores with spaces, collapses whitespace runs to one space
/// and trims both ends. Nothing else is altered.
pub fn sanitize_label(raw_label: &str) -> Result<String, PromptError> {
    let mut out = String::with_capacity(raw_label.len());
    for word in raw_label
        .split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
    {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    if out.is_empty() {
        return Err(PromptError::EmptyLabel);
    }
    Ok(out)
}

fn recase_first(s: &str, upper: bool) -> String {
    let mut chars = s.chars();
    match chars.next() {
        None => String::new(),
        Some(first) => {
            let mut out = String::with_capacity(s.len());
            if upper {
                out.extend(first.to_uppercase());
            } else {
                out.extend(first.to_lowercase());
            }
            out.push_str(chars.as_str());
            out
        }
    }
}

/// Ends `s` with exactly one `.`.
fn with_terminal_period(s: &str) -> String {
    let mut out = s.trim_end_matches('.').to_string();
    out.push('.');
    out
}

/// Applies a label-only format: first character cased, optional single
/// terminal period.
pub fn format_label(label: &str, format: PromptFormat) -> String {
    let cased = recase_first(label, format.is_upper());
    if format.has_period() {
        with_terminal_period(&cased)
    } else {
        cased
    }
}

/// `template + " " + label + "."`, starting with an uppercase letter.
pub fn render_template(template_text: &str, label: &str) -> Result<String, PromptError> {
    let template = template_text.trim();
    if template.is_empty() {
        return Err(PromptError::EmptyTemplate);
    }
    if label.is_empty() {
        return Err(PromptError::EmptyLabel);
    }
    let joined = alloc::format!("{template} {label}");
    Ok(with_terminal_period(&recase_first(&joined, true)))
}

/// `Label. Description.` with the label capitalized.
pub fn render_description_prompt(label: &str, description: &str) -> Result<String, PromptError> {
    render_description_with(label, description, PromptFormat::UpperPeriod)
}

fn render_description_with(
    label: &str,
    description: &str,
    format: PromptFormat,
) -> Result<String, PromptError> {
    if label.is_empty() {
        return Err(PromptError::EmptyLabel);
    }
    let description = sanitize_label(description).map_err(|_| PromptError::EmptyDescription)?;
    let head = with_terminal_period(&recase_first(label, format.is_upper()));
    let tail = with_terminal_period(&recase_first(&description, true));
    Ok(alloc::format!("{head} {tail}"))
}

/// One class's prompt text under a given [`PromptSpec`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedPrompt {
    pub class_index: usize,
    pub text: String,
    pub spec: PromptSpec,
}

/// Renders the prompt of every class in `manifest` under `spec`.
///
/// Template prompts always use the lowercase label form; the spec's format
/// applies to label-only prompts and to the label part of description prompts.
pub fn render_prompt(
    manifest: &DatasetManifest,
    spec: &PromptSpec,
    templates: &TemplateRegistry,
) -> Result<Vec<RenderedPrompt>, PromptError> {
    let template = match spec.template_id() {
        Some(id) => Some(
            templates
                .get(id)
                .ok_or_else(|| PromptError::UnknownTemplate(id.to_string()))?,
        ),
        None => None,
    };
    manifest
        .classes()
        .iter()
        .enumerate()
        .map(|(class_index, class)| {
            let label = sanitize_label(&class.raw_label)?;
            let text = match (template, spec.description_variant()) {
                (Some(t), _) => render_template(t, &format_label(&label, PromptFormat::Lower))?,
                (None, Some(variant)) => {
                    let description = class.descriptions.get(&variant).ok_or_else(|| {
                        PromptError::MissingDescription {
                            class_id: class.class_id.clone(),
                            variant,
                        }
                    })?;
                    render_description_with(&label, description, spec.format())?
                }
                (None, None) => format_label(&label, spec.format()),
            };
            if text.contains('_') {
                return Err(PromptError::Underscore { class_index, text });
            }
            Ok(RenderedPrompt {
                class_index,
                text,
                spec: spec.clone(),
            })
        })
        .collect()
}

/// Prompt templates keyed by their 1-based line number in the registry text.
///
/// Blank lines and lines starting with `#` are skipped but still counted, so
/// ids stay stable when comments are edited in place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRegistry {
    entries: Vec<(String, String)>,
}

const BUILTIN_TEMPLATES: &str = include_str!("../assets/templates.txt");

impl TemplateRegistry {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.contains('_') {
                return Err(PromptError::BadTemplate {
                    line: i + 1,
                    reason: "templates may not contain underscores".into(),
                });
            }
            entries.push(((i + 1).to_string(), line.to_string()));
        }
        Ok(Self { entries })
    }

    /// The registry shipped with this crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TEMPLATES).expect("bundled template registry is valid")
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == id)
            .map(|(_, v)| v.as_str())
    }

    /// Id of the template whose text equals `text`.
    pub fn id_of(&self, text: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(_, v)| v == text)
            .map(|(k, _)| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
