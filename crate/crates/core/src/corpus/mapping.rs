use std::path::Path;
use std::str::FromStr;

use super::types::Split;
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    None,
    Nfc,
}

/// How spans pointing at paragraph -1 (the title) are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TitleSpans {
    /// Offsets count characters of the title string itself.
    #[default]
    Relative,
    /// The dataset never addresses the title; such spans are violations.
    Reject,
}

/// Maps source field names onto canonical record fields.
///
/// Config files are `key = value` lines; `#` starts a comment. Field values
/// may be dotted paths into nested objects.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMapping {
    pub schema_version: String,
    pub id: String,
    pub platform: Option<String>,
    pub post_text: String,
    pub target_title: String,
    pub paragraphs: String,
    pub spoilers: String,
    pub spoiler_positions: String,
    pub spoiler_type: String,
    pub split: Option<String>,
    pub split_default: Option<Split>,
    pub normalize: Normalization,
    pub title_spans: TitleSpans,
}

impl Default for FieldMapping {
    /// The canonical layout, as written by [`super::write_corpus`].
    fn default() -> Self {
        Self {
            schema_version: "clickspoil-1".into(),
            id: "id".into(),
            platform: Some("platform".into()),
            post_text: "post_text".into(),
            target_title: "target_title".into(),
            paragraphs: "paragraphs".into(),
            spoilers: "spoilers".into(),
            spoiler_positions: "spoiler_positions".into(),
            spoiler_type: "spoiler_type".into(),
            split: Some("split".into()),
            split_default: None,
            normalize: Normalization::None,
            title_spans: TitleSpans::Relative,
        }
    }
}

impl FieldMapping {
    /// Layout of the published Webis clickbait spoiling release, which keeps
    /// splits in separate files.
    pub fn webis() -> Self {
        Self::from_str(include_str!("../../../../config/webis-clickbait-22.mapping"))
            .expect("bundled mapping parses")
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::UnreadableFile {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    pub fn to_config(&self) -> String {
        let mut out = format!("schema_version = {}\n", self.schema_version);
        let mut put = |k: &str, v: &str| out.push_str(&format!("{k} = {v}\n"));
        put("id", &self.id);
        if let Some(p) = &self.platform {
            put("platform", p);
        }
        put("post_text", &self.post_text);
        put("target_title", &self.target_title);
        put("paragraphs", &self.paragraphs);
        put("spoilers", &self.spoilers);
        put("spoiler_positions", &self.spoiler_positions);
        put("spoiler_type", &self.spoiler_type);
        if let Some(s) = &self.split {
            put("split", s);
        }
        if let Some(s) = self.split_default {
            put("split_default", s.as_str());
        }
        put(
            "normalize",
            match self.normalize {
                Normalization::None => "none",
                Normalization::Nfc => "nfc",
            },
        );
        put(
            "title_spans",
            match self.title_spans {
                TitleSpans::Relative => "relative",
                TitleSpans::Reject => "reject",
            },
        );
        out
    }
}

impl FromStr for FieldMapping {
    type Err = CorpusError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut m = FieldMapping {
            platform: None,
            split: None,
            ..FieldMapping::default()
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| CorpusError::BadMapping { line: i + 1, reason };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim().to_string());
            if value.is_empty() {
                return Err(bad(format!("empty value for {key}")));
            }
            match key {
                "schema_version" => m.schema_version = value,
                "id" => m.id = value,
                "platform" => m.platform = Some(value),
                "post_text" => m.post_text = value,
                "target_title" => m.target_title = value,
                "paragraphs" => m.paragraphs = value,
                "spoilers" => m.spoilers = value,
                "spoiler_positions" => m.spoiler_positions = value,
                "spoiler_type" => m.spoiler_type = value,
                "split" => m.split = Some(value),
                "split_default" => m.split_default = Some(value.parse().map_err(bad)?),
                "normalize" => {
                    m.normalize = match value.as_str() {
                        "none" => Normalization::None,
                        "nfc" => Normalization::Nfc,
                        other => return Err(bad(format!("unknown normalization {other:?}"))),
                    }
                }
                "title_spans" => {
                    m.title_spans = match value.as_str() {
                        "relative" => TitleSpans::Relative,
                        "reject" => TitleSpans::Reject,
                        other => return Err(bad(format!("unknown title span mode {other:?}"))),
                    }
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(m)
    }
}
