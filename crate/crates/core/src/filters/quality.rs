use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

/// Tag prefix carrying a source's content-rating color, e.g. `traffic-light:red`.
pub const TRAFFIC_LIGHT_PREFIX: &str = "traffic-light:";

/// Per-source document rule. Rule files are JSON arrays of `{kind, params}` objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum QualityRule {
    /// Keep only documents carrying at least one of these tags.
    TagAllowlist { tags: Vec<String> },
    /// Drop documents carrying any of these tags.
    TagDenylist { tags: Vec<String> },
    /// Drop documents whose grade level exceeds `max_grade`; ungraded documents pass.
    GradeCap { max_grade: u8 },
    /// Drop documents tagged with one of these traffic-light colors.
    TrafficLightExclude { colors: Vec<String> },
}

impl QualityRule {
    pub fn name(&self) -> &'static str {
        match self {
            QualityRule::TagAllowlist { .. } => "tag-allowlist",
            QualityRule::TagDenylist { .. } => "tag-denylist",
            QualityRule::GradeCap { .. } => "grade-cap",
            QualityRule::TrafficLightExclude { .. } => "traffic-light-exclude",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            QualityRule::GradeCap { max_grade } if *max_grade > 12 => Err(Error::Config(format!(
                "grade-cap max_grade must be in [0,12], got {max_grade}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn allows(&self, doc: &Document) -> bool {
        let has_tag = |wanted: &[String]| {
            doc.tags
                .iter()
                .any(|t| wanted.iter().any(|w| w.eq_ignore_ascii_case(t)))
        };
        match self {
            QualityRule::TagAllowlist { tags } => has_tag(tags),
            QualityRule::TagDenylist { tags } => !has_tag(tags),
            QualityRule::GradeCap { max_grade } => doc.grade_level.is_none_or(|g| g <= *max_grade),
            QualityRule::TrafficLightExclude { colors } => !doc.tags.iter().any(|t| {
                t.len() > TRAFFIC_LIGHT_PREFIX.len()
                    && t[..TRAFFIC_LIGHT_PREFIX.len()].eq_ignore_ascii_case(TRAFFIC_LIGHT_PREFIX)
                    && colors
                        .iter()
                        .any(|c| c.eq_ignore_ascii_case(&t[TRAFFIC_LIGHT_PREFIX.len()..]))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QualityVerdict {
    Keep,
    /// Names the first rule the document violates.
    Drop(&'static str),
}

impl QualityVerdict {
    pub fn is_keep(&self) -> bool {
        matches!(self, QualityVerdict::Keep)
    }
}

pub fn apply_quality_rules(doc: &Document, rules: &[QualityRule]) -> QualityVerdict {
    rules
        .iter()
        .find(|r| !r.allows(doc))
        .map_or(QualityVerdict::Keep, |r| QualityVerdict::Drop(r.name()))
}

pub fn parse_rules(json: &str) -> Result<Vec<QualityRule>> {
    let rules: Vec<QualityRule> =
        serde_json::from_str(json).map_err(|e| Error::Config(format!("rule file: {e}")))?;
    for r in &rules {
        r.validate()?;
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kidspost_allowlist() {
        let doc = Document::new("d", "wapo", "Text.").with_tags(["kidspost"]);
        let rules = [QualityRule::TagAllowlist {
            tags: vec!["kidspost".into()],
        }];
        assert_eq!(apply_quality_rules(&doc, &rules), QualityVerdict::Keep);
        let untagged = Document::new("e", "wapo", "Text.");
        assert_eq!(apply_quality_rules(&untagged, &rules), QualityVerdict::Drop("tag-allowlist"));
    }

    #[test]
    fn grade_cap() {
        let doc = Document::new("d", "s", "Text.").with_grade(8);
        let rules = [QualityRule::GradeCap { max_grade: 6 }];
        assert_eq!(apply_quality_rules(&doc, &rules), QualityVerdict::Drop("grade-cap"));
        let ok = Document::new("e", "s", "Text.").with_grade(6);
        assert!(apply_quality_rules(&ok, &rules).is_keep());
        let ungraded = Document::new("f", "s", "Text.");
        assert!(apply_quality_rules(&ungraded, &rules).is_keep());
    }

    #[test]
    fn traffic_light_red() {
        let doc = Document::new("d", "s", "Text.").with_tags(["traffic-light:red"]);
        let rules = [QualityRule::TrafficLightExclude {
            colors: vec!["red".into()],
        }];
        assert_eq!(
            apply_quality_rules(&doc, &rules),
            QualityVerdict::Drop("traffic-light-exclude")
        );
        let green = Document::new("e", "s", "Text.").with_tags(["traffic-light:green"]);
        assert!(apply_quality_rules(&green, &rules).is_keep());
    }

    #[test]
    fn first_failing_rule_is_named() {
        let doc = Document::new("d", "s", "Text.").with_tags(["violence"]).with_grade(9);
        let rules = [
            QualityRule::TagDenylist {
                tags: vec!["violence".into()],
            },
            QualityRule::GradeCap { max_grade: 6 },
        ];
        assert_eq!(apply_quality_rules(&doc, &rules), QualityVerdict::Drop("tag-denylist"));
    }

    #[test]
    fn empty_rules_keep() {
        let doc = Document::new("d", "s", "Text.").with_grade(12);
        assert!(apply_quality_rules(&doc, &[]).is_keep());
    }

    #[test]
    fn rule_file_parsing() {
        let rules = parse_rules(
            r#"[{"kind":"tag-allowlist","params":{"tags":["kidspost"]}},
                {"kind":"grade-cap","params":{"max_grade":6}},
                {"kind":"traffic-light-exclude","params":{"colors":["red"]}}]"#,
        )
        .unwrap();
        assert_eq!(rules.len(), 3);
        assert_eq!(rules[1], QualityRule::GradeCap { max_grade: 6 });
        assert!(parse_rules(r#"[{"kind":"grade-cap","params":{"max_grade":13}}]"#).is_err());
        assert!(parse_rules(r#"[{"kind":"nope","params":{}}]"#).is_err());
    }
}
