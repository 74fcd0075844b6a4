use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

const PRONOUNS: &[&str] = &[
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "yourselves", "he", "him", "his",
    "himself", "she", "her", "hers", "herself", "it", "its", "itself", "we", "us", "our", "ours", "ourselves",
    "they", "them", "their", "theirs", "themselves", "this", "that", "these", "those", "something", "anything",
    "everything", "nothing", "someone", "anyone", "everyone", "one",
];

/// English pronouns, the default phrase blacklist.
pub fn default_blacklist() -> BTreeSet<String> {
    PRONOUNS.iter().map(|p| p.to_string()).collect()
}

/// Thresholds for the filtering phase. Defaults are starting points, not
/// tuned values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub max_objects: u32,
    pub min_object_complexity: f64,
    pub min_action_complexity: f64,
    pub box_confidence_threshold: f64,
    /// `>= 1` turns NMS off.
    pub nms_iou_threshold: f64,
    pub phrase_confidence_threshold: f64,
    /// Case-folded phrases.
    pub blacklist: BTreeSet<String>,
    pub class_aware_nms: bool,
    /// Apply the text filters (needs parses).
    pub text_filters: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_objects: 30,
            min_object_complexity: 1.0,
            min_action_complexity: 1.0,
            box_confidence_threshold: 0.2,
            nms_iou_threshold: 0.5,
            phrase_confidence_threshold: 0.2,
            blacklist: default_blacklist(),
            class_aware_nms: true,
            text_filters: true,
        }
    }
}

impl FilterConfig {
    /// Keeps everything.
    pub fn permissive() -> Self {
        Self {
            max_objects: u32::MAX,
            min_object_complexity: 0.0,
            min_action_complexity: 0.0,
            box_confidence_threshold: 0.0,
            nms_iou_threshold: 1.0,
            phrase_confidence_threshold: 0.0,
            blacklist: BTreeSet::new(),
            class_aware_nms: true,
            text_filters: true,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_objects < 1 {
            return Err(ConfigError { field: "max_objects", reason: "must be at least 1".into() });
        }
        for (field, v) in [
            ("box_confidence_threshold", self.box_confidence_threshold),
            ("nms_iou_threshold", self.nms_iou_threshold),
            ("phrase_confidence_threshold", self.phrase_confidence_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError { field, reason: format!("{v} outside [0, 1]") });
            }
        }
        for (field, v) in [
            ("min_object_complexity", self.min_object_complexity),
            ("min_action_complexity", self.min_action_complexity),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(ConfigError { field, reason: format!("{v} is not a finite non-negative number") });
            }
        }
        Ok(())
    }

    /// Lowercases and trims blacklist entries.
    pub fn normalized(mut self) -> Self {
        self.blacklist = self.blacklist.iter().map(|p| p.trim().to_lowercase()).collect();
        self
    }

    pub(crate) fn is_blacklisted(&self, phrase: &str) -> bool {
        self.blacklist.contains(&phrase.trim().to_lowercase())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        FilterConfig::default().validate().unwrap();
        FilterConfig::permissive().validate().unwrap();
        assert!(FilterConfig::default().blacklist.contains("it"));
    }

    #[test]
    fn invalid_values_rejected() {
        let cfg = FilterConfig { max_objects: 0, ..FilterConfig::default() };
        assert_eq!(cfg.validate().unwrap_err().field, "max_objects");
        let cfg = FilterConfig { nms_iou_threshold: 1.5, ..FilterConfig::default() };
        assert_eq!(cfg.validate().unwrap_err().field, "nms_iou_threshold");
        let cfg = FilterConfig { min_action_complexity: f64::NAN, ..FilterConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn blacklist_is_case_folded() {
        let cfg = FilterConfig { blacklist: ["  It ".to_string()].into(), ..FilterConfig::default() }.normalized();
        assert!(cfg.is_blacklisted("IT"));
        assert!(cfg.is_blacklisted(" it"));
        assert!(!cfg.is_blacklisted("item"));
    }
}
