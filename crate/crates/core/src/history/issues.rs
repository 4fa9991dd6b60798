use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::HistoryError;
use crate::tuple::{Tuple, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub number: u64,
    pub title: String,
    pub body: String,
}

impl Issue {
    pub fn to_tuple(&self) -> Tuple {
        Tuple::new(
            Some("issue"),
            [
                ("number", Value::Int(self.number as i64)),
                ("title", Value::text(&self.title)),
                ("body", Value::text(&self.body)),
            ],
        )
        .expect("static shape")
    }
}

/// Issues loaded from an `issues.json` array of `{number, title, body}`.
#[derive(Debug, Clone, Default)]
pub struct IssueTracker {
    issues: BTreeMap<u64, Issue>,
}

impl IssueTracker {
    pub fn load(path: &Path) -> Result<IssueTracker, HistoryError> {
        let text = std::fs::read_to_string(path).map_err(|e| HistoryError::Io(format!("{}: {e}", path.display())))?;
        IssueTracker::from_json(&text).map_err(|message| HistoryError::Format { file: path.display().to_string(), message })
    }

    pub fn from_json(text: &str) -> Result<IssueTracker, String> {
        let list: Vec<Issue> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut issues = BTreeMap::new();
        for issue in list {
            let n = issue.number;
            if issues.insert(n, issue).is_some() {
                return Err(format!("issue #{n} listed twice"));
            }
        }
        Ok(IssueTracker { issues })
    }

    pub fn lookup(&self, number: u64) -> Result<&Issue, HistoryError> {
        self.issues.get(&number).ok_or(HistoryError::UnknownIssue(number))
    }

    /// Issues by ascending number.
    pub fn iter(&self) -> impl Iterator<Item = &Issue> {
        self.issues.values()
    }

    pub fn len(&self) -> usize {
        self.issues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Every `#<digits>` in the text, in order, duplicates kept.
pub fn issues_referenced(message: &str) -> Vec<u64> {
    static PATTERN: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = PATTERN.get_or_init(|| Regex::new(r"#(\d+)").expect("valid pattern"));
    re.captures_iter(message).filter_map(|c| c[1].parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn references_in_order_with_duplicates() {
        assert_eq!(issues_referenced("Fix #12 and #7"), [12, 7]);
        assert!(issues_referenced("").is_empty());
        assert_eq!(issues_referenced("see #12, #12"), [12, 12]);
        assert!(issues_referenced("# 3 and #x").is_empty());
    }

    #[test]
    fn lookup_from_fixture() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/issues.json");
        let tracker = IssueTracker::load(&path).unwrap();
        assert_eq!(tracker.lookup(12).unwrap().title, "Crash on save");
        assert_eq!(tracker.lookup(99), Err(HistoryError::UnknownIssue(99)));
        assert_eq!(tracker.lookup(0), Err(HistoryError::UnknownIssue(0)));
    }

    #[test]
    fn duplicate_numbers_rejected() {
        let json = r#"[{"number":1,"title":"a","body":""},{"number":1,"title":"b","body":""}]"#;
        assert!(IssueTracker::from_json(json).is_err());
    }
}
