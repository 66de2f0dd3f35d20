use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// The three rule families carried by a T3 export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleType {
    TextRule,
    Derive,
    Select,
}

impl RuleType {
    pub const ALL: [RuleType; 3] = [RuleType::TextRule, RuleType::Derive, RuleType::Select];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleType::TextRule => "TextRule",
            RuleType::Derive => "Derive",
            RuleType::Select => "Select",
        }
    }
}

impl fmt::Display for RuleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleType {
    type Err = String;

    /// Accepts the spellings seen in exports: `Text rule`, `Text-rule`,
    /// `TextRule`, `Derive`, `Select` (case-insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '-' && *c != '_')
            .flat_map(char::to_lowercase)
            .collect();
        match squashed.as_str() {
            "textrule" => Ok(RuleType::TextRule),
            "derive" => Ok(RuleType::Derive),
            "select" => Ok(RuleType::Select),
            _ => Err(format!("unknown rule type {s:?}")),
        }
    }
}

/// One row of a rule export, validated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRuleRecord {
    pub rule_index: u64,
    pub summary: String,
    pub category: String,
    pub rule_body: String,
    pub rule_type: RuleType,
    pub project_name: String,
    pub version: String,
    pub date: NaiveDate,
    /// Carried as inert metadata; often blank in exports.
    pub owner: String,
}

/// The nine column names, in export order.
pub const COLUMNS: [&str; 9] = [
    "rule_index",
    "summary",
    "category",
    "rule_body",
    "rule_type",
    "project",
    "version",
    "date",
    "owner",
];

impl RawRuleRecord {
    /// Builds a record from the nine raw cells in [`COLUMNS`] order.
    pub fn from_cells(cells: &[&str]) -> Result<Self, String> {
        if cells.len() != COLUMNS.len() {
            return Err(format!(
                "expected {} columns, found {}",
                COLUMNS.len(),
                cells.len()
            ));
        }
        let rule_index = cells[0]
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("rule_index {:?} is not a non-negative integer", cells[0]))?;
        let rule_type = cells[4].trim().parse::<RuleType>()?;
        let version = cells[6].trim();
        if !is_decimal(version) {
            return Err(format!("version {version:?} is not a decimal string"));
        }
        let date = NaiveDate::parse_from_str(cells[7].trim(), "%Y-%m-%d")
            .map_err(|_| format!("date {:?} is not a valid calendar date", cells[7]))?;
        let rule_body = cells[3].trim();
        if rule_body.is_empty() {
            return Err("rule_body is empty".to_string());
        }
        Ok(Self {
            rule_index,
            summary: cells[1].trim().to_string(),
            category: cells[2].trim().to_string(),
            rule_body: rule_body.to_string(),
            rule_type,
            project_name: cells[5].trim().to_string(),
            version: version.to_string(),
            date,
            owner: cells[8].trim().to_string(),
        })
    }
}

fn is_decimal(s: &str) -> bool {
    let mut parts = s.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

/// Pipeline stage at which a rule was set aside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuarantineStage {
    /// Row could not be turned into a record at all.
    Load,
    Normalize,
    Split,
    Parse,
}

/// A rule that was rejected, kept with its diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarantinedRule {
    /// 1-based line number in the source, when known.
    pub line: Option<usize>,
    /// The raw row text for rows that never became a record.
    pub raw: Option<String>,
    pub source: Option<RawRuleRecord>,
    pub reason: String,
    pub stage: QuarantineStage,
}

impl QuarantinedRule {
    pub fn from_record(record: RawRuleRecord, stage: QuarantineStage, reason: impl Into<String>) -> Self {
        let reason = non_empty_reason(reason.into());
        Self {
            line: None,
            raw: None,
            source: Some(record),
            reason,
            stage,
        }
    }

    pub fn from_row(line: usize, raw: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            raw: Some(raw.into()),
            source: None,
            reason: non_empty_reason(reason.into()),
            stage: QuarantineStage::Load,
        }
    }
}

fn non_empty_reason(reason: String) -> String {
    if reason.trim().is_empty() {
        "unspecified".to_string()
    } else {
        reason
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_type_spellings() {
        assert_eq!("Text rule".parse::<RuleType>(), Ok(RuleType::TextRule));
        assert_eq!("Text-rule".parse::<RuleType>(), Ok(RuleType::TextRule));
        assert_eq!("TextRule".parse::<RuleType>(), Ok(RuleType::TextRule));
        assert_eq!("derive".parse::<RuleType>(), Ok(RuleType::Derive));
        assert!("Formula".parse::<RuleType>().is_err());
    }

    #[test]
    fn record_validation() {
        let ok = [
            "0",
            "MB must select one",
            "BASE-EXTSPKR",
            "Group -- One from [SBB1K34259 1 MB RPL B760 YangYunM4000RR]",
            "Select",
            "YTM400RR",
            "0.1",
            "2024-03-22",
            "",
        ];
        let rec = RawRuleRecord::from_cells(&ok).unwrap();
        assert_eq!(rec.rule_index, 0);
        assert_eq!(rec.rule_type, RuleType::Select);
        assert_eq!(rec.owner, "");

        let mut bad_date = ok;
        bad_date[7] = "2024-02-30";
        assert!(RawRuleRecord::from_cells(&bad_date).unwrap_err().contains("date"));

        let mut bad_index = ok;
        bad_index[0] = "-3";
        assert!(RawRuleRecord::from_cells(&bad_index).is_err());

        let mut blank_body = ok;
        blank_body[3] = "   ";
        assert!(RawRuleRecord::from_cells(&blank_body).is_err());

        let mut bad_version = ok;
        bad_version[6] = "v1";
        assert!(RawRuleRecord::from_cells(&bad_version).is_err());

        assert!(RawRuleRecord::from_cells(&ok[..8]).is_err());
    }
}
