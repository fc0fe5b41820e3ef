//! Accuracy tables for yes/no visual questions answered from captions.
//!
//! Input is JSON lines, one answered question per line:
//!
//! ```text
//! {"category":"artwork","question_id":"q1","condition":"see","answer":"Answer: yes.","gold":"yes"}
//! ```
//!
//! `answer` may be raw model output; it is reduced to its final word and
//! anything other than yes/no counts as incorrect.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VqaCondition {
    None,
    See,
}

impl VqaCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            VqaCondition::None => "none",
            VqaCondition::See => "see",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    Unparsed,
}

/// Reduces free-form model output to yes/no using its last alphanumeric token.
pub fn normalize_answer(raw: &str) -> Answer {
    let last = raw
        .split(|c: char| !c.is_alphanumeric())
        .rfind(|t| !t.is_empty());
    match last.map(str::to_lowercase).as_deref() {
        Some("yes") => Answer::Yes,
        Some("no") => Answer::No,
        _ => Answer::Unparsed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VqaLogEntry {
    pub category: String,
    pub question_id: String,
    pub condition: VqaCondition,
    pub answer: Answer,
    pub gold: Answer,
}

impl VqaLogEntry {
    pub fn is_correct(&self) -> bool {
        self.answer != Answer::Unparsed && self.answer == self.gold
    }
}

#[derive(Deserialize)]
struct RawEntry {
    category: String,
    question_id: String,
    condition: VqaCondition,
    answer: String,
    gold: String,
}

/// Parses a JSON-lines log. Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_log(text: &str) -> Result<Vec<VqaLogEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEntry = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if raw.category.trim().is_empty() {
            return Err(Error::Parse { line: line_no, message: "empty category".into() });
        }
        let gold = match normalize_answer(&raw.gold) {
            Answer::Unparsed => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("gold answer must be yes or no, got {:?}", raw.gold),
                })
            }
            g => g,
        };
        out.push(VqaLogEntry {
            category: raw.category,
            question_id: raw.question_id,
            condition: raw.condition,
            answer: normalize_answer(&raw.answer),
            gold,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Tally {
    pub n: usize,
    pub correct: usize,
}

impl Tally {
    /// Accuracy in percent.
    pub fn accuracy(&self) -> f64 {
        100.0 * self.correct as f64 / self.n as f64
    }
}

pub const OVERALL: &str = "Overall";

/// Per (category, condition) tallies plus an overall row per condition.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct VqaTable {
    pub cells: BTreeMap<(String, VqaCondition), Tally>,
    pub overall: BTreeMap<VqaCondition, Tally>,
}

impl VqaTable {
    pub fn categories(&self) -> Vec<&str> {
        let mut cats: Vec<&str> = self.cells.keys().map(|(c, _)| c.as_str()).collect();
        cats.dedup();
        cats
    }

    pub fn get(&self, category: &str, condition: VqaCondition) -> Option<Tally> {
        if category == OVERALL {
            return self.overall.get(&condition).copied();
        }
        self.cells.get(&(category.to_string(), condition)).copied()
    }

    /// Long CSV: `category,condition,n,correct,accuracy`, overall rows last.
    pub fn to_long_csv(&self) -> String {
        let mut s = String::from("category,condition,n,correct,accuracy\n");
        let rows = self
            .cells
            .iter()
            .map(|((cat, cond), t)| (cat.as_str(), *cond, t))
            .chain(self.overall.iter().map(|(cond, t)| (OVERALL, *cond, t)));
        for (cat, cond, t) in rows {
            let _ = writeln!(s, "{},{},{},{},{:.2}", csv_field(cat), cond.as_str(), t.n, t.correct, t.accuracy());
        }
        s
    }

    /// Wide CSV with one column per category and a trailing `n` row.
    pub fn to_wide_csv(&self) -> String {
        let cats = self.categories();
        let mut s = String::from("condition");
        for c in &cats {
            s.push(',');
            s.push_str(&csv_field(c));
        }
        s.push_str(",Overall\n");
        for cond in self.overall.keys() {
            s.push_str(cond.as_str());
            for c in &cats {
                match self.get(c, *cond) {
                    Some(t) => {
                        let _ = write!(s, ",{:.2}", t.accuracy());
                    }
                    None => s.push(','),
                }
            }
            let _ = writeln!(s, ",{:.2}", self.overall[cond].accuracy());
        }
        // Question counts are per condition; report the largest.
        s.push('n');
        for c in &cats {
            let n = self.overall.keys().filter_map(|cond| self.get(c, *cond)).map(|t| t.n).max().unwrap_or(0);
            let _ = write!(s, ",{n}");
        }
        let total = self.overall.values().map(|t| t.n).max().unwrap_or(0);
        let _ = writeln!(s, ",{total}");
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn score(entries: &[VqaLogEntry]) -> VqaTable {
    let mut table = VqaTable::default();
    for e in entries {
        let correct = usize::from(e.is_correct());
        let cell = table.cells.entry((e.category.clone(), e.condition)).or_default();
        cell.n += 1;
        cell.correct += correct;
        let all = table.overall.entry(e.condition).or_default();
        all.n += 1;
        all.correct += correct;
    }
    table
}
