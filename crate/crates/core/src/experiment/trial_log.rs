//! CSV trial log.
//!
//! ```text
//! index,pair,s_first,s_second,lambda_id,model_tag
//! 0,23,1,-1,,quantum
//! ```
//!
//! `pair` is `12`, `13` or `23`; `lambda_id` is empty when the world-model
//! has no hidden variable. Lines end in `\n`.

use std::io::{BufRead, Write};

use crate::error::{LgError, Result};
use crate::hv_models::HiddenVariable;
use crate::quantum::Outcome;

use super::{ModelTag, PairChoice, TrialRecord};

pub const TRIAL_LOG_HEADER: &str = "index,pair,s_first,s_second,lambda_id,model_tag";

pub fn write_trial_log<W: Write>(records: &[TrialRecord], mut out: W) -> Result<()> {
    writeln!(out, "{TRIAL_LOG_HEADER}")?;
    for r in records {
        let lambda = r.lambda_id.map(|l| l.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.index, r.pair, r.s_first, r.s_second, lambda, r.model_tag
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn trial_log_string(records: &[TrialRecord]) -> String {
    let mut buf = Vec::new();
    write_trial_log(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("log is ascii")
}

/// Parses a trial log, naming the 1-based line of the first schema violation.
pub fn read_trial_log<R: BufRead>(input: R) -> Result<Vec<TrialRecord>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(header) => {
            let header = header?;
            if header != TRIAL_LOG_HEADER {
                return Err(LgError::TrialLog {
                    line: 1,
                    reason: format!("expected header `{TRIAL_LOG_HEADER}`, found `{header}`"),
                });
            }
        }
        None => {
            return Err(LgError::TrialLog {
                line: 1,
                reason: "empty file, missing header".into(),
            })
        }
    }
    let mut records = Vec::new();
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line?;
        let record = parse_record(&line).map_err(|reason| LgError::TrialLog {
            line: line_no,
            reason,
        })?;
        if record.index != records.len() as u64 {
            return Err(LgError::TrialLog {
                line: line_no,
                reason: format!(
                    "index {} out of sequence, expected {}",
                    record.index,
                    records.len()
                ),
            });
        }
        records.push(record);
    }
    Ok(records)
}

fn parse_record(line: &str) -> std::result::Result<TrialRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 6 {
        return Err(format!("expected 6 fields, found {}", fields.len()));
    }
    let index = fields[0]
        .parse::<u64>()
        .map_err(|_| format!("bad index `{}`", fields[0]))?;
    let pair = fields[1]
        .parse::<PairChoice>()
        .map_err(|_| format!("bad pair `{}`, expected 12, 13 or 23", fields[1]))?;
    let outcome = |name: &str, s: &str| {
        s.parse::<i64>()
            .ok()
            .and_then(Outcome::from_value)
            .ok_or_else(|| format!("bad {name} `{s}`, expected 1 or -1"))
    };
    let s_first = outcome("s_first", fields[2])?;
    let s_second = outcome("s_second", fields[3])?;
    let lambda_id = match fields[4] {
        "" => None,
        s => Some(s.parse::<HiddenVariable>()?),
    };
    let model_tag = fields[5].parse::<ModelTag>()?;
    Ok(TrialRecord {
        index,
        pair,
        s_first,
        s_second,
        lambda_id,
        model_tag,
    })
}
