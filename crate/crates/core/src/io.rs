//! Trajectory JSONL records.
//!
//! One JSON object per line with `tokens`, `gen_probs`, `reward` and optional
//! `values` (length `T + 1`) and `group`. Unknown keys are carried through to
//! output records untouched.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::Rollout;
use crate::traj::{Trajectory, ValueSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub tokens: Vec<u32>,
    pub gen_probs: Vec<f64>,
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Rollout group for group-relative estimation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<u64>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl TrajectoryRecord {
    pub fn from_rollout(rollout: &Rollout, values: Option<&ValueSeries>) -> Self {
        let t = &rollout.trajectory;
        Self {
            tokens: t.tokens().to_vec(),
            gen_probs: t.gen_probs().to_vec(),
            reward: t.terminal_reward(),
            values: values.map(|v| v.to_vec()),
            group: None,
            extra: serde_json::Map::new(),
        }
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(self.tokens.clone(), self.gen_probs.clone(), self.reward)
    }

    /// The record's values, validated against `traj`, if present.
    pub fn value_series(&self, traj: &Trajectory) -> Option<Result<ValueSeries>> {
        self.values
            .as_ref()
            .map(|v| ValueSeries::new(v.clone(), traj))
    }

    /// Copy with an extra array field appended (e.g. `advantages`, `boundaries`).
    pub fn with_field<T: Serialize>(&self, key: &str, value: &T) -> Result<serde_json::Value> {
        let mut obj = serde_json::to_value(self).map_err(|e| Error::invalid(e.to_string()))?;
        let field = serde_json::to_value(value).map_err(|e| Error::invalid(e.to_string()))?;
        if let serde_json::Value::Object(map) = &mut obj {
            map.insert(key.to_string(), field);
        }
        Ok(obj)
    }
}

pub fn read_jsonl(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let file = File::open(path)?;
    let display = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| Error::Parse {
            path: display.clone(),
            line: i + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| Error::invalid(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_keeps_extra_keys() {
        let line =
            r#"{"tokens":[1,2],"gen_probs":[0.5,1.0],"reward":1,"values":[0.1,0.2,1.0],"id":"x"}"#;
        let rec: TrajectoryRecord = serde_json::from_str(line).unwrap();
        let traj = rec.trajectory().unwrap();
        assert_eq!(traj.len(), 2);
        assert!(rec.value_series(&traj).unwrap().is_ok());
        let out = rec.with_field("advantages", &vec![0.5, 0.25]).unwrap();
        assert_eq!(out["id"], "x");
        assert_eq!(out["advantages"][1], 0.25);
    }

    #[test]
    fn rejects_fractional_reward() {
        let rec: TrajectoryRecord =
            serde_json::from_str(r#"{"tokens":[1],"gen_probs":[0.5],"reward":0.5}"#).unwrap();
        assert!(rec.trajectory().is_err());
    }

    #[test]
    fn reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        std::fs::write(
            &p,
            "{\"tokens\":[1],\"gen_probs\":[1.0],\"reward\":0}\n\nnot json\n",
        )
        .unwrap();
        match read_jsonl(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
