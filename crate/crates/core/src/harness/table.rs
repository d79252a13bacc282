use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{NUM_PRIVATE, NUM_PUBLIC};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub label: String,
    pub public_test: f64,
    pub public_finetuned: Option<f64>,
    pub private_test: f64,
    pub private_finetuned: Option<f64>,
    pub training_steps: Option<u64>,
    pub manifest_hash: String,
}

impl ResultsRow {
    pub fn chance(manifest_hash: &str) -> Self {
        ResultsRow {
            label: "chance".into(),
            public_test: 1.0 / NUM_PUBLIC as f64,
            public_finetuned: None,
            private_test: 1.0 / NUM_PRIVATE as f64,
            private_finetuned: None,
            training_steps: None,
            manifest_hash: manifest_hash.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
}

const HEADER: &str = "label,public_test,public_finetuned,private_test,private_finetuned,training_steps,manifest_hash";

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl ResultsTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.label,
                r.public_test,
                opt(&r.public_finetuned),
                r.private_test,
                opt(&r.private_finetuned),
                opt(&r.training_steps),
                r.manifest_hash
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let bad = |reason: String| Error::Format { path: path.to_path_buf(), reason };
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(bad("unexpected header".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let opt_num = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(format!("row {line:?}")));
            }
            rows.push(ResultsRow {
                label: f[0].into(),
                public_test: num(f[1])?,
                public_finetuned: opt_num(f[2])?,
                private_test: num(f[3])?,
                private_finetuned: opt_num(f[4])?,
                training_steps: if f[5].is_empty() {
                    None
                } else {
                    Some(f[5].parse().map_err(|e| bad(format!("{e}")))?)
                },
                manifest_hash: f[6].into(),
            });
        }
        Ok(ResultsTable { rows })
    }
}
