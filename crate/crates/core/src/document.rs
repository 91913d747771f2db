//! Named matrices and scalars as a JSON document.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EmcError, Result};
use crate::statespace::Mat;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub kind: String,
    #[serde(default)]
    pub matrices: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default)]
    pub scalars: BTreeMap<String, f64>,
}

impl MatrixDocument {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            ..Default::default()
        }
    }

    pub fn put(&mut self, name: &str, m: &Mat) -> &mut Self {
        let rows = (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect();
        self.matrices.insert(name.to_string(), rows);
        self
    }

    pub fn put_scalar(&mut self, name: &str, v: f64) -> &mut Self {
        self.scalars.insert(name.to_string(), v);
        self
    }

    pub fn get(&self, name: &str) -> Result<Mat> {
        let rows = self
            .matrices
            .get(name)
            .ok_or_else(|| EmcError::Format(format!("{} document lacks matrix {name}", self.kind)))?;
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(EmcError::Format(format!("matrix {name} is empty or ragged")));
        }
        Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        self.scalars
            .get(name)
            .copied()
            .ok_or_else(|| EmcError::Format(format!("{} document lacks scalar {name}", self.kind)))
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(EmcError::Format(format!("expected a {kind} document, found {}", self.kind)))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| EmcError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| EmcError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::mat;

    #[test]
    fn round_trip() {
        let mut doc = MatrixDocument::new("model");
        doc.put("A", &mat(&[&[1.0, 0.5], &[-0.25, 1e-17]])).put_scalar("T", 0.01);
        let back = MatrixDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.get("A").unwrap(), mat(&[&[1.0, 0.5], &[-0.25, 1e-17]]));
        assert!(back.get("B").is_err());
        assert!(back.expect_kind("gains").is_err());
    }
}
