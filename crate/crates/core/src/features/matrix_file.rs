//! Plain-text matrix files.
//!
//! ```text
//! # vsm-actr matrix v1
//! # rows: 2
//! # cols: 3
//! # provider: test
//! 0.1 0.2 0.3
//! 0.4 0.5 0.6
//! ```
//!
//! Header lines are `# key: value`; `rows` and `cols` are required and come
//! first. Values use the shortest representation that parses back exactly.

use std::io::{BufRead, Write};

use crate::features::{EmbeddingMatrix, FeatureError, Provenance, ReducedEmbedding};
use crate::linalg::Matrix;

const MAGIC: &str = "# vsm-actr matrix v1";

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub matrix: Matrix,
    /// Extra header entries in file order.
    pub meta: Vec<(String, String)>,
}

impl MatrixFile {
    pub fn new(matrix: Matrix) -> Self {
        MatrixFile {
            matrix,
            meta: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), FeatureError> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "# rows: {}", self.matrix.rows())?;
        writeln!(w, "# cols: {}", self.matrix.cols())?;
        for (k, v) in &self.meta {
            writeln!(w, "# {k}: {v}")?;
        }
        for row in self.matrix.row_iter() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, FeatureError> {
        let bad = |m: String| FeatureError::MatrixFormat(m);
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(l)) if l == MAGIC => {}
            _ => return Err(bad("missing header line".into())),
        }
        let mut rows = None;
        let mut cols = None;
        let mut meta = Vec::new();
        let mut data = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if let Some(h) = line.strip_prefix("# ") {
                if !data.is_empty() {
                    return Err(bad(format!("header after data on line {}", n + 2)));
                }
                let (k, v) = h.split_once(": ").ok_or_else(|| bad(format!("bad header `{line}`")))?;
                match k {
                    "rows" => rows = Some(v.parse::<usize>().map_err(|e| bad(format!("rows: {e}")))?),
                    "cols" => cols = Some(v.parse::<usize>().map_err(|e| bad(format!("cols: {e}")))?),
                    _ => meta.push((k.to_string(), v.to_string())),
                }
                continue;
            }
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", n + 2)))?);
            }
        }
        let (rows, cols) = rows.zip(cols).ok_or_else(|| bad("rows/cols header missing".into()))?;
        if data.len() != rows * cols {
            return Err(bad(format!("{} values for {rows}x{cols}", data.len())));
        }
        Ok(MatrixFile {
            matrix: Matrix::from_vec(rows, cols, data)?,
            meta,
        })
    }
}

impl EmbeddingMatrix {
    pub fn to_file(&self) -> MatrixFile {
        MatrixFile::new(self.matrix.clone())
            .with("provider", self.provenance.provider.clone())
            .with("model", self.provenance.model.clone())
    }

    pub fn from_file(file: MatrixFile) -> Result<Self, FeatureError> {
        let provider = file.get("provider").unwrap_or("unknown").to_string();
        let model = file.get("model").unwrap_or("unknown").to_string();
        Ok(EmbeddingMatrix {
            matrix: file.matrix,
            provenance: Provenance { provider, model },
        })
    }
}

impl ReducedEmbedding {
    /// Scores with the explained ratios in the header.
    pub fn to_file(&self) -> MatrixFile {
        let ratios: Vec<String> = self.explained_variance_ratio.iter().map(|r| format!("{r:?}")).collect();
        MatrixFile::new(self.scores.clone())
            .with("components", self.components().to_string())
            .with("explained", ratios.join(" "))
    }
}

/// Explained ratios stored by [`ReducedEmbedding::to_file`].
pub fn explained_ratios(file: &MatrixFile) -> Result<Vec<f64>, FeatureError> {
    file.get("explained")
        .unwrap_or("")
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| FeatureError::MatrixFormat(format!("explained: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        let m = Matrix::from_rows(&[[0.1, -2.5e-17, 3.0], [1.0 / 3.0, 0.0, -7.25]]).unwrap();
        let file = MatrixFile::new(m).with("provider", "test").with("model", "token-hash-3");
        let text = file.to_text();
        assert!(text.starts_with("# vsm-actr matrix v1\n# rows: 2\n# cols: 3\n# provider: test\n"));
        assert_eq!(MatrixFile::read(text.as_bytes()).unwrap(), file);
    }

    #[test]
    fn wrong_count_rejected() {
        let text = "# vsm-actr matrix v1\n# rows: 2\n# cols: 2\n1 2\n3\n";
        assert!(matches!(MatrixFile::read(text.as_bytes()), Err(FeatureError::MatrixFormat(_))));
        assert!(MatrixFile::read("1 2\n".as_bytes()).is_err());
    }
}
