//! CSV and JSON serialization of operators, forms, measures and block
//! extensions. Dense matrices are written row-major with complex entries as
//! `re+imi`; a JSON envelope carries the index metadata.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{BlockOperator, BlockStructure};
use crate::identities::HermitianForm;
use crate::matrix::Matrix;
use crate::moments::DiscreteMeasure;
use crate::scalar::{Scalar, Value};
use crate::shiftops::{IndexWindow, TruncatedOperator};

pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("expected re+imi, got {s:?}"));
    let body = s.strip_suffix('i').ok_or_else(bad)?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im: f64 = body[split..].parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn matrix_rows<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<String>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| format_complex(m.get(i, j).to_c64())).collect()).collect()
}

pub fn matrix_to_csv<T: Scalar>(m: &Matrix<T>) -> String {
    let mut out = String::new();
    for row in matrix_rows(m) {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<Matrix<Complex64>> {
    let rows: Vec<Vec<Complex64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(parse_complex).collect())
        .collect::<Result<_>>()?;
    rows_to_matrix(rows)
}

fn rows_to_matrix(rows: Vec<Vec<Complex64>>) -> Result<Matrix<Complex64>> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(n, cols, |i, j| rows[i][j]))
}

/// Metadata plus entries of a dense truncated matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorEnvelope {
    pub label: String,
    pub provenance: String,
    pub index_origin: i64,
    pub interior: IndexWindow,
    pub rows: usize,
    pub cols: usize,
    pub exact: bool,
    /// Extra keys, e.g. the `(power, basis)` index map of a Hermitian form.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metadata: serde_json::Value,
    pub entries: Vec<Vec<String>>,
}

impl OperatorEnvelope {
    pub fn from_operator<T: Scalar>(op: &TruncatedOperator<T>) -> Self {
        OperatorEnvelope {
            label: op.label().to_string(),
            provenance: op.provenance().to_string(),
            index_origin: op.index_origin(),
            interior: op.interior(),
            rows: op.dim(),
            cols: op.dim(),
            exact: T::EXACT,
            metadata: serde_json::Value::Null,
            entries: matrix_rows(op.entries()),
        }
    }

    pub fn from_form<T: Scalar>(form: &HermitianForm<T>) -> Self {
        let n = form.entries.rows();
        let index_map: Vec<serde_json::Value> = form
            .index_map()
            .into_iter()
            .map(|(power, basis)| serde_json::json!({ "power": power, "basis": basis }))
            .collect();
        OperatorEnvelope {
            label: form.label.clone(),
            provenance: format!("halmos_bram p={} d_sub={}", form.p, form.d_sub),
            index_origin: 0,
            interior: IndexWindow::new(0, n as i64 - 1),
            rows: n,
            cols: n,
            exact: T::EXACT,
            metadata: serde_json::json!({
                "p": form.p,
                "d_sub": form.d_sub,
                "basis_start": form.basis_start,
                "index_map": index_map,
            }),
            entries: matrix_rows(&form.entries),
        }
    }

    pub fn from_matrix<T: Scalar>(m: &Matrix<T>, label: impl Into<String>, provenance: impl Into<String>) -> Self {
        OperatorEnvelope {
            label: label.into(),
            provenance: provenance.into(),
            index_origin: 0,
            interior: IndexWindow::new(0, m.rows() as i64 - 1),
            rows: m.rows(),
            cols: m.cols(),
            exact: T::EXACT,
            metadata: serde_json::Value::Null,
            entries: matrix_rows(m),
        }
    }

    pub fn matrix(&self) -> Result<Matrix<Complex64>> {
        let rows = self
            .entries
            .iter()
            .map(|r| r.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let m = rows_to_matrix(rows)?;
        if m.rows() != self.rows || m.cols() != self.cols {
            return Err(Error::Parse(format!(
                "envelope says {}x{}, entries are {}x{}",
                self.rows,
                self.cols,
                m.rows(),
                m.cols()
            )));
        }
        Ok(m)
    }

    pub fn to_operator(&self) -> Result<TruncatedOperator<Complex64>> {
        Ok(TruncatedOperator::new(self.matrix()?, self.index_origin, self.interior, self.label.clone())?
            .with_provenance(self.provenance.clone()))
    }

    pub fn to_csv(&self) -> String {
        self.entries.iter().map(|r| r.join(",") + "\n").collect()
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(self)?)?;
        fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

pub fn measure_to_csv(m: &DiscreteMeasure) -> String {
    let mut out = String::from("node,mass\n");
    for (x, w) in m.nodes().iter().zip(m.masses()) {
        out.push_str(&format!("{x},{w}\n"));
    }
    out
}

pub fn measure_from_csv(text: &str) -> Result<DiscreteMeasure> {
    let mut nodes = Vec::new();
    let mut masses = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let (x, w) = line.split_once(',').ok_or_else(|| Error::Parse(format!("bad measure row {line:?}")))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
        nodes.push(parse(x)?);
        masses.push(parse(w)?);
    }
    DiscreteMeasure::new(nodes, masses)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockFile {
    pub row: usize,
    pub col: usize,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockManifest {
    pub q: Value,
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub structure: BlockStructure,
    pub exact: bool,
    pub blocks: Vec<BlockFile>,
    pub flattened: String,
}

/// Writes `manifest.json`, one `block_<row>_<col>.csv` per nonzero block and
/// the dense `flattened.csv`.
pub fn write_block_operator<T: Scalar>(n: &BlockOperator<T>, dir: &Path) -> Result<BlockManifest> {
    fs::create_dir_all(dir)?;
    let mut blocks = Vec::new();
    for (&(row, col), b) in n.blocks() {
        let file = format!("block_{row}_{col}.csv");
        fs::write(dir.join(&file), matrix_to_csv(b))?;
        blocks.push(BlockFile { row, col, file });
    }
    let flattened = "flattened.csv".to_string();
    fs::write(dir.join(&flattened), matrix_to_csv(&n.flatten()))?;
    let manifest = BlockManifest {
        q: n.q().clone(),
        d: n.inner_dim(),
        m: n.blocks_per_side(),
        structure: n.structure(),
        exact: T::EXACT,
        blocks,
        flattened,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Reassembles the flattened matrix from a manifest directory's block files.
pub fn read_block_operator(dir: &Path) -> Result<(BlockManifest, Matrix<Complex64>)> {
    let manifest: BlockManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let (d, m) = (manifest.d, manifest.m);
    let mut full = Matrix::<Complex64>::zeros(d * m, d * m);
    for b in &manifest.blocks {
        let block = matrix_from_csv(&fs::read_to_string(dir.join(&b.file))?)?;
        if block.rows() != d || block.cols() != d || b.row >= m || b.col >= m {
            return Err(Error::Parse(format!("block {} does not fit the manifest", b.file)));
        }
        for i in 0..d {
            for j in 0..d {
                full.set(b.row * d + i, b.col * d + j, *block.get(i, j));
            }
        }
    }
    Ok((manifest, full))
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::extension::build_extension;
    use crate::identities::halmos_bram_form;
    use crate::qcalc::QParam;
    use crate::shiftops::{build_shift, canonical_weights};
    use crate::surd::Surd;

    #[test]
    fn complex_strings_round_trip() {
        for z in [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.5, -2.0),
            Complex64::new(-0.25, 1e-300),
            Complex64::new(2f64.sqrt(), -1e-20),
            Complex64::new(-3.0, -0.0),
        ] {
            let s = format_complex(z);
            assert_eq!(parse_complex(&s).unwrap(), z, "{s}");
        }
        assert_eq!(format_complex(Complex64::new(1.0, -2.0)), "1-2i");
        assert_eq!(parse_complex("1e-3+2E+2i").unwrap(), Complex64::new(1e-3, 200.0));
        assert!(parse_complex("1+2").is_err());
        assert!(parse_complex("i").is_err());
    }

    #[test]
    fn operator_envelope_round_trip() {
        let q = QParam::exact(1, 2);
        let w = canonical_weights::<BigRational>(&q, 8).unwrap();
        let s = build_shift::<Surd>(&w, 6).unwrap();
        let env = OperatorEnvelope::from_operator(&s);
        assert!(env.exact);
        let back = env.to_operator().unwrap();
        assert_eq!(back.interior(), s.interior());
        assert_eq!(back.index_origin(), s.index_origin());
        assert_eq!(back.label(), s.label());
        assert!(back.entries().sub(s.to_complex().entries()).frobenius_norm() < 1e-15);

        let dir = tempfile::tempdir().unwrap();
        env.write(dir.path(), "shift").unwrap();
        let read = OperatorEnvelope::read(&dir.path().join("shift.json")).unwrap();
        assert_eq!(read, env);
        let csv = fs::read_to_string(dir.path().join("shift.csv")).unwrap();
        assert_eq!(matrix_from_csv(&csv).unwrap(), env.matrix().unwrap());
    }

    #[test]
    fn form_envelope_carries_index_map() {
        let q = QParam::exact(1, 2);
        let w = canonical_weights::<BigRational>(&q, 16).unwrap();
        let s = build_shift::<Surd>(&w, 16).unwrap();
        let form = halmos_bram_form(&s, 2, 3).unwrap();
        let env = OperatorEnvelope::from_form(&form);
        let map = env.metadata["index_map"].as_array().unwrap();
        assert_eq!(map.len(), 9);
        assert_eq!(map[4], serde_json::json!({ "power": 1, "basis": form.basis_start + 1 }));
        assert_eq!(env.matrix().unwrap().rows(), 9);
    }

    #[test]
    fn measure_csv_round_trip() {
        let m = DiscreteMeasure::new(vec![0.0, 0.5, 3.25], vec![0.125, 1.0, 2.0]).unwrap();
        let csv = measure_to_csv(&m);
        assert!(csv.starts_with("node,mass\n0,0.125\n"));
        assert_eq!(measure_from_csv(&csv).unwrap(), m);
    }

    #[test]
    fn block_manifest_round_trip() {
        let n = build_extension::<Surd>(&QParam::exact(1, 2), 4, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_block_operator(&n, dir.path()).unwrap();
        assert_eq!((manifest.d, manifest.m), (4, 3));
        assert_eq!(manifest.blocks.len(), 5);
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(json["M"], 3);
        assert_eq!(json["q"], "1/2");

        let (_, full) = read_block_operator(dir.path()).unwrap();
        let flat = matrix_from_csv(&fs::read_to_string(dir.path().join("flattened.csv")).unwrap()).unwrap();
        assert_eq!(full, flat);
        assert!(full.sub(&n.flatten().to_c64()).frobenius_norm() < 1e-15);
    }
}
