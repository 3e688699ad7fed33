//! Input formats: edge lists, two-sample CSV, tabulated kernels and dense
//! coefficient arrays.

use std::path::Path;

use serde::Deserialize;

use crate::dips::{DipsArray, EdgeSet};
use crate::error::{invalid, Error, Result};
use crate::ustat::{Kernel, TabulatedKernel};

/// Leading bytes of the binary dense-array format.
pub const DENSE_MAGIC: &[u8; 4] = b"CDA1";

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?)
        .map_err(|_| Error::InvalidInput(format!("{} is not valid UTF-8", path.display())))
}

/// One `u v` pair per line, 1-indexed; blank lines and `#` comments are
/// skipped. Without `n`, the largest vertex number is used.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<EdgeSet> {
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => invalid(format!("line {}: bad vertex `{s}` (vertices are 1-indexed)", lineno + 1)),
            }
        };
        if fields.len() != 2 {
            return invalid(format!("line {}: expected `u v`, found `{line}`", lineno + 1));
        }
        pairs.push((parse(fields[0])?, parse(fields[1])?));
    }
    let inferred = pairs.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = n.unwrap_or(inferred);
    EdgeSet::new(n, &pairs)
}

pub fn read_edge_list(path: &Path, n: Option<usize>) -> Result<EdgeSet> {
    parse_edge_list(&read_text(path)?, n)
}

#[derive(Debug, Deserialize)]
struct MwwRecord {
    group: String,
    value: f64,
}

/// `group,value` CSV with a header row; `group` is `x` or `y`.
pub fn parse_mww_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::InvalidInput(format!("bad CSV header: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["group", "value"] {
        return invalid(format!(
            "expected header `group,value`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        ));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, rec) in reader.deserialize::<MwwRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidInput(format!("row {}: {e}", i + 1)))?;
        if !rec.value.is_finite() {
            return invalid(format!("row {}: value must be finite", i + 1));
        }
        match rec.group.as_str() {
            "x" => x.push(rec.value),
            "y" => y.push(rec.value),
            g => return invalid(format!("row {}: group must be `x` or `y`, found `{g}`", i + 1)),
        }
    }
    if x.is_empty() || y.is_empty() {
        return invalid("both groups `x` and `y` need at least one observation");
    }
    Ok((x, y))
}

pub fn read_mww_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    parse_mww_csv(&read_text(path)?)
}

pub fn parse_kernel_json(text: &str) -> Result<Kernel> {
    let table: TabulatedKernel =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad kernel JSON: {e}")))?;
    Kernel::tabulated(table)
}

pub fn read_kernel_json(path: &Path) -> Result<Kernel> {
    parse_kernel_json(&read_text(path)?)
}

#[derive(Debug, Deserialize)]
struct DenseArrayJson {
    n: usize,
    b: f64,
    values: Vec<f64>,
}

/// Dense array from JSON `{"n", "b", "values"}` (row-major `n⁴`) or from
/// the binary form: magic `CDA1`, `n` as little-endian `u64`, `b` and the
/// `n⁴` values as little-endian `f64`.
pub fn parse_dense_array(bytes: &[u8]) -> Result<DipsArray> {
    if bytes.starts_with(DENSE_MAGIC) {
        let body = &bytes[4..];
        if body.len() < 16 {
            return invalid("binary array is truncated");
        }
        let n = u64::from_le_bytes(body[..8].try_into().expect("8 bytes")) as usize;
        let b = f64::from_le_bytes(body[8..16].try_into().expect("8 bytes"));
        if n > crate::dips::MAX_DENSE_N {
            return DipsArray::dense(n, b, Vec::new());
        }
        let data = &body[16..];
        if data.len() != 8 * n.pow(4) {
            return invalid(format!("binary array declares n = {n} but holds {} bytes of values", data.len()));
        }
        let values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        return DipsArray::dense(n, b, values);
    }
    let text =
        std::str::from_utf8(bytes).map_err(|_| Error::InvalidInput("array file is neither JSON nor binary".into()))?;
    let parsed: DenseArrayJson =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad array JSON: {e}")))?;
    DipsArray::dense(parsed.n, parsed.b, parsed.values)
}

pub fn read_dense_array(path: &Path) -> Result<DipsArray> {
    parse_dense_array(&read_bytes(path)?)
}

/// Binary encoding accepted by [`parse_dense_array`].
pub fn encode_dense_array(n: usize, b: f64, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * values.len());
    out.extend_from_slice(DENSE_MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&b.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_parsing() {
        let e = parse_edge_list("# triangle\n1 2\n2 3\n\n3 1  # closing edge\n", None).unwrap();
        assert_eq!(e.n(), 3);
        assert_eq!(e.edges(), &[(0, 1), (0, 2), (1, 2)]);
        let padded = parse_edge_list("1 2\n", Some(5)).unwrap();
        assert_eq!(padded.n(), 5);
        assert!(parse_edge_list("0 1\n", None).is_err());
        assert!(parse_edge_list("1 1\n", None).is_err());
        assert!(parse_edge_list("1 2 3\n", None).is_err());
        assert!(parse_edge_list("1 2\n2 1\n", None).is_err());
        assert!(parse_edge_list("1 4\n", Some(3)).is_err());
    }

    #[test]
    fn mww_csv_parsing() {
        let (x, y) = parse_mww_csv("group,value\nx,1.5\ny, 2\nx,-3\n").unwrap();
        assert_eq!(x, vec![1.5, -3.0]);
        assert_eq!(y, vec![2.0]);
        assert!(parse_mww_csv("g,v\nx,1\n").is_err());
        assert!(parse_mww_csv("group,value\nz,1\ny,2\n").is_err());
        assert!(parse_mww_csv("group,value\nx,abc\ny,2\n").is_err());
        assert!(parse_mww_csv("group,value\nx,1\n").is_err());
    }

    #[test]
    fn kernel_json_parsing() {
        let k = parse_kernel_json(r#"{"arity":1,"atoms":[-1,1],"values":[-0.5,0.5],"b":0.5}"#).unwrap();
        assert_eq!(k.evaluate(&[1.0]), 0.5);
        assert!(parse_kernel_json(r#"{"arity":1}"#).is_err());
    }

    #[test]
    fn dense_array_round_trip() {
        let mut rng = crate::rng::stream(3);
        let a = DipsArray::random_symmetric(3, 1.0, &mut rng).unwrap();
        let mut values = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        values.push(a.get(i, j, k, l));
                    }
                }
            }
        }
        let bin = encode_dense_array(3, 1.0, &values);
        assert_eq!(parse_dense_array(&bin).unwrap(), a);
        let json = serde_json::json!({"n": 3, "b": 1.0, "values": values}).to_string();
        assert_eq!(parse_dense_array(json.as_bytes()).unwrap(), a);
        assert!(parse_dense_array(&bin[..30]).is_err());
        assert!(parse_dense_array(b"{\"n\": 2}").is_err());
        let big = encode_dense_array(50, 1.0, &[]);
        assert!(matches!(parse_dense_array(&big), Err(Error::ResourceLimit(_))));
    }
}
