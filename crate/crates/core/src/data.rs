//! LIBSVM-format data loading and label conventions.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::single_tree::Sign;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Label(String),
}

/// One example: the raw label as written in the file plus a dense point.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub label: f64,
    pub features: Vec<f64>,
}

/// Reads a LIBSVM sparse file (`<label> <idx>:<val> ...`, 1-based indices)
/// into dense points of dimension `dim`; absent features are 0. Indices
/// beyond `dim` and malformed tokens are reported with their line number.
pub fn read_libsvm(path: impl AsRef<Path>, dim: usize) -> Result<Vec<LabeledExample>, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_libsvm(&text, dim)
}

pub fn parse_libsvm(text: &str, dim: usize) -> Result<Vec<LabeledExample>, DataError> {
    let mut examples = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        // Strip trailing comments, as in the usual LIBSVM tooling.
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label: f64 = tokens
            .next()
            .expect("nonempty line has a first token")
            .parse()
            .map_err(|e| DataError::Line {
                line,
                message: format!("bad label: {e}"),
            })?;
        let mut features = vec![0.0; dim];
        for token in tokens {
            let (idx, val) = token.split_once(':').ok_or_else(|| DataError::Line {
                line,
                message: format!("expected `index:value`, got `{token}`"),
            })?;
            let idx: usize = idx.parse().map_err(|e| DataError::Line {
                line,
                message: format!("bad feature index `{idx}`: {e}"),
            })?;
            let val: f64 = val.parse().map_err(|e| DataError::Line {
                line,
                message: format!("bad feature value `{val}`: {e}"),
            })?;
            if idx == 0 || idx > dim {
                return Err(DataError::Line {
                    line,
                    message: format!("feature index {idx} out of range 1..={dim}"),
                });
            }
            features[idx - 1] = val;
        }
        examples.push(LabeledExample { label, features });
    }
    Ok(examples)
}

/// Maps a binary label to its margin sign: `{0, 1}` or `{-1, +1}` are
/// accepted, with 1 on the positive side.
pub fn binary_sign(label: f64) -> Result<Sign, DataError> {
    if label == 1.0 {
        Ok(Sign::Pos)
    } else if label == 0.0 || label == -1.0 {
        Ok(Sign::Neg)
    } else {
        Err(DataError::Label(format!(
            "binary labels must be one of {{0, 1}} or {{-1, +1}}, got {label}"
        )))
    }
}

/// Maps a multiclass label to a 0-based class index.
pub fn class_index(label: f64, num_classes: usize) -> Result<usize, DataError> {
    if label.fract() != 0.0 || label < 0.0 {
        return Err(DataError::Label(format!(
            "multiclass labels must be 0-based integers, got {label}"
        )));
    }
    let c = label as usize;
    if c >= num_classes {
        return Err(DataError::Label(format!(
            "class {c} out of range for {num_classes} classes"
        )));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sparse_line() {
        let data = parse_libsvm("1 1:0.5 3:0.2\n", 3).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].label, 1.0);
        assert_eq!(data[0].features, vec![0.5, 0.0, 0.2]);
    }

    #[test]
    fn empty_file_gives_empty_list() {
        assert!(parse_libsvm("", 4).unwrap().is_empty());
        assert!(parse_libsvm("\n\n", 4).unwrap().is_empty());
    }

    #[test]
    fn out_of_range_index_names_the_line() {
        let err = parse_libsvm("1 5:0.1\n", 3).unwrap_err();
        assert!(err.to_string().starts_with("line 1:"), "{err}");
    }

    #[test]
    fn malformed_token_names_the_line() {
        let err = parse_libsvm("1 1:0.5\n-1 oops\n", 3).unwrap_err();
        assert!(err.to_string().starts_with("line 2:"), "{err}");
    }

    #[test]
    fn label_conventions() {
        assert_eq!(binary_sign(1.0).unwrap(), Sign::Pos);
        assert_eq!(binary_sign(0.0).unwrap(), Sign::Neg);
        assert_eq!(binary_sign(-1.0).unwrap(), Sign::Neg);
        assert!(binary_sign(2.0).is_err());
        assert_eq!(class_index(2.0, 3).unwrap(), 2);
        assert!(class_index(3.0, 3).is_err());
        assert!(class_index(1.5, 3).is_err());
    }
}
