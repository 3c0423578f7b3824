//! Plain-text matrix format: a leading dimension line, then the entries
//! row-major, whitespace separated.

use nalgebra::DMatrix;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MatrixIoError {
    #[error("empty input")]
    Empty,
    #[error("invalid dimension `{0}`")]
    BadDimension(String),
    #[error("expected {expected} entries, found {found}")]
    WrongEntryCount { expected: usize, found: usize },
    #[error("invalid number `{0}`")]
    BadNumber(String),
}

pub fn parse_matrix(src: &str) -> Result<DMatrix<f64>, MatrixIoError> {
    let mut tokens = src.split_whitespace();
    let dim_tok = tokens.next().ok_or(MatrixIoError::Empty)?;
    let dim: usize = dim_tok
        .parse()
        .map_err(|_| MatrixIoError::BadDimension(dim_tok.to_string()))?;
    if dim == 0 {
        return Err(MatrixIoError::BadDimension(dim_tok.to_string()));
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for tok in tokens {
        let v: f64 = tok
            .parse()
            .map_err(|_| MatrixIoError::BadNumber(tok.to_string()))?;
        entries.push(v);
    }
    if entries.len() != dim * dim {
        return Err(MatrixIoError::WrongEntryCount {
            expected: dim * dim,
            found: entries.len(),
        });
    }
    Ok(DMatrix::from_row_slice(dim, dim, &entries))
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut s = format!("{}\n", m.nrows());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}
