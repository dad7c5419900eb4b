//! Plain-text file formats.
//!
//! * Matrix (`.mat`): first line `rows cols`, then `rows` lines of `cols`
//!   whitespace-separated numbers.
//! * Vector (`.vec`): first line `len`, then one number per line.
//! * Sparse signal (`.sig`): first line `n K`, then `K` lines `index value`
//!   with 0-based indices.
//! * Problem instance: a directory holding `A.mat`, `x.sig`, `v.vec`, `y.vec`.
//!
//! Numbers are written with 17 significant digits so a write/read cycle is
//! lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::sensing::{ProblemInstance, SparseSignal};

pub const MATRIX_FILE: &str = "A.mat";
pub const SIGNAL_FILE: &str = "x.sig";
pub const NOISE_FILE: &str = "v.vec";
pub const MEASUREMENT_FILE: &str = "y.vec";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Lines<'a> {
    path: PathBuf,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        Self {
            path: path.to_path_buf(),
            iter: text.lines().enumerate(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    /// Next non-blank line, split into tokens.
    fn next_tokens(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.iter.by_ref() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok((i + 1, toks));
            }
        }
        Err(Error::Parse {
            path: self.path.clone(),
            line: 0,
            message: "unexpected end of file".into(),
        })
    }

    fn finish(mut self) -> Result<()> {
        match self.iter.find(|(_, l)| !l.trim().is_empty()) {
            Some((i, _)) => Err(self.err(i + 1, "trailing content")),
            None => Ok(()),
        }
    }

    fn parse<T: std::str::FromStr>(&self, line: usize, tok: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(line, format!("cannot parse `{tok}`")))
    }

    fn parse_f64(&self, line: usize, tok: &str) -> Result<f64> {
        let v: f64 = self.parse(line, tok)?;
        if !v.is_finite() {
            return Err(self.err(line, format!("non-finite value `{tok}`")));
        }
        Ok(v)
    }
}

pub fn matrix_to_string(a: &DenseMatrix) -> String {
    let mut s = format!("{} {}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        let row: Vec<String> = a.row(i).into_iter().map(fmt_f64).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<DenseMatrix> {
    let mut lines = Lines::new(text, path);
    let (ln, head) = lines.next_tokens()?;
    if head.len() != 2 {
        return Err(lines.err(ln, "expected `rows cols`"));
    }
    let rows: usize = lines.parse(ln, head[0])?;
    let cols: usize = lines.parse(ln, head[1])?;
    if rows == 0 || cols == 0 {
        return Err(lines.err(ln, "matrix dimensions must be positive"));
    }
    let mut a = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        let (ln, toks) = lines.next_tokens()?;
        if toks.len() != cols {
            return Err(lines.err(ln, format!("expected {cols} values, found {}", toks.len())));
        }
        for (j, t) in toks.iter().enumerate() {
            a[(i, j)] = lines.parse_f64(ln, t)?;
        }
    }
    lines.finish()?;
    Ok(a)
}

pub fn vector_to_string(v: &[f64]) -> String {
    let mut s = format!("{}\n", v.len());
    for x in v {
        let _ = writeln!(s, "{}", fmt_f64(*x));
    }
    s
}

pub fn parse_vector(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut lines = Lines::new(text, path);
    let (ln, head) = lines.next_tokens()?;
    if head.len() != 1 {
        return Err(lines.err(ln, "expected vector length"));
    }
    let len: usize = lines.parse(ln, head[0])?;
    let mut v = Vec::with_capacity(len);
    for _ in 0..len {
        let (ln, toks) = lines.next_tokens()?;
        if toks.len() != 1 {
            return Err(lines.err(ln, "expected one value per line"));
        }
        v.push(lines.parse_f64(ln, toks[0])?);
    }
    lines.finish()?;
    Ok(v)
}

pub fn signal_to_string(x: &SparseSignal) -> String {
    let mut s = format!("{} {}\n", x.dimension(), x.sparsity());
    for (i, v) in x.support().iter().zip(x.values()) {
        let _ = writeln!(s, "{i} {}", fmt_f64(*v));
    }
    s
}

pub fn parse_signal(text: &str, path: &Path) -> Result<SparseSignal> {
    let mut lines = Lines::new(text, path);
    let (ln, head) = lines.next_tokens()?;
    if head.len() != 2 {
        return Err(lines.err(ln, "expected `n K`"));
    }
    let n: usize = lines.parse(ln, head[0])?;
    let k: usize = lines.parse(ln, head[1])?;
    let mut entries = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, toks) = lines.next_tokens()?;
        if toks.len() != 2 {
            return Err(lines.err(ln, "expected `index value`"));
        }
        let i: usize = lines.parse(ln, toks[0])?;
        entries.push((i, lines.parse_f64(ln, toks[1])?));
    }
    lines.finish()?;
    entries.sort_by_key(|e| e.0);
    let (support, values) = entries.into_iter().unzip();
    SparseSignal::new(n, support, values)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    parse_matrix(&fs::read_to_string(path)?, path)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    Ok(fs::write(path, matrix_to_string(a))?)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    parse_vector(&fs::read_to_string(path)?, path)
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    Ok(fs::write(path, vector_to_string(v))?)
}

pub fn read_signal(path: impl AsRef<Path>) -> Result<SparseSignal> {
    let path = path.as_ref();
    parse_signal(&fs::read_to_string(path)?, path)
}

pub fn write_signal(path: impl AsRef<Path>, x: &SparseSignal) -> Result<()> {
    Ok(fs::write(path, signal_to_string(x))?)
}

pub fn write_instance(dir: impl AsRef<Path>, inst: &ProblemInstance) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_matrix(dir.join(MATRIX_FILE), &inst.matrix)?;
    write_signal(dir.join(SIGNAL_FILE), &inst.signal)?;
    write_vector(dir.join(NOISE_FILE), &inst.noise)?;
    write_vector(dir.join(MEASUREMENT_FILE), &inst.measurement)?;
    Ok(())
}

pub fn read_instance(dir: impl AsRef<Path>) -> Result<ProblemInstance> {
    let dir = dir.as_ref();
    ProblemInstance::from_parts(
        read_matrix(dir.join(MATRIX_FILE))?,
        read_signal(dir.join(SIGNAL_FILE))?,
        read_vector(dir.join(NOISE_FILE))?,
        read_vector(dir.join(MEASUREMENT_FILE))?,
    )
}
