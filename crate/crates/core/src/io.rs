//! Text formats: graph files, whitespace matrices, CSV data and `key = value`
//! run configurations. Parse errors carry 1-based line numbers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gibbs::GibbsConfig;
use crate::graph::Graph;
use crate::wishart::{DataSummary, PriorSpec, ShapeSpec};

/// Tolerance for the symmetry check on matrix files.
pub const SYMMETRY_TOL: f64 = 1e-9;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a whole file, naming it in the error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Lines with comments stripped, paired with their 1-based numbers; blank lines dropped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Graph file: `p <m>` header, then one `i j` edge per line (1-based).
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty graph file, expected `p <m>`"))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("p") {
        return Err(parse_err(hline, "expected header `p <m>`"));
    }
    let m: usize = tok
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(hline, "header needs a vertex count"))?;
    if tok.next().is_some() {
        return Err(parse_err(hline, "trailing tokens after vertex count"));
    }
    let mut g = Graph::empty(m);
    for (ln, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(parse_err(ln, format!("expected `i j`, found `{line}`")));
        }
        let mut ends = [0usize; 2];
        for (k, p) in parts.iter().enumerate() {
            let v: usize = p
                .parse()
                .map_err(|_| parse_err(ln, format!("`{p}` is not a vertex number")))?;
            if v == 0 || v > m {
                return Err(parse_err(ln, format!("vertex {v} outside 1..={m}")));
            }
            ends[k] = v - 1;
        }
        if ends[0] == ends[1] {
            return Err(parse_err(ln, format!("self-loop at vertex {}", ends[0] + 1)));
        }
        g.add_edge(ends[0], ends[1])
            .map_err(|e| parse_err(ln, e.to_string()))?;
    }
    Ok(g)
}

/// Canonical form: header, then edges `i j` with `i < j`, sorted.
pub fn format_graph(g: &Graph) -> String {
    let mut out = format!("p {}\n", g.num_vertices());
    for (i, j) in g.edges() {
        let _ = writeln!(out, "{} {}", i + 1, j + 1);
    }
    out
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    parse_graph(&read_text(path)?)
}

fn parse_row(ln: usize, line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .enumerate()
        .map(|(k, f)| {
            let x: f64 = f
                .parse()
                .map_err(|_| parse_err(ln, format!("field {}: `{f}` is not a number", k + 1)))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(parse_err(ln, format!("field {}: non-finite value", k + 1)))
            }
        })
        .collect()
}

fn rows_to_matrix(rows: Vec<(usize, Vec<f64>)>) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, |r| r.1.len());
    for (ln, r) in &rows {
        if r.len() != ncols {
            return Err(parse_err(
                *ln,
                format!("row has {} fields, expected {ncols}", r.len()),
            ));
        }
    }
    let nrows = rows.len();
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i].1[j]))
}

/// Whitespace-separated rows, one per line.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows = content_lines(text)
        .map(|(ln, line)| Ok((ln, parse_row(ln, line)?)))
        .collect::<Result<Vec<_>>>()?;
    rows_to_matrix(rows)
}

/// A matrix file that must be square and symmetric to [`SYMMETRY_TOL`].
pub fn parse_symmetric_matrix(text: &str) -> Result<DMatrix<f64>> {
    let a = parse_matrix(text)?;
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidParams(format!(
                    "matrix is not symmetric at ({}, {}): {} vs {}",
                    i + 1,
                    j + 1,
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    Ok(a)
}

pub fn read_symmetric_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_symmetric_matrix(&read_text(path)?)
        .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))
}

/// Rows of space-separated values in round-trip precision.
pub fn format_matrix(a: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:?}", a[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Comma-separated observations, one per row. With `header` the first
/// row is returned as column names.
pub fn parse_csv(text: &str, header: bool) -> Result<(Option<Vec<String>>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let names = if header {
        let h = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
        if h.is_empty() {
            return Err(parse_err(1, "missing header row"));
        }
        Some(h.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let ln = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(k, f)| match f.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(parse_err(ln, format!("field {}: `{f}` is not a finite number", k + 1))),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(n) = &names {
            if n.len() != row.len() {
                return Err(parse_err(
                    ln,
                    format!("{} fields but the header names {}", row.len(), n.len()),
                ));
            }
        }
        rows.push((ln, row));
    }
    rows_to_matrix(rows).map(|y| (names, y))
}

pub fn format_csv(y: &DMatrix<f64>, header: Option<&[String]>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    if let Some(h) = header {
        w.write_record(h).map_err(io)?;
    }
    for i in 0..y.nrows() {
        w.write_record((0..y.ncols()).map(|j| format!("{:?}", y[(i, j)])))
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

/// How the prior location `U` is given.
#[derive(Clone, Debug, PartialEq)]
pub enum LocationSpec {
    Zero,
    /// `c I`; without `c`, `c = tr(S)/m` from the data.
    ScaledIdentity(Option<f64>),
    File(PathBuf),
}

impl LocationSpec {
    pub fn parse(value: &str) -> std::result::Result<Self, String> {
        match value {
            "zero" => Ok(LocationSpec::Zero),
            "identity" => Ok(LocationSpec::ScaledIdentity(Some(1.0))),
            "scaled-identity" => Ok(LocationSpec::ScaledIdentity(None)),
            _ => {
                if let Some(c) = value.strip_prefix("scaled-identity:") {
                    let c: f64 = c
                        .trim()
                        .parse()
                        .map_err(|_| format!("`{c}` is not a number"))?;
                    if !(c > 0.0 && c.is_finite()) {
                        return Err("scale must be positive".into());
                    }
                    Ok(LocationSpec::ScaledIdentity(Some(c)))
                } else if let Some(p) = value.strip_prefix("file:") {
                    Ok(LocationSpec::File(PathBuf::from(p.trim())))
                } else {
                    Err(format!(
                        "`{value}`: expected zero, identity, scaled-identity[:c] or file:<path>"
                    ))
                }
            }
        }
    }

    /// `U` for `m` vertices. Relative file paths are taken from `base`.
    pub fn resolve(
        &self,
        m: usize,
        data: Option<&DataSummary>,
        base: &Path,
    ) -> Result<DMatrix<f64>> {
        match self {
            LocationSpec::Zero => Ok(DMatrix::zeros(m, m)),
            LocationSpec::ScaledIdentity(Some(c)) => Ok(DMatrix::identity(m, m) * *c),
            LocationSpec::ScaledIdentity(None) => {
                let d = data.ok_or_else(|| {
                    Error::InvalidConfig("u = scaled-identity needs data; give a scale".into())
                })?;
                Ok(DMatrix::identity(m, m) * (d.s.trace() / m as f64))
            }
            LocationSpec::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let u = read_symmetric_matrix(&path)?;
                if u.nrows() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: u.nrows(),
                    });
                }
                Ok(u)
            }
        }
    }

    fn echo(&self) -> String {
        match self {
            LocationSpec::Zero => "zero".into(),
            LocationSpec::ScaledIdentity(None) => "scaled-identity".into(),
            LocationSpec::ScaledIdentity(Some(c)) => format!("scaled-identity:{c:?}"),
            LocationSpec::File(p) => format!("file:{}", p.display()),
        }
    }
}

fn parse_shape(value: &str) -> std::result::Result<ShapeSpec, String> {
    let num = |s: &str| -> std::result::Result<f64, String> {
        let x: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err("non-finite value".into())
        }
    };
    if let Some(v) = value.strip_prefix("list:") {
        Ok(ShapeSpec::Vector(v.split(',').map(num).collect::<std::result::Result<_, _>>()?))
    } else if let Some(c) = value.strip_prefix("offset:") {
        Ok(ShapeSpec::Offset(num(c)?))
    } else if let Some(d) = value.strip_prefix("delta:") {
        Ok(ShapeSpec::Delta(num(d)?))
    } else {
        Err(format!(
            "`{value}`: expected list:<a1,...,am>, offset:<c> or delta:<d>"
        ))
    }
}

fn echo_shape(s: &ShapeSpec) -> String {
    match s {
        ShapeSpec::Vector(v) => {
            let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            format!("list:{}", parts.join(","))
        }
        ShapeSpec::Offset(c) => format!("offset:{c:?}"),
        ShapeSpec::Delta(d) => format!("delta:{d:?}"),
    }
}

/// A prior and sampler settings read from a config file. Absent keys stay
/// `None` so command-line flags and defaults can fill them in.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSettings {
    pub location: Option<LocationSpec>,
    pub shape: Option<ShapeSpec>,
    pub burn_in: Option<usize>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,
    pub drift_batches: Option<usize>,
    pub se_batches: Option<usize>,
    pub center: Option<bool>,
    pub allow_nonintegrable: Option<bool>,
    /// Directory of the config file, for relative `file:` paths.
    pub base_dir: PathBuf,
}

pub const CONFIG_KEYS: [&str; 11] = [
    "u",
    "alpha",
    "burnin",
    "iters",
    "seed",
    "thin",
    "chains",
    "drift_batches",
    "se_batches",
    "center",
    "allow_nonintegrable",
];

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

fn parse_count<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
}

/// Parses `key = value` lines; `#` starts a comment. Unknown and repeated keys are errors.
pub fn parse_config(text: &str) -> Result<RunSettings> {
    let mut cfg = RunSettings::default();
    let mut seen: Vec<&str> = Vec::new();
    for (ln, line) in content_lines(text) {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(ln, format!("expected `key = value`, found `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let known = CONFIG_KEYS
            .iter()
            .find(|&&k| k == key)
            .ok_or_else(|| parse_err(ln, format!("unknown key `{key}`")))?;
        if seen.contains(known) {
            return Err(parse_err(ln, format!("key `{key}` given twice")));
        }
        seen.push(known);
        let wrap = |r: std::result::Result<(), String>| r.map_err(|m| parse_err(ln, format!("{key}: {m}")));
        match key {
            "u" => wrap(LocationSpec::parse(value).map(|v| cfg.location = Some(v)))?,
            "alpha" => wrap(parse_shape(value).map(|v| cfg.shape = Some(v)))?,
            "burnin" => wrap(parse_count(value).map(|v| cfg.burn_in = Some(v)))?,
            "iters" => wrap(parse_count(value).map(|v| cfg.iterations = Some(v)))?,
            "seed" => wrap(parse_count(value).map(|v| cfg.seed = Some(v)))?,
            "thin" => wrap(parse_count(value).map(|v| cfg.thin = Some(v)))?,
            "chains" => wrap(parse_count(value).map(|v| cfg.chains = Some(v)))?,
            "drift_batches" => wrap(parse_count(value).map(|v| cfg.drift_batches = Some(v)))?,
            "se_batches" => wrap(parse_count(value).map(|v| cfg.se_batches = Some(v)))?,
            "center" => wrap(parse_bool(value).map(|v| cfg.center = Some(v)))?,
            "allow_nonintegrable" => {
                wrap(parse_bool(value).map(|v| cfg.allow_nonintegrable = Some(v)))?
            }
            _ => unreachable!("key list checked above"),
        }
    }
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunSettings> {
    let mut cfg = parse_config(&read_text(path)?).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

impl RunSettings {
    /// Settings with defaults filled in for every unset sampler key.
    pub fn gibbs(&self) -> GibbsConfig {
        let d = GibbsConfig::default();
        GibbsConfig {
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            iterations: self.iterations.unwrap_or(d.iterations),
            seed: self.seed.unwrap_or(d.seed),
            thin: self.thin.unwrap_or(d.thin),
            drift_batches: self.drift_batches.unwrap_or(d.drift_batches),
            se_batches: self.se_batches.unwrap_or(d.se_batches),
            chains: self.chains.unwrap_or(d.chains),
            allow_nonintegrable: self.allow_nonintegrable.unwrap_or(d.allow_nonintegrable),
            init: d.init,
        }
    }

    /// Resolves `(U, α)` for `g` in its current labels.
    pub fn prior(&self, g: &Graph, data: Option<&DataSummary>) -> Result<PriorSpec> {
        let loc = self
            .location
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("missing key `u`".into()))?;
        let shape = self
            .shape
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("missing key `alpha`".into()))?;
        let m = g.num_vertices();
        PriorSpec::new(loc.resolve(m, data, &self.base_dir)?, shape.resolve(g)?)
    }

    /// Every key in `key = value` form, with sampler defaults made explicit.
    pub fn echo(&self) -> String {
        let g = self.gibbs();
        let mut out = String::new();
        if let Some(l) = &self.location {
            let _ = writeln!(out, "u = {}", l.echo());
        }
        if let Some(s) = &self.shape {
            let _ = writeln!(out, "alpha = {}", echo_shape(s));
        }
        let _ = writeln!(out, "burnin = {}", g.burn_in);
        let _ = writeln!(out, "iters = {}", g.iterations);
        let _ = writeln!(out, "seed = {}", g.seed);
        let _ = writeln!(out, "thin = {}", g.thin);
        let _ = writeln!(out, "chains = {}", g.chains);
        let _ = writeln!(out, "drift_batches = {}", g.drift_batches);
        let _ = writeln!(out, "se_batches = {}", g.se_batches);
        let _ = writeln!(out, "center = {}", self.center.unwrap_or(true));
        let _ = writeln!(out, "allow_nonintegrable = {}", g.allow_nonintegrable);
        out
    }
}

/// Vector on one line, space separated.
pub fn format_vector(v: &DVector<f64>) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}
