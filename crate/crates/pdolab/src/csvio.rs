//! Plain-text serialization of grid functions and sampled symbols, and schema-tagged
//! CSV report tables.
//!
//! Grid functions: header `# grid n N L side`, then one row per node with the index tuple
//! (node indices on the physical side, signed wavenumbers on the frequency side), `re`, `im`.
//! Symbols: header `# symbol form m rho delta tau n N L`, then one row per entry with the
//! index tuple of every slot followed by `re`, `im`. Floats are written in shortest
//! round-trip form, so reading back is exact.

use crate::core_grid::{make_torus_grid, Grid, GridFunction, Side, C64};
use crate::error::{Error, Result};
use crate::symbols::{SampledSymbol, SymbolClass, SymbolForm};
use std::fmt::Write as _;
use std::path::Path;

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("not an index: {s:?}")))
}

fn parse_i64(s: &str) -> Result<i64> {
    s.trim().parse::<i64>().map_err(|_| Error::Parse(format!("not an integer: {s:?}")))
}

fn parse_side(s: &str) -> Result<Side> {
    match s {
        "physical" => Ok(Side::Physical),
        "frequency" => Ok(Side::Frequency),
        _ => Err(Error::Parse(format!("unknown side {s:?}"))),
    }
}

/// Per-axis index tuple of node `idx` on one slot.
fn slot_tuple(g: &Grid, idx: usize, frequency: bool) -> Vec<i64> {
    if frequency {
        g.k_node(idx)
    } else {
        let ij = g.unflatten(idx);
        ij[..g.dim()].iter().map(|&v| v as i64).collect()
    }
}

/// Inverse of [`slot_tuple`].
fn slot_index(g: &Grid, t: &[i64], frequency: bool) -> Result<usize> {
    if frequency {
        return g.xi_index_of(t).ok_or_else(|| Error::Parse(format!("wavenumber {t:?} is off the lattice")));
    }
    let npts = g.points_per_axis() as i64;
    if t.iter().any(|&v| v < 0 || v >= npts) {
        return Err(Error::Parse(format!("node index {t:?} is off the lattice")));
    }
    let mut ij = [0usize; 2];
    for (a, &v) in t.iter().enumerate() {
        ij[a] = v as usize;
    }
    Ok(g.flatten(ij))
}

fn header_fields<'a>(line: Option<&'a str>, tag: &str, count: usize) -> Result<Vec<&'a str>> {
    let line = line.ok_or_else(|| Error::Parse("empty file".into()))?;
    let fields: Vec<&str> = line.trim_start_matches('#').split_whitespace().collect();
    if fields.first() != Some(&tag) || fields.len() != count + 1 {
        return Err(Error::Parse(format!("expected a '# {tag} …' header with {count} fields, got {line:?}")));
    }
    Ok(fields[1..].to_vec())
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().skip(1).map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn grid_function_to_string(u: &GridFunction) -> String {
    let g = &u.grid;
    let mut s = format!("# grid {} {} {:?} {}\n", g.dim(), g.points_per_axis(), g.period(), u.side.name());
    let freq = u.side == Side::Frequency;
    for (i, v) in u.values.iter().enumerate() {
        for t in slot_tuple(g, i, freq) {
            let _ = write!(s, "{t},");
        }
        let _ = writeln!(s, "{:?},{:?}", v.re, v.im);
    }
    s
}

pub fn grid_function_from_str(text: &str) -> Result<GridFunction> {
    let h = header_fields(text.lines().next(), "grid", 4)?;
    let g = make_torus_grid(parse_usize(h[0])?, parse_usize(h[1])?, parse_f64(h[2])?)?;
    let side = parse_side(h[3])?;
    let freq = side == Side::Frequency;
    let mut values = vec![C64::new(0.0, 0.0); g.len()];
    let mut seen = vec![false; g.len()];
    for line in data_lines(text) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != g.dim() + 2 {
            return Err(Error::Parse(format!("row {line:?} has {} fields, expected {}", f.len(), g.dim() + 2)));
        }
        let t = f[..g.dim()].iter().map(|s| parse_i64(s)).collect::<Result<Vec<_>>>()?;
        let i = slot_index(&g, &t, freq)?;
        values[i] = C64::new(parse_f64(f[g.dim()])?, parse_f64(f[g.dim() + 1])?);
        seen[i] = true;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Parse(format!("missing row for node {:?}", slot_tuple(&g, i, freq))));
    }
    GridFunction::new(&g, side, values)
}

pub fn symbol_to_string(p: &SampledSymbol) -> String {
    let g = &p.grid;
    let c = p.class;
    let mut s = format!(
        "# symbol {} {:?} {:?} {:?} {:?} {} {} {:?}\n",
        p.form.name(),
        c.order,
        c.rho,
        c.delta,
        c.tau,
        g.dim(),
        g.points_per_axis(),
        g.period()
    );
    let n = g.len();
    let slots = p.form.slots();
    for (flat, v) in p.values.iter().enumerate() {
        let mut idx = [0usize; 4];
        let mut r = flat;
        for k in (0..slots).rev() {
            idx[k] = r % n;
            r /= n;
        }
        for (k, &i) in idx[..slots].iter().enumerate() {
            for t in slot_tuple(g, i, p.form.is_xi_slot(k)) {
                let _ = write!(s, "{t},");
            }
        }
        let _ = writeln!(s, "{:?},{:?}", v.re, v.im);
    }
    s
}

pub fn symbol_from_str(text: &str) -> Result<SampledSymbol> {
    let h = header_fields(text.lines().next(), "symbol", 8)?;
    let form = SymbolForm::parse(h[0])?;
    let class = SymbolClass { order: parse_f64(h[1])?, rho: parse_f64(h[2])?, delta: parse_f64(h[3])?, tau: parse_f64(h[4])? };
    let g = make_torus_grid(parse_usize(h[5])?, parse_usize(h[6])?, parse_f64(h[7])?)?;
    let n = g.len();
    let slots = form.slots();
    let total = n.pow(slots as u32);
    let mut values = vec![C64::new(0.0, 0.0); total];
    let mut count = 0usize;
    let d = g.dim();
    for line in data_lines(text) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != slots * d + 2 {
            return Err(Error::Parse(format!("row {line:?} has {} fields, expected {}", f.len(), slots * d + 2)));
        }
        let mut flat = 0usize;
        for k in 0..slots {
            let t = f[k * d..(k + 1) * d].iter().map(|s| parse_i64(s)).collect::<Result<Vec<_>>>()?;
            flat = flat * n + slot_index(&g, &t, form.is_xi_slot(k))?;
        }
        values[flat] = C64::new(parse_f64(f[slots * d])?, parse_f64(f[slots * d + 1])?);
        count += 1;
    }
    if count != total {
        return Err(Error::Parse(format!("{count} rows, expected {total}")));
    }
    SampledSymbol::new(&g, form, values, class)
}

pub fn read_grid_function(path: &Path) -> Result<GridFunction> {
    grid_function_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_grid_function(path: &Path, u: &GridFunction) -> Result<()> {
    Ok(std::fs::write(path, grid_function_to_string(u))?)
}

pub fn read_symbol(path: &Path) -> Result<SampledSymbol> {
    symbol_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_symbol(path: &Path, p: &SampledSymbol) -> Result<()> {
    Ok(std::fs::write(path, symbol_to_string(p))?)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_num(*v),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Twelve significant digits; `inf`, `-inf`, `nan` spelled out.
pub fn format_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.11e}")
    }
}

/// A CSV table whose first line is `# schema=<name> version=<semver>`, followed by
/// `# key=value` metadata lines, the column header and the rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub schema: String,
    pub version: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(schema: &str, version: &str, columns: &[&str]) -> Self {
        Report { schema: schema.into(), version: version.into(), meta: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# schema={} version={}\n", self.schema, self.version);
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.iter().map(Cell::render).collect::<Vec<_>>().join(","));
        }
        s
    }
}
