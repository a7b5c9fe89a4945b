//! Schemas, tables and the preprocessing around them.
//!
//! A [`Table`] is a dense row-major `f64` matrix. Discrete cells hold level
//! indices `0..T`; continuous and ordinal cells hold raw (or standardized)
//! values. Ordinal columns are treated as continuous everywhere except at the
//! very end of generation, where they are rounded back onto their levels.

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Ordinal,
    Discrete,
}

impl ColumnKind {
    /// Continuous and ordinal columns share the spline decoder.
    pub fn is_numeric(self) -> bool {
        !matches!(self, ColumnKind::Discrete)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Ordered level labels, discrete columns only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

impl ColumnSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Continuous,
            levels: Vec::new(),
        }
    }

    pub fn ordinal(name: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Ordinal,
            levels: Vec::new(),
        }
    }

    pub fn discrete<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Discrete,
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Width of this column in the one-hot encoding.
    pub fn encoded_width(&self) -> usize {
        match self.kind {
            ColumnKind::Discrete => self.levels.len(),
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Schema("empty column name".into()));
        }
        match self.kind {
            ColumnKind::Discrete => {
                if self.levels.len() < 2 {
                    return Err(Error::Schema(format!(
                        "discrete column {} needs at least 2 levels",
                        self.name
                    )));
                }
                let mut seen = std::collections::HashSet::new();
                for l in &self.levels {
                    if !seen.insert(l) {
                        return Err(Error::Schema(format!(
                            "duplicate level {l} in column {}",
                            self.name
                        )));
                    }
                }
            }
            _ => {
                if !self.levels.is_empty() {
                    return Err(Error::Schema(format!(
                        "column {} is {:?} and cannot carry levels",
                        self.name, self.kind
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ordered column list. On disk this is a TOML document with one
/// `[[columns]]` table per column holding `name`, `kind` and, for discrete
/// columns, `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let schema = Schema { columns };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("schema has no columns".into()));
        }
        let mut names = std::collections::HashSet::new();
        for c in &self.columns {
            c.validate()?;
            if !names.insert(&c.name) {
                return Err(Error::Schema(format!("duplicate column {}", c.name)));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let schema: Schema = toml::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Indices of continuous and ordinal columns, in schema order.
    pub fn numeric_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.columns[j].kind.is_numeric())
            .collect()
    }

    pub fn discrete_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.columns[j].kind == ColumnKind::Discrete)
            .collect()
    }

    /// Length of [`one_hot`] output: `p + sum(T_j)`.
    pub fn encoded_width(&self) -> usize {
        self.columns.iter().map(ColumnSpec::encoded_width).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub column: usize,
    pub mean: f64,
    pub stddev: f64,
}

/// Per-column affine statistics for every continuous/ordinal column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStats {
    pub columns: Vec<ColumnScale>,
}

impl ScalingStats {
    pub fn identity(schema: &Schema) -> Self {
        ScalingStats {
            columns: schema
                .numeric_indices()
                .into_iter()
                .map(|column| ColumnScale {
                    column,
                    mean: 0.0,
                    stddev: 1.0,
                })
                .collect(),
        }
    }

    pub fn for_column(&self, column: usize) -> Option<&ColumnScale> {
        self.columns.iter().find(|c| c.column == column)
    }

    fn check(&self, schema: &Schema) -> Result<()> {
        let numeric = schema.numeric_indices();
        let cols: Vec<usize> = self.columns.iter().map(|c| c.column).collect();
        if cols != numeric {
            return Err(Error::Shape(format!(
                "scaling stats cover columns {cols:?}, schema numeric columns are {numeric:?}"
            )));
        }
        if let Some(c) = self.columns.iter().find(|c| !(c.stddev > 0.0) || !c.mean.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid scale for column {}: mean {}, stddev {}",
                schema.columns[c.column].name, c.mean, c.stddev
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Schema,
    data: Vec<f64>,
    n_rows: usize,
    scaling: Option<ScalingStats>,
}

impl Table {
    pub fn new(schema: Schema, rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = schema.len();
        let mut data = Vec::with_capacity(rows.len() * width);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(Error::Shape(format!(
                    "row {i} has {} cells, schema has {width} columns",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(schema, data)
    }

    /// Builds a table from a row-major buffer of `n * schema.len()` values.
    pub fn from_flat(schema: Schema, data: Vec<f64>) -> Result<Self> {
        let width = schema.len();
        if width == 0 || data.len() % width != 0 {
            return Err(Error::Shape(format!(
                "buffer of {} values does not tile {width} columns",
                data.len()
            )));
        }
        let table = Table {
            n_rows: data.len() / width,
            schema,
            data,
            scaling: None,
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n_rows {
            for (j, spec) in self.schema.columns.iter().enumerate() {
                let v = self.get(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("row {i}, column {}", spec.name)));
                }
                if spec.kind == ColumnKind::Discrete
                    && (v.fract() != 0.0 || v < 0.0 || v >= spec.level_count() as f64)
                {
                    return Err(Error::InvalidArgument(format!(
                        "row {i}, column {}: {v} is not a level index in [0, {})",
                        spec.name,
                        spec.level_count()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn scaling(&self) -> Option<&ScalingStats> {
        self.scaling.as_ref()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.schema.len() + col]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.schema.len();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.schema.len())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, indices: &[usize]) -> Table {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Table {
            schema: self.schema.clone(),
            n_rows: indices.len(),
            data,
            scaling: self.scaling.clone(),
        }
    }

    /// Row `i` passed through [`one_hot`].
    pub fn encode_row(&self, i: usize) -> Vec<f64> {
        one_hot(&self.schema, self.row(i))
    }

    /// Checks that `other` uses the same schema.
    pub fn check_same_schema(&self, other: &Table) -> Result<()> {
        if self.schema != other.schema {
            return Err(Error::Shape("tables have different schemas".into()));
        }
        Ok(())
    }
}

/// Expands each discrete cell into a block of `T_j` indicators; numeric cells
/// pass through.
pub fn one_hot(schema: &Schema, row: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(schema.encoded_width());
    for (spec, &v) in schema.columns.iter().zip(row) {
        match spec.kind {
            ColumnKind::Discrete => {
                let level = v as usize;
                out.extend((0..spec.level_count()).map(|l| if l == level { 1.0 } else { 0.0 }));
            }
            _ => out.push(v),
        }
    }
    out
}

/// Reads a headered CSV file. Discrete cells are mapped onto level indices;
/// empty cells are rejected.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Table> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .clone();
    for (j, spec) in schema.columns.iter().enumerate() {
        let found = headers.get(j);
        if found != Some(spec.name.as_str()) {
            return Err(Error::MissingColumn {
                expected: spec.name.clone(),
                found: found.map(str::to_owned),
            });
        }
    }
    if headers.len() != schema.len() {
        return Err(Error::Schema(format!(
            "header has {} columns, schema has {}",
            headers.len(),
            schema.len()
        )));
    }

    let lookups: Vec<HashMap<&str, usize>> = schema
        .columns
        .iter()
        .map(|c| c.levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect())
        .collect();

    let mut data = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: String::new(),
            value: e.to_string(),
        })?;
        if record.len() != schema.len() {
            return Err(Error::Shape(format!(
                "row {row} has {} cells, expected {}",
                record.len(),
                schema.len()
            )));
        }
        for (j, (spec, cell)) in schema.columns.iter().zip(record.iter()).enumerate() {
            let value = match spec.kind {
                ColumnKind::Discrete => *lookups[j].get(cell).ok_or_else(|| Error::UnknownLevel {
                    level: cell.to_owned(),
                    row,
                    column: spec.name.clone(),
                })? as f64,
                _ => cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row,
                        column: spec.name.clone(),
                        value: cell.to_owned(),
                    })?,
            };
            data.push(value);
        }
    }
    Table::from_flat(schema.clone(), data)
}

/// Writes `table` as CSV with discrete columns emitted as level labels.
pub fn write_csv<W: Write>(table: &Table, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
    wtr.write_record(table.schema.columns.iter().map(|c| c.name.as_str()))
        .map_err(to_err)?;
    for row in table.rows() {
        let cells = table.schema.columns.iter().zip(row).map(|(spec, &v)| match spec.kind {
            ColumnKind::Discrete => spec.levels[v as usize].clone(),
            _ => format!("{v}"),
        });
        wtr.write_record(cells).map_err(to_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
    Ok(())
}

pub fn save_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file))
}

/// Standardizes every continuous/ordinal column with its mean and sample
/// (n-1) standard deviation. Discrete columns are untouched.
pub fn standardize(table: &Table) -> Result<(Table, ScalingStats)> {
    let n = table.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "standardize needs at least 2 rows, got {n}"
        )));
    }
    let mut columns = Vec::new();
    for j in table.schema.numeric_indices() {
        let col = table.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let stddev = var.sqrt();
        if !(stddev > 0.0) || !stddev.is_finite() {
            return Err(Error::ZeroVariance(table.schema.columns[j].name.clone()));
        }
        columns.push(ColumnScale {
            column: j,
            mean,
            stddev,
        });
    }
    let stats = ScalingStats { columns };
    let scaled = standardize_with(table, &stats)?;
    Ok((scaled, stats))
}

/// Applies precomputed statistics, e.g. train-set statistics to a test set.
pub fn standardize_with(table: &Table, stats: &ScalingStats) -> Result<Table> {
    stats.check(&table.schema)?;
    let mut out = map_numeric(table, stats, |v, s| (v - s.mean) / s.stddev);
    out.scaling = Some(stats.clone());
    Ok(out)
}

pub fn destandardize(table: &Table, stats: &ScalingStats) -> Result<Table> {
    stats.check(&table.schema)?;
    let mut out = map_numeric(table, stats, |v, s| v * s.stddev + s.mean);
    out.scaling = None;
    Ok(out)
}

fn map_numeric(table: &Table, stats: &ScalingStats, f: impl Fn(f64, &ColumnScale) -> f64) -> Table {
    let w = table.n_cols();
    let mut data = table.data.clone();
    for row in data.chunks_exact_mut(w) {
        for s in &stats.columns {
            row[s.column] = f(row[s.column], s);
        }
    }
    Table {
        schema: table.schema.clone(),
        data,
        n_rows: table.n_rows,
        scaling: table.scaling.clone(),
    }
}

/// Deterministic shuffle split; `|test| = round(n * test_fraction)`.
pub fn train_test_split(table: &Table, test_fraction: f64, seed: u64) -> Result<(Table, Table)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = table.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cannot split {n} rows")));
    }
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let (test_idx, train_idx) = idx.split_at(n_test);
    let mut train_idx = train_idx.to_vec();
    let mut test_idx = test_idx.to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((table.select_rows(&train_idx), table.select_rows(&test_idx)))
}

/// Drops rows with any continuous/ordinal value outside that column's
/// `[lower, upper]` empirical quantile range.
pub fn trim_to_quantiles(table: &Table, lower: f64, upper: f64) -> Result<Table> {
    if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower >= upper {
        return Err(Error::InvalidArgument(format!(
            "invalid quantile range [{lower}, {upper}]"
        )));
    }
    if table.is_empty() {
        return Ok(table.clone());
    }
    let bounds: Vec<(usize, f64, f64)> = table
        .schema
        .numeric_indices()
        .into_iter()
        .map(|j| {
            let mut col = table.column(j);
            col.sort_by(f64::total_cmp);
            (j, quantile_sorted(&col, lower), quantile_sorted(&col, upper))
        })
        .collect();
    let keep: Vec<usize> = (0..table.n_rows())
        .filter(|&i| {
            bounds
                .iter()
                .all(|&(j, lo, hi)| (lo..=hi).contains(&table.get(i, j)))
        })
        .collect();
    Ok(table.select_rows(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn age_sex() -> Schema {
        Schema::new(vec![
            ColumnSpec::continuous("age"),
            ColumnSpec::discrete("sex", ["M", "F"]),
        ])
        .unwrap()
    }

    #[test]
    fn csv_maps_labels_to_indices() {
        let t = read_csv("age,sex\n30,M\n40,F\n".as_bytes(), &age_sex()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.row(0), &[30.0, 0.0]);
        assert_eq!(t.row(1), &[40.0, 1.0]);
    }

    #[test]
    fn csv_unknown_level_names_row() {
        let err = read_csv("age,sex\n30,X\n".as_bytes(), &age_sex()).unwrap_err();
        assert!(err.to_string().contains("unknown level X at row 1"), "{err}");
    }

    #[test]
    fn csv_header_only_is_empty_table() {
        let t = read_csv("age,sex\n".as_bytes(), &age_sex()).unwrap();
        assert_eq!(t.n_rows(), 0);
    }

    #[test]
    fn csv_rejects_missing_column_and_bad_cells() {
        let err = read_csv("age,gender\n30,M\n".as_bytes(), &age_sex()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn { .. }));
        let err = read_csv("age,sex\nabc,M\n".as_bytes(), &age_sex()).unwrap_err();
        assert!(err.to_string().contains("row 1, column age"), "{err}");
        let err = read_csv("age,sex\n,M\n".as_bytes(), &age_sex()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn csv_write_emits_labels() {
        let t = Table::new(age_sex(), vec![vec![30.5, 1.0]]).unwrap();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "age,sex\n30.5,F\n");
    }

    #[test]
    fn schema_toml_round_trip() {
        let text = r#"
[[columns]]
name = "age"
kind = "continuous"

[[columns]]
name = "rooms"
kind = "ordinal"

[[columns]]
name = "sex"
kind = "discrete"
levels = ["M", "F"]
"#;
        let s = Schema::from_toml_str(text).unwrap();
        assert_eq!(s.columns[1].kind, ColumnKind::Ordinal);
        assert_eq!(s.columns[2].level_count(), 2);
        assert_eq!(Schema::from_toml_str(&s.to_toml_string()).unwrap(), s);
    }

    #[test]
    fn schema_invariants() {
        assert!(Schema::new(vec![ColumnSpec::discrete("a", ["x"])]).is_err());
        let mut c = ColumnSpec::continuous("a");
        c.levels = vec!["x".into(), "y".into()];
        assert!(Schema::new(vec![c]).is_err());
        assert!(Schema::new(vec![ColumnSpec::continuous("a"), ColumnSpec::continuous("a")]).is_err());
    }

    #[test]
    fn discrete_cells_must_be_level_indices() {
        assert!(Table::new(age_sex(), vec![vec![1.0, 2.0]]).is_err());
        assert!(Table::new(age_sex(), vec![vec![1.0, 0.5]]).is_err());
    }

    #[test]
    fn standardize_two_values() {
        let s = Schema::new(vec![ColumnSpec::continuous("x")]).unwrap();
        let t = Table::new(s, vec![vec![1.0], vec![3.0]]).unwrap();
        let (z, stats) = standardize(&t).unwrap();
        assert!((stats.columns[0].mean - 2.0).abs() < 1e-15);
        assert!((stats.columns[0].stddev - 2f64.sqrt()).abs() < 1e-15);
        assert!((z.get(0, 0) + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((z.get(1, 0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let back = destandardize(&z, &stats).unwrap();
        assert!((back.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((back.get(1, 0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn standardize_is_a_fixed_point() {
        let s = Schema::new(vec![ColumnSpec::continuous("x")]).unwrap();
        let t = Table::new(s, vec![vec![1.0], vec![4.0], vec![9.0]]).unwrap();
        let (z, _) = standardize(&t).unwrap();
        let (_, again) = standardize(&z).unwrap();
        assert!(again.columns[0].mean.abs() < 1e-12);
        assert!((again.columns[0].stddev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_rejected() {
        let s = Schema::new(vec![ColumnSpec::continuous("flat")]).unwrap();
        let t = Table::new(s, vec![vec![5.0], vec![5.0], vec![5.0]]).unwrap();
        match standardize(&t) {
            Err(Error::ZeroVariance(name)) => assert_eq!(name, "flat"),
            other => panic!("expected zero-variance error, got {other:?}"),
        }
    }

    #[test]
    fn identity_stats_leave_table_unchanged() {
        let t = Table::new(age_sex(), vec![vec![30.0, 0.0], vec![41.5, 1.0]]).unwrap();
        let back = destandardize(&t, &ScalingStats::identity(t.schema())).unwrap();
        assert_eq!(back.as_flat(), t.as_flat());
    }

    #[test]
    fn destandardize_rejects_mismatched_stats() {
        let t = Table::new(age_sex(), vec![vec![30.0, 0.0]]).unwrap();
        let stats = ScalingStats {
            columns: vec![ColumnScale {
                column: 1,
                mean: 0.0,
                stddev: 1.0,
            }],
        };
        assert!(destandardize(&t, &stats).is_err());
    }

    #[test]
    fn one_hot_examples() {
        let s = Schema::new(vec![
            ColumnSpec::continuous("a"),
            ColumnSpec::discrete("b", ["x", "y", "z"]),
        ])
        .unwrap();
        assert_eq!(one_hot(&s, &[1.5, 2.0]), vec![1.5, 0.0, 0.0, 1.0]);

        let s = Schema::new(vec![ColumnSpec::continuous("a"), ColumnSpec::continuous("b")]).unwrap();
        assert_eq!(one_hot(&s, &[0.25, -3.0]), vec![0.25, -3.0]);

        let s = Schema::new(vec![
            ColumnSpec::continuous("a"),
            ColumnSpec::discrete("b", ["x", "y"]),
            ColumnSpec::discrete("c", ["x", "y"]),
        ])
        .unwrap();
        assert_eq!(one_hot(&s, &[0.0, 0.0, 1.0]), vec![0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let s = Schema::new(vec![ColumnSpec::continuous("i")]).unwrap();
        let t = Table::new(s, (0..10).map(|i| vec![i as f64]).collect()).unwrap();
        let (train, test) = train_test_split(&t, 0.2, 7).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (8, 2));
        let mut all: Vec<f64> = train.column(0);
        all.extend(test.column(0));
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(|i| i as f64).collect::<Vec<_>>());

        let (train2, test2) = train_test_split(&t, 0.2, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);

        assert!(train_test_split(&t, 0.0, 7).is_err());
        assert!(train_test_split(&t, 1.0, 7).is_err());
    }

    #[test]
    fn trimming_drops_tails() {
        let s = Schema::new(vec![ColumnSpec::continuous("i")]).unwrap();
        let t = Table::new(s, (0..=100).map(|i| vec![i as f64]).collect()).unwrap();
        let trimmed = trim_to_quantiles(&t, 0.01, 0.99).unwrap();
        assert_eq!(trimmed.n_rows(), 99);
        assert_eq!(trimmed.column(0)[0], 1.0);
    }
}
