//! Table, factorization, report and map file formats.
//!
//! Exact-mode scalars are written as `"num/den"` (or integer) strings and
//! float-mode scalars as JSON numbers, in every format.

use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::distinguishability::DistinguishabilityReport;
use crate::error::{Error, Result};
use crate::factorization::Factorization;
use crate::geometry::GeometryReport;
use crate::matrix::Matrix;
use crate::scalar::{Field, NumericMode, DEFAULT_TOLERANCE};
use crate::state_maps::Domain;
use crate::table::{Measurement, MeasurementLayout, ProbabilityTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Syntax(format!("unknown table format '{other}' (expected json|csv)"))),
        }
    }
}

/// A table in whichever numeric mode its source declared.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTable {
    Exact(ProbabilityTable<BigRational>),
    Float(ProbabilityTable<f64>),
}

impl AnyTable {
    pub fn mode(&self) -> NumericMode {
        match self {
            AnyTable::Exact(_) => NumericMode::Exact,
            AnyTable::Float(_) => NumericMode::Float,
        }
    }

    pub fn state_names(&self) -> &[String] {
        match self {
            AnyTable::Exact(t) => t.state_names(),
            AnyTable::Float(t) => t.state_names(),
        }
    }

    pub fn layout(&self) -> &MeasurementLayout {
        match self {
            AnyTable::Exact(t) => t.layout(),
            AnyTable::Float(t) => t.layout(),
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            AnyTable::Exact(t) => t.tolerance(),
            AnyTable::Float(t) => t.tolerance(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParseOptions {
    /// Reinterpret entries in this mode instead of the declared one.
    pub mode: Option<NumericMode>,
    /// Float-mode tolerance; defaults to [`DEFAULT_TOLERANCE`].
    pub tolerance: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableFile {
    numeric_mode: NumericMode,
    states: Vec<String>,
    measurements: Vec<MeasurementFile>,
    probabilities: Vec<Vec<Value>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementFile {
    name: String,
    outcomes: Vec<String>,
}

pub fn parse_table(input: &[u8], format: Format, options: ParseOptions) -> Result<AnyTable> {
    match format {
        Format::Json => parse_json_table(input, options),
        Format::Csv => parse_csv_table(input, options),
    }
}

fn build<T: Field>(
    layout: MeasurementLayout,
    states: Vec<String>,
    cells: &[Vec<CellRef<'_>>],
    tolerance: f64,
) -> Result<ProbabilityTable<T>> {
    let rows = layout.outcome_count();
    if cells.len() != rows {
        return Err(Error::Validation(format!(
            "{} probability rows given, measurements declare {rows} outcomes",
            cells.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * states.len());
    for (r, row) in cells.iter().enumerate() {
        if row.len() != states.len() {
            return Err(Error::Validation(format!(
                "row {r} (outcome {}) has {} entries, expected {} (one per state)",
                layout.row_label(r),
                row.len(),
                states.len()
            )));
        }
        for (c, cell) in row.iter().enumerate() {
            let parsed = match cell {
                CellRef::Json(v) => T::from_json(v),
                CellRef::Text(s) => T::parse_text(s),
            };
            data.push(parsed.map_err(|e| {
                Error::Syntax(format!(
                    "entry at row {r} (outcome {}), column {c} (state '{}'): {e}",
                    layout.row_label(r),
                    states[c]
                ))
            })?);
        }
    }
    let entries = Matrix::from_vec(rows, states.len(), data)?;
    ProbabilityTable::new(layout, states, entries, tolerance)
}

enum CellRef<'a> {
    Json(&'a Value),
    Text(&'a str),
}

fn finish(
    mode: NumericMode,
    layout: MeasurementLayout,
    states: Vec<String>,
    cells: &[Vec<CellRef<'_>>],
    options: ParseOptions,
) -> Result<AnyTable> {
    let tolerance = options.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    match options.mode.unwrap_or(mode) {
        NumericMode::Exact => Ok(AnyTable::Exact(build(layout, states, cells, 0.0)?)),
        NumericMode::Float => Ok(AnyTable::Float(build(layout, states, cells, tolerance)?)),
    }
}

fn parse_json_table(input: &[u8], options: ParseOptions) -> Result<AnyTable> {
    let file: TableFile = serde_json::from_slice(input).map_err(|e| Error::Syntax(format!("table JSON: {e}")))?;
    let layout = MeasurementLayout::new(
        file.measurements
            .into_iter()
            .map(|m| Measurement::new(m.name, m.outcomes))
            .collect(),
    )?;
    let cells: Vec<Vec<CellRef<'_>>> = file
        .probabilities
        .iter()
        .map(|row| row.iter().map(CellRef::Json).collect())
        .collect();
    finish(file.numeric_mode, layout, file.states, &cells, options)
}

fn parse_csv_table(input: &[u8], options: ParseOptions) -> Result<AnyTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Syntax(format!("table CSV header: {e}")))?
        .clone();
    if header.len() < 3 {
        return Err(Error::Syntax(
            "CSV header needs measurement and outcome columns followed by at least one state".into(),
        ));
    }
    let states: Vec<String> = header.iter().skip(2).map(str::to_string).collect();

    let mut records = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Syntax(format!("table CSV line {}: {e}", line + 2)))?;
        if rec.len() < 2 {
            return Err(Error::Syntax(format!(
                "table CSV line {}: missing measurement/outcome columns",
                line + 2
            )));
        }
        records.push(rec);
    }

    let mut measurements: Vec<Measurement> = Vec::new();
    for rec in &records {
        let (m, o) = (&rec[0], &rec[1]);
        match measurements.last_mut() {
            Some(last) if last.name == m => last.outcomes.push(o.to_string()),
            _ => {
                if measurements.iter().any(|x| x.name == m) {
                    return Err(Error::Validation(format!(
                        "rows of measurement '{m}' are not contiguous"
                    )));
                }
                measurements.push(Measurement::new(m, [o]));
            }
        }
    }
    let layout = MeasurementLayout::new(measurements)?;
    let cells: Vec<Vec<CellRef<'_>>> = records
        .iter()
        .map(|rec| rec.iter().skip(2).map(CellRef::Text).collect())
        .collect();
    let declared = if records
        .iter()
        .flat_map(|rec| rec.iter().skip(2))
        .any(|cell| cell.contains(['.', 'e', 'E']))
    {
        NumericMode::Float
    } else {
        NumericMode::Exact
    };
    finish(declared, layout, states, &cells, options)
}

fn matrix_json<T: Field>(m: &Matrix<T>) -> Vec<Vec<Value>> {
    m.row_iter().map(|row| row.iter().map(Field::to_json).collect()).collect()
}

fn vector_json<T: Field>(v: &[T]) -> Vec<Value> {
    v.iter().map(Field::to_json).collect()
}

pub fn serialize_table<T: Field>(table: &ProbabilityTable<T>, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let file = TableFile {
                numeric_mode: T::MODE,
                states: table.state_names().to_vec(),
                measurements: table
                    .layout()
                    .measurements()
                    .iter()
                    .map(|m| MeasurementFile {
                        name: m.name.clone(),
                        outcomes: m.outcomes.clone(),
                    })
                    .collect(),
                probabilities: matrix_json(table.entries()),
            };
            let mut out = serde_json::to_vec_pretty(&file).expect("table serializes");
            out.push(b'\n');
            out
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["measurement".to_string(), "outcome".to_string()];
            header.extend(table.state_names().iter().cloned());
            writer.write_record(&header).expect("in-memory write");
            let layout = table.layout();
            for r in 0..table.outcome_count() {
                let (m, i) = layout.locate(r).expect("row in range");
                let meas = &layout.measurements()[m];
                let mut rec = vec![meas.name.clone(), meas.outcomes[i].clone()];
                rec.extend(table.entries().row(r).iter().map(Field::to_text));
                writer.write_record(&rec).expect("in-memory write");
            }
            writer.into_inner().expect("in-memory flush")
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FactorizationExport {
    #[serde(rename = "K")]
    pub k: usize,
    pub x: Vec<Vec<Value>>,
    pub pivot_rows: Vec<usize>,
    pub pivot_cols: Vec<usize>,
    pub t: Vec<Vec<Value>>,
    pub u: Vec<Vec<Value>>,
}

impl FactorizationExport {
    pub fn new<T: Field>(f: &Factorization<T>) -> Self {
        Self {
            k: f.rank(),
            x: matrix_json(f.x()),
            pivot_rows: f.pivot_rows().to_vec(),
            pivot_cols: f.pivot_cols().to_vec(),
            t: matrix_json(f.t()),
            u: matrix_json(f.u()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct HalfSpaceExport {
    pub normal: Vec<Value>,
    pub offset: u8,
}

#[derive(Debug, Serialize)]
pub struct GeometryExport {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "Z")]
    pub z: usize,
    pub n: Vec<Value>,
    pub extreme_states: Vec<String>,
    pub hyperplane_max_residual: f64,
    pub halfspaces: Vec<HalfSpaceExport>,
}

impl GeometryExport {
    pub fn new<T: Field>(report: &GeometryReport<T>, state_names: &[String]) -> Self {
        let halfspaces = report
            .origin_cone
            .iter()
            .chain(&report.trivial_cone)
            .map(|h| HalfSpaceExport {
                normal: vector_json(&h.normal),
                offset: h.offset(),
            })
            .collect();
        Self {
            k: report.rank,
            z: report.z(),
            n: vector_json(&report.n.n),
            extreme_states: report
                .extreme
                .indices
                .iter()
                .map(|&j| state_names[j].clone())
                .collect(),
            hyperplane_max_residual: report.max_hyperplane_residual(),
            halfspaces,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct WitnessExport {
    pub measurement: String,
    pub pairs: Vec<[String; 2]>,
}

#[derive(Debug, Serialize)]
pub struct DistinguishabilityExport {
    #[serde(rename = "N")]
    pub n: usize,
    pub mode: String,
    pub witness: WitnessExport,
    #[serde(rename = "Z")]
    pub z: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub chain_holds: bool,
    pub classical: bool,
}

impl DistinguishabilityExport {
    pub fn new(report: &DistinguishabilityReport, layout: &MeasurementLayout, state_names: &[String]) -> Self {
        let pairs = report
            .witness
            .pairs
            .iter()
            .map(|(state, rows)| {
                let outcome: Vec<&str> = rows.iter().filter_map(|&r| layout.outcome_name(r)).collect();
                [state_names[*state].clone(), outcome.join("|")]
            })
            .collect();
        Self {
            n: report.n,
            mode: report.mode.as_str().to_string(),
            witness: WitnessExport {
                measurement: layout.measurements()[report.witness.measurement].name.clone(),
                pairs,
            },
            z: report.chain.z,
            k: report.chain.k,
            chain_holds: report.chain.holds(),
            classical: report.classical,
        }
    }
}

/// Parsed map file `{ "F": matrix, "g": vector, "domain": "total" | [indices] }`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec<T> {
    pub f: Matrix<T>,
    pub g: Vec<T>,
    pub domain: Domain,
}

#[derive(Debug, Deserialize, Serialize)]
struct MapFile {
    #[serde(rename = "F")]
    f: Vec<Vec<Value>>,
    g: Vec<Value>,
    #[serde(default = "total_domain")]
    domain: Value,
}

fn total_domain() -> Value {
    Value::String("total".into())
}

pub fn parse_map<T: Field>(input: &[u8]) -> Result<MapSpec<T>> {
    let file: MapFile = serde_json::from_slice(input).map_err(|e| Error::Syntax(format!("map JSON: {e}")))?;
    let rows = file
        .f
        .iter()
        .map(|row| row.iter().map(T::from_json).collect::<Result<Vec<T>>>())
        .collect::<Result<Vec<_>>>()?;
    let f = Matrix::from_rows(&rows, 0).map_err(|_| Error::Syntax("map F is ragged".into()))?;
    let g = file.g.iter().map(T::from_json).collect::<Result<Vec<T>>>()?;
    let domain = match &file.domain {
        Value::String(s) if s == "total" => Domain::Total,
        Value::Array(items) => Domain::Partial(
            items
                .iter()
                .map(|v| {
                    v.as_u64()
                        .map(|x| x as usize)
                        .ok_or_else(|| Error::Syntax(format!("map domain entry {v} is not an index")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        other => return Err(Error::Syntax(format!("map domain must be \"total\" or a list, found {other}"))),
    };
    Ok(MapSpec { f, g, domain })
}

pub fn serialize_map<T: Field>(spec: &MapSpec<T>) -> Vec<u8> {
    let domain = match &spec.domain {
        Domain::Total => total_domain(),
        Domain::Partial(idx) => Value::Array(idx.iter().map(|&j| Value::from(j)).collect()),
    };
    let file = MapFile {
        f: matrix_json(&spec.f),
        g: vector_json(&spec.g),
        domain,
    };
    serde_json::to_vec_pretty(&file).expect("map serializes")
}

pub fn matrix_to_json<T: Field>(m: &Matrix<T>) -> Value {
    Value::Array(matrix_json(m).into_iter().map(Value::Array).collect())
}

pub fn vector_to_json<T: Field>(v: &[T]) -> Value {
    Value::Array(vector_json(v))
}
