//! Long-format panel CSV.
//!
//! Columns: `station_id, time, y, lat, lon`, then raw covariates. One row per
//! (station, time). `time` is either `YYYY-MM` or an integer; the grid spans
//! the observed range at unit (monthly) or common integer spacing, and grid
//! points without a row become missing cells. An empty or `NA` response marks
//! the cell as missing. Covariates of missing cells may be empty.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PanelDataset;

const FIXED: [&str; 5] = ["station_id", "time", "y", "lat", "lon"];

/// Which raw columns to use and how to expand them.
///
/// Output covariate order: plain columns, then `<c>_sin`, `<c>_cos` for each
/// angle column, then `<c>_sq` for squares, then `<a>_x_<b>` interactions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaOptions {
    /// Raw covariates to keep; `None` keeps every non-fixed column.
    pub covariates: Option<Vec<String>>,
    /// Angle columns in degrees, replaced by their sine and cosine.
    pub angles: Vec<String>,
    pub squares: Vec<String>,
    pub interactions: Vec<(String, String)>,
}

/// Sine and cosine of an angle in degrees.
pub fn circular_encoding(degrees: f64) -> (f64, f64) {
    let r = degrees.to_radians();
    let (s, c) = r.sin_cos();
    // exact zeros at quarter turns
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    (snap(s), snap(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum TimeKey {
    Month(i64),
    Int(i64),
}

impl TimeKey {
    fn value(self) -> i64 {
        match self {
            TimeKey::Month(v) | TimeKey::Int(v) => v,
        }
    }
}

fn parse_time(s: &str) -> Option<TimeKey> {
    let s = s.trim();
    if let Some((y, m)) = s.split_once('-') {
        if y.is_empty() || m.len() != 2 {
            return None;
        }
        let year: i64 = y.parse().ok()?;
        let month: i64 = m.parse().ok()?;
        if !(1..=12).contains(&month) {
            return None;
        }
        return Some(TimeKey::Month(year * 12 + month - 1));
    }
    s.parse().ok().map(TimeKey::Int)
}

fn time_label(kind: TimeKey, v: i64) -> String {
    match kind {
        TimeKey::Month(_) => format!("{:04}-{:02}", v.div_euclid(12), v.rem_euclid(12) + 1),
        TimeKey::Int(_) => v.to_string(),
    }
}

fn is_missing(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub fn load_panel_csv(path: impl AsRef<Path>, schema: &SchemaOptions) -> Result<PanelDataset> {
    read_panel_csv(File::open(path)?, schema)
}

struct Row {
    line: usize,
    station: usize,
    time: TimeKey,
    y: Option<f64>,
    covs: Vec<Option<f64>>,
}

/// Reads the panel from any reader; errors carry 1-based file line numbers.
pub fn read_panel_csv<R: Read>(reader: R, schema: &SchemaOptions) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Ingestion { row: 1, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let mut fixed = [0usize; 5];
    for (slot, name) in fixed.iter_mut().zip(FIXED) {
        *slot = col(name)
            .ok_or_else(|| Error::Ingestion { row: 1, message: format!("missing required column `{name}`") })?;
    }
    let raw_names: Vec<String> = match &schema.covariates {
        Some(v) => v.clone(),
        None => header.iter().filter(|h| !FIXED.contains(&h.as_str())).cloned().collect(),
    };
    let mut needed = raw_names.clone();
    for c in schema.angles.iter().chain(&schema.squares).chain(schema.interactions.iter().flat_map(|(a, b)| [a, b])) {
        if !needed.contains(c) {
            needed.push(c.clone());
        }
    }
    let raw_idx: Vec<usize> = needed
        .iter()
        .map(|n| col(n).ok_or_else(|| Error::Ingestion { row: 1, message: format!("unknown covariate column `{n}`") }))
        .collect::<Result<_>>()?;

    let mut stations: Vec<String> = Vec::new();
    let mut station_of: HashMap<String, usize> = HashMap::new();
    let mut coords: Vec<(f64, f64)> = Vec::new();
    let mut first_line: Vec<usize> = Vec::new();
    let mut rows: Vec<Row> = Vec::new();
    let mut seen: HashMap<(usize, TimeKey), usize> = HashMap::new();

    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Ingestion { row: line, message: e.to_string() })?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let num = |j: usize, what: &str| -> Result<f64> {
            let s = field(j);
            s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Ingestion {
                row: line,
                message: format!("unparseable numeric value `{s}` in column `{what}`"),
            })
        };
        let sid = field(fixed[0]).to_string();
        if sid.is_empty() {
            return Err(Error::Ingestion { row: line, message: "empty station_id".into() });
        }
        let tstr = field(fixed[1]);
        let time = parse_time(tstr).ok_or_else(|| Error::Ingestion {
            row: line,
            message: format!("unparseable time `{tstr}`; expected YYYY-MM or an integer"),
        })?;
        let lat = num(fixed[3], "lat")?;
        let lon = num(fixed[4], "lon")?;
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=360.0).contains(&lon) {
            return Err(Error::Ingestion { row: line, message: format!("coordinates ({lat}, {lon}) out of range") });
        }
        let station = match station_of.get(&sid) {
            Some(&s) => {
                if coords[s] != (lat, lon) {
                    return Err(Error::Ingestion {
                        row: line,
                        message: format!("station `{sid}` has coordinates differing from row {}", first_line[s]),
                    });
                }
                s
            }
            None => {
                station_of.insert(sid.clone(), stations.len());
                stations.push(sid.clone());
                coords.push((lat, lon));
                first_line.push(line);
                stations.len() - 1
            }
        };
        if let Some(prev) = seen.insert((station, time), line) {
            return Err(Error::Ingestion {
                row: line,
                message: format!("duplicate row for station `{sid}` at time `{tstr}` (first seen at row {prev})"),
            });
        }
        let ystr = field(fixed[2]);
        let y = if is_missing(ystr) { None } else { Some(num(fixed[2], "y")?) };
        let mut covs = Vec::with_capacity(raw_idx.len());
        for (&j, name) in raw_idx.iter().zip(&needed) {
            let s = field(j);
            if is_missing(s) {
                if y.is_some() {
                    return Err(Error::Ingestion {
                        row: line,
                        message: format!("missing covariate `{name}` on a row with an observed response"),
                    });
                }
                covs.push(None);
            } else {
                covs.push(Some(num(j, name)?));
            }
        }
        rows.push(Row { line, station, time, y, covs });
    }
    if rows.is_empty() {
        return Err(Error::Ingestion { row: 1, message: "no data rows".into() });
    }

    let kind = rows[0].time;
    if let Some(r) = rows.iter().find(|r| std::mem::discriminant(&r.time) != std::mem::discriminant(&kind)) {
        return Err(Error::Ingestion { row: r.line, message: "mixed YYYY-MM and integer time labels".into() });
    }
    let (tmin, tmax) =
        rows.iter().fold((i64::MAX, i64::MIN), |(lo, hi), r| (lo.min(r.time.value()), hi.max(r.time.value())));
    let step = match kind {
        TimeKey::Month(_) => 1,
        TimeKey::Int(_) => rows.iter().fold(0, |g, r| gcd(g, r.time.value() - tmin)).max(1),
    };
    let times = ((tmax - tmin) / step + 1) as usize;
    let n = stations.len();

    let pos = |name: &str| needed.iter().position(|c| c == name).expect("column resolved above");
    let mut names: Vec<String> = raw_names.iter().filter(|c| !schema.angles.contains(c)).cloned().collect();
    let plain: Vec<usize> = names.iter().map(|c| pos(c)).collect();
    for a in &schema.angles {
        names.push(format!("{a}_sin"));
        names.push(format!("{a}_cos"));
    }
    names.extend(schema.squares.iter().map(|c| format!("{c}_sq")));
    names.extend(schema.interactions.iter().map(|(a, b)| format!("{a}_x_{b}")));
    let p = names.len();

    let mut y = vec![0.0; n * times];
    let mut observed = vec![false; n * times];
    let mut x = vec![0.0; n * times * p];
    for r in &rows {
        let t = ((r.time.value() - tmin) / step) as usize;
        let cell = r.station * times + t;
        if let Some(v) = r.y {
            y[cell] = v;
            observed[cell] = true;
        }
        let get = |name: &str| r.covs[pos(name)].unwrap_or(0.0);
        let mut out = Vec::with_capacity(p);
        out.extend(plain.iter().map(|&j| r.covs[j].unwrap_or(0.0)));
        for a in &schema.angles {
            let (s, c) = circular_encoding(get(a));
            out.push(s);
            out.push(c);
        }
        out.extend(schema.squares.iter().map(|c| get(c).powi(2)));
        out.extend(schema.interactions.iter().map(|(a, b)| get(a) * get(b)));
        x[cell * p..(cell + 1) * p].copy_from_slice(&out);
    }
    for (s, sid) in stations.iter().enumerate() {
        if !(0..times).any(|t| observed[s * times + t]) {
            return Err(Error::Ingestion {
                row: first_line[s],
                message: format!("station `{sid}` has zero observations"),
            });
        }
    }
    let labels = (0..times as i64).map(|t| time_label(kind, tmin + t * step)).collect();
    PanelDataset::new(n, times, p, y, observed, x, coords, stations, labels, names)
}

/// Writes every cell of the panel; missing responses are left empty.
/// Covariates are written post-transform, so reading back with default
/// options reproduces the same tensors.
pub fn write_panel_csv<W: Write>(data: &PanelDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(data.covariate_names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..data.n() {
        let (lat, lon) = data.coords()[i];
        for t in 0..data.times() {
            let mut rec = vec![data.station_ids[i].clone(), data.time_labels[t].clone()];
            rec.push(if data.is_observed(i, t) { data.y(i, t).to_string() } else { String::new() });
            rec.push(lat.to_string());
            rec.push(lon.to_string());
            rec.extend(data.x(i, t).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_panel_csv(data: &PanelDataset, path: impl AsRef<Path>) -> Result<()> {
    write_panel_csv(data, std::io::BufWriter::new(File::create(path)?))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "\
station_id,time,y,lat,lon,temp,windDir
A,2020-01,10.5,-33.4,-70.6,20.1,90
A,2020-02,11.0,-33.4,-70.6,21.3,0
B,2020-01,NA,-36.8,-73.0,15.0,360
B,2020-02,8.25,-36.8,-73.0,14.2,180
C,2020-01,5,-41.5,-72.9,11.0,45
C,2020-02,,-41.5,-72.9,,
";

    fn load(s: &str, schema: &SchemaOptions) -> Result<PanelDataset> {
        read_panel_csv(s.as_bytes(), schema)
    }

    #[test]
    fn quarter_turn_and_circularity() {
        let (s, c) = circular_encoding(90.0);
        assert_eq!(s, 1.0);
        assert!(c.abs() < 1e-12);
        let a = circular_encoding(0.0);
        let b = circular_encoding(360.0);
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    }

    #[test]
    fn toy_shapes_and_transforms() {
        let schema = SchemaOptions {
            angles: vec!["windDir".into()],
            squares: vec!["temp".into()],
            interactions: vec![("temp".into(), "windDir".into())],
            ..Default::default()
        };
        let d = load(TOY, &schema).unwrap();
        assert_eq!((d.n(), d.times(), d.p()), (3, 2, 5));
        assert_eq!(d.covariate_names, ["temp", "windDir_sin", "windDir_cos", "temp_sq", "temp_x_windDir"]);
        assert_eq!(d.time_labels, ["2020-01", "2020-02"]);
        assert!(!d.is_observed(1, 0) && !d.is_observed(2, 1) && d.is_observed(1, 1));
        let x = d.x(0, 0);
        assert_eq!(x[1], 1.0);
        assert!((x[3] - 20.1f64 * 20.1).abs() < 1e-12);
        assert!((x[4] - 20.1 * 90.0).abs() < 1e-9);
    }

    #[test]
    fn round_trip_is_identical() {
        let schema = SchemaOptions { angles: vec!["windDir".into()], ..Default::default() };
        let a = load(TOY, &schema).unwrap();
        let mut buf = Vec::new();
        write_panel_csv(&a, &mut buf).unwrap();
        let b = read_panel_csv(buf.as_slice(), &SchemaOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn integer_time_grid_fills_gaps() {
        let csv = "station_id,time,y,lat,lon\nA,0,1,0,0\nA,4,2,0,0\nB,2,3,1,1\n";
        let d = load(csv, &SchemaOptions::default()).unwrap();
        assert_eq!(d.time_labels, ["0", "2", "4"]);
        assert!(d.is_observed(0, 0) && !d.is_observed(0, 1) && d.is_observed(1, 1));
    }

    #[test]
    fn month_labels_cross_years() {
        let csv = "station_id,time,y,lat,lon\nA,2019-12,1,0,0\nA,2020-01,2,0,0\n";
        let d = load(csv, &SchemaOptions::default()).unwrap();
        assert_eq!(d.time_labels, ["2019-12", "2020-01"]);
    }

    fn ingestion_row(r: Result<PanelDataset>) -> (usize, String) {
        match r {
            Err(Error::Ingestion { row, message }) => (row, message),
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_rows_are_named() {
        let csv = "station_id,time,y,lat,lon\nA,1,1,0,0\nA,1,2,0,0\n";
        let (row, msg) = ingestion_row(load(csv, &SchemaOptions::default()));
        assert_eq!(row, 3);
        assert!(msg.contains("duplicate"));
    }

    #[test]
    fn unparseable_numbers_are_named() {
        let csv = "station_id,time,y,lat,lon\nA,1,abc,0,0\n";
        let (row, msg) = ingestion_row(load(csv, &SchemaOptions::default()));
        assert_eq!(row, 2);
        assert!(msg.contains("unparseable") && msg.contains("abc"));
    }

    #[test]
    fn station_without_observations_is_named() {
        let csv = "station_id,time,y,lat,lon\nA,1,1,0,0\nB,1,NA,1,1\nB,2,,1,1\n";
        let (row, msg) = ingestion_row(load(csv, &SchemaOptions::default()));
        assert_eq!(row, 3);
        assert!(msg.contains("zero observations"));
    }

    #[test]
    fn missing_column_is_reported() {
        let csv = "station_id,time,value,lat,lon\nA,1,1,0,0\n";
        let (row, msg) = ingestion_row(load(csv, &SchemaOptions::default()));
        assert_eq!(row, 1);
        assert!(msg.contains("`y`"));
    }
}
