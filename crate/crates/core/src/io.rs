//! CSV readers and writers for catalogs, PoA layouts, profiles, traces and
//! sparsification mappings.
//!
//! | file     | header                                                 |
//! |----------|--------------------------------------------------------|
//! | ads      | `ad_id,f1,...,fn,base_value,scope,target_poa`          |
//! | PoAs     | `poa_id,x_m,y_m,range_m`                               |
//! | profiles | `vehicle_id,f1,...,fn`                                 |
//! | trace    | `step,vehicle_id,x_m,y_m`                              |
//! | mapping  | `removed_ad_id,representative_ad_id,distance`          |
//!
//! `scope` is `G` or `L`; `target_poa` is empty for global ads. Reals are
//! written in shortest round-trip form.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::error::{Error, Result};
use crate::model::{Ad, AdId, AdScope, FeatureVector, PoA, PoAId, VehicleId, VehicleProfile};
use crate::sim::trace::{MobilityTrace, TracePoint};
use crate::sparse::SparseAdSet;

struct Rows<R> {
    source: PathBuf,
    reader: csv::Reader<R>,
    header: StringRecord,
}

impl<R: Read> Rows<R> {
    fn new(reader: R, source: &Path) -> Result<Self> {
        let mut reader = ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = reader.headers().map_err(|e| Error::Parse {
            path: source.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
        Ok(Rows { source: source.to_path_buf(), header: header.clone(), reader })
    }

    fn error(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Parse { path: self.source.clone(), line, message: message.into() }
    }

    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        let found: Vec<&str> = self.header.iter().collect();
        if found != expected {
            return Err(self.error(1, format!("expected header `{}`, found `{}`", expected.join(","), found.join(","))));
        }
        Ok(())
    }

    /// Calls `f` with every record and its 1-based line number.
    fn for_each(&mut self, mut f: impl FnMut(&StringRecord, &Field) -> Result<()>) -> Result<()> {
        let mut record = StringRecord::new();
        loop {
            let line = self.reader.position().line() + 1;
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {}
                Err(e) => return Err(self.error(line, e.to_string())),
            }
            let line = record.position().map_or(line, |p| p.line());
            let field = Field { source: &self.source, line };
            if record.len() != self.header.len() {
                return Err(field.err(format!("expected {} fields, found {}", self.header.len(), record.len())));
            }
            f(&record, &field)?;
        }
    }
}

struct Field<'a> {
    source: &'a Path,
    line: u64,
}

impl Field<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { path: self.source.to_path_buf(), line: self.line, message: message.into() }
    }

    fn parse<T: FromStr>(&self, record: &StringRecord, i: usize, name: &str) -> Result<T> {
        let raw = record.get(i).unwrap_or("");
        raw.parse().map_err(|_| self.err(format!("invalid {name} `{raw}`")))
    }

    fn wrap<T>(&self, r: Result<T>) -> Result<T> {
        r.map_err(|e| self.err(e.to_string()))
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn feature_columns(header: &StringRecord, first: usize, trailing: usize, source: &Path) -> Result<usize> {
    let n = header.len().saturating_sub(first + trailing);
    let ok = n >= 1 && (0..n).all(|i| header.get(first + i) == Some(&format!("f{}", i + 1)));
    if !ok {
        return Err(Error::Parse {
            path: source.to_path_buf(),
            line: 1,
            message: "expected feature columns f1..fn".into(),
        });
    }
    Ok(n)
}

pub fn read_ads(reader: impl Read, source: &Path) -> Result<Vec<Ad>> {
    let mut rows = Rows::new(reader, source)?;
    let header = rows.header.clone();
    if header.get(0) != Some("ad_id") {
        return Err(rows.error(1, "first column must be `ad_id`"));
    }
    let n = feature_columns(&header, 1, 3, source)?;
    if header.iter().skip(1 + n).collect::<Vec<_>>() != ["base_value", "scope", "target_poa"] {
        return Err(rows.error(1, "trailing columns must be `base_value,scope,target_poa`"));
    }
    let mut ads = Vec::new();
    rows.for_each(|rec, f| {
        let id = AdId(f.parse(rec, 0, "ad_id")?);
        let coords = (0..n).map(|i| f.parse(rec, 1 + i, "feature")).collect::<Result<Vec<f64>>>()?;
        let value: f64 = f.parse(rec, 1 + n, "base_value")?;
        let target = &rec[n + 3];
        let scope = match &rec[n + 2] {
            "G" if target.is_empty() => AdScope::Global,
            "G" => return Err(f.err("global ads must leave target_poa empty")),
            "L" => AdScope::Local(PoAId(f.parse(rec, n + 3, "target_poa")?)),
            other => return Err(f.err(format!("scope must be G or L, found `{other}`"))),
        };
        let features = f.wrap(FeatureVector::new(coords))?;
        ads.push(f.wrap(Ad::new(id, features, value, scope))?);
        Ok(())
    })?;
    Ok(ads)
}

pub fn load_ads(path: &Path) -> Result<Vec<Ad>> {
    read_ads(open(path)?, path)
}

pub fn write_ads(writer: impl Write, ads: &[Ad]) -> Result<()> {
    let n = ads.first().map_or(1, |a| a.features.dim());
    let mut w = WriterBuilder::new().from_writer(writer);
    let mut header = vec!["ad_id".to_string()];
    header.extend((1..=n).map(|i| format!("f{i}")));
    header.extend(["base_value", "scope", "target_poa"].map(String::from));
    w.write_record(&header)?;
    for ad in ads {
        let mut row = vec![ad.id.to_string()];
        row.extend(ad.features.coords().iter().map(f64::to_string));
        row.push(ad.base_value.to_string());
        match ad.scope {
            AdScope::Global => row.extend(["G".to_string(), String::new()]),
            AdScope::Local(p) => row.extend(["L".to_string(), p.to_string()]),
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<ads>", e))?;
    Ok(())
}

pub fn save_ads(path: &Path, ads: &[Ad]) -> Result<()> {
    write_ads(create(path)?, ads)
}

pub fn read_poas(reader: impl Read, source: &Path) -> Result<Vec<PoA>> {
    let mut rows = Rows::new(reader, source)?;
    rows.expect_header(&["poa_id", "x_m", "y_m", "range_m"])?;
    let mut poas = Vec::new();
    rows.for_each(|rec, f| {
        let id = PoAId(f.parse(rec, 0, "poa_id")?);
        let x = f.parse(rec, 1, "x_m")?;
        let y = f.parse(rec, 2, "y_m")?;
        let range = f.parse(rec, 3, "range_m")?;
        poas.push(f.wrap(PoA::new(id, (x, y), range))?);
        Ok(())
    })?;
    Ok(poas)
}

pub fn load_poas(path: &Path) -> Result<Vec<PoA>> {
    read_poas(open(path)?, path)
}

pub fn write_poas(writer: impl Write, poas: &[PoA]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(["poa_id", "x_m", "y_m", "range_m"])?;
    for p in poas {
        w.write_record([p.id.to_string(), p.position.0.to_string(), p.position.1.to_string(), p.range.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<poas>", e))?;
    Ok(())
}

pub fn save_poas(path: &Path, poas: &[PoA]) -> Result<()> {
    write_poas(create(path)?, poas)
}

pub fn read_profiles(reader: impl Read, source: &Path) -> Result<Vec<VehicleProfile>> {
    let mut rows = Rows::new(reader, source)?;
    if rows.header.get(0) != Some("vehicle_id") {
        return Err(rows.error(1, "first column must be `vehicle_id`"));
    }
    let n = feature_columns(&rows.header.clone(), 1, 0, source)?;
    let mut out = Vec::new();
    rows.for_each(|rec, f| {
        let id = VehicleId(f.parse(rec, 0, "vehicle_id")?);
        let coords = (0..n).map(|i| f.parse(rec, 1 + i, "feature")).collect::<Result<Vec<f64>>>()?;
        out.push(VehicleProfile { id, interests: f.wrap(FeatureVector::new(coords))? });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_profiles(path: &Path) -> Result<Vec<VehicleProfile>> {
    read_profiles(open(path)?, path)
}

pub fn write_profiles(writer: impl Write, profiles: &[VehicleProfile]) -> Result<()> {
    let n = profiles.first().map_or(1, |p| p.interests.dim());
    let mut w = WriterBuilder::new().from_writer(writer);
    let mut header = vec!["vehicle_id".to_string()];
    header.extend((1..=n).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for p in profiles {
        let mut row = vec![p.id.to_string()];
        row.extend(p.interests.coords().iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<profiles>", e))?;
    Ok(())
}

pub fn save_profiles(path: &Path, profiles: &[VehicleProfile]) -> Result<()> {
    write_profiles(create(path)?, profiles)
}

/// Parses a trace. Rows may come in any step order; they are bucketed by
/// their step value and steps between 0 and the largest one are kept even
/// when empty.
pub fn read_trace(reader: impl Read, source: &Path, step_duration_s: f64) -> Result<MobilityTrace> {
    let mut rows = Rows::new(reader, source)?;
    rows.expect_header(&["step", "vehicle_id", "x_m", "y_m"])?;
    let mut steps: Vec<Vec<TracePoint>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    rows.for_each(|rec, f| {
        let step: usize = f.parse(rec, 0, "step")?;
        let vehicle = VehicleId(f.parse(rec, 1, "vehicle_id")?);
        let x: f64 = f.parse(rec, 2, "x_m")?;
        let y: f64 = f.parse(rec, 3, "y_m")?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(f.err("coordinates must be finite"));
        }
        if steps.len() <= step {
            steps.resize_with(step + 1, Vec::new);
        }
        if !seen.insert((step, vehicle)) {
            return Err(f.err(format!("vehicle {vehicle} appears twice in step {step}")));
        }
        steps[step].push(TracePoint { vehicle, x, y });
        Ok(())
    })?;
    for s in &mut steps {
        s.sort_by_key(|p| p.vehicle);
    }
    Ok(MobilityTrace::new(steps, step_duration_s))
}

pub fn load_trace(path: &Path, step_duration_s: f64) -> Result<MobilityTrace> {
    read_trace(open(path)?, path, step_duration_s)
}

pub fn write_trace(writer: impl Write, trace: &MobilityTrace) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(["step", "vehicle_id", "x_m", "y_m"])?;
    for (step, points) in trace.steps().iter().enumerate() {
        for p in points {
            w.write_record([step.to_string(), p.vehicle.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

pub fn save_trace(path: &Path, trace: &MobilityTrace) -> Result<()> {
    write_trace(create(path)?, trace)
}

pub fn write_mapping(writer: impl Write, set: &SparseAdSet) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(["removed_ad_id", "representative_ad_id", "distance"])?;
    for (removed, rep) in set.mapping() {
        w.write_record([removed.to_string(), rep.id.to_string(), rep.distance.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<mapping>", e))?;
    Ok(())
}
