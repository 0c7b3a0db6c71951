//! Loading count data from an embedded fixture or a CSV file.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bivzip::data::{fixture, DatasetFixture};
use bivzip::CountSample;

/// A loaded sample plus its margin labels.
pub struct Dataset {
    pub sample: CountSample,
    pub source: String,
    pub labels: [String; 2],
}

/// Resolves `spec` as a fixture name first, then as a file path.
pub fn load(spec: &str) -> Result<Dataset> {
    if let Some(f) = fixture(spec) {
        return Ok(from_fixture(&f));
    }
    let path = Path::new(spec);
    let file = File::open(path).with_context(|| {
        format!("cannot open data `{spec}` (not a fixture name or readable file)")
    })?;
    let sample = parse_csv(file).with_context(|| format!("in `{}`", path.display()))?;
    Ok(Dataset {
        sample,
        source: spec.to_string(),
        labels: ["x1".into(), "x2".into()],
    })
}

fn from_fixture(f: &DatasetFixture) -> Dataset {
    Dataset {
        sample: f.sample(),
        source: f.name.to_string(),
        labels: [f.x1_label.to_string(), f.x2_label.to_string()],
    }
}

/// Parses a CSV with header `x1,x2` and one pair of non-negative integers per
/// line; errors carry the offending line number.
pub fn parse_csv<R: Read>(reader: R) -> Result<CountSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers().context("cannot read header")?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        bail!("empty input: expected header `x1,x2`");
    }
    if headers.len() != 2 || &headers[0] != "x1" || &headers[1] != "x2" {
        bail!(
            "line 1: expected header `x1,x2`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        );
    }
    let mut pairs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.context("malformed CSV")?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            bail!("line {line}: expected 2 fields, found {}", rec.len());
        }
        let parse = |s: &str| {
            s.parse::<u64>()
                .with_context(|| format!("line {line}: `{s}` is not a non-negative integer"))
        };
        pairs.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    if pairs.is_empty() {
        bail!("no data rows");
    }
    Ok(CountSample::new(pairs))
}
