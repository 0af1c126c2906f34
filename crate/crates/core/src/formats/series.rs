use std::path::Path;

use super::{read_bytes, write_bytes, FormatError};
use crate::model::WaveSeries;

/// Header line carrying the series metadata that the two CSV columns can't.
const META_PREFIX: &str = "# probe";

/// CSV with columns `t,eta`, preceded by one metadata comment line:
/// `# probe id=<id> x=<m> y=<m> t0=<s> dt=<s>`.
pub fn encode_series_csv(series: &WaveSeries) -> Vec<u8> {
    let [x, y] = series.probe_xy();
    let mut out = format!(
        "{META_PREFIX} id={} x={x} y={y} t0={} dt={}\n",
        series.probe_id(),
        series.t0(),
        series.dt()
    )
    .into_bytes();
    let mut writer = csv::Writer::from_writer(&mut out);
    writer.write_record(["t", "eta"]).expect("in-memory write");
    for (i, eta) in series.eta().iter().enumerate() {
        writer
            .write_record([series.time(i).to_string(), eta.to_string()])
            .expect("in-memory write");
    }
    writer.flush().expect("in-memory write");
    drop(writer);
    out
}

/// Reads the metadata line when present; otherwise `t0`/`dt` come from the
/// `t` column, which must then be uniformly spaced.
pub fn parse_series_csv(bytes: &[u8]) -> Result<WaveSeries, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|_| FormatError::MalformedBody {
        location: "series".into(),
        reason: "non-UTF-8".into(),
    })?;
    let (meta, body) = match text.strip_prefix(META_PREFIX) {
        Some(rest) => {
            let end = rest.find('\n').unwrap_or(rest.len());
            (Some(&rest[..end]), &rest[(end + 1).min(rest.len())..])
        }
        None => (None, text),
    };

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(body.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "eta" {
        return Err(FormatError::MalformedHeader {
            offset: 0,
            reason: format!(
                "expected header \"t,eta\", found {:?}",
                headers.iter().collect::<Vec<_>>()
            ),
        });
    }
    let mut times = Vec::new();
    let mut eta = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let parse = |i: usize| -> Result<f64, FormatError> {
            record
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| FormatError::MalformedBody {
                    location: format!("row {}", row + 1),
                    reason: format!("bad number in column {i}"),
                })
        };
        times.push(parse(0)?);
        eta.push(parse(1)?);
    }

    let mut probe_id = String::new();
    let mut xy = [0.0, 0.0];
    let mut t0 = None;
    let mut dt = None;
    if let Some(meta) = meta {
        for field in meta.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| FormatError::MalformedHeader {
                offset: 0,
                reason: format!("bad metadata field {field:?}"),
            })?;
            let number = || {
                value.parse::<f64>().map_err(|_| FormatError::InvalidValue {
                    key: key.into(),
                    reason: format!("not a number: {value:?}"),
                })
            };
            match key {
                "id" => probe_id = value.to_string(),
                "x" => xy[0] = number()?,
                "y" => xy[1] = number()?,
                "t0" => t0 = Some(number()?),
                "dt" => dt = Some(number()?),
                _ => {}
            }
        }
    }
    let t0 = t0.or_else(|| times.first().copied()).unwrap_or(0.0);
    let dt = match dt {
        Some(dt) => dt,
        None => {
            if times.len() < 2 {
                return Err(FormatError::MissingKey("dt".into()));
            }
            let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
            let uniform = times
                .windows(2)
                .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt.abs().max(1e-12));
            if !uniform {
                return Err(FormatError::InvalidValue {
                    key: "t".into(),
                    reason: "samples are not uniformly spaced".into(),
                });
            }
            dt
        }
    };
    Ok(WaveSeries::new(t0, dt, eta, probe_id, xy)?)
}

fn csv_error(e: csv::Error) -> FormatError {
    FormatError::MalformedBody {
        location: e
            .position()
            .map(|p| format!("line {}", p.line()))
            .unwrap_or_else(|| "series".into()),
        reason: e.to_string(),
    }
}

pub fn read_series_csv(path: &Path) -> Result<WaveSeries, FormatError> {
    parse_series_csv(&read_bytes(path)?)
}

pub fn write_series_csv(series: &WaveSeries, path: &Path) -> Result<(), FormatError> {
    write_bytes(path, &encode_series_csv(series))
}
