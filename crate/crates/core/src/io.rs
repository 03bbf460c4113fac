//! File formats: CSV ingestion, JSON documents and report extracts.
//!
//! JSON decoding errors carry a JSON pointer to the offending value, e.g.
//! `/elements/3/length`.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;

use crate::catalog::{validate_catalog, CurveSet, PltConfig};
use crate::engine::{MarginEntry, ProbeMeasurement};
use crate::error::{Error, Result};
use crate::link::LinkSpec;
use crate::regime::RegimeInput;

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for segment in path.iter() {
        match segment {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    out
}

/// Decodes a JSON document, reporting the location of the first error.
pub fn read_json<T: DeserializeOwned>(reader: impl Read) -> Result<T> {
    let mut de = serde_json::Deserializer::from_reader(reader);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let pointer = pointer(e.path());
        Error::Schema {
            pointer: if pointer.is_empty() { "/".into() } else { pointer },
            reason: e.into_inner().to_string(),
        }
    })
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    read_json(BufReader::new(File::open(path)?))
}

pub fn write_json<T: Serialize>(writer: impl Write, value: &T) -> Result<()> {
    let mut writer = writer;
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn load_link(path: &Path) -> Result<LinkSpec> {
    let link: LinkSpec = read_json_file(path)?;
    link.validate()?;
    Ok(link)
}

pub fn load_catalog(path: &Path) -> Result<Vec<PltConfig>> {
    let catalog: Vec<PltConfig> = read_json_file(path)?;
    validate_catalog(&catalog)?;
    Ok(catalog)
}

pub fn load_curves(path: &Path) -> Result<CurveSet> {
    let curves: CurveSet = read_json_file(path)?;
    for (key, curve) in curves.iter_keyed() {
        if key != curve.config_id {
            return Err(Error::Schema {
                pointer: format!("/{key}/config_id"),
                reason: format!("curve stored under `{key}` belongs to `{}`", curve.config_id),
            });
        }
        curve.validate()?;
    }
    Ok(curves)
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Schema {
            pointer: "/0".into(),
            reason: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct B2BRow {
    osnr_db: f64,
    q_db: f64,
}

/// Back-to-back samples from CSV with header `osnr_db,q_db`.
pub fn read_b2b_csv(reader: impl Read) -> Result<Vec<(f64, f64)>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(csv.headers()?, &["osnr_db", "q_db"])?;
    csv.deserialize::<B2BRow>()
        .enumerate()
        .map(|(i, row)| {
            row.map(|r| (r.osnr_db, r.q_db))
                .map_err(|e| Error::Schema { pointer: format!("/{}", i + 1), reason: e.to_string() })
        })
        .collect()
}

/// Readings as `config_id,mode,ber`, the format accepted by
/// [`FileSource`](crate::engine::FileSource).
pub fn write_measurements_csv(writer: impl Write, measurements: &[ProbeMeasurement]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["config_id", "mode", "ber"])?;
    for m in measurements {
        csv.write_record([m.config_id.as_str(), m.mode.label(), &format!("{:e}", m.ber)])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_margins_csv(writer: impl Write, margins: &[MarginEntry]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record([
        "config_id",
        "line_rate",
        "modulation",
        "symbol_rate",
        "margin_db",
        "excluded",
        "predicted_pass",
    ])?;
    for m in margins {
        csv.write_record([
            m.config_id.clone(),
            m.line_rate.to_string(),
            m.modulation.to_string(),
            m.symbol_rate.to_string(),
            format!("{:.4}", m.implementation_margin_db),
            m.excluded_by_cap.to_string(),
            m.predicted_pass.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_regime_csv(writer: impl Write, input: &RegimeInput) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["symbol_rate", "gsnr_psd", "gsnr_power"])?;
    for (rate, psd, power) in input.rows() {
        csv.write_record([rate.to_string(), format!("{psd:.4}"), format!("{power:.4}")])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{default_catalog, default_curves};
    use crate::regime::RatePoint;

    #[test]
    fn b2b_csv() {
        let rows = read_b2b_csv("osnr_db,q_db\n10.0, 6.5\n12,8\n".as_bytes()).unwrap();
        assert_eq!(rows, vec![(10.0, 6.5), (12.0, 8.0)]);
        let err = read_b2b_csv("osnr,q\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { ref pointer, .. } if pointer == "/0"));
        let err = read_b2b_csv("osnr_db,q_db\n1,2\n3,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { ref pointer, .. } if pointer == "/2"));
    }

    #[test]
    fn json_errors_carry_pointers() {
        // Tagged elements are decoded as a whole, so the pointer stops at the element.
        let doc =
            r#"{"name":"x","elements":[{"type":"amp","noise_figure":5,"gain":10},{"type":"span","length":"far"}]}"#;
        let err = read_json::<LinkSpec>(doc.as_bytes()).unwrap_err();
        match err {
            Error::Schema { pointer, reason } => {
                assert_eq!(pointer, "/elements/1");
                assert!(reason.contains("far"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        let err = read_json::<LinkSpec>(r#"{"name":"x","elements":[],"loopback":"yes"}"#.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { ref pointer, .. } if pointer == "/loopback"));
        let err = read_json::<Vec<PltConfig>>(r#"[{"id":"a"}]"#.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { ref pointer, .. } if pointer.starts_with("/0")));
    }

    #[test]
    fn misspelled_fields_are_rejected() {
        let doc = r#"{"name":"x","elements":[{"type":"span","lenght":80}]}"#;
        let err = read_json::<LinkSpec>(doc.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { ref reason, .. } if reason.contains("lenght")), "{err:?}");
        let doc = r#"{"name":"x","elements":[],"loop_back":true}"#;
        assert!(read_json::<LinkSpec>(doc.as_bytes()).is_err());
        let doc = r#"{"name":"x","elements":[{"type":"span","length":80,"dcm":{"kind":"dcf","insertion_loss":3,"dispersion_compensation_ratio":1,"bw":1}}]}"#;
        assert!(read_json::<LinkSpec>(doc.as_bytes()).is_err());
    }

    #[test]
    fn documents_round_trip() {
        let catalog = default_catalog();
        let curves = default_curves(&catalog).unwrap();
        let mut buf = Vec::new();
        write_json(&mut buf, &curves).unwrap();
        let back: CurveSet = read_json(buf.as_slice()).unwrap();
        assert_eq!(back, curves);
        let mut buf = Vec::new();
        write_json(&mut buf, &catalog).unwrap();
        assert_eq!(read_json::<Vec<PltConfig>>(buf.as_slice()).unwrap(), catalog);
    }

    #[test]
    fn regime_csv_layout() {
        let input = RegimeInput {
            psd_sweep: vec![
                RatePoint { symbol_rate: 69.4, gsnr_db: 14.0 },
                RatePoint { symbol_rate: 31.5, gsnr_db: 15.0 },
            ],
            power_sweep: vec![
                RatePoint { symbol_rate: 31.5, gsnr_db: 16.5 },
                RatePoint { symbol_rate: 69.4, gsnr_db: 14.0 },
            ],
            reference_rate: 69.4,
            reference_power: 0.0,
        };
        let mut buf = Vec::new();
        write_regime_csv(&mut buf, &input).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "symbol_rate,gsnr_psd,gsnr_power\n31.5,15.0000,16.5000\n69.4,14.0000,14.0000\n"
        );
    }
}
