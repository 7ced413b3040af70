//! File formats for grids, price tables and study outputs.
//!
//! Every CSV file opens with a `#schema=<name>` line, optionally followed by
//! `,key=value` metadata, then a header row. Floats are written with 17
//! significant digits.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::rmq::{BoundaryMode, QuantizationSequence, StepRecord};
use crate::schemes::Scheme;
use crate::studies::{ErrorProfile, WeakOrderReport};
use crate::vq1d::Quantizer;
use crate::{Error, Result};

pub const GRID_SCHEMA: &str = "rmq.grid.v1";
pub const SEQUENCE_SCHEMA: &str = "rmq.sequence.v1";
pub const QUANTIZER_SCHEMA: &str = "rmq.quantizer.v1";
pub const PRICES_SCHEMA: &str = "rmq.prices.v1";
pub const CONVERGENCE_SCHEMA: &str = "rmq.convergence.v1";
pub const ERROR_PROFILE_SCHEMA: &str = "rmq.dist_error.v1";

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn schema_line(schema: &str, meta: &[(&str, String)]) -> String {
    let mut line = format!("#schema={schema}");
    for (k, v) in meta {
        line.push_str(&format!(",{k}={v}"));
    }
    line
}

fn csv_writer<W: Write>(mut w: W, schema: &str, meta: &[(&str, String)]) -> Result<csv::Writer<W>> {
    writeln!(w, "{}", schema_line(schema, meta))?;
    Ok(csv::Writer::from_writer(w))
}

/// Splits the schema line off a CSV document and checks the schema name.
type Metadata = Vec<(String, String)>;

fn read_schema<R: Read>(r: R, expected: &str) -> Result<(Metadata, BufReader<R>)> {
    let mut reader = BufReader::new(r);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let mut fields = first.trim_end().split(',');
    let head = fields.next().unwrap_or_default();
    let found = head
        .strip_prefix("#schema=")
        .ok_or_else(|| Error::Parse(format!("missing schema line, found {head:?}")))?;
    if found != expected {
        return Err(Error::Parse(format!(
            "expected schema {expected}, found {found}"
        )));
    }
    let meta = fields
        .map(|f| {
            f.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse(format!("malformed metadata field {f:?}")))
        })
        .collect::<Result<_>>()?;
    Ok((meta, reader))
}

fn meta_value<'a>(meta: &'a [(String, String)], key: &str) -> Result<&'a str> {
    meta.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Parse(format!("missing metadata field {key}")))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: cannot parse {s:?} as a number")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: cannot parse {s:?} as an index")))
}

/// Writes one row per codeword: `step,time,index,codeword,probability`.
/// Run metadata goes on the schema line.
pub fn write_grid_csv<W: Write>(seq: &QuantizationSequence, w: W) -> Result<()> {
    let meta = [
        ("s0", fmt_f64(seq.s0)),
        ("horizon", fmt_f64(seq.horizon)),
        ("dt", fmt_f64(seq.dt)),
        ("scheme", seq.scheme.name().to_string()),
        ("boundary", seq.boundary.name().to_string()),
    ];
    let mut out = csv_writer(w, GRID_SCHEMA, &meta)?;
    out.write_record(["step", "time", "index", "codeword", "probability"])?;
    for rec in &seq.steps {
        for (i, (&x, &p)) in rec
            .quantizer
            .codewords
            .iter()
            .zip(&rec.quantizer.probabilities)
            .enumerate()
        {
            out.write_record([
                rec.step.to_string(),
                fmt_f64(rec.time),
                i.to_string(),
                fmt_f64(x),
                fmt_f64(p),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a grid dump back. Transitions and affine updates are not part of
/// the format, so the result supports European pricing only.
pub fn read_grid_csv<R: Read>(r: R) -> Result<QuantizationSequence> {
    let (meta, reader) = read_schema(r, GRID_SCHEMA)?;
    let s0 = parse_f64(meta_value(&meta, "s0")?, "s0")?;
    let horizon = parse_f64(meta_value(&meta, "horizon")?, "horizon")?;
    let dt = parse_f64(meta_value(&meta, "dt")?, "dt")?;
    let scheme: Scheme = meta_value(&meta, "scheme")?.parse()?;
    let boundary: BoundaryMode = meta_value(&meta, "boundary")?.parse()?;

    let mut steps: Vec<(usize, f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for row in csv::Reader::from_reader(reader).records() {
        let row = row?;
        if row.len() != 5 {
            return Err(Error::Parse(format!(
                "grid row has {} fields, expected 5",
                row.len()
            )));
        }
        let step = parse_usize(&row[0], "step")?;
        let time = parse_f64(&row[1], "time")?;
        let index = parse_usize(&row[2], "index")?;
        if steps.last().map(|s| s.0) != Some(step) {
            if step != steps.len() + 1 {
                return Err(Error::Parse(format!("step {step} out of order")));
            }
            steps.push((step, time, Vec::new(), Vec::new()));
        }
        let block = steps.last_mut().expect("pushed above");
        if index != block.2.len() {
            return Err(Error::Parse(format!(
                "step {step}: index {index} out of order"
            )));
        }
        block.2.push(parse_f64(&row[3], "codeword")?);
        block.3.push(parse_f64(&row[4], "probability")?);
    }
    if steps.is_empty() {
        return Err(Error::Parse("grid dump has no rows".into()));
    }
    let steps = steps
        .into_iter()
        .map(|(step, time, codewords, probabilities)| {
            let absorbed_mass = match boundary {
                BoundaryMode::Absorbing if codewords.first() == Some(&0.0) => probabilities[0],
                _ => 0.0,
            };
            Ok(StepRecord {
                step,
                time,
                quantizer: Quantizer::new(codewords, probabilities)?,
                absorbed_mass,
                transition: None,
                updates: Vec::new(),
                report: Default::default(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(QuantizationSequence {
        s0,
        horizon,
        dt,
        scheme,
        boundary,
        steps,
    })
}

#[derive(Serialize, Deserialize)]
struct SequenceDocument {
    schema: String,
    #[serde(flatten)]
    sequence: QuantizationSequence,
}

pub fn write_sequence_json<W: Write>(seq: &QuantizationSequence, w: W) -> Result<()> {
    let doc = SequenceDocument {
        schema: SEQUENCE_SCHEMA.to_string(),
        sequence: seq.clone(),
    };
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}

pub fn read_sequence_json<R: Read>(r: R) -> Result<QuantizationSequence> {
    let doc: SequenceDocument = serde_json::from_reader(r)?;
    if doc.schema != SEQUENCE_SCHEMA {
        return Err(Error::Parse(format!(
            "expected schema {SEQUENCE_SCHEMA}, found {}",
            doc.schema
        )));
    }
    Ok(doc.sequence)
}

pub fn write_quantizer_csv<W: Write>(q: &Quantizer, w: W) -> Result<()> {
    let mut out = csv_writer(w, QUANTIZER_SCHEMA, &[])?;
    out.write_record(["index", "codeword", "probability"])?;
    for (i, (&x, &p)) in q.codewords.iter().zip(&q.probabilities).enumerate() {
        out.write_record([i.to_string(), fmt_f64(x), fmt_f64(p)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_quantizer_csv<R: Read>(r: R) -> Result<Quantizer> {
    let (_, reader) = read_schema(r, QUANTIZER_SCHEMA)?;
    let mut codewords = Vec::new();
    let mut probabilities = Vec::new();
    for row in csv::Reader::from_reader(reader).records() {
        let row = row?;
        if row.len() != 3 {
            return Err(Error::Parse(format!(
                "quantizer row has {} fields, expected 3",
                row.len()
            )));
        }
        codewords.push(parse_f64(&row[1], "codeword")?);
        probabilities.push(parse_f64(&row[2], "probability")?);
    }
    Quantizer::new(codewords, probabilities)
}

/// One priced contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub scheme: Scheme,
    /// `european`, `bermudan` or `barrier`.
    pub instrument: String,
    /// Strike for vanilla contracts, barrier level for barriers.
    pub strike_or_level: f64,
    pub price: f64,
    pub reference: Option<f64>,
    /// Standard error of a Monte Carlo reference.
    pub std_error: Option<f64>,
    pub abs_error: Option<f64>,
}

impl PriceRow {
    pub fn new(
        scheme: Scheme,
        instrument: &str,
        strike_or_level: f64,
        price: f64,
        reference: Option<f64>,
    ) -> Self {
        PriceRow {
            scheme,
            instrument: instrument.to_string(),
            strike_or_level,
            price,
            reference,
            std_error: None,
            abs_error: reference.map(|r| (price - r).abs()),
        }
    }
}

pub fn write_prices_csv<W: Write>(rows: &[PriceRow], w: W) -> Result<()> {
    let mut out = csv_writer(w, PRICES_SCHEMA, &[])?;
    out.write_record([
        "scheme",
        "instrument",
        "strike_or_level",
        "price",
        "reference",
        "std_error",
        "abs_error",
    ])?;
    for row in rows {
        out.write_record([
            row.scheme.name().to_string(),
            row.instrument.clone(),
            fmt_f64(row.strike_or_level),
            fmt_f64(row.price),
            fmt_opt(row.reference),
            fmt_opt(row.std_error),
            fmt_opt(row.abs_error),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Rows `scheme,steps,dt,mean,abs_error`; the fitted slopes go on a
/// trailing `#beta,...` comment per scheme.
pub fn write_convergence_csv<W: Write>(reports: &[WeakOrderReport], w: W) -> Result<()> {
    let mut out = csv_writer(w, CONVERGENCE_SCHEMA, &[])?;
    out.write_record(["scheme", "steps", "dt", "mean", "abs_error"])?;
    for rep in reports {
        for p in &rep.points {
            out.write_record([
                rep.scheme.name().to_string(),
                p.steps.to_string(),
                fmt_f64(p.dt),
                fmt_f64(p.mean),
                fmt_f64(p.abs_error),
            ])?;
        }
    }
    out.flush()?;
    let mut w = out.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    for rep in reports {
        writeln!(w, "#beta,{},{}", rep.scheme.name(), fmt_f64(rep.beta))?;
    }
    Ok(())
}

/// Rows `scheme,x,error`; the sup-norm per scheme goes on a trailing
/// `#sup_norm,...` comment.
pub fn write_error_profiles_csv<W: Write>(profiles: &[(Scheme, ErrorProfile)], w: W) -> Result<()> {
    let mut out = csv_writer(w, ERROR_PROFILE_SCHEMA, &[])?;
    out.write_record(["scheme", "x", "error"])?;
    for (scheme, p) in profiles {
        for (&x, &e) in p.x.iter().zip(&p.error) {
            out.write_record([scheme.name().to_string(), fmt_f64(x), fmt_f64(e)])?;
        }
    }
    out.flush()?;
    let mut w = out.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    for (scheme, p) in profiles {
        writeln!(w, "#sup_norm,{},{}", scheme.name(), fmt_f64(p.sup_norm))?;
    }
    Ok(())
}

/// A JSON document `{"schema": ..., "data": ...}`.
pub fn write_json<W: Write, T: Serialize + ?Sized>(schema: &str, data: &T, w: W) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, T: ?Sized> {
        schema: &'a str,
        data: &'a T,
    }
    serde_json::to_writer_pretty(w, &Doc { schema, data })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::{european_price, VanillaPayoff};
    use crate::rmq::{rmq_run, Schedule};
    use crate::sde_models::{gbm_model, GbmParams};

    fn sequence(boundary: BoundaryMode) -> QuantizationSequence {
        let g = gbm_model(GbmParams {
            s0: 100.0,
            r: 0.05,
            sigma: 0.3,
        })
        .unwrap();
        rmq_run(
            &g,
            Scheme::Milstein,
            100.0,
            &Schedule::uniform(1.0, 6, 30, 50, 5).unwrap(),
            boundary,
        )
        .unwrap()
    }

    #[test]
    fn grid_round_trip_reprices() {
        for boundary in [BoundaryMode::Free, BoundaryMode::Absorbing] {
            let seq = sequence(boundary);
            let mut buf = Vec::new();
            write_grid_csv(&seq, &mut buf).unwrap();
            assert!(buf.starts_with(b"#schema=rmq.grid.v1,"));
            let back = read_grid_csv(buf.as_slice()).unwrap();
            assert_eq!(back.len(), seq.len());
            assert_eq!(back.boundary, boundary);
            for strike in [80.0, 100.0, 125.0] {
                let put = VanillaPayoff::put(strike).unwrap();
                let a = european_price(&seq, &put, 0.05);
                let b = european_price(&back, &put, 0.05);
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
            assert_eq!(back.steps[5].absorbed_mass, seq.steps[5].absorbed_mass);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let seq = sequence(BoundaryMode::Free);
        let mut buf = Vec::new();
        write_sequence_json(&seq, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"schema\": \"rmq.sequence.v1\""));
        assert_eq!(read_sequence_json(text.as_bytes()).unwrap(), seq);
    }

    #[test]
    fn quantizer_round_trip() {
        let q = Quantizer::new(vec![-1.0, 0.5, 2.0], vec![0.25, 0.5, 0.25]).unwrap();
        let mut buf = Vec::new();
        write_quantizer_csv(&q, &mut buf).unwrap();
        assert_eq!(read_quantizer_csv(buf.as_slice()).unwrap(), q);
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let q = Quantizer::point(1.0);
        let mut buf = Vec::new();
        write_quantizer_csv(&q, &mut buf).unwrap();
        assert!(matches!(
            read_grid_csv(buf.as_slice()),
            Err(Error::Parse(_))
        ));
        assert!(read_grid_csv(&b"step,time\n"[..]).is_err());
    }

    #[test]
    fn price_rows_have_a_schema_header() {
        let rows = [PriceRow::new(
            Scheme::Weak2,
            "european",
            100.0,
            9.4,
            Some(9.35),
        )];
        let mut buf = Vec::new();
        write_prices_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "#schema=rmq.prices.v1");
        assert_eq!(
            lines[1],
            "scheme,instrument,strike_or_level,price,reference,std_error,abs_error"
        );
        assert!(lines[2].starts_with("weak2,european,1.0000000000000000e2,"));
        assert!(lines[2].contains(",,"));
    }
}
