//! Plain-text tables: configurations and chain traces as CSV with a
//! `#`-prefixed metadata header.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, MarkedBall, Point};
use crate::mcmc::TraceRow;
use crate::model::{Configuration, RadiusLaw};

/// Header fields of a configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigMeta {
    pub window: Aabb,
    pub law: RadiusLaw,
    pub seed: Option<u64>,
    /// Any further `key=value` lines, written in key order.
    pub extra: BTreeMap<String, String>,
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(format!("i/o: {e}"))
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(parse_err))
        .collect()
}

/// Writes `config` (and optional colours) with its metadata header.
pub fn write_configuration<W: Write>(
    out: W,
    config: &Configuration,
    colors: Option<&[u32]>,
    meta: &ConfigMeta,
) -> Result<()> {
    let mut out = out;
    let d = config.dim();
    let w = config.window();
    writeln!(out, "# d={d}").map_err(io_err)?;
    writeln!(out, "# window={};{}", join(w.lo().coords()), join(w.hi().coords())).map_err(io_err)?;
    writeln!(out, "# law={}", meta.law).map_err(io_err)?;
    if let Some(seed) = meta.seed {
        writeln!(out, "# seed={seed}").map_err(io_err)?;
    }
    for (k, v) in &meta.extra {
        writeln!(out, "# {k}={v}").map_err(io_err)?;
    }
    let mut csv = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push("radius".into());
    if colors.is_some() {
        header.push("color".into());
    }
    csv.write_record(&header).map_err(parse_err)?;
    for (i, b) in config.balls().iter().enumerate() {
        let mut rec: Vec<String> = b.center.coords().iter().map(f64::to_string).collect();
        rec.push(b.radius.to_string());
        if let Some(c) = colors {
            rec.push(c[i].to_string());
        }
        csv.write_record(&rec).map_err(parse_err)?;
    }
    csv.flush().map_err(io_err)
}

/// Reads a file written by [`write_configuration`].
pub fn read_configuration<R: Read>(input: R) -> Result<(ConfigMeta, Configuration, Option<Vec<u32>>)> {
    let mut reader = BufReader::new(input);
    let mut fields = BTreeMap::new();
    let mut body = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).map_err(io_err)? == 0 {
            break;
        }
        match line.strip_prefix('#') {
            Some(kv) => {
                let (k, v) = kv
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| parse_err(format!("bad header line {line:?}")))?;
                fields.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => body.push_str(&line),
        }
    }
    let mut take = |k: &str| fields.remove(k).ok_or_else(|| parse_err(format!("missing header field {k}")));
    let d: usize = take("d")?.parse().map_err(parse_err)?;
    let win = take("window")?;
    let (lo, hi) = win
        .split_once(';')
        .ok_or_else(|| parse_err("window must be lo;hi"))?;
    let window = Aabb::new(&parse_floats(lo)?, &parse_floats(hi)?)?;
    if window.dim() != d {
        return Err(parse_err("window dimension does not match d"));
    }
    let law: RadiusLaw = take("law")?.parse()?;
    let seed = match fields.remove("seed") {
        Some(s) => Some(s.parse().map_err(parse_err)?),
        None => None,
    };

    let mut csv = csv::Reader::from_reader(body.as_bytes());
    let header = csv.headers().map_err(parse_err)?.clone();
    let colored = match header.len() {
        n if n == d + 1 => false,
        n if n == d + 2 && &header[d + 1] == "color" => true,
        _ => return Err(parse_err(format!("unexpected columns {header:?}"))),
    };
    let mut config = Configuration::for_law(window, &law);
    let mut colors = Vec::new();
    for rec in csv.records() {
        let rec = rec.map_err(parse_err)?;
        let coords: Vec<f64> = (0..d)
            .map(|i| rec[i].trim().parse().map_err(parse_err))
            .collect::<Result<_>>()?;
        let radius: f64 = rec[d].trim().parse().map_err(parse_err)?;
        config.push(MarkedBall::new(Point::new(&coords)?, radius)?)?;
        if colored {
            colors.push(rec[d + 1].trim().parse().map_err(parse_err)?);
        }
    }
    let meta = ConfigMeta {
        window,
        law,
        seed,
        extra: fields,
    };
    Ok((meta, config, colored.then_some(colors)))
}

/// Writes trace rows, one per sweep, under a `#` header of `meta` lines.
pub fn write_trace<W: Write>(out: W, rows: &[TraceRow], meta: &BTreeMap<String, String>) -> Result<()> {
    let mut out = out;
    for (k, v) in meta {
        writeln!(out, "# {k}={v}").map_err(io_err)?;
    }
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["sweep", "count", "n_cc", "largest_component", "accept_birth", "accept_death"])
        .map_err(parse_err)?;
    for r in rows {
        csv.write_record([
            r.sweep.to_string(),
            r.count.to_string(),
            r.n_cc.to_string(),
            r.largest_component.to_string(),
            r.accept_birth.to_string(),
            r.accept_death.to_string(),
        ])
        .map_err(parse_err)?;
    }
    csv.flush().map_err(io_err)
}
