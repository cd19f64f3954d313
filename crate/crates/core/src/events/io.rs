//! On-disk event and frame formats.
//!
//! * CSV: header `t_us,x,y,polarity`, one event per line, decimal integers.
//! * Packed binary: `EVT1`, u16 W, u16 H, u32 reserved, then 14-byte records
//!   `(u64 t_us, u16 x, u16 y, u8 polarity, u8 pad)`, all little-endian.
//! * Frames: `FRM1`, u16 W, u16 H, u32 D, u32 window_us, then `D*2*H*W` u16
//!   counts in `(frame, polarity, row, col)` order, rounded and saturated.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Event, EventStream, FrameSequence, Geometry, Polarity};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "t_us,x,y,polarity";
const EVT_MAGIC: &[u8; 4] = b"EVT1";
const FRM_MAGIC: &[u8; 4] = b"FRM1";
const EVT_RECORD: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventFormat {
    Csv,
    PackedBinary,
}

impl EventFormat {
    /// `.csv` is CSV, anything else packed binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => EventFormat::Csv,
            _ => EventFormat::PackedBinary,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            EventFormat::Csv => "csv",
            EventFormat::PackedBinary => "evt",
        }
    }
}

/// Reads an event file. CSV carries no geometry, so `geometry` is required for
/// it; for packed binary the header wins and a conflicting `geometry` is an
/// error.
pub fn read_events(
    path: &Path,
    format: EventFormat,
    geometry: Option<Geometry>,
) -> Result<EventStream> {
    match format {
        EventFormat::Csv => {
            let geometry = geometry.ok_or_else(|| {
                Error::invalid("CSV event files need an explicit sensor geometry")
            })?;
            read_csv(path, geometry)
        }
        EventFormat::PackedBinary => read_packed(path, geometry),
    }
}

fn parse_err(path: &Path, location: String, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        location,
        message: message.into(),
    }
}

fn read_csv(path: &Path, geometry: Geometry) -> Result<EventStream> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == CSV_HEADER => {}
        Some(Ok(h)) => {
            return Err(parse_err(
                path,
                "1".into(),
                format!("expected header `{CSV_HEADER}`, found `{}`", h.trim()),
            ))
        }
        Some(Err(e)) => return Err(Error::io(path, e)),
        None => return Err(parse_err(path, "1".into(), "missing header")),
    }
    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let mut next = |name: &str| {
            fields
                .next()
                .ok_or_else(|| parse_err(path, lineno.to_string(), format!("missing field `{name}`")))
        };
        let (t, x, y, p) = (next("t_us")?, next("x")?, next("y")?, next("polarity")?);
        if fields.next().is_some() {
            return Err(parse_err(path, lineno.to_string(), "too many fields"));
        }
        let bad = |name: &str, v: &str| parse_err(path, lineno.to_string(), format!("bad {name} `{v}`"));
        let t: u64 = t.parse().map_err(|_| bad("t_us", t))?;
        let x: u16 = x.parse().map_err(|_| bad("x", x))?;
        let y: u16 = y.parse().map_err(|_| bad("y", y))?;
        let p = p
            .parse::<u8>()
            .ok()
            .and_then(|v| Polarity::try_from(v).ok())
            .ok_or_else(|| bad("polarity", p))?;
        events.push(Event::new(t, x, y, p));
    }
    EventStream::new(events, geometry)
}

fn read_packed(path: &Path, geometry: Option<Geometry>) -> Result<EventStream> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    if buf.len() < 12 || &buf[..4] != EVT_MAGIC {
        return Err(parse_err(path, "0".into(), "missing EVT1 header"));
    }
    let header = Geometry::new(
        u16::from_le_bytes([buf[4], buf[5]]),
        u16::from_le_bytes([buf[6], buf[7]]),
    );
    if let Some(g) = geometry {
        if g != header {
            return Err(Error::invalid(format!(
                "{}: file geometry {header} differs from requested {g}",
                path.display()
            )));
        }
    }
    let body = &buf[12..];
    if body.len() % EVT_RECORD != 0 {
        return Err(parse_err(
            path,
            (12 + body.len() / EVT_RECORD * EVT_RECORD).to_string(),
            "truncated record",
        ));
    }
    let mut events = Vec::with_capacity(body.len() / EVT_RECORD);
    for (i, r) in body.chunks_exact(EVT_RECORD).enumerate() {
        let t = u64::from_le_bytes(r[..8].try_into().expect("8 bytes"));
        let x = u16::from_le_bytes([r[8], r[9]]);
        let y = u16::from_le_bytes([r[10], r[11]]);
        let p = Polarity::try_from(r[12]).map_err(|_| {
            parse_err(
                path,
                (12 + i * EVT_RECORD + 12).to_string(),
                format!("bad polarity {}", r[12]),
            )
        })?;
        events.push(Event::new(t, x, y, p));
    }
    EventStream::new(events, header)
}

pub fn write_events(stream: &EventStream, path: &Path, format: EventFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = match format {
        EventFormat::Csv => write_csv(stream, &mut w),
        EventFormat::PackedBinary => write_packed(stream, &mut w),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_csv(stream: &EventStream, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for e in stream.events() {
        writeln!(w, "{},{},{},{}", e.t, e.x, e.y, e.polarity as u8)?;
    }
    Ok(())
}

fn write_packed(stream: &EventStream, w: &mut impl Write) -> std::io::Result<()> {
    let g = stream.geometry();
    w.write_all(EVT_MAGIC)?;
    w.write_all(&g.width.to_le_bytes())?;
    w.write_all(&g.height.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    let mut rec = [0u8; EVT_RECORD];
    for e in stream.events() {
        rec[..8].copy_from_slice(&e.t.to_le_bytes());
        rec[8..10].copy_from_slice(&e.x.to_le_bytes());
        rec[10..12].copy_from_slice(&e.y.to_le_bytes());
        rec[12] = e.polarity as u8;
        rec[13] = 0;
        w.write_all(&rec)?;
    }
    Ok(())
}

fn quantize(v: f32) -> u16 {
    // NaN maps to 0 through the saturating cast
    v.round().clamp(0.0, f32::from(u16::MAX)) as u16
}

pub fn write_frames(seq: &FrameSequence, path: &Path) -> Result<()> {
    let g = seq.geometry();
    let window = u32::try_from(seq.window_us)
        .map_err(|_| Error::invalid("window_us does not fit the FRM1 u32 field"))?;
    let mut bytes = Vec::with_capacity(16 + seq.as_slice().len() * 2);
    bytes.extend_from_slice(FRM_MAGIC);
    bytes.extend_from_slice(&g.width.to_le_bytes());
    bytes.extend_from_slice(&g.height.to_le_bytes());
    bytes.extend_from_slice(&(seq.num_frames() as u32).to_le_bytes());
    bytes.extend_from_slice(&window.to_le_bytes());
    for &v in seq.as_slice() {
        bytes.extend_from_slice(&quantize(v).to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_frames(path: &Path) -> Result<FrameSequence> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if buf.len() < 16 || &buf[..4] != FRM_MAGIC {
        return Err(parse_err(path, "0".into(), "missing FRM1 header"));
    }
    let g = Geometry::new(
        u16::from_le_bytes([buf[4], buf[5]]),
        u16::from_le_bytes([buf[6], buf[7]]),
    );
    let d = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes")) as usize;
    let window = u32::from_le_bytes(buf[12..16].try_into().expect("4 bytes"));
    let n = d * 2 * g.pixels();
    if buf.len() != 16 + 2 * n {
        return Err(parse_err(
            path,
            "16".into(),
            format!("expected {n} counts, file holds {} bytes of payload", buf.len() - 16),
        ));
    }
    let data = buf[16..]
        .chunks_exact(2)
        .map(|c| f32::from(u16::from_le_bytes([c[0], c[1]])))
        .collect();
    FrameSequence::from_data(data, d, g, u64::from(window))
}
