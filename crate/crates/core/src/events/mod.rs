//! Event-stream data model and time-windowed aggregation into frames.

mod frames;
pub mod io;

pub use frames::{aggregate_frames, frame_stats, FrameSequence, FrameStats};
pub use io::{read_events, read_frames, write_events, write_frames, EventFormat};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sensor size in pixels. Serialized as `"WxH"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Geometry {
    pub width: u16,
    pub height: u16,
}

impl Geometry {
    pub const DVS128: Geometry = Geometry {
        width: 128,
        height: 128,
    };

    pub fn new(width: u16, height: u16) -> Self {
        Self { width, height }
    }

    pub fn pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }

    /// Center in continuous pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            (f64::from(self.width) - 1.0) / 2.0,
            (f64::from(self.height) - 1.0) / 2.0,
        )
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl From<Geometry> for String {
    fn from(g: Geometry) -> String {
        g.to_string()
    }
}

impl TryFrom<String> for Geometry {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    /// Parses `WxH`, e.g. `128x128`.
    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::invalid(format!("geometry `{s}` is not WxH")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u16>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::invalid(format!("geometry `{s}` is not WxH")))
        };
        Ok(Geometry::new(parse(w)?, parse(h)?))
    }
}

/// Sign of the brightness change. Channel 0 of a frame holds OFF events,
/// channel 1 holds ON events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Polarity {
    Off = 0,
    On = 1,
}

impl Polarity {
    pub fn channel(self) -> usize {
        self as usize
    }
}

impl TryFrom<u8> for Polarity {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Polarity::Off),
            1 => Ok(Polarity::On),
            _ => Err(Error::invalid(format!("polarity {v} not in {{0,1}}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    /// Microseconds.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Self { t, x, y, polarity }
    }
}

/// A time-ordered event recording with its sensor geometry and optional
/// provenance metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    events: Vec<Event>,
    geometry: Geometry,
    pub label: Option<u16>,
    pub subject_id: Option<u8>,
    pub illumination_id: Option<u8>,
}

impl EventStream {
    /// Validates bounds and stable-sorts by timestamp.
    pub fn new(mut events: Vec<Event>, geometry: Geometry) -> Result<Self> {
        if let Some((index, e)) = events
            .iter()
            .enumerate()
            .find(|(_, e)| !geometry.contains(e.x, e.y))
        {
            return Err(Error::InvalidEvent {
                index,
                message: format!(
                    "coordinate ({}, {}) outside {} sensor",
                    e.x, e.y, geometry
                ),
            });
        }
        if !events.windows(2).all(|w| w[0].t <= w[1].t) {
            events.sort_by_key(|e| e.t);
        }
        Ok(Self {
            events,
            geometry,
            label: None,
            subject_id: None,
            illumination_id: None,
        })
    }

    pub fn empty(geometry: Geometry) -> Self {
        Self {
            events: Vec::new(),
            geometry,
            label: None,
            subject_id: None,
            illumination_id: None,
        }
    }

    pub fn with_label(mut self, label: u16) -> Self {
        self.label = Some(label);
        self
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `(first, last)` timestamps.
    pub fn time_span(&self) -> Option<(u64, u64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }

    /// Same events and geometry, ignoring metadata.
    pub fn same_events(&self, other: &EventStream) -> bool {
        self.geometry == other.geometry && self.events == other.events
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_sorts_stably() {
        let g = Geometry::new(4, 4);
        let s = EventStream::new(
            vec![
                Event::new(5, 0, 0, Polarity::On),
                Event::new(1, 1, 0, Polarity::On),
                Event::new(5, 2, 0, Polarity::Off),
                Event::new(1, 3, 0, Polarity::Off),
            ],
            g,
        )
        .unwrap();
        let xs: Vec<u16> = s.events().iter().map(|e| e.x).collect();
        assert_eq!(xs, vec![1, 3, 0, 2]);
    }

    #[test]
    fn out_of_bounds_names_index() {
        let g = Geometry::new(4, 4);
        let err = EventStream::new(
            vec![
                Event::new(0, 0, 0, Polarity::On),
                Event::new(1, 0, 4, Polarity::On),
            ],
            g,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidEvent { index: 1, .. }));
    }

    #[test]
    fn geometry_parse() {
        assert_eq!("128x64".parse::<Geometry>().unwrap(), Geometry::new(128, 64));
        assert!("128".parse::<Geometry>().is_err());
        assert!("0x4".parse::<Geometry>().is_err());
    }
}
