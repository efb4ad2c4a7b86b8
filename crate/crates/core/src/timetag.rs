//! Binary time-tag file format and the emission-event spill format.
//!
//! Time-tag layout, little-endian throughout:
//!   header (24 bytes): magic "QTT1", version u16, rep_period_ps u64,
//!     channel_count u8, reserved [u8; 9]
//!   records (16 bytes each): channel u8, reserved [u8; 7], timestamp u64
//!
//! The reader validates magic, version and channel range and reports
//! malformed input with its byte offset. Record order is preserved
//! verbatim: pipelines write time-sorted streams, but the format itself
//! round-trips arbitrary record order bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::cascade::EmissionEvent;
use crate::detection::DetectionRecord;
use crate::error::{Error, FormatErrorKind, Result};

pub const TIMETAG_MAGIC: [u8; 4] = *b"QTT1";
pub const TIMETAG_VERSION: u16 = 1;
pub const TIMETAG_HEADER_LEN: usize = 24;
pub const TIMETAG_RECORD_LEN: usize = 16;
/// Emission spill record: pulse_index u64, t_xx u64, t_x u64, flags u8.
pub const EVENT_RECORD_LEN: usize = 25;
const EVENT_FLAG_REEXCITATION: u8 = 0b0000_0001;

/// A parsed time-tag stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTagFile {
    pub rep_period_ps: u64,
    pub channel_count: u8,
    pub records: Vec<DetectionRecord>,
}

/// Serializes a time-tag stream. Fails on a record whose channel is out of
/// range, reporting the offset the record would occupy.
pub fn write_timetags_to<W: Write>(
    w: &mut W,
    rep_period_ps: u64,
    channel_count: u8,
    records: &[DetectionRecord],
) -> Result<()> {
    let mut header = [0u8; TIMETAG_HEADER_LEN];
    header[0..4].copy_from_slice(&TIMETAG_MAGIC);
    header[4..6].copy_from_slice(&TIMETAG_VERSION.to_le_bytes());
    header[6..14].copy_from_slice(&rep_period_ps.to_le_bytes());
    header[14] = channel_count;
    w.write_all(&header)?;
    let mut buf = [0u8; TIMETAG_RECORD_LEN];
    for (i, r) in records.iter().enumerate() {
        if r.channel >= channel_count {
            return Err(Error::format(
                (TIMETAG_HEADER_LEN + i * TIMETAG_RECORD_LEN) as u64,
                FormatErrorKind::ChannelOutOfRange {
                    channel: r.channel,
                    channel_count,
                },
            ));
        }
        buf[0] = r.channel;
        buf[1..8].fill(0);
        buf[8..16].copy_from_slice(&r.timestamp_ps.to_le_bytes());
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads `len` bytes or reports how many are missing; Ok(false) on a clean
/// end of stream (zero bytes read).
fn read_chunk<R: Read>(r: &mut R, buf: &mut [u8], offset: u64) -> Result<bool> {
    let mut filled = 0usize;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(false);
            }
            return Err(Error::format(
                offset,
                FormatErrorKind::Truncated {
                    missing: buf.len() - filled,
                },
            ));
        }
        filled += n;
    }
    Ok(true)
}

/// Streaming time-tag reader: header is parsed eagerly, records on demand.
pub struct TimeTagReader<R: Read> {
    inner: R,
    pub rep_period_ps: u64,
    pub channel_count: u8,
    offset: u64,
}

impl<R: Read> TimeTagReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut header = [0u8; TIMETAG_HEADER_LEN];
        if !read_chunk(&mut inner, &mut header, 0)? {
            return Err(Error::format(
                0,
                FormatErrorKind::Truncated {
                    missing: TIMETAG_HEADER_LEN,
                },
            ));
        }
        let mut magic = [0u8; 4];
        magic.copy_from_slice(&header[0..4]);
        if magic != TIMETAG_MAGIC {
            return Err(Error::format(
                0,
                FormatErrorKind::BadMagic {
                    expected: TIMETAG_MAGIC,
                    found: magic,
                },
            ));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != TIMETAG_VERSION {
            return Err(Error::format(4, FormatErrorKind::UnsupportedVersion(version)));
        }
        let rep_period_ps = u64::from_le_bytes(header[6..14].try_into().expect("8 bytes"));
        let channel_count = header[14];
        Ok(TimeTagReader {
            inner,
            rep_period_ps,
            channel_count,
            offset: TIMETAG_HEADER_LEN as u64,
        })
    }

    fn next_record(&mut self) -> Result<Option<DetectionRecord>> {
        let mut buf = [0u8; TIMETAG_RECORD_LEN];
        if !read_chunk(&mut self.inner, &mut buf, self.offset)? {
            return Ok(None);
        }
        let channel = buf[0];
        if channel >= self.channel_count {
            return Err(Error::format(
                self.offset,
                FormatErrorKind::ChannelOutOfRange {
                    channel,
                    channel_count: self.channel_count,
                },
            ));
        }
        let timestamp_ps = u64::from_le_bytes(buf[8..16].try_into().expect("8 bytes"));
        self.offset += TIMETAG_RECORD_LEN as u64;
        Ok(Some(DetectionRecord {
            channel,
            timestamp_ps,
        }))
    }
}

impl<R: Read> Iterator for TimeTagReader<R> {
    type Item = Result<DetectionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

/// Parses a whole time-tag stream into memory.
pub fn read_timetags_from<R: Read>(r: R) -> Result<TimeTagFile> {
    let mut reader = TimeTagReader::new(r)?;
    let mut records = Vec::new();
    while let Some(rec) = reader.next_record()? {
        records.push(rec);
    }
    Ok(TimeTagFile {
        rep_period_ps: reader.rep_period_ps,
        channel_count: reader.channel_count,
        records,
    })
}

pub fn write_timetags(
    path: &Path,
    rep_period_ps: u64,
    channel_count: u8,
    records: &[DetectionRecord],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_timetags_to(&mut w, rep_period_ps, channel_count, records)?;
    w.flush()?;
    Ok(())
}

pub fn read_timetags(path: &Path) -> Result<TimeTagFile> {
    read_timetags_from(BufReader::new(File::open(path)?))
}

/// Spills emission events as packed 25-byte records. Emission times are
/// rounded to integer picoseconds.
pub fn write_events_to<W: Write>(w: &mut W, events: &[EmissionEvent]) -> Result<()> {
    let mut buf = [0u8; EVENT_RECORD_LEN];
    for e in events {
        buf[0..8].copy_from_slice(&e.pulse_index.to_le_bytes());
        buf[8..16].copy_from_slice(&(e.t_xx.round().max(0.0) as u64).to_le_bytes());
        buf[16..24].copy_from_slice(&(e.t_x.round().max(0.0) as u64).to_le_bytes());
        buf[24] = if e.is_reexcitation {
            EVENT_FLAG_REEXCITATION
        } else {
            0
        };
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads an emission spill. Flag bits other than the re-excitation bit are
/// reserved and ignored.
pub fn read_events_from<R: Read>(r: &mut R) -> Result<Vec<EmissionEvent>> {
    let mut events = Vec::new();
    let mut buf = [0u8; EVENT_RECORD_LEN];
    let mut offset = 0u64;
    while read_chunk(r, &mut buf, offset)? {
        events.push(EmissionEvent {
            pulse_index: u64::from_le_bytes(buf[0..8].try_into().expect("8 bytes")),
            t_xx: u64::from_le_bytes(buf[8..16].try_into().expect("8 bytes")) as f64,
            t_x: u64::from_le_bytes(buf[16..24].try_into().expect("8 bytes")) as f64,
            is_reexcitation: buf[24] & EVENT_FLAG_REEXCITATION != 0,
        });
        offset += EVENT_RECORD_LEN as u64;
    }
    Ok(events)
}

pub fn write_events(path: &Path, events: &[EmissionEvent]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_events_to(&mut w, events)?;
    w.flush()?;
    Ok(())
}

pub fn read_events(path: &Path) -> Result<Vec<EmissionEvent>> {
    read_events_from(&mut BufReader::new(File::open(path)?))
}
