//! Route prefixes, routing tables, and their text formats.
//!
//! The table text format is one entry per line: `<bits> <port>` where
//! `<bits>` is a 0/1 string of at most `width` characters (trailing
//! positions are implicit don't-cares), or `a.b.c.d/len <port>` when the
//! width is 32. `#` starts a comment; blank lines are ignored. An optional
//! `# width N` header pins the word width.

use crate::cube::{word_mask, TernaryCube, MAX_WIDTH};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

/// A CIDR route entry: leading bit pattern, length, next-hop port.
///
/// The pattern is stored LSB-aligned (`pattern < 2^length`) so a `Prefix`
/// is independent of any particular word width.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Prefix {
    pattern: u64,
    length: u32,
    port: u32,
}

impl Prefix {
    pub fn new(pattern: u64, length: u32, port: u32) -> Self {
        assert!(length <= MAX_WIDTH);
        let pattern = if length == 0 {
            0
        } else {
            pattern & word_mask(length)
        };
        Prefix {
            pattern,
            length,
            port,
        }
    }

    pub fn pattern(&self) -> u64 {
        self.pattern
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn port(&self) -> u32 {
        self.port
    }

    /// Embeds the prefix as a cube with `length` leading care bits.
    pub fn to_cube(&self, width: u32) -> TernaryCube {
        assert!(self.length <= width);
        if self.length == 0 {
            return TernaryCube::all_dont_care(width);
        }
        let shift = width - self.length;
        let care = word_mask(self.length) << shift;
        TernaryCube::new(self.pattern << shift, care, width)
    }

    /// True iff `self` is a proper prefix of `other` (strictly shorter and
    /// agreeing on all of `self`'s bits).
    pub fn is_proper_prefix_of(&self, other: &Prefix) -> bool {
        self.length < other.length
            && (other.pattern >> (other.length - self.length)) == self.pattern
    }

    /// Renders as a 0/1 string of `length` characters (empty for the
    /// default route).
    pub fn render_bits(&self) -> String {
        let mut s = String::with_capacity(self.length as usize);
        for i in (0..self.length).rev() {
            s.push(if self.pattern >> i & 1 == 1 { '1' } else { '0' });
        }
        s
    }
}

/// An ordered set of prefixes over a fixed word width.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RoutingTable {
    width: u32,
    entries: Vec<Prefix>,
}

/// Routing-table construction and parse errors.
#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: malformed entry: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: prefix length {length} exceeds width {width}")]
    TooLong { line: usize, length: u32, width: u32 },
    #[error("line {line}: duplicate prefix with conflicting ports {a} and {b}")]
    DuplicateConflict { line: usize, a: u32, b: u32 },
    #[error("file declares width {header} but width {requested} was requested")]
    WidthMismatch { header: u32, requested: u32 },
    #[error("prefix length {length} exceeds width {width}")]
    EntryTooLong { length: u32, width: u32 },
    #[error("duplicate prefix with conflicting ports {a} and {b}")]
    EntryConflict { a: u32, b: u32 },
}

impl RoutingTable {
    pub fn new(width: u32) -> Self {
        assert!(width >= 1 && width <= MAX_WIDTH);
        RoutingTable {
            width,
            entries: Vec::new(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn entries(&self) -> &[Prefix] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends an entry. Identical duplicates are dropped; a duplicate
    /// (pattern, length) with a different port is an error.
    pub fn push(&mut self, prefix: Prefix) -> Result<(), TableError> {
        if prefix.length() > self.width {
            return Err(TableError::EntryTooLong {
                length: prefix.length(),
                width: self.width,
            });
        }
        if let Some(existing) = self
            .entries
            .iter()
            .find(|e| e.pattern() == prefix.pattern() && e.length() == prefix.length())
        {
            if existing.port() != prefix.port() {
                return Err(TableError::EntryConflict {
                    a: existing.port(),
                    b: prefix.port(),
                });
            }
            return Ok(());
        }
        self.entries.push(prefix);
        Ok(())
    }

    /// Removes the entry with the given (pattern, length); returns it, or
    /// `None` if absent.
    pub fn remove(&mut self, pattern: u64, length: u32) -> Option<Prefix> {
        let pos = self
            .entries
            .iter()
            .position(|e| e.pattern() == pattern && e.length() == length)?;
        Some(self.entries.remove(pos))
    }

    pub fn find(&self, pattern: u64, length: u32) -> Option<&Prefix> {
        self.entries
            .iter()
            .find(|e| e.pattern() == pattern && e.length() == length)
    }

    /// Distinct ports, ascending.
    pub fn ports(&self) -> Vec<u32> {
        let mut ports: Vec<u32> = self.entries.iter().map(|e| e.port()).collect();
        ports.sort_unstable();
        ports.dedup();
        ports
    }

    /// Parses the table text format at the given width.
    pub fn parse(text: &str, width: u32) -> Result<RoutingTable, TableError> {
        let mut table = RoutingTable::new(width);
        let mut seen: HashMap<(u64, u32), (usize, u32)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("width") {
                    if let Some(Ok(header)) = it.next().map(|w| w.parse::<u32>()) {
                        if header != width {
                            return Err(TableError::WidthMismatch {
                                header,
                                requested: width,
                            });
                        }
                    }
                }
                continue;
            }
            let mut fields = line.split_whitespace();
            let prefix_str = fields.next().unwrap();
            let port_str = fields.next().ok_or_else(|| TableError::Malformed {
                line: line_no,
                msg: "expected `<prefix> <port>`".into(),
            })?;
            if fields.next().is_some() {
                return Err(TableError::Malformed {
                    line: line_no,
                    msg: "trailing fields after port".into(),
                });
            }
            let port: u32 = port_str.parse().map_err(|_| TableError::Malformed {
                line: line_no,
                msg: format!("bad port {:?}", port_str),
            })?;
            let (pattern, length) = parse_prefix_field(prefix_str, width, line_no)?;
            if let Some(&(_, other)) = seen.get(&(pattern, length)) {
                if other != port {
                    return Err(TableError::DuplicateConflict {
                        line: line_no,
                        a: other,
                        b: port,
                    });
                }
                continue; // identical duplicate, dropped during parsing
            }
            seen.insert((pattern, length), (line_no, port));
            table.entries.push(Prefix::new(pattern, length, port));
        }
        Ok(table)
    }

    /// Renders the table text format, with a `# width` header.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# width {}", self.width);
        for e in &self.entries {
            if self.width == 32 && e.length() <= 32 {
                let v = if e.length() == 0 {
                    0u32
                } else {
                    (e.pattern() as u32) << (32 - e.length())
                };
                let _ = writeln!(
                    out,
                    "{}.{}.{}.{}/{} {}",
                    v >> 24,
                    v >> 16 & 0xff,
                    v >> 8 & 0xff,
                    v & 0xff,
                    e.length(),
                    e.port()
                );
            } else {
                let _ = writeln!(out, "{} {}", e.render_bits(), e.port());
            }
        }
        out
    }
}

fn parse_prefix_field(s: &str, width: u32, line: usize) -> Result<(u64, u32), TableError> {
    if s.contains('.') || s.contains('/') {
        if width != 32 {
            return Err(TableError::Malformed {
                line,
                msg: "dotted-quad prefixes require width 32".into(),
            });
        }
        let (addr_part, len_part) = s.split_once('/').ok_or_else(|| TableError::Malformed {
            line,
            msg: "dotted prefix must be `a.b.c.d/len`".into(),
        })?;
        let octets: Vec<&str> = addr_part.split('.').collect();
        if octets.len() != 4 {
            return Err(TableError::Malformed {
                line,
                msg: "expected four octets".into(),
            });
        }
        let mut addr: u64 = 0;
        for o in octets {
            let v: u64 = o
                .parse::<u8>()
                .map_err(|_| TableError::Malformed {
                    line,
                    msg: format!("bad octet {:?}", o),
                })?
                .into();
            addr = addr << 8 | v;
        }
        let length: u32 = len_part.parse().map_err(|_| TableError::Malformed {
            line,
            msg: format!("bad prefix length {:?}", len_part),
        })?;
        if length > 32 {
            return Err(TableError::TooLong {
                line,
                length,
                width,
            });
        }
        // host bits beyond the length are canonically zeroed
        let pattern = if length == 0 { 0 } else { addr >> (32 - length) };
        Ok((pattern, length))
    } else {
        let length = s.len() as u32;
        if length > width {
            return Err(TableError::TooLong {
                line,
                length,
                width,
            });
        }
        let mut pattern: u64 = 0;
        for c in s.chars() {
            match c {
                '0' => pattern <<= 1,
                '1' => pattern = pattern << 1 | 1,
                other => {
                    return Err(TableError::Malformed {
                        line,
                        msg: format!("illegal character {:?} in prefix", other),
                    })
                }
            }
        }
        Ok((pattern, length))
    }
}

/// Parses a trace file: one address per line, as a `width`-bit 0/1 string
/// or a dotted quad when the width is 32. `#` comments and blank lines are
/// ignored.
pub fn parse_trace(text: &str, width: u32) -> Result<Vec<u64>, TableError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.contains('.') {
            if width != 32 {
                return Err(TableError::Malformed {
                    line: line_no,
                    msg: "dotted-quad addresses require width 32".into(),
                });
            }
            let octets: Vec<&str> = line.split('.').collect();
            if octets.len() != 4 {
                return Err(TableError::Malformed {
                    line: line_no,
                    msg: "expected four octets".into(),
                });
            }
            let mut addr: u64 = 0;
            for o in octets {
                let v: u64 = o
                    .parse::<u8>()
                    .map_err(|_| TableError::Malformed {
                        line: line_no,
                        msg: format!("bad octet {:?}", o),
                    })?
                    .into();
                addr = addr << 8 | v;
            }
            out.push(addr);
        } else {
            if line.len() as u32 != width {
                return Err(TableError::Malformed {
                    line: line_no,
                    msg: format!("address must be exactly {} bits", width),
                });
            }
            let mut addr: u64 = 0;
            for c in line.chars() {
                match c {
                    '0' => addr <<= 1,
                    '1' => addr = addr << 1 | 1,
                    other => {
                        return Err(TableError::Malformed {
                            line: line_no,
                            msg: format!("illegal character {:?} in address", other),
                        })
                    }
                }
            }
            out.push(addr);
        }
    }
    Ok(out)
}

/// Renders a trace as width-bit binary strings, one per line.
pub fn render_trace(addresses: &[u64], width: u32) -> String {
    let mut out = String::new();
    for &a in addresses {
        for i in (0..width).rev() {
            out.push(if a >> i & 1 == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}
