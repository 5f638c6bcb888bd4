//! Codebook storage.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "NFHCBK01"
//! version    u32      1
//! kind       u8       0 = lower codebook, 1 = hierarchy
//! n_elements u64, carrier_hz f64, spacing f64
//! rho f64, ring_spacing f64
//! [kind 1]   pattern u8, normalization u8, half_gain_fraction f64
//! levels     u32, then per level:
//!            n_rings u32, n_angles u32, kappa_max f64,
//!            kappas f64 x n_rings, thetas f64 x n_angles,
//!            per codeword (ring-major) per element: active u8, re f64, im f64
//! [kind 1]   per upper level, per codeword: n u32, child u32 x n
//! ```
//!
//! The CSV form has one row per codeword: `level, ring, angle, theta, r`
//! followed by interleaved real and imaginary weights. Level, ring and angle
//! are 1-based there; `r` is `inf` on the far-field ring.

use std::fmt::Write as _;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::array::{ArrayConfig, BeamVector, Normalization};
use crate::coverage::SteeringGrid;
use crate::error::{Error, Result};
use crate::lower::{Level, LowerCodebook, LowerCodebookParams};
use crate::upper::{HierarchicalCodebook, HierarchyConfig, PatternKind};

pub const MAGIC: &[u8; 8] = b"NFHCBK01";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum StoredCodebook {
    Lower(LowerCodebook),
    Hierarchy(HierarchicalCodebook),
}

impl StoredCodebook {
    pub fn lower(&self) -> &LowerCodebook {
        match self {
            StoredCodebook::Lower(cb) => cb,
            StoredCodebook::Hierarchy(h) => h.lower(),
        }
    }

    pub fn cfg(&self) -> &ArrayConfig {
        self.lower().cfg()
    }

    fn levels(&self) -> Vec<&Level> {
        match self {
            StoredCodebook::Lower(cb) => vec![cb.level()],
            StoredCodebook::Hierarchy(h) => (0..h.n_levels()).map(|l| h.level(l)).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_all(self, &mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes);
        let cb = read_all(&mut cur).map_err(|e| match e {
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::UnexpectedEof => {
                Error::Format("truncated codebook data".into())
            }
            other => other,
        })?;
        if cur.position() as usize != bytes.len() {
            return Err(Error::Format("trailing bytes after codebook data".into()));
        }
        Ok(cb)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Hex SHA-256 of the binary form.
    pub fn content_hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_bytes()))
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut rows = Vec::new();
        for (l, level) in self.levels().into_iter().enumerate() {
            let grid = level.grid();
            for (i, w) in level.codewords().iter().enumerate() {
                let (ring, angle) = grid.unflat(i);
                let c = grid.coord(ring, angle);
                let range = if c.kappa == 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 - c.theta * c.theta) / c.kappa
                };
                rows.push(CsvRow {
                    level: l + 1,
                    ring: ring + 1,
                    angle: angle + 1,
                    theta: c.theta,
                    range,
                    weights: w.weights().to_vec(),
                });
            }
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        write_csv(&self.csv_rows())
    }

    /// Same rows as the CSV form; `r` is null on the far-field ring and
    /// weights are `[re, im]` pairs.
    pub fn to_json(&self) -> String {
        let cfg = self.cfg();
        let rows: Vec<serde_json::Value> = self
            .csv_rows()
            .into_iter()
            .map(|r| {
                serde_json::json!({
                    "level": r.level,
                    "ring": r.ring,
                    "angle": r.angle,
                    "theta": r.theta,
                    "r": r.range.is_finite().then_some(r.range),
                    "weights": r.weights.iter().map(|w| [w.re, w.im]).collect::<Vec<_>>(),
                })
            })
            .collect();
        let doc = serde_json::json!({
            "kind": match self {
                StoredCodebook::Lower(_) => "lower",
                StoredCodebook::Hierarchy(_) => "hierarchy",
            },
            "n_elements": cfg.n_elements(),
            "carrier_hz": cfg.carrier_hz(),
            "content_hash": self.content_hash(),
            "codewords": rows,
        });
        let mut out = serde_json::to_string_pretty(&doc).expect("codebook JSON is always serialisable");
        out.push('\n');
        out
    }
}

const IO_CONTEXT: &str = "<codebook buffer>";

fn wrap(e: std::io::Error) -> Error {
    Error::io(IO_CONTEXT, e)
}

fn write_all(cb: &StoredCodebook, out: &mut Vec<u8>) -> std::io::Result<()> {
    let cfg = cb.cfg();
    let lower = cb.lower();
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u8(matches!(cb, StoredCodebook::Hierarchy(_)) as u8)?;
    out.write_u64::<LittleEndian>(cfg.n_elements() as u64)?;
    out.write_f64::<LittleEndian>(cfg.carrier_hz())?;
    out.write_f64::<LittleEndian>(cfg.spacing())?;
    out.write_f64::<LittleEndian>(lower.params().rho)?;
    out.write_f64::<LittleEndian>(lower.params().ring_spacing)?;
    if let StoredCodebook::Hierarchy(h) = cb {
        let c = h.config();
        out.write_u8(pattern_code(c.pattern))?;
        out.write_u8(normalization_code(c.normalization))?;
        out.write_f64::<LittleEndian>(c.half_gain_fraction)?;
    }
    let levels = cb.levels();
    out.write_u32::<LittleEndian>(levels.len() as u32)?;
    for level in levels {
        let grid = level.grid();
        out.write_u32::<LittleEndian>(grid.n_rings() as u32)?;
        out.write_u32::<LittleEndian>(grid.n_angles() as u32)?;
        out.write_f64::<LittleEndian>(grid.kappa_max())?;
        for &k in grid.kappas() {
            out.write_f64::<LittleEndian>(k)?;
        }
        for &t in grid.thetas() {
            out.write_f64::<LittleEndian>(t)?;
        }
        for w in level.codewords() {
            for (x, &on) in w.weights().iter().zip(w.active_mask()) {
                out.write_u8(on as u8)?;
                out.write_f64::<LittleEndian>(x.re)?;
                out.write_f64::<LittleEndian>(x.im)?;
            }
        }
    }
    if let StoredCodebook::Hierarchy(h) = cb {
        for table in h.children_table() {
            for kids in table {
                out.write_u32::<LittleEndian>(kids.len() as u32)?;
                for &k in kids {
                    out.write_u32::<LittleEndian>(k as u32)?;
                }
            }
        }
    }
    Ok(())
}

fn pattern_code(p: PatternKind) -> u8 {
    match p {
        PatternKind::Deact => 0,
        PatternKind::BmwSs => 1,
        PatternKind::Quadric => 2,
    }
}

fn normalization_code(n: Normalization) -> u8 {
    match n {
        Normalization::ActiveElements => 0,
        Normalization::FullArray => 1,
    }
}

fn read_len(cur: &mut Cursor<&[u8]>, what: &str) -> Result<usize> {
    let n = cur.read_u32::<LittleEndian>().map_err(wrap)? as usize;
    // every entry takes at least one byte, so a longer count is corrupt
    let remaining = cur.get_ref().len() - cur.position() as usize;
    if n > remaining {
        return Err(Error::Format(format!("{what} count {n} exceeds remaining data")));
    }
    Ok(n)
}

fn read_f64s(cur: &mut Cursor<&[u8]>, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| cur.read_f64::<LittleEndian>().map_err(wrap)).collect()
}

fn read_all(cur: &mut Cursor<&[u8]>) -> Result<StoredCodebook> {
    let mut magic = [0u8; 8];
    cur.read_exact(&mut magic).map_err(wrap)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a codebook file (bad magic)".into()));
    }
    let version = cur.read_u32::<LittleEndian>().map_err(wrap)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let kind = cur.read_u8().map_err(wrap)?;
    if kind > 1 {
        return Err(Error::Format(format!("unknown codebook kind {kind}")));
    }
    let n_elements = cur.read_u64::<LittleEndian>().map_err(wrap)? as usize;
    let carrier = cur.read_f64::<LittleEndian>().map_err(wrap)?;
    let spacing = cur.read_f64::<LittleEndian>().map_err(wrap)?;
    let cfg = ArrayConfig::with_spacing(n_elements, carrier, spacing)?;
    let rho = cur.read_f64::<LittleEndian>().map_err(wrap)?;
    let ring_spacing = cur.read_f64::<LittleEndian>().map_err(wrap)?;

    let hcfg = if kind == 1 {
        let pattern = match cur.read_u8().map_err(wrap)? {
            0 => PatternKind::Deact,
            1 => PatternKind::BmwSs,
            2 => PatternKind::Quadric,
            x => return Err(Error::Format(format!("unknown pattern code {x}"))),
        };
        let normalization = match cur.read_u8().map_err(wrap)? {
            0 => Normalization::ActiveElements,
            1 => Normalization::FullArray,
            x => return Err(Error::Format(format!("unknown normalization code {x}"))),
        };
        let half_gain_fraction = cur.read_f64::<LittleEndian>().map_err(wrap)?;
        Some((pattern, normalization, half_gain_fraction))
    } else {
        None
    };

    let n_levels = read_len(cur, "level")?;
    if n_levels == 0 || (kind == 0 && n_levels != 1) {
        return Err(Error::Format(format!("invalid level count {n_levels}")));
    }
    let mut levels = Vec::with_capacity(n_levels);
    for _ in 0..n_levels {
        let n_rings = read_len(cur, "ring")?;
        let n_angles = read_len(cur, "angle")?;
        let kappa_max = cur.read_f64::<LittleEndian>().map_err(wrap)?;
        let kappas = read_f64s(cur, n_rings)?;
        let thetas = read_f64s(cur, n_angles)?;
        let grid = SteeringGrid::new(thetas, kappas, kappa_max)?;
        let needed = grid.len() * n_elements * 17;
        if needed > cur.get_ref().len() - cur.position() as usize {
            return Err(Error::Format("truncated codebook data".into()));
        }
        let mut codewords = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let mut weights = Vec::with_capacity(n_elements);
            let mut active = Vec::with_capacity(n_elements);
            for _ in 0..n_elements {
                let on = match cur.read_u8().map_err(wrap)? {
                    0 => false,
                    1 => true,
                    x => return Err(Error::Format(format!("bad activity flag {x}"))),
                };
                let re = cur.read_f64::<LittleEndian>().map_err(wrap)?;
                let im = cur.read_f64::<LittleEndian>().map_err(wrap)?;
                active.push(on);
                weights.push(Complex64::new(re, im));
            }
            codewords.push(BeamVector::new(weights, active).map_err(|e| Error::Format(e.to_string()))?);
        }
        levels.push(Level::new(grid, codewords)?);
    }

    let bottom = levels.pop().expect("at least one level");
    let params = LowerCodebookParams {
        rho,
        ring_spacing,
        n_angles: bottom.n_angles(),
        n_rings: bottom.n_rings(),
    };
    let lower = LowerCodebook::from_parts(cfg, params, bottom)?;
    let Some((pattern, normalization, half_gain_fraction)) = hcfg else {
        return Ok(StoredCodebook::Lower(lower));
    };

    let mut children = Vec::with_capacity(levels.len());
    for level in &levels {
        let mut table = Vec::with_capacity(level.len());
        for _ in 0..level.len() {
            let n = read_len(cur, "child")?;
            let kids = (0..n)
                .map(|_| cur.read_u32::<LittleEndian>().map(|k| k as usize).map_err(wrap))
                .collect::<Result<Vec<_>>>()?;
            table.push(kids);
        }
        children.push(table);
    }
    let config = HierarchyConfig {
        n_levels,
        pattern,
        half_gain_fraction,
        normalization,
    };
    let hier =
        HierarchicalCodebook::from_parts(config, levels, lower, children).map_err(|e| Error::Format(e.to_string()))?;
    Ok(StoredCodebook::Hierarchy(hier))
}

/// One CSV row: position labels plus the codeword weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub level: usize,
    pub ring: usize,
    pub angle: usize,
    pub theta: f64,
    pub range: f64,
    pub weights: Vec<Complex64>,
}

fn fmt_float(out: &mut String, x: f64) {
    if x.is_infinite() {
        out.push_str(if x > 0.0 { "inf" } else { "-inf" });
    } else {
        write!(out, "{x:.16e}").expect("writing to a String cannot fail");
    }
}

pub fn write_csv(rows: &[CsvRow]) -> String {
    let n = rows.first().map_or(0, |r| r.weights.len());
    let mut out = String::from("level,ring,angle,theta,r");
    for i in 0..n {
        write!(out, ",w{i}_re,w{i}_im").expect("writing to a String cannot fail");
    }
    out.push('\n');
    for row in rows {
        write!(out, "{},{},{},", row.level, row.ring, row.angle).expect("writing to a String cannot fail");
        fmt_float(&mut out, row.theta);
        out.push(',');
        fmt_float(&mut out, row.range);
        for w in &row.weights {
            out.push(',');
            fmt_float(&mut out, w.re);
            out.push(',');
            fmt_float(&mut out, w.im);
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))?;
    let columns = header.split(',').count();
    if columns < 5 || (columns - 5) % 2 != 0 || !header.starts_with("level,ring,angle,theta,r") {
        return Err(Error::Format(format!("unexpected CSV header '{header}'")));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Error::Format(format!(
                "CSV line {} has {} fields, expected {columns}",
                n + 2,
                fields.len()
            )));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("CSV line {}: bad integer '{s}'", n + 2)))
        };
        let float = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("CSV line {}: bad number '{s}'", n + 2)))
        };
        let weights = fields[5..]
            .chunks(2)
            .map(|p| Ok(Complex64::new(float(p[0])?, float(p[1])?)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(CsvRow {
            level: int(fields[0])?,
            ring: int(fields[1])?,
            angle: int(fields[2])?,
            theta: float(fields[3])?,
            range: float(fields[4])?,
            weights,
        });
    }
    Ok(rows)
}
