//! Complex serialization: a line-oriented text format and a compact
//! little-endian binary variant (magic `CCX1`) for large complexes.
//!
//! Text layout:
//!
//! ```text
//! cells N dim M scale S weights W
//! id x1 .. xM weight deg n1 n2 ...
//! ```
//!
//! `M = 0` means no positions (the `x` fields are absent), `S = -` means no
//! mesh scale, and `W` is `0`/`1` for absent/present weights (the `weight`
//! field is absent when `W = 0`). Cells appear in id order.
//!
//! Binary layout (all little-endian): magic `CCX1`, flags byte
//! (bit0 positions, bit1 weights, bit2 scale), u32 cell count, u16 dim,
//! f64 scale?, u64 offsets[n+1], u32 neighbors, f64 positions[n*dim]?,
//! f64 weights[n]?.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CellComplex, ComplexError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcxFormat {
    Text,
    Binary,
}

const MAGIC: &[u8; 4] = b"CCX1";

pub fn save_ccx(
    complex: &CellComplex,
    path: impl AsRef<Path>,
    format: CcxFormat,
) -> Result<(), ComplexError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    match format {
        CcxFormat::Text => write_text(complex, &mut w),
        CcxFormat::Binary => write_binary(complex, &mut w),
    }
}

/// Loads either format, sniffing the `CCX1` magic.
pub fn load_ccx(path: impl AsRef<Path>) -> Result<CellComplex, ComplexError> {
    let path = path.as_ref();
    let mut file = File::open(path)?;
    let mut magic = [0u8; 4];
    let got = file.read(&mut magic)?;
    drop(file);
    let file = File::open(path)?;
    if got == 4 && &magic == MAGIC {
        read_binary(BufReader::new(file))
    } else {
        read_text(BufReader::new(file))
    }
}

fn write_text(c: &CellComplex, w: &mut impl Write) -> Result<(), ComplexError> {
    let scale = match c.mesh_scale() {
        Some(a) => format!("{a}"),
        None => "-".to_string(),
    };
    writeln!(
        w,
        "cells {} dim {} scale {} weights {}",
        c.cell_count(),
        c.dim(),
        scale,
        u8::from(c.has_weights())
    )?;
    for i in 0..c.cell_count() {
        let id = super::CellId(i as u32);
        write!(w, "{i}")?;
        if let Some(pos) = c.position(id) {
            for x in pos {
                write!(w, " {x}")?;
            }
        }
        if let Some(weight) = c.weight(id) {
            write!(w, " {weight}")?;
        }
        write!(w, " {}", c.degree(id))?;
        for n in c.neighbors(id) {
            write!(w, " {n}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn read_text(r: impl BufRead) -> Result<CellComplex, ComplexError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))??;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 8 || tok[0] != "cells" || tok[2] != "dim" || tok[4] != "scale" || tok[6] != "weights" {
        return Err(parse_err(1, "malformed header"));
    }
    let n: usize = tok[1].parse().map_err(|_| parse_err(1, "bad cell count"))?;
    let dim: usize = tok[3].parse().map_err(|_| parse_err(1, "bad dim"))?;
    let scale = if tok[5] == "-" {
        None
    } else {
        Some(tok[5].parse::<f64>().map_err(|_| parse_err(1, "bad scale"))?)
    };
    let has_weights = tok[7] == "1";
    let mut adjacency = vec![Vec::new(); n];
    let mut positions = if dim > 0 { Some(vec![0.0; n * dim]) } else { None };
    let mut weights = if has_weights { Some(vec![0.0; n]) } else { None };
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = lineno + 2;
        let mut it = line.split_whitespace();
        let id: usize = it
            .next()
            .ok_or_else(|| parse_err(lineno, "missing id"))?
            .parse()
            .map_err(|_| parse_err(lineno, "bad id"))?;
        if id >= n {
            return Err(parse_err(lineno, "id out of range"));
        }
        if let Some(p) = positions.as_mut() {
            for k in 0..dim {
                p[id * dim + k] = it
                    .next()
                    .ok_or_else(|| parse_err(lineno, "missing coordinate"))?
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad coordinate"))?;
            }
        }
        if let Some(w) = weights.as_mut() {
            w[id] = it
                .next()
                .ok_or_else(|| parse_err(lineno, "missing weight"))?
                .parse()
                .map_err(|_| parse_err(lineno, "bad weight"))?;
        }
        let deg: usize = it
            .next()
            .ok_or_else(|| parse_err(lineno, "missing degree"))?
            .parse()
            .map_err(|_| parse_err(lineno, "bad degree"))?;
        let list: Result<Vec<u32>, _> = it.map(|t| t.parse::<u32>()).collect();
        let list = list.map_err(|_| parse_err(lineno, "bad neighbour id"))?;
        if list.len() != deg {
            return Err(parse_err(lineno, "degree does not match neighbour list"));
        }
        adjacency[id] = list;
    }
    let mut builder = super::ComplexBuilder::new(adjacency).degree_bound(u32::MAX);
    if let Some(p) = positions {
        builder = builder.positions(p, dim);
    }
    if let Some(w) = weights {
        builder = builder.weights(w);
    }
    if let Some(a) = scale {
        builder = builder.mesh_scale(a);
    }
    builder.build()
}

fn write_binary(c: &CellComplex, w: &mut impl Write) -> Result<(), ComplexError> {
    w.write_all(MAGIC)?;
    let mut flags = 0u8;
    if c.dim() > 0 {
        flags |= 1;
    }
    if c.has_weights() {
        flags |= 2;
    }
    if c.mesh_scale().is_some() {
        flags |= 4;
    }
    w.write_all(&[flags])?;
    w.write_all(&(c.cell_count() as u32).to_le_bytes())?;
    w.write_all(&(c.dim() as u16).to_le_bytes())?;
    if let Some(a) = c.mesh_scale() {
        w.write_all(&a.to_le_bytes())?;
    }
    for off in &c.offsets {
        w.write_all(&off.to_le_bytes())?;
    }
    for n in &c.neighbors {
        w.write_all(&n.to_le_bytes())?;
    }
    if let Some(p) = c.positions() {
        for x in p {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    if let Some(ws) = c.weights() {
        for x in ws {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_binary(mut r: impl Read) -> Result<CellComplex, ComplexError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(parse_err(0, "bad magic"));
    }
    let mut flags = [0u8; 1];
    r.read_exact(&mut flags)?;
    let flags = flags[0];
    let n = read_u32(&mut r)? as usize;
    let dim = read_u16(&mut r)? as usize;
    let scale = if flags & 4 != 0 { Some(read_f64(&mut r)?) } else { None };
    let mut offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        offsets.push(read_u64(&mut r)?);
    }
    let edges = *offsets.last().unwrap() as usize;
    let mut neighbors = Vec::with_capacity(edges);
    for _ in 0..edges {
        neighbors.push(read_u32(&mut r)?);
    }
    let positions = if flags & 1 != 0 {
        let mut p = Vec::with_capacity(n * dim);
        for _ in 0..n * dim {
            p.push(read_f64(&mut r)?);
        }
        Some(p)
    } else {
        None
    };
    let weights = if flags & 2 != 0 {
        let mut ws = Vec::with_capacity(n);
        for _ in 0..n {
            ws.push(read_f64(&mut r)?);
        }
        Some(ws)
    } else {
        None
    };
    // Offsets must be monotone and neighbour ids in range.
    for w in offsets.windows(2) {
        if w[1] < w[0] {
            return Err(parse_err(0, "non-monotone offsets"));
        }
    }
    if neighbors.iter().any(|&x| x as usize >= n) {
        return Err(parse_err(0, "neighbour id out of range"));
    }
    Ok(CellComplex::from_csr_unchecked(
        offsets,
        neighbors,
        weights,
        positions,
        if flags & 1 != 0 { dim } else { 0 },
        scale,
    ))
}

fn read_u32(r: &mut impl Read) -> Result<u32, ComplexError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u16(r: &mut impl Read) -> Result<u16, ComplexError> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, ComplexError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, ComplexError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn parse_err(line: usize, msg: &str) -> ComplexError {
    ComplexError::Parse {
        line,
        msg: msg.to_string(),
    }
}
