//! `MLGF` binary tensors and their CSV mirror.
//!
//! Layout: magic `MLGF`, `u32` version, `u32` rank, `rank × u32` dims, then
//! `f64` values in row-major order. Every integer and real is little-endian.

use std::fs;
use std::path::Path;

use mlgcn_core::Tensor;

use crate::error::{io, Error, Result};

pub const MAGIC: &[u8; 4] = b"MLGF";
pub const VERSION: u32 = 1;
/// Ranks above this are rejected on read to bound header parsing.
pub const MAX_RANK: u32 = 8;

/// Serializes `shape` and `data`, refusing non-finite values and oversize dims.
pub fn encode(shape: &[usize], data: &[f64]) -> std::result::Result<Vec<u8>, String> {
    if shape.is_empty() {
        return Err("rank must be at least 1".into());
    }
    let expected = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    if expected != Some(data.len()) {
        return Err(format!("{} values do not fill shape {shape:?}", data.len()));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(format!("value {i} is {}, only finite values are stored", data[i]));
    }
    let mut out = Vec::with_capacity(12 + 4 * shape.len() + 8 * data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for &d in shape {
        let d = u32::try_from(d).map_err(|_| format!("dimension {d} exceeds u32"))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses a complete file image; errors carry the offending byte offset.
pub fn decode(bytes: &[u8]) -> std::result::Result<Tensor, (u64, String)> {
    let u32_at = |offset: usize, what: &str| -> std::result::Result<u32, (u64, String)> {
        bytes
            .get(offset..offset + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
            .ok_or_else(|| (offset as u64, format!("file ends inside the {what}")))
    };
    match bytes.get(..4) {
        Some(m) if m == MAGIC => {}
        Some(_) => return Err((0, "bad magic, expected MLGF".into())),
        None => return Err((0, "file ends inside the magic".into())),
    }
    let version = u32_at(4, "version")?;
    if version != VERSION {
        return Err((4, format!("unsupported version {version}")));
    }
    let rank = u32_at(8, "rank")?;
    if rank == 0 || rank > MAX_RANK {
        return Err((8, format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    let mut shape = Vec::with_capacity(rank as usize);
    let mut count: u64 = 1;
    for i in 0..rank as usize {
        let offset = 12 + 4 * i;
        let d = u32_at(offset, "dimensions")?;
        if d == 0 {
            return Err((offset as u64, format!("dimension {i} is zero")));
        }
        count = count
            .checked_mul(u64::from(d))
            .ok_or_else(|| (offset as u64, "element count overflows".to_string()))?;
        shape.push(d as usize);
    }
    let start = 12 + 4 * rank as usize;
    let payload = &bytes[start.min(bytes.len())..];
    let needed = count.saturating_mul(8);
    if (payload.len() as u64) < needed {
        return Err((
            bytes.len() as u64,
            format!("payload truncated: expected {needed} bytes, found {}", payload.len()),
        ));
    }
    if payload.len() as u64 > needed {
        return Err((start as u64 + needed, "trailing bytes after payload".into()));
    }
    let mut data = Vec::with_capacity(count as usize);
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(((start + 8 * i) as u64, format!("non-finite value {v}")));
        }
        data.push(v);
    }
    Tensor::new(shape, data).map_err(|e| (start as u64, e.to_string()))
}

pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    let bytes = encode(tensor.shape(), tensor.data()).map_err(|msg| Error::Format {
        path: path.into(),
        offset: 0,
        msg,
    })?;
    fs::write(path, bytes).map_err(io(path))
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(io(path))?;
    decode(&bytes).map_err(|(offset, msg)| Error::Format {
        path: path.into(),
        offset,
        msg,
    })
}

/// CSV text: a `shape,d0,d1,...` header, then rows over the last dimension.
///
/// Values use 17 significant digits, so parsing the text restores every bit.
pub fn to_csv(tensor: &Tensor) -> String {
    let shape = tensor.shape();
    let mut out = String::from("shape");
    for d in shape {
        out.push_str(&format!(",{d}"));
    }
    out.push('\n');
    let width = *shape.last().unwrap();
    for row in tensor.data().chunks(width) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn from_csv(path: &Path, text: &str) -> Result<Tensor> {
    let parse = |line: usize, msg: String| Error::Parse {
        path: path.into(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::Empty { path: path.into() })?;
    let mut fields = header.split(',');
    if fields.next() != Some("shape") {
        return Err(parse(1, "header must start with `shape`".into()));
    }
    let shape = fields
        .map(|f| f.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| parse(1, format!("bad dimension: {e}")))?;
    if shape.is_empty() {
        return Err(parse(1, "header lists no dimensions".into()));
    }
    let width = *shape.last().unwrap();
    let mut data = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse(n, format!("bad value: {e}")))?;
        if row.len() != width {
            return Err(parse(n, format!("expected {width} values, found {}", row.len())));
        }
        data.extend(row);
    }
    Ok(Tensor::new(shape, data)?)
}

pub fn write_csv(path: &Path, tensor: &Tensor) -> Result<()> {
    fs::write(path, to_csv(tensor)).map_err(io(path))
}

pub fn read_csv(path: &Path) -> Result<Tensor> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    from_csv(path, &text)
}
