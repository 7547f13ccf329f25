//! Field snapshots: an 8-byte magic, a little-endian `u64` header length,
//! a JSON header, then raw little-endian `f64` arrays (`u` as interleaved
//! re/im pairs, then each 1-form component in order).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FieldConfiguration, C64};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridDescriptor};

pub const MAGIC: &[u8; 8] = b"VXSNAP01";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub grid: GridDescriptor,
    pub epsilon: f64,
    pub fields: Vec<String>,
    pub encoding: String,
    pub node_count: usize,
}

pub fn write_snapshot<W: Write>(config: &FieldConfiguration, mut out: W) -> Result<()> {
    let mut fields = vec!["u".to_string()];
    fields.extend((0..config.dim()).map(|c| format!("A{c}")));
    let header = SnapshotHeader {
        grid: config.grid.clone().into(),
        epsilon: config.epsilon,
        fields,
        encoding: "f64-le".into(),
        node_count: config.len(),
    };
    let json = serde_json::to_vec(&header)?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    let mut buf = Vec::with_capacity(8 * config.len() * (2 + config.dim()));
    for z in &config.u {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    for ac in &config.a {
        for v in ac {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<FieldConfiguration> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 24 {
        return Err(Error::Format(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let header: SnapshotHeader = serde_json::from_slice(&json)?;
    if header.encoding != "f64-le" {
        return Err(Error::Format(format!("unsupported encoding {}", header.encoding)));
    }
    let grid = Grid::try_from(header.grid)?;
    if header.node_count != grid.len() || header.fields.len() != 1 + grid.dim() {
        return Err(Error::Format("header does not match grid".into()));
    }
    let n = grid.len();
    let mut raw = vec![0u8; 8 * n * (2 + grid.dim())];
    input.read_exact(&mut raw)?;
    let vals: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let u = vals[..2 * n].chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
    let a = (0..grid.dim()).map(|c| vals[2 * n + c * n..2 * n + (c + 1) * n].to_vec()).collect();
    FieldConfiguration::new(grid, header.epsilon, u, a)
}

pub fn save(config: &FieldConfiguration, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_snapshot(config, std::io::BufWriter::new(f))
}

pub fn load(path: impl AsRef<Path>) -> Result<FieldConfiguration> {
    let f = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(f))
}

/// Per-node CSV: coordinates, `Re u`, `Im u`, then the 1-form components.
pub fn write_csv<W: Write>(config: &FieldConfiguration, mut out: W) -> Result<()> {
    const MAX_NODES: usize = 1 << 20;
    if config.len() > MAX_NODES {
        return Err(Error::InvalidParameter(format!("CSV export is limited to {MAX_NODES} nodes")));
    }
    let d = config.dim();
    let mut head: Vec<String> = (0..d).map(|a| format!("x{a}")).collect();
    head.push("re_u".into());
    head.push("im_u".into());
    head.extend((0..d).map(|a| format!("A{a}")));
    writeln!(out, "{}", head.join(","))?;
    for i in 0..config.len() {
        let mut row: Vec<String> = config.grid.position(i).iter().map(|x| format!("{x:.17e}")).collect();
        row.push(format!("{:.17e}", config.u[i].re));
        row.push(format!("{:.17e}", config.u[i].im));
        row.extend((0..d).map(|c| format!("{:.17e}", config.a[c][i])));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn snapshot_round_trip(eps in 0.01f64..2.0, seed in 0u64..1000, nodes in 3usize..9) {
            let g = Grid2::with_nodes(1.0, nodes).unwrap().grid();
            let s = seed as f64;
            let cfg = FieldConfiguration::from_fn(g, eps, |x| {
                (C64::new((x[0] + s).sin(), x[1] * s), vec![x[0] - s, (x[1] * s).cos()])
            }).unwrap();
            let mut buf = Vec::new();
            write_snapshot(&cfg, &mut buf).unwrap();
            let back = read_snapshot(&buf[..]).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(matches!(read_snapshot(&b"NOTASNAP\0\0\0\0\0\0\0\0"[..]), Err(Error::Format(_))));
    }
}
