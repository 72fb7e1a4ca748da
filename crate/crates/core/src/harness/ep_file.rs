//! Binary file of error-propagation training samples.
//!
//! Little-endian layout: the 8-byte magic, a `u64` sample count, then per
//! sample `f64 ebno_db, u64 stage, u8 label, u64 n, n x f64 channel, u64 m,
//! m x f64 boundary`.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::training::TrainingSample;

const MAGIC: &[u8; 8] = b"NWDEPS01";

pub fn write_ep_samples(path: &Path, samples: &[TrainingSample]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode(&mut w, samples)
        .and_then(|()| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_ep_samples(path: &Path) -> Result<Vec<TrainingSample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    decode(&mut BufReader::new(file)).map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidData | std::io::ErrorKind::UnexpectedEof => {
            Error::parse(path, e)
        }
        _ => Error::io(path, e),
    })
}

fn encode(w: &mut impl Write, samples: &[TrainingSample]) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    for s in samples {
        w.write_all(&s.ebno_db.to_le_bytes())?;
        w.write_all(&(s.stage as u64).to_le_bytes())?;
        w.write_all(&[s.label])?;
        for values in [&s.channel, &s.boundary] {
            w.write_all(&(values.len() as u64).to_le_bytes())?;
            for x in values.iter() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn invalid(msg: impl Into<String>) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg.into())
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read) -> std::io::Result<Vec<f64>> {
    let n = read_u64(r)?;
    if n > 1 << 32 {
        return Err(invalid(format!("implausible vector length {n}")));
    }
    (0..n).map(|_| read_u64(r).map(f64::from_bits)).collect()
}

fn decode(r: &mut impl Read) -> std::io::Result<Vec<TrainingSample>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(invalid("not an EP sample file"));
    }
    let count = read_u64(r)?;
    let mut samples = Vec::new();
    for _ in 0..count {
        let ebno_db = f64::from_bits(read_u64(r)?);
        let stage = read_u64(r)? as usize;
        let mut label = [0u8; 1];
        r.read_exact(&mut label)?;
        if stage == 0 || label[0] > 1 {
            return Err(invalid(format!("bad sample header (stage {stage}, label {})", label[0])));
        }
        let channel = read_f64s(r)?;
        let boundary = read_f64s(r)?;
        samples.push(TrainingSample {
            channel,
            boundary,
            ebno_db,
            stage,
            label: label[0],
        });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(invalid("trailing bytes after the last sample"));
    }
    Ok(samples)
}
