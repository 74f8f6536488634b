//! Binary model container.
//!
//! Layout, all little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `GMUD` | 4 bytes |
//! | format version | u32 |
//! | K, J, C₁, C₂ | u64 each |
//! | leaky slope, BN momentum, BN eps, α | f64 each |
//! | θ (`W₁ b₁ γ₁ β₁ W₂ b₂ γ₂ β₂ W₃ b₃`) | f64 block |
//! | running mean₁, var₁, mean₂, var₂ | f64 blocks |
//! | checksum: first 8 bytes of SHA-256 of everything above | u64 |

use std::path::Path;

use genmud_core::genmud::{Architecture, GeneratorModel, RunningStats};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GMUD";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 * 8 + 4 * 8;

pub fn encode_model(model: &GeneratorModel) -> Vec<u8> {
    let a = &model.arch;
    let r = &model.running;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (model.params.len() + 2 * (a.hidden1 + a.hidden2) + 1));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [a.users, a.slots, a.hidden1, a.hidden2] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for v in [a.leaky_slope, a.bn_momentum, a.bn_eps, model.alpha] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for block in [&model.params, &r.mean1, &r.var1, &r.mean2, &r.var2] {
        for v in block.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sum = checksum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::CorruptFile(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().unwrap())
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take()?);
        usize::try_from(v).map_err(|_| Error::CorruptFile(format!("dimension {v} out of range")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn block(&mut self, len: usize) -> Result<Vec<f64>> {
        (0..len).map(|_| self.f64()).collect()
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<GeneratorModel> {
    if bytes.len() < HEADER_LEN + 8 {
        return Err(Error::CorruptFile(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::CorruptFile("bad magic".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let mut r = Reader { bytes: body, pos: 4 };
    let version = u32::from_le_bytes(r.take()?);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(format!(
            "file has format version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    if checksum(body) != stored {
        return Err(Error::CorruptFile("checksum does not match".into()));
    }
    let (users, slots, hidden1, hidden2) = (r.u64()?, r.u64()?, r.u64()?, r.u64()?);
    let mut arch = Architecture::new(users, slots).with_hidden(hidden1, hidden2);
    arch.leaky_slope = r.f64()?;
    arch.bn_momentum = r.f64()?;
    arch.bn_eps = r.f64()?;
    let alpha = r.f64()?;
    let expected = arch
        .layout()
        .len
        .checked_add(2 * (hidden1 + hidden2))
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN));
    if expected != Some(body.len()) {
        return Err(Error::CorruptFile(format!(
            "{} bytes of data do not match K={users} J={slots} C1={hidden1} C2={hidden2}",
            body.len()
        )));
    }
    let params = r.block(arch.layout().len)?;
    let running = RunningStats {
        mean1: r.block(hidden1)?,
        var1: r.block(hidden1)?,
        mean2: r.block(hidden2)?,
        var2: r.block(hidden2)?,
    };
    let model = GeneratorModel { arch, params, running, alpha };
    model.validate().map_err(|e| Error::CorruptFile(e.to_string()))?;
    Ok(model)
}

pub fn save_model(model: &GeneratorModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<GeneratorModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

/// Loads a model and checks it was built for `K` users and `J` slots.
pub fn load_model_for(path: &Path, users: usize, slots: usize) -> Result<GeneratorModel> {
    let model = load_model(path)?;
    if (model.arch.users, model.arch.slots) != (users, slots) {
        return Err(Error::VersionMismatch(format!(
            "{} holds a model for K={} J={}, the experiment needs K={users} J={slots}",
            path.display(),
            model.arch.users,
            model.arch.slots
        )));
    }
    Ok(model)
}
