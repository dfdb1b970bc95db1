//! Little-endian binary layouts.
//!
//! * Hypervector: `u64` dim, then `ceil(dim / 8)` bytes, bit `i` at bit
//!   `i % 8` of byte `i / 8`.
//! * Accumulator: `u64` dim, `u32` scale, `i64` n_added, then `dim` `i32`
//!   counters.
//! * Item memory: magic `HDIM`, `u32` version, `u64` dim, `u32` levels,
//!   `u32` features, `u32` channels, `u64` seed, `u8` bundling, per-feature
//!   `f64` (min, max), then packed feature, channel, level and tie-break
//!   vectors in that order.
//! * Model: magic `HDMD`, `u32` version, `u8` strategy code, `u64` dim,
//!   `u32` centroid count, per centroid `u8` label and `u64` member weight,
//!   then every accumulator, then every packed prototype.

use alloc::vec::Vec;

use crate::encoder::{Bounds, Bundling, ItemMemory, ItemMemoryConfig};
use crate::error::{Error, Result};
use crate::hypervector::{Accumulator, Hypervector, LevelTable, Weight};
use crate::learning::{Centroid, Model, Strategy};

const ITEM_MEMORY_MAGIC: &[u8; 4] = b"HDIM";
const MODEL_MAGIC: &[u8; 4] = b"HDMD";
const VERSION: u32 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, offset: 0 }
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.offset < n {
            return Err(Error::Decode {
                offset: self.offset,
                reason: what,
            });
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().unwrap())
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        self.array(what).map(u32::from_le_bytes)
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        self.array(what).map(u64::from_le_bytes)
    }

    fn i64(&mut self, what: &'static str) -> Result<i64> {
        self.array(what).map(i64::from_le_bytes)
    }

    fn f64(&mut self, what: &'static str) -> Result<f64> {
        self.array(what).map(f64::from_le_bytes)
    }

    fn usize(&mut self, what: &'static str) -> Result<usize> {
        let at = self.offset;
        usize::try_from(self.u64(what)?).map_err(|_| Error::Decode {
            offset: at,
            reason: "value does not fit in usize",
        })
    }

    fn finish(&self) -> Result<()> {
        if self.offset != self.bytes.len() {
            return Err(Error::Decode {
                offset: self.offset,
                reason: "trailing bytes",
            });
        }
        Ok(())
    }

    fn fail<T>(&self, reason: &'static str) -> Result<T> {
        Err(Error::Decode {
            offset: self.offset,
            reason,
        })
    }
}

fn packed_len(dim: usize) -> usize {
    dim.div_ceil(8)
}

fn write_packed(out: &mut Vec<u8>, hv: &Hypervector) {
    let n = packed_len(hv.dim());
    out.extend(hv.words().iter().flat_map(|w| w.to_le_bytes()).take(n));
}

fn read_packed(r: &mut Reader<'_>, dim: usize) -> Result<Hypervector> {
    let at = r.offset;
    let bytes = r.take(packed_len(dim), "truncated hypervector payload")?;
    let words = bytes
        .chunks(8)
        .map(|c| {
            let mut w = [0u8; 8];
            w[..c.len()].copy_from_slice(c);
            u64::from_le_bytes(w)
        })
        .collect();
    let hv = Hypervector::from_words(dim, words)?;
    let padding = bytes.last().copied().unwrap_or(0);
    if dim % 8 != 0 && padding >> (dim % 8) != 0 {
        return Err(Error::Decode {
            offset: at + bytes.len() - 1,
            reason: "non-zero padding bits",
        });
    }
    Ok(hv)
}

pub fn encode_hypervector(hv: &Hypervector) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + packed_len(hv.dim()));
    out.extend((hv.dim() as u64).to_le_bytes());
    write_packed(&mut out, hv);
    out
}

pub fn decode_hypervector(bytes: &[u8]) -> Result<Hypervector> {
    let mut r = Reader::new(bytes);
    let dim = r.usize("missing dimension")?;
    if dim == 0 {
        return r.fail("zero dimension");
    }
    let hv = read_packed(&mut r, dim)?;
    r.finish()?;
    Ok(hv)
}

fn write_accumulator(out: &mut Vec<u8>, acc: &Accumulator) {
    out.extend((acc.dim() as u64).to_le_bytes());
    out.extend(Weight::SCALE.to_le_bytes());
    out.extend(acc.n_added().to_le_bytes());
    for c in acc.counts() {
        out.extend(c.to_le_bytes());
    }
}

fn read_accumulator(r: &mut Reader<'_>) -> Result<Accumulator> {
    let dim = r.usize("missing accumulator dimension")?;
    if dim == 0 {
        return r.fail("zero dimension");
    }
    if r.u32("missing scale")? != Weight::SCALE {
        return r.fail("unsupported fixed-point scale");
    }
    let n_added = r.i64("missing n_added")?;
    let body = r.take(dim * 4, "truncated accumulator counts")?;
    let counts = body
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Accumulator::from_parts(counts, n_added)
}

pub fn encode_accumulator(acc: &Accumulator) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 4 * acc.dim());
    write_accumulator(&mut out, acc);
    out
}

pub fn decode_accumulator(bytes: &[u8]) -> Result<Accumulator> {
    let mut r = Reader::new(bytes);
    let acc = read_accumulator(&mut r)?;
    r.finish()?;
    Ok(acc)
}

pub fn encode_item_memory(im: &ItemMemory) -> Vec<u8> {
    let cfg = im.config();
    let mut out = Vec::new();
    out.extend(ITEM_MEMORY_MAGIC);
    out.extend(VERSION.to_le_bytes());
    out.extend((cfg.dim as u64).to_le_bytes());
    out.extend((cfg.num_levels as u32).to_le_bytes());
    out.extend((im.n_features() as u32).to_le_bytes());
    out.extend((im.n_channels() as u32).to_le_bytes());
    out.extend(cfg.seed.to_le_bytes());
    out.push(cfg.bundling.code());
    for b in im.bounds() {
        out.extend(b.min.to_le_bytes());
        out.extend(b.max.to_le_bytes());
    }
    let vectors = im
        .feature_vectors()
        .iter()
        .chain(im.channel_vectors())
        .chain(im.level_table().levels())
        .chain(core::iter::once(im.tie_break()));
    for v in vectors {
        write_packed(&mut out, v);
    }
    out
}

pub fn decode_item_memory(bytes: &[u8]) -> Result<ItemMemory> {
    let mut r = Reader::new(bytes);
    if &r.array::<4>("missing magic")? != ITEM_MEMORY_MAGIC {
        return Err(Error::Decode { offset: 0, reason: "not an item memory file" });
    }
    if r.u32("missing version")? != VERSION {
        return r.fail("unsupported version");
    }
    let dim = r.usize("missing dimension")?;
    let num_levels = r.u32("missing level count")? as usize;
    let n_features = r.u32("missing feature count")? as usize;
    let n_channels = r.u32("missing channel count")? as usize;
    let seed = r.u64("missing seed")?;
    let bundling = match Bundling::from_code(r.u8("missing bundling")?) {
        Some(b) => b,
        None => return r.fail("unknown bundling code"),
    };
    if dim == 0 || num_levels < 2 {
        return r.fail("invalid dimension or level count");
    }
    let bounds = (0..n_features)
        .map(|_| {
            Ok(Bounds {
                min: r.f64("truncated bounds")?,
                max: r.f64("truncated bounds")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut read_n = |n: usize| (0..n).map(|_| read_packed(&mut r, dim)).collect::<Result<Vec<_>>>();
    let feature_vectors = read_n(n_features)?;
    let channel_vectors = read_n(n_channels)?;
    let levels = read_n(num_levels)?;
    let tie_break = read_n(1)?.pop().unwrap();
    r.finish()?;
    let config = ItemMemoryConfig {
        dim,
        num_levels,
        seed,
        bundling,
    };
    ItemMemory::from_parts(
        config,
        feature_vectors,
        channel_vectors,
        LevelTable::from_levels(levels)?,
        bounds,
        tie_break,
    )
}

pub fn encode_model(model: &Model) -> Vec<u8> {
    let mut out = Vec::with_capacity(model_size(model));
    out.extend(MODEL_MAGIC);
    out.extend(VERSION.to_le_bytes());
    out.push(model.strategy().code());
    out.extend((model.dim() as u64).to_le_bytes());
    out.extend((model.centroids().len() as u32).to_le_bytes());
    for c in model.centroids() {
        out.push(c.label());
        out.extend(c.n_members_raw().to_le_bytes());
    }
    for c in model.centroids() {
        write_accumulator(&mut out, c.accumulator());
    }
    for c in model.centroids() {
        write_packed(&mut out, c.proto());
    }
    out
}

/// Byte length of [`encode_model`]'s output.
pub fn model_size(model: &Model) -> usize {
    let per_centroid = 1 + 8 + (20 + 4 * model.dim()) + packed_len(model.dim());
    4 + 4 + 1 + 8 + 4 + model.centroids().len() * per_centroid
}

/// The tie-break vector is not part of the model file; it comes from the
/// item memory the model was trained with.
pub fn decode_model(bytes: &[u8], tie_break: &Hypervector) -> Result<Model> {
    let mut r = Reader::new(bytes);
    if &r.array::<4>("missing magic")? != MODEL_MAGIC {
        return Err(Error::Decode { offset: 0, reason: "not a model file" });
    }
    if r.u32("missing version")? != VERSION {
        return r.fail("unsupported version");
    }
    let strategy = match Strategy::from_code(r.u8("missing strategy")?) {
        Some(s) => s,
        None => return r.fail("unknown strategy code"),
    };
    let dim = r.usize("missing dimension")?;
    if dim != tie_break.dim() {
        return r.fail("model dimension differs from the tie-break vector");
    }
    let count = r.u32("missing centroid count")? as usize;
    let mut headers = Vec::with_capacity(count);
    for _ in 0..count {
        headers.push((r.u8("truncated centroid table")?, r.u64("truncated centroid table")?));
    }
    let mut accs = Vec::with_capacity(count);
    for _ in 0..count {
        let acc = read_accumulator(&mut r)?;
        if acc.dim() != dim {
            return r.fail("accumulator dimension differs from model");
        }
        accs.push(acc);
    }
    let mut centroids = Vec::with_capacity(count);
    for ((label, members), acc) in headers.into_iter().zip(accs) {
        let proto = read_packed(&mut r, dim)?;
        centroids.push(Centroid::from_parts(acc, proto, members, label)?);
    }
    r.finish()?;
    Model::from_parts(strategy, centroids, tie_break.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypervector::{random_hv, Sign};
    use crate::window::FeatureWindow;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn hypervector_layout_is_lsb_first() {
        let hv = Hypervector::from_bits(&[true, false, false, false, false, false, false, false, false, true]).unwrap();
        assert_eq!(encode_hypervector(&hv), vec![10, 0, 0, 0, 0, 0, 0, 0, 0b0000_0001, 0b0000_0010]);
    }

    #[test]
    fn rejects_truncation_and_padding() {
        let mut bytes = encode_hypervector(&random_hv(12, 1).unwrap());
        bytes.pop();
        assert!(matches!(decode_hypervector(&bytes), Err(Error::Decode { offset: 8, .. })));
        let bytes = vec![4, 0, 0, 0, 0, 0, 0, 0, 0xF0];
        assert!(decode_hypervector(&bytes).is_err());
    }

    #[test]
    fn accumulator_layout() {
        let mut acc = Accumulator::new(3).unwrap();
        acc.accumulate(&Hypervector::from_bits(&[true, false, true]).unwrap(), Weight::ONE, Sign::Add)
            .unwrap();
        let bytes = encode_accumulator(&acc);
        assert_eq!(bytes.len(), 8 + 4 + 8 + 12);
        assert_eq!(&bytes[20..24], &1000i32.to_le_bytes());
        assert_eq!(&bytes[24..28], &(-1000i32).to_le_bytes());
        assert_eq!(decode_accumulator(&bytes).unwrap(), acc);
    }

    #[test]
    fn item_memory_round_trip_reencodes_identically() {
        let train: Vec<_> = (0..20)
            .map(|i| FeatureWindow::new(0.0, 1.0, 2, 3, (0..6).map(|k| (i * k) as f64).collect(), 0).unwrap())
            .collect();
        let cfg = ItemMemoryConfig { dim: 333, num_levels: 5, seed: 17, bundling: Bundling::TwoStage };
        let im = ItemMemory::fit(&train, cfg).unwrap();
        let back = decode_item_memory(&encode_item_memory(&im)).unwrap();
        assert_eq!(back, im);
        for w in &train {
            assert_eq!(back.encode(w).unwrap(), im.encode(w).unwrap());
        }
    }

    #[test]
    fn model_round_trip_and_size() {
        let tie = random_hv(130, 0).unwrap();
        let samples: Vec<_> = (0..10).map(|k| random_hv(130, k + 1).unwrap()).collect();
        let labels: Vec<u8> = (0..10).map(|k| (k % 3 == 0) as u8).collect();
        let m = crate::learning::train_multi_centroid(&samples, &labels, &tie).unwrap();
        let bytes = encode_model(&m);
        assert_eq!(bytes.len(), model_size(&m));
        let back = decode_model(&bytes, &tie).unwrap();
        assert_eq!(back.centroids(), m.centroids());
        assert_eq!(back.strategy(), m.strategy());
        assert!(decode_model(&bytes[..bytes.len() - 1], &tie).is_err());
    }

    proptest! {
        #[test]
        fn hypervector_round_trip(dim in 1usize..300, seed in any::<u64>()) {
            let hv = random_hv(dim, seed).unwrap();
            let bytes = encode_hypervector(&hv);
            prop_assert_eq!(bytes.len(), 8 + dim.div_ceil(8));
            prop_assert_eq!(decode_hypervector(&bytes).unwrap(), hv);
        }
    }
}
