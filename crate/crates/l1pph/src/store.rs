//! The application pipeline: build a database of per-block inverse digests
//! (setup), produce query digests (prepare), and scan for matches (detect),
//! with a bit-exact file format.
//!
//! One key covers the whole flattened image; block `i` hashes its contiguous
//! slice of the image against the matching slice of the key's evaluation
//! points. Zero padding on the final block is transparent to the hash, since
//! a zero value contributes an empty factor.

use crate::error::{Error, Result};
use crate::field::Fp;
use crate::imaging::{BlockPlan, Image};
use crate::metrics::PredicateParams;
use crate::pph::{
    element_width, eval_with, hash_slice, invert_digest_with, read_elements, write_elements,
    Digest, HashKey, InverseDigest,
};
use rayon::prelude::*;
use serde::Serialize;

const DB_MAGIC: &[u8; 4] = b"L1PH";
const DIGEST_MAGIC: &[u8; 4] = b"L1DG";
const FORMAT_VERSION: u16 = 1;

/// One database entry: an image id and its per-block inverse digests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbEntry {
    pub id: String,
    pub blocks: Vec<InverseDigest>,
}

/// A keyed collection of per-block inverse digests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashDatabase {
    pub key: HashKey,
    pub plan: BlockPlan,
    pub entries: Vec<DbEntry>,
}

/// Outcome of a database scan.
#[derive(Debug, Clone, Serialize)]
pub struct DetectReport {
    pub matched: bool,
    pub matched_id: Option<String>,
    pub per_block_bits: Vec<bool>,
    pub scanned: usize,
    /// All matching ids, populated only when the scan is asked not to stop
    /// at the first match.
    pub all_matches: Vec<String>,
}

/// Per-block predicate parameters: a single block keeps the key's own
/// parameters, a real split uses the even half/half division of t_b.
pub fn block_params(key: &HashKey, plan: &BlockPlan) -> Result<PredicateParams> {
    if plan.b == 1 {
        return Ok(key.params);
    }
    if key.params.delta > plan.t_b / 2 {
        return Err(Error::ParamsInvalid(format!(
            "delta = {} exceeds per-block t_minus = {}",
            key.params.delta,
            plan.t_b / 2
        )));
    }
    PredicateParams::symmetric(plan.t_b, key.params.delta)
}

fn check_image(key: &HashKey, img: &Image) -> Result<()> {
    if img.n() != key.n {
        return Err(Error::DimensionMismatch(format!(
            "image has {} samples but key expects {}",
            img.n(),
            key.n
        )));
    }
    Ok(())
}

fn block_digests(key: &HashKey, plan: &BlockPlan, fp: &Fp, img: &Image) -> Result<Vec<Digest>> {
    let values: Vec<u32> = img.data.iter().map(|&b| b as u32).collect();
    (0..plan.b)
        .map(|i| {
            let (start, end) = plan.data_range(i);
            hash_slice(fp, &key.a[start..end], &values[start..end], plan.t_b)
        })
        .collect()
}

/// Hashes and inverts every image into a database. Images whose dimensions
/// do not match the key are either skipped (and reported) or abort the build.
pub fn setup(
    key: &HashKey,
    plan: &BlockPlan,
    images: &[(String, Image)],
    skip_mismatched: bool,
) -> Result<(HashDatabase, Vec<String>)> {
    if !key.has_a() {
        return Err(Error::MissingAVector);
    }
    block_params(key, plan)?;
    let fp = key.field();
    let mut skipped = Vec::new();
    let mut accepted = Vec::new();
    for (id, img) in images {
        match check_image(key, img) {
            Ok(()) => accepted.push((id, img)),
            Err(e) if skip_mismatched => {
                skipped.push(format!("{id}: {e}"));
            }
            Err(e) => return Err(e),
        }
    }
    let entries: Result<Vec<DbEntry>> = accepted
        .par_iter()
        .map(|(id, img)| {
            let blocks = block_digests(key, plan, &fp, img)?
                .iter()
                .map(|d| invert_digest_with(&fp, d))
                .collect::<Result<Vec<_>>>()?;
            Ok(DbEntry {
                id: (*id).clone(),
                blocks,
            })
        })
        .collect();
    Ok((
        HashDatabase {
            key: key.clone(),
            plan: *plan,
            entries: entries?,
        },
        skipped,
    ))
}

/// Hashes a query image into one digest per block under the shared plan.
pub fn prepare(key: &HashKey, plan: &BlockPlan, img: &Image) -> Result<Vec<Digest>> {
    if !key.has_a() {
        return Err(Error::MissingAVector);
    }
    check_image(key, img)?;
    block_digests(key, plan, &key.field(), img)
}

/// Scans the database in entry order. An entry matches when at least
/// `min_fraction` of its blocks satisfy the hash-domain predicate (1.0, the
/// default, requires every block). Stops at the first match unless `all`
/// asks for the complete list.
pub fn detect(
    db: &HashDatabase,
    query: &[Digest],
    min_fraction: f64,
    all: bool,
) -> Result<DetectReport> {
    if query.len() != db.plan.b {
        return Err(Error::KeyMismatch(format!(
            "query has {} blocks but database plan has {}",
            query.len(),
            db.plan.b
        )));
    }
    let params = block_params(&db.key, &db.plan)?;
    let block_len = db.plan.t_b as usize + 1;
    if let Some(d) = query.iter().find(|d| d.coeffs.len() != block_len) {
        return Err(Error::KeyMismatch(format!(
            "query digest has {} coefficients but t_B + 1 = {block_len}",
            d.coeffs.len()
        )));
    }
    let fp = db.key.field();
    let need = ((min_fraction.clamp(0.0, 1.0)) * db.plan.b as f64).ceil().max(1.0) as usize;

    let eval_entry = |entry: &DbEntry| -> Result<(bool, Vec<bool>)> {
        let mut bits = Vec::with_capacity(db.plan.b);
        for (inv, dig) in entry.blocks.iter().zip(query) {
            bits.push(eval_with(&fp, &params, inv, dig)?.matched);
        }
        Ok((bits.iter().filter(|&&b| b).count() >= need, bits))
    };

    if all {
        let results: Result<Vec<(bool, Vec<bool>)>> =
            db.entries.par_iter().map(eval_entry).collect();
        let results = results?;
        let mut report = DetectReport {
            matched: false,
            matched_id: None,
            per_block_bits: Vec::new(),
            scanned: db.entries.len(),
            all_matches: Vec::new(),
        };
        for (entry, (hit, bits)) in db.entries.iter().zip(results) {
            if hit {
                if !report.matched {
                    report.matched = true;
                    report.matched_id = Some(entry.id.clone());
                    report.per_block_bits = bits;
                }
                report.all_matches.push(entry.id.clone());
            }
        }
        return Ok(report);
    }

    // first match in input order wins, evaluated in parallel
    let found = db
        .entries
        .par_iter()
        .enumerate()
        .find_first(|(_, entry)| matches!(eval_entry(entry), Ok((true, _))));
    match found {
        Some((idx, entry)) => {
            let (_, bits) = eval_entry(entry)?;
            Ok(DetectReport {
                matched: true,
                matched_id: Some(entry.id.clone()),
                per_block_bits: bits,
                scanned: idx + 1,
                all_matches: vec![entry.id.clone()],
            })
        }
        None => Ok(DetectReport {
            matched: false,
            matched_id: None,
            per_block_bits: Vec::new(),
            scanned: db.entries.len(),
            all_matches: Vec::new(),
        }),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::FormatError("unexpected end of file".into()));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn write_header(out: &mut Vec<u8>, key: &HashKey, plan: &BlockPlan, include_a: bool) {
    out.extend_from_slice(DB_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&key.p.to_le_bytes());
    out.extend_from_slice(&(key.n as u64).to_le_bytes());
    out.extend_from_slice(&key.q.to_le_bytes());
    out.extend_from_slice(&key.params.t.to_le_bytes());
    out.extend_from_slice(&key.params.t_plus.to_le_bytes());
    out.extend_from_slice(&key.params.t_minus.to_le_bytes());
    out.extend_from_slice(&(key.params.delta as u32).to_le_bytes());
    out.extend_from_slice(&(plan.b as u64).to_le_bytes());
    out.extend_from_slice(&(plan.n_b as u64).to_le_bytes());
    out.extend_from_slice(&(plan.pad_len as u64).to_le_bytes());
    out.extend_from_slice(&key.seed.to_le_bytes());
    let with_a = include_a && key.has_a();
    out.push(with_a as u8);
    if with_a {
        write_elements(out, &key.a, element_width(key.p));
    }
}

fn read_header(r: &mut Reader) -> Result<(HashKey, BlockPlan)> {
    let magic = r.take(4)?;
    if magic != DB_MAGIC {
        return Err(Error::FormatError("bad magic; not a database file".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::KeyMismatch(format!(
            "file version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    let p = r.u64()?;
    let n = r.u64()? as usize;
    let q = r.u32()?;
    let t = r.u64()?;
    let t_plus = r.u64()?;
    let t_minus = r.u64()?;
    let delta = r.u32()? as u64;
    let b = r.u64()? as usize;
    let n_b = r.u64()? as usize;
    let pad_len = r.u64()? as usize;
    let seed = r.u64()?;
    let a_present = r.u8()?;
    let a = if a_present != 0 {
        let (a, rest) = read_elements(r.bytes, n, element_width(p))?;
        r.bytes = rest;
        a
    } else {
        Vec::new()
    };
    let params = PredicateParams::new(t, t_plus, t_minus, delta)
        .map_err(|e| Error::FormatError(format!("header parameters: {e}")))?;
    let plan = BlockPlan::new(n, b, t).map_err(|e| Error::FormatError(format!("plan: {e}")))?;
    if plan.n_b != n_b || plan.pad_len != pad_len {
        return Err(Error::FormatError(
            "stored block plan disagrees with recomputed plan".into(),
        ));
    }
    let key = HashKey {
        p,
        a,
        n,
        q,
        params,
        seed,
    };
    Ok((key, plan))
}

/// Serializes a database. `include_a` = false gives the split-key form that
/// withholds the evaluation points from the stored file.
pub fn save(db: &HashDatabase, include_a: bool) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(&mut out, &db.key, &db.plan, include_a);
    out.extend_from_slice(&(db.entries.len() as u64).to_le_bytes());
    let width = element_width(db.key.p);
    for entry in &db.entries {
        let id_bytes = entry.id.as_bytes();
        assert!(id_bytes.len() <= u16::MAX as usize, "entry id too long");
        out.extend_from_slice(&(id_bytes.len() as u16).to_le_bytes());
        out.extend_from_slice(id_bytes);
        for block in &entry.blocks {
            write_elements(&mut out, &block.coeffs, width);
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Serializes just the key and plan: a database file with zero entries.
pub fn save_key(key: &HashKey, plan: &BlockPlan) -> Vec<u8> {
    let db = HashDatabase {
        key: key.clone(),
        plan: *plan,
        entries: Vec::new(),
    };
    save(&db, true)
}

/// Loads a database, verifying the trailing CRC32 over everything before it.
pub fn load(bytes: &[u8]) -> Result<HashDatabase> {
    if bytes.len() < 4 {
        return Err(Error::FormatError("file too short".into()));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::FormatError(format!(
            "checksum mismatch: stored {stored:#010x}, computed {computed:#010x}"
        )));
    }
    let mut r = Reader { bytes: body };
    let (key, plan) = read_header(&mut r)?;
    let count = r.u64()? as usize;
    let width = element_width(key.p);
    let block_len = plan.t_b as usize + 1;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let id_len = r.u16()? as usize;
        let id = String::from_utf8(r.take(id_len)?.to_vec())
            .map_err(|_| Error::FormatError("entry id is not UTF-8".into()))?;
        let mut blocks = Vec::with_capacity(plan.b);
        for _ in 0..plan.b {
            let (coeffs, rest) = read_elements(r.bytes, block_len, width)?;
            r.bytes = rest;
            for &c in &coeffs {
                if c >= key.p {
                    return Err(Error::FormatError(format!(
                        "coefficient {c} not below p = {}",
                        key.p
                    )));
                }
            }
            blocks.push(InverseDigest { coeffs });
        }
        entries.push(DbEntry { id, blocks });
    }
    if !r.bytes.is_empty() {
        return Err(Error::FormatError(format!(
            "{} trailing bytes after last entry",
            r.bytes.len()
        )));
    }
    Ok(HashDatabase { key, plan, entries })
}

/// Loads just the key and plan from a key file (or any database file).
pub fn load_key(bytes: &[u8]) -> Result<(HashKey, BlockPlan)> {
    let db = load(bytes)?;
    Ok((db.key, db.plan))
}

/// Serializes per-block query digests: a 16-byte header then the blocks.
pub fn save_digests(key: &HashKey, plan: &BlockPlan, digests: &[Digest]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(DIGEST_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&[0u8; 2]); // reserved
    out.extend_from_slice(&(plan.b as u32).to_le_bytes());
    out.extend_from_slice(&(plan.t_b as u32).to_le_bytes());
    let width = element_width(key.p);
    for d in digests {
        write_elements(&mut out, &d.coeffs, width);
    }
    out
}

/// Reads query digests previously written by [`save_digests`], validating
/// them against the key and plan they will be evaluated under.
pub fn load_digests(bytes: &[u8], key: &HashKey, plan: &BlockPlan) -> Result<Vec<Digest>> {
    let mut r = Reader { bytes };
    let magic = r.take(4)?;
    if magic != DIGEST_MAGIC {
        return Err(Error::FormatError("bad magic; not a digest file".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::KeyMismatch(format!(
            "digest file version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    r.take(2)?;
    let b = r.u32()? as usize;
    let t_b = r.u32()? as u64;
    if b != plan.b || t_b != plan.t_b {
        return Err(Error::KeyMismatch(format!(
            "digest file for B={b}, t_B={t_b}; key expects B={}, t_B={}",
            plan.b, plan.t_b
        )));
    }
    let width = element_width(key.p);
    let block_len = plan.t_b as usize + 1;
    let mut digests = Vec::with_capacity(b);
    for _ in 0..b {
        let (coeffs, rest) = read_elements(r.bytes, block_len, width)?;
        r.bytes = rest;
        digests.push(Digest { coeffs });
    }
    if !r.bytes.is_empty() {
        return Err(Error::FormatError("trailing bytes in digest file".into()));
    }
    Ok(digests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::PredicateParams;
    use crate::pph::samp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn test_images(count: usize, w: u32, h: u32, seed: u64) -> Vec<(String, Image)> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let data = (0..w * h).map(|_| rng.gen()).collect();
                (format!("img{i:03}"), Image::new(w, h, 1, data).unwrap())
            })
            .collect()
    }

    fn small_db() -> (HashDatabase, Vec<(String, Image)>) {
        let images = test_images(3, 4, 4, 1);
        let params = PredicateParams::symmetric(40, 3).unwrap();
        let key = samp(7, 16, 256, params).unwrap();
        let plan = BlockPlan::new(16, 2, 40).unwrap();
        let (db, skipped) = setup(&key, &plan, &images, false).unwrap();
        assert!(skipped.is_empty());
        (db, images)
    }

    #[test]
    fn setup_prepare_detect_roundtrip() {
        let (db, images) = small_db();
        assert_eq!(db.entries.len(), 3);
        for (id, img) in &images {
            let digs = prepare(&db.key, &db.plan, img).unwrap();
            let report = detect(&db, &digs, 1.0, false).unwrap();
            assert!(report.matched);
            assert_eq!(report.matched_id.as_deref(), Some(id.as_str()));
            assert!(report.per_block_bits.iter().all(|&b| b));
        }
    }

    #[test]
    fn empty_database_never_matches() {
        let params = PredicateParams::symmetric(10, 0).unwrap();
        let key = samp(7, 8, 256, params).unwrap();
        let plan = BlockPlan::new(8, 1, 10).unwrap();
        let (db, _) = setup(&key, &plan, &[], false).unwrap();
        let img = Image::new(4, 2, 1, vec![0; 8]).unwrap();
        let digs = prepare(&key, &plan, &img).unwrap();
        let report = detect(&db, &digs, 1.0, false).unwrap();
        assert!(!report.matched);
        assert_eq!(report.scanned, 0);
    }

    #[test]
    fn setup_skip_vs_abort_on_mismatch() {
        let mut images = test_images(2, 4, 4, 2);
        images.push((
            "wrong".into(),
            Image::new(2, 2, 1, vec![0, 1, 2, 3]).unwrap(),
        ));
        let params = PredicateParams::symmetric(40, 3).unwrap();
        let key = samp(7, 16, 256, params).unwrap();
        let plan = BlockPlan::new(16, 1, 40).unwrap();
        assert!(setup(&key, &plan, &images, false).is_err());
        let (db, skipped) = setup(&key, &plan, &images, true).unwrap();
        assert_eq!(db.entries.len(), 2);
        assert_eq!(skipped.len(), 1);
        assert!(skipped[0].starts_with("wrong"));
    }

    #[test]
    fn detect_is_permutation_invariant_for_matched() {
        let (db, images) = small_db();
        let digs = prepare(&db.key, &db.plan, &images[1].1).unwrap();
        let mut reversed = db.clone();
        reversed.entries.reverse();
        let a = detect(&db, &digs, 1.0, true).unwrap();
        let b = detect(&reversed, &digs, 1.0, true).unwrap();
        assert_eq!(a.matched, b.matched);
        let mut ma = a.all_matches.clone();
        let mut mb = b.all_matches.clone();
        ma.sort();
        mb.sort();
        assert_eq!(ma, mb);
    }

    #[test]
    fn save_load_is_bit_exact() {
        let (db, _) = small_db();
        let bytes = save(&db, true);
        let back = load(&bytes).unwrap();
        assert_eq!(back, db);
        assert_eq!(save(&back, true), bytes);
        // empty database round-trips too
        let empty = HashDatabase {
            key: db.key.clone(),
            plan: db.plan,
            entries: Vec::new(),
        };
        assert_eq!(load(&save(&empty, true)).unwrap(), empty);
    }

    #[test]
    fn corrupted_byte_fails_checksum() {
        let (db, _) = small_db();
        let mut bytes = save(&db, true);
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(load(&bytes), Err(Error::FormatError(_))));
    }

    #[test]
    fn split_key_database_detects_but_cannot_hash() {
        let (db, images) = small_db();
        let digs = prepare(&db.key, &db.plan, &images[0].1).unwrap();
        let bytes = save(&db, false);
        let stripped = load(&bytes).unwrap();
        assert!(!stripped.key.has_a());
        let report = detect(&stripped, &digs, 1.0, false).unwrap();
        assert!(report.matched);
        assert!(matches!(
            prepare(&stripped.key, &stripped.plan, &images[0].1),
            Err(Error::MissingAVector)
        ));
    }

    #[test]
    fn key_file_roundtrip() {
        let params = PredicateParams::symmetric(20, 2).unwrap();
        let key = samp(11, 12, 256, params).unwrap();
        let plan = BlockPlan::new(12, 3, 20).unwrap();
        let bytes = save_key(&key, &plan);
        let (k2, p2) = load_key(&bytes).unwrap();
        assert_eq!(k2, key);
        assert_eq!(p2, plan);
    }

    #[test]
    fn digest_file_roundtrip_and_validation() {
        let (db, images) = small_db();
        let digs = prepare(&db.key, &db.plan, &images[0].1).unwrap();
        let bytes = save_digests(&db.key, &db.plan, &digs);
        let back = load_digests(&bytes, &db.key, &db.plan).unwrap();
        assert_eq!(back, digs);
        // a plan mismatch is rejected
        let other_plan = BlockPlan::new(16, 1, 40).unwrap();
        assert!(load_digests(&bytes, &db.key, &other_plan).is_err());
    }
}
