//! C ABI for the property-preserving hashing toolkit.
//!
//! Handles are opaque pointers created and destroyed by this library; every
//! fallible call returns an [`L1pphStatus`] and writes results through out
//! pointers. A thread-local message describing the most recent failure is
//! available via [`l1pph_last_error`].
//!
//! The generated header lands in `include/l1pph.h`.

use l1pph::error::Error;
use l1pph::imaging::{load_image, BlockPlan, Image};
use l1pph::metrics::PredicateParams;
use l1pph::pph::{samp, Digest, HashKey};
use l1pph::store;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;
use std::slice;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Result codes for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1pphStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidParams = 2,
    DimensionMismatch = 3,
    ParseError = 4,
    FormatError = 5,
    KeyMismatch = 6,
    NotInvertible = 7,
    MissingAVector = 8,
    InternalError = 9,
}

fn status_of(err: &Error) -> L1pphStatus {
    match err {
        Error::ParamsInvalid(_) | Error::BadBlockCount(_) => L1pphStatus::InvalidParams,
        Error::DimensionMismatch(_) => L1pphStatus::DimensionMismatch,
        Error::ParseError(_) => L1pphStatus::ParseError,
        Error::FormatError(_) => L1pphStatus::FormatError,
        Error::KeyMismatch(_) => L1pphStatus::KeyMismatch,
        Error::NotInvertible | Error::ZeroInverse => L1pphStatus::NotInvertible,
        Error::MissingAVector => L1pphStatus::MissingAVector,
        _ => L1pphStatus::InternalError,
    }
}

fn fail(err: Error) -> L1pphStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Message for the most recent failure on this thread. Valid until the next
/// failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn l1pph_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// An opaque hash key plus block plan.
pub struct L1pphKey {
    key: HashKey,
    plan: BlockPlan,
}

/// An opaque database of inverse digests.
pub struct L1pphDatabase {
    db: store::HashDatabase,
}

/// Opaque per-block query digests for one image.
pub struct L1pphDigests {
    digests: Vec<Digest>,
}

/// An owned byte buffer returned by serialization calls.
/// Free with [`l1pph_bytes_free`].
#[repr(C)]
pub struct L1pphBytes {
    pub data: *mut u8,
    pub len: usize,
}

fn bytes_out(v: Vec<u8>) -> L1pphBytes {
    let mut boxed = v.into_boxed_slice();
    let out = L1pphBytes {
        data: boxed.as_mut_ptr(),
        len: boxed.len(),
    };
    std::mem::forget(boxed);
    out
}

/// # Safety
/// `bytes` must come from this library and be freed exactly once.
#[no_mangle]
pub unsafe extern "C" fn l1pph_bytes_free(bytes: L1pphBytes) {
    if !bytes.data.is_null() {
        drop(Box::from_raw(slice::from_raw_parts_mut(bytes.data, bytes.len)));
    }
}

/// Samples a key for flattened length n over Z_q with threshold t split as
/// t_plus/t_minus, slack delta, and `blocks` contiguous blocks. Writes an
/// owned handle to `out`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l1pph_key_new(
    seed: u64,
    n: usize,
    q: u32,
    t: u64,
    t_plus: u64,
    t_minus: u64,
    delta: u64,
    blocks: usize,
    out: *mut *mut L1pphKey,
) -> L1pphStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return L1pphStatus::NullArgument;
    }
    let params = match PredicateParams::new(t, t_plus, t_minus, delta) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let key = match samp(seed, n, q, params) {
        Ok(k) => k,
        Err(e) => return fail(e),
    };
    let plan = match BlockPlan::new(n, blocks, t) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    if let Err(e) = store::block_params(&key, &plan) {
        return fail(e);
    }
    *out = Box::into_raw(Box::new(L1pphKey { key, plan }));
    L1pphStatus::Ok
}

/// # Safety
/// `key` must come from this library and be freed exactly once.
#[no_mangle]
pub unsafe extern "C" fn l1pph_key_free(key: *mut L1pphKey) {
    if !key.is_null() {
        drop(Box::from_raw(key));
    }
}

/// Serializes a key (with its evaluation points) to the key-file format.
///
/// # Safety
/// `key` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn l1pph_key_to_bytes(
    key: *const L1pphKey,
    out: *mut L1pphBytes,
) -> L1pphStatus {
    if key.is_null() || out.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    let k = &*key;
    *out = bytes_out(store::save_key(&k.key, &k.plan));
    L1pphStatus::Ok
}

/// Loads a key handle from key-file bytes.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn l1pph_key_from_bytes(
    bytes: *const u8,
    len: usize,
    out: *mut *mut L1pphKey,
) -> L1pphStatus {
    if bytes.is_null() || out.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    let data = slice::from_raw_parts(bytes, len);
    match store::load_key(data) {
        Ok((key, plan)) => {
            *out = Box::into_raw(Box::new(L1pphKey { key, plan }));
            L1pphStatus::Ok
        }
        Err(e) => fail(e),
    }
}

unsafe fn image_from_parts(bytes: *const u8, len: usize) -> Result<Image, Error> {
    let data = slice::from_raw_parts(bytes, len);
    load_image(data)
}

/// Hashes a binary PGM/PPM image into per-block query digests.
///
/// # Safety
/// `key`, `image_bytes` (readable for `len`), and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn l1pph_prepare_image(
    key: *const L1pphKey,
    image_bytes: *const u8,
    len: usize,
    out: *mut *mut L1pphDigests,
) -> L1pphStatus {
    if key.is_null() || image_bytes.is_null() || out.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    let k = &*key;
    let img = match image_from_parts(image_bytes, len) {
        Ok(i) => i,
        Err(e) => return fail(e),
    };
    match store::prepare(&k.key, &k.plan, &img) {
        Ok(digests) => {
            *out = Box::into_raw(Box::new(L1pphDigests { digests }));
            L1pphStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `digests` must come from this library and be freed exactly once.
#[no_mangle]
pub unsafe extern "C" fn l1pph_digests_free(digests: *mut L1pphDigests) {
    if !digests.is_null() {
        drop(Box::from_raw(digests));
    }
}

/// Serializes query digests to the digest-file format.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn l1pph_digests_to_bytes(
    key: *const L1pphKey,
    digests: *const L1pphDigests,
    out: *mut L1pphBytes,
) -> L1pphStatus {
    if key.is_null() || digests.is_null() || out.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    let k = &*key;
    let d = &*digests;
    *out = bytes_out(store::save_digests(&k.key, &k.plan, &d.digests));
    L1pphStatus::Ok
}

/// Loads query digests from digest-file bytes, validated against the key.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn l1pph_digests_from_bytes(
    key: *const L1pphKey,
    bytes: *const u8,
    len: usize,
    out: *mut *mut L1pphDigests,
) -> L1pphStatus {
    if key.is_null() || bytes.is_null() || out.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    let k = &*key;
    let data = slice::from_raw_parts(bytes, len);
    match store::load_digests(data, &k.key, &k.plan) {
        Ok(digests) => {
            *out = Box::into_raw(Box::new(L1pphDigests { digests }));
            L1pphStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Creates an empty database under the key.
///
/// # Safety
/// `key` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn l1pph_db_new(
    key: *const L1pphKey,
    out: *mut *mut L1pphDatabase,
) -> L1pphStatus {
    if key.is_null() || out.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    let k = &*key;
    let db = store::HashDatabase {
        key: k.key.clone(),
        plan: k.plan,
        entries: Vec::new(),
    };
    *out = Box::into_raw(Box::new(L1pphDatabase { db }));
    L1pphStatus::Ok
}

/// # Safety
/// `db` must come from this library and be freed exactly once.
#[no_mangle]
pub unsafe extern "C" fn l1pph_db_free(db: *mut L1pphDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Number of entries in the database.
///
/// # Safety
/// `db` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l1pph_db_len(db: *const L1pphDatabase) -> usize {
    if db.is_null() {
        return 0;
    }
    (*db).db.entries.len()
}

/// Hashes, inverts, and stores a binary PGM/PPM image under `id`.
///
/// # Safety
/// `db` must be valid and not shared across threads during the call; `id`
/// must be a NUL-terminated string; `image_bytes` readable for `len`.
#[no_mangle]
pub unsafe extern "C" fn l1pph_db_add_image(
    db: *mut L1pphDatabase,
    id: *const c_char,
    image_bytes: *const u8,
    len: usize,
) -> L1pphStatus {
    if db.is_null() || id.is_null() || image_bytes.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    let handle = &mut *db;
    let id = match CStr::from_ptr(id).to_str() {
        Ok(s) => s.to_string(),
        Err(_) => {
            set_error("id is not valid UTF-8");
            return L1pphStatus::ParseError;
        }
    };
    let img = match image_from_parts(image_bytes, len) {
        Ok(i) => i,
        Err(e) => return fail(e),
    };
    let images = vec![(id, img)];
    match store::setup(&handle.db.key, &handle.db.plan, &images, false) {
        Ok((mut built, _)) => {
            handle.db.entries.append(&mut built.entries);
            L1pphStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Scans the database. Writes 1/0 to `matched` and the index of the first
/// matching entry (or -1) to `match_index`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn l1pph_db_detect(
    db: *const L1pphDatabase,
    query: *const L1pphDigests,
    matched: *mut i32,
    match_index: *mut i64,
) -> L1pphStatus {
    if db.is_null() || query.is_null() || matched.is_null() || match_index.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    let handle = &*db;
    let q = &*query;
    match store::detect(&handle.db, &q.digests, 1.0, false) {
        Ok(report) => {
            *matched = report.matched as i32;
            *match_index = match &report.matched_id {
                Some(id) => handle
                    .db
                    .entries
                    .iter()
                    .position(|e| &e.id == id)
                    .map(|i| i as i64)
                    .unwrap_or(-1),
                None => -1,
            };
            L1pphStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Serializes a database. `include_a` = 0 withholds the evaluation points
/// (split-key form).
///
/// # Safety
/// `db` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn l1pph_db_to_bytes(
    db: *const L1pphDatabase,
    include_a: i32,
    out: *mut L1pphBytes,
) -> L1pphStatus {
    if db.is_null() || out.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    *out = bytes_out(store::save(&(*db).db, include_a != 0));
    L1pphStatus::Ok
}

/// Loads a database from bytes, verifying its checksum.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn l1pph_db_from_bytes(
    bytes: *const u8,
    len: usize,
    out: *mut *mut L1pphDatabase,
) -> L1pphStatus {
    if bytes.is_null() || out.is_null() {
        set_error("null argument");
        return L1pphStatus::NullArgument;
    }
    let data = slice::from_raw_parts(bytes, len);
    match store::load(data) {
        Ok(db) => {
            *out = Box::into_raw(Box::new(L1pphDatabase { db }));
            L1pphStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Entry id at `index`, or NULL when out of range. The returned pointer is
/// valid until the next `l1pph_db_entry_id` call on the same thread; copy it
/// if it needs to outlive that.
///
/// # Safety
/// `db` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l1pph_db_entry_id(
    db: *const L1pphDatabase,
    index: usize,
) -> *const c_char {
    thread_local! {
        static ID_BUF: RefCell<CString> = RefCell::new(CString::new("").unwrap());
    }
    if db.is_null() {
        return ptr::null();
    }
    let handle = &*db;
    match handle.db.entries.get(index) {
        Some(entry) => ID_BUF.with(|b| {
            *b.borrow_mut() = CString::new(entry.id.clone()).unwrap_or_default();
            b.borrow().as_ptr()
        }),
        None => ptr::null(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping_covers_variants() {
        assert_eq!(
            status_of(&Error::ParamsInvalid("x".into())),
            L1pphStatus::InvalidParams
        );
        assert_eq!(status_of(&Error::MissingAVector), L1pphStatus::MissingAVector);
        assert_eq!(status_of(&Error::StopNeverReached), L1pphStatus::InternalError);
    }
}
