/* C interface to the l1pph property-preserving hashing toolkit. */

#ifndef L1PPH_H
#define L1PPH_H

/* Generated by cbindgen from l1pph-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes for every fallible call.
 */
typedef enum L1pphStatus {
  L1PPH_STATUS_OK = 0,
  L1PPH_STATUS_NULL_ARGUMENT = 1,
  L1PPH_STATUS_INVALID_PARAMS = 2,
  L1PPH_STATUS_DIMENSION_MISMATCH = 3,
  L1PPH_STATUS_PARSE_ERROR = 4,
  L1PPH_STATUS_FORMAT_ERROR = 5,
  L1PPH_STATUS_KEY_MISMATCH = 6,
  L1PPH_STATUS_NOT_INVERTIBLE = 7,
  L1PPH_STATUS_MISSING_A_VECTOR = 8,
  L1PPH_STATUS_INTERNAL_ERROR = 9,
} L1pphStatus;

/*
 An opaque database of inverse digests.
 */
typedef struct L1pphDatabase L1pphDatabase;

/*
 Opaque per-block query digests for one image.
 */
typedef struct L1pphDigests L1pphDigests;

/*
 An opaque hash key plus block plan.
 */
typedef struct L1pphKey L1pphKey;

/*
 An owned byte buffer returned by serialization calls.
 Free with [`l1pph_bytes_free`].
 */
typedef struct L1pphBytes {
  uint8_t *data;
  uintptr_t len;
} L1pphBytes;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread. Valid until the next
 failing call on the same thread; do not free.
 */
const char *l1pph_last_error(void);

/*
 # Safety
 `bytes` must come from this library and be freed exactly once.
 */
void l1pph_bytes_free(struct L1pphBytes bytes);

/*
 Samples a key for flattened length n over Z_q with threshold t split as
 t_plus/t_minus, slack delta, and `blocks` contiguous blocks. Writes an
 owned handle to `out`.

 # Safety
 `out` must be a valid pointer.
 */
enum L1pphStatus l1pph_key_new(uint64_t seed,
                               uintptr_t n,
                               uint32_t q,
                               uint64_t t,
                               uint64_t t_plus,
                               uint64_t t_minus,
                               uint64_t delta,
                               uintptr_t blocks,
                               struct L1pphKey **out);

/*
 # Safety
 `key` must come from this library and be freed exactly once.
 */
void l1pph_key_free(struct L1pphKey *key);

/*
 Serializes a key (with its evaluation points) to the key-file format.

 # Safety
 `key` and `out` must be valid pointers.
 */
enum L1pphStatus l1pph_key_to_bytes(const struct L1pphKey *key, struct L1pphBytes *out);

/*
 Loads a key handle from key-file bytes.

 # Safety
 `bytes` must point to `len` readable bytes; `out` must be valid.
 */
enum L1pphStatus l1pph_key_from_bytes(const uint8_t *bytes, uintptr_t len, struct L1pphKey **out);

/*
 Hashes a binary PGM/PPM image into per-block query digests.

 # Safety
 `key`, `image_bytes` (readable for `len`), and `out` must be valid.
 */
enum L1pphStatus l1pph_prepare_image(const struct L1pphKey *key,
                                     const uint8_t *image_bytes,
                                     uintptr_t len,
                                     struct L1pphDigests **out);

/*
 # Safety
 `digests` must come from this library and be freed exactly once.
 */
void l1pph_digests_free(struct L1pphDigests *digests);

/*
 Serializes query digests to the digest-file format.

 # Safety
 All pointers must be valid.
 */
enum L1pphStatus l1pph_digests_to_bytes(const struct L1pphKey *key,
                                        const struct L1pphDigests *digests,
                                        struct L1pphBytes *out);

/*
 Loads query digests from digest-file bytes, validated against the key.

 # Safety
 `bytes` must point to `len` readable bytes; other pointers must be valid.
 */
enum L1pphStatus l1pph_digests_from_bytes(const struct L1pphKey *key,
                                          const uint8_t *bytes,
                                          uintptr_t len,
                                          struct L1pphDigests **out);

/*
 Creates an empty database under the key.

 # Safety
 `key` and `out` must be valid pointers.
 */
enum L1pphStatus l1pph_db_new(const struct L1pphKey *key, struct L1pphDatabase **out);

/*
 # Safety
 `db` must come from this library and be freed exactly once.
 */
void l1pph_db_free(struct L1pphDatabase *db);

/*
 Number of entries in the database.

 # Safety
 `db` must be a valid pointer.
 */
uintptr_t l1pph_db_len(const struct L1pphDatabase *db);

/*
 Hashes, inverts, and stores a binary PGM/PPM image under `id`.

 # Safety
 `db` must be valid and not shared across threads during the call; `id`
 must be a NUL-terminated string; `image_bytes` readable for `len`.
 */
enum L1pphStatus l1pph_db_add_image(struct L1pphDatabase *db,
                                    const char *id,
                                    const uint8_t *image_bytes,
                                    uintptr_t len);

/*
 Scans the database. Writes 1/0 to `matched` and the index of the first
 matching entry (or -1) to `match_index`.

 # Safety
 All pointers must be valid.
 */
enum L1pphStatus l1pph_db_detect(const struct L1pphDatabase *db,
                                 const struct L1pphDigests *query,
                                 int32_t *matched,
                                 int64_t *match_index);

/*
 Serializes a database. `include_a` = 0 withholds the evaluation points
 (split-key form).

 # Safety
 `db` and `out` must be valid pointers.
 */
enum L1pphStatus l1pph_db_to_bytes(const struct L1pphDatabase *db,
                                   int32_t include_a,
                                   struct L1pphBytes *out);

/*
 Loads a database from bytes, verifying its checksum.

 # Safety
 `bytes` must point to `len` readable bytes; `out` must be valid.
 */
enum L1pphStatus l1pph_db_from_bytes(const uint8_t *bytes,
                                     uintptr_t len,
                                     struct L1pphDatabase **out);

/*
 Entry id at `index`, or NULL when out of range. The returned pointer is
 valid until the next `l1pph_db_entry_id` call on the same thread; copy it
 if it needs to outlive that.

 # Safety
 `db` must be a valid pointer.
 */
const char *l1pph_db_entry_id(const struct L1pphDatabase *db, uintptr_t index);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* L1PPH_H */
