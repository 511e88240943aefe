#ifndef AFP_H
#define AFP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AfpStatus {
  AFP_STATUS_OK = 0,
  AFP_STATUS_NULL_POINTER = 1,
  AFP_STATUS_INVALID_UTF8 = 2,
  AFP_STATUS_IO = 3,
  AFP_STATUS_DECODE = 4,
  AFP_STATUS_DUPLICATE_NAME = 5,
  AFP_STATUS_NOT_A_STORE = 6,
  AFP_STATUS_CORRUPT_INDEX = 7,
  AFP_STATUS_ALREADY_EXISTS = 8,
  AFP_STATUS_INVALID_INPUT = 9,
  AFP_STATUS_RATE_MISMATCH = 10,
  AFP_STATUS_CLIP_TOO_SHORT = 11,
  AFP_STATUS_BUFFER_TOO_SMALL = 12,
  AFP_STATUS_PANIC = 13,
} AfpStatus;

/**
 * Opaque store handle.
 */
typedef struct AfpStore AfpStore;

/**
 * Outcome of a recognition call. `song_id` is 0 when the store had no
 * candidate at all.
 */
typedef struct AfpMatch {
  bool matched;
  uint32_t song_id;
  uint32_t votes;
  uint64_t total_query_fingerprints;
  int64_t delta_frames;
  double offset_seconds;
  double confidence;
} AfpMatch;

typedef struct AfpStats {
  uint64_t song_count;
  uint64_t entry_count;
  uint64_t index_bytes;
  uint64_t manifest_bytes;
} AfpStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an empty store directory. Fails if one already exists there.
 */
enum AfpStatus afp_store_create(const char *path, struct AfpStore **out);

enum AfpStatus afp_store_open(const char *path, struct AfpStore **out);

/**
 * Releases a handle. Null is ignored.
 */
void afp_store_free(struct AfpStore *store);

/**
 * Fingerprints a 16-bit PCM WAV file and registers it under `name`.
 * `out_song_id` may be null.
 */
enum AfpStatus afp_store_add_wav(struct AfpStore *store,
                                 const char *name,
                                 const char *wav_path,
                                 uint32_t *out_song_id);

/**
 * Mono samples in [-1, 1] at `sample_rate_hz`.
 */
enum AfpStatus afp_store_add_samples(struct AfpStore *store,
                                     const char *name,
                                     const double *samples,
                                     size_t len,
                                     uint32_t sample_rate_hz,
                                     uint32_t *out_song_id);

/**
 * `min_votes` of 0 selects the library default.
 */
enum AfpStatus afp_recognize_samples(const struct AfpStore *store,
                                     const double *samples,
                                     size_t len,
                                     uint32_t sample_rate_hz,
                                     uint32_t min_votes,
                                     struct AfpMatch *out);

/**
 * Recognizes a WAV file held in memory.
 */
enum AfpStatus afp_recognize_wav(const struct AfpStore *store,
                                 const uint8_t *wav_bytes,
                                 size_t len,
                                 uint32_t min_votes,
                                 struct AfpMatch *out);

enum AfpStatus afp_store_stats(const struct AfpStore *store, struct AfpStats *out);

/**
 * Copies the NUL-terminated name of `song_id` into `buf`. When `buf_len`
 * is too small the call fails with `BufferTooSmall` and `out_needed`
 * (if non-null) receives the required size including the terminator.
 */
enum AfpStatus afp_store_song_name(const struct AfpStore *store,
                                   uint32_t song_id,
                                   char *buf,
                                   size_t buf_len,
                                   size_t *out_needed);

/**
 * Writes the 8-byte digest of a peak pair.
 */
enum AfpStatus afp_hash_pair(uint32_t f1, uint32_t f2, uint32_t delta_t, uint8_t *out);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library from the same thread.
 */
const char *afp_last_error_message(void);

const char *afp_status_str(enum AfpStatus status);

const char *afp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AFP_H */
