#ifndef PSYFEAT_H
#define PSYFEAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes shared by every function in this library.
typedef enum PsyStatus {
  PSY_STATUS_OK = 0,
  PSY_STATUS_NULL_POINTER = 1,
  PSY_STATUS_INVALID_UTF8 = 2,
  PSY_STATUS_IO = 3,
  PSY_STATUS_PARSE = 4,
  PSY_STATUS_INVALID_ARGUMENT = 5,
  PSY_STATUS_MODEL_FORMAT = 6,
  PSY_STATUS_EMPTY_DOCUMENT = 7,
  PSY_STATUS_ZERO_VARIANCE = 8,
  PSY_STATUS_LENGTH_MISMATCH = 9,
  PSY_STATUS_BUFFER_TOO_SMALL = 10,
  PSY_STATUS_PANIC = 11,
  PSY_STATUS_INTERNAL = 12,
} PsyStatus;

// Loaded lexicon.
typedef struct PsyLexicon PsyLexicon;

// Loaded topic model.
typedef struct PsyTopicModel PsyTopicModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *psy_last_error(void);

// Library version as a static NUL-terminated string.
const char *psy_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void psy_string_free(char *s);

// Loads a `.dic` lexicon file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum PsyStatus psy_lexicon_load(const char *path, struct PsyLexicon **out);

// Parses lexicon text held in memory.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum PsyStatus psy_lexicon_parse(const char *text, struct PsyLexicon **out);

// # Safety
// `lexicon` must come from a `psy_lexicon_*` constructor and not have been
// freed. NULL is ignored.
void psy_lexicon_free(struct PsyLexicon *lexicon);

// Number of categories, or 0 for NULL.
//
// # Safety
// `lexicon` must be a live handle or NULL.
size_t psy_lexicon_num_categories(const struct PsyLexicon *lexicon);

// Name of category `index`, borrowed from the handle; NULL when out of range.
//
// # Safety
// `lexicon` must be a live handle or NULL.
const char *psy_lexicon_category_name(const struct PsyLexicon *lexicon, size_t index);

// Category frequencies (count / token count) of a token list, written in
// category order to `out`, which must hold `psy_lexicon_num_categories`
// values.
//
// # Safety
// `tokens` must point to `n_tokens` NUL-terminated strings; `out` must
// point to `out_len` writable doubles.
enum PsyStatus psy_lexicon_features(const struct PsyLexicon *lexicon,
                                    const char *const *tokens,
                                    size_t n_tokens,
                                    double *out,
                                    size_t out_len);

// Loads a model saved by `psyfeat topics train`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum PsyStatus psy_model_load(const char *path, struct PsyTopicModel **out);

// # Safety
// `model` must come from [`psy_model_load`] and not have been freed. NULL
// is ignored.
void psy_model_free(struct PsyTopicModel *model);

// Number of topics, or 0 for NULL.
//
// # Safety
// `model` must be a live handle or NULL.
size_t psy_model_num_topics(const struct PsyTopicModel *model);

// Infers topic proportions of a token list under the frozen model and
// writes them to `theta_out`, which must hold `psy_model_num_topics`
// values. Pass 0 for `iterations` and `burn_in` to use the defaults.
//
// # Safety
// `tokens` must point to `n_tokens` NUL-terminated strings; `theta_out`
// must point to `theta_len` writable doubles.
enum PsyStatus psy_model_infer(const struct PsyTopicModel *model,
                               const char *const *tokens,
                               size_t n_tokens,
                               size_t iterations,
                               size_t burn_in,
                               uint64_t seed,
                               double *theta_out,
                               size_t theta_len);

// Strips retweet chains, reply prefixes, URLs, hashtags, mentions and
// emoticon codes from a message. The result is stored in `*out` and must
// be released with [`psy_string_free`].
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum PsyStatus psy_clean_text(const char *text, bool keep_hashtag_text, char **out);

// Pearson correlation of two length-`n` series with its two-tailed p-value.
//
// # Safety
// `x` and `y` must point to `n` readable doubles; `r` and `p_value` must be
// writable.
enum PsyStatus psy_pearson(const double *x, const double *y, size_t n, double *r, double *p_value);

// Root mean squared error of `predicted` against `actual`.
//
// # Safety
// Both arrays must hold `n` readable doubles; `out` must be writable.
enum PsyStatus psy_rmse(const double *predicted, const double *actual, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSYFEAT_H */
