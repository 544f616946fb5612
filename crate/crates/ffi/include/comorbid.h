#ifndef COMORBID_H
#define COMORBID_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CmbStatus {
  CMB_STATUS_OK = 0,
  CMB_STATUS_NULL_POINTER = 1,
  CMB_STATUS_INVALID_UTF8 = 2,
  CMB_STATUS_IO = 3,
  CMB_STATUS_PARSE = 4,
  CMB_STATUS_VALIDATION = 5,
  CMB_STATUS_ARGUMENT = 6,
  CMB_STATUS_DEGENERATE = 7,
  CMB_STATUS_VERSION = 8,
  CMB_STATUS_PANIC = 9,
} CmbStatus;

typedef enum CmbLabel {
  CMB_LABEL_NOT_MENTION = 0,
  CMB_LABEL_TRUE_MENTION = 1,
} CmbLabel;

// Opaque extraction pipeline.
typedef struct CmbExtractor CmbExtractor;

// Opaque trained filter model for one condition.
typedef struct CmbModel CmbModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none. The
// pointer stays valid until the next failing call on the same thread.
const char *cmb_last_error(void);

// Library version as a static string.
const char *cmb_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void cmb_string_free(char *s);

// Builds an extractor from a lexicon TSV and an ICD mapping CSV.
// `triggers_path` may be null to use the bundled trigger list.
//
// # Safety
// Path arguments must be null or nul-terminated strings; `out` must be a
// valid pointer.
enum CmbStatus cmb_extractor_new(const char *lexicon_path,
                                 const char *mapping_path,
                                 const char *triggers_path,
                                 struct CmbExtractor **out);

// # Safety
// `ext` must be null or a handle from [`cmb_extractor_new`] not yet freed.
void cmb_extractor_free(struct CmbExtractor *ext);

// Extracts mentions from one document and writes them to `out_json` as a
// JSON array of mention records (char offsets). Release the string with
// [`cmb_string_free`].
//
// # Safety
// `ext` must be a live extractor handle; string arguments nul-terminated;
// `out_json` a valid pointer.
enum CmbStatus cmb_extract_json(const struct CmbExtractor *ext,
                                const char *doc_id,
                                const char *text,
                                char **out_json);

// Loads a binary filter model file.
//
// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum CmbStatus cmb_model_load(const char *path, struct CmbModel **out);

// # Safety
// `model` must be null or a handle from [`cmb_model_load`] not yet freed.
void cmb_model_free(struct CmbModel *model);

// Number of features in the model's vocabulary.
//
// # Safety
// `model` must be a live model handle.
size_t cmb_model_n_features(const struct CmbModel *model);

// Classifies one feature vector given as present feature ids.
// `out_score` receives the TrueMention vote share.
//
// # Safety
// `model` must be a live model handle; `ids` must point to `n_ids` values
// (or be null when `n_ids` is 0); outputs must be valid pointers.
enum CmbStatus cmb_model_predict(const struct CmbModel *model,
                                 const uint32_t *ids,
                                 size_t n_ids,
                                 enum CmbLabel *out_label,
                                 double *out_score);

// Cohen's kappa of a 2x2 agreement table.
//
// # Safety
// `out` must be a valid pointer.
enum CmbStatus cmb_cohens_kappa(uint64_t both_true,
                                uint64_t a_true_b_false,
                                uint64_t a_false_b_true,
                                uint64_t both_false,
                                double *out);

// Harmonic mean of precision and recall; 0 when both are 0.
double cmb_f1_score(double precision, double recall);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMORBID_H */
