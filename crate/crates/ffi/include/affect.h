/* C ABI for the affect EEG classification pipeline.
 *
 * Conventions:
 *   - fallible calls return AFFECT_OK (0) or a negative status;
 *   - affect_last_error_message() describes the most recent failure on
 *     the calling thread (valid until the next failing call there);
 *   - out-parameters are written only on success;
 *   - strings returned through char** are freed with affect_string_free;
 *   - AffectDataset handles are freed with affect_dataset_free.
 *
 * This header is kept in sync with the Rust sources by hand; it can be
 * regenerated with cbindgen (see cbindgen.toml).
 */

#ifndef AFFECT_H
#define AFFECT_H

#include <stdint.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define AFFECT_OK 0
#define AFFECT_ERR_IO (-1)
#define AFFECT_ERR_VALIDATION (-2)
#define AFFECT_ERR_MISSING_INPUT (-3)
#define AFFECT_ERR_NUMERICAL (-4)
#define AFFECT_ERR_NULL_ARGUMENT (-5)
#define AFFECT_ERR_INVALID_UTF8 (-6)
#define AFFECT_ERR_PANIC (-7)

/* Opaque collection of recordings and their ratings. */
typedef struct AffectDataset AffectDataset;

/* Library version as a static string; never freed. */
const char *affect_version(void);

/* Message for the most recent failure on this thread. */
const char *affect_last_error_message(void);

/* Binarize a self-assessment rating in [1, 9]: strictly above 4.5 is
 * high. Writes 1 for high, 0 for low. */
int32_t affect_binarize(double rating, int32_t *out_is_high);

/* Generate a synthetic dataset. config_toml holds the generator config
 * (e.g. "participants = 8\ntrials_per_participant = 6"); pass an empty
 * string for the defaults. */
int32_t affect_dataset_generate(const char *config_toml,
                                uint64_t seed,
                                AffectDataset **out);

/* Load a dataset directory through its manifest.json. */
int32_t affect_dataset_load(const char *manifest_path, AffectDataset **out);

/* Write a dataset to a directory in the manifest layout. */
int32_t affect_dataset_save(const AffectDataset *dataset, const char *dir);

/* Number of (recording, rating) pairs in the dataset. */
int32_t affect_dataset_len(const AffectDataset *dataset, size_t *out_trials);

/* Release a dataset handle. NULL is a no-op. */
void affect_dataset_free(AffectDataset *dataset);

/* Run the cross-validated experiment grid described by a full run
 * config (TOML; its [dataset] section is ignored in favor of the
 * handle). On success *out_report_json holds the JSON report. */
int32_t affect_run_experiment(const AffectDataset *dataset,
                              const char *run_config_toml,
                              char **out_report_json);

/* Check that the dataset folds into k equal participant groups. */
int32_t affect_dataset_check_folds(const AffectDataset *dataset,
                                   size_t k,
                                   uint64_t seed);

/* Release a string returned by this library. NULL is a no-op. */
void affect_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* AFFECT_H */
