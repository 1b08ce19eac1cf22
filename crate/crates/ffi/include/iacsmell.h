/* Generated by cbindgen from crates/ffi/src/lib.rs. */

#ifndef IACSMELL_H
#define IACSMELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum IacsStatus {
  IACS_STATUS_OK = 0,
  IACS_STATUS_NULL_POINTER = 1,
  IACS_STATUS_INVALID_UTF8 = 2,
  IACS_STATUS_CONFIG_ERROR = 3,
  IACS_STATUS_PARSE_ERROR = 4,
  IACS_STATUS_IO_ERROR = 5,
  IACS_STATUS_MODEL_ERROR = 6,
  IACS_STATUS_SCORER_ERROR = 7,
  IACS_STATUS_OUT_OF_RANGE = 8,
  IACS_STATUS_PANIC = 9,
} IacsStatus;

/**
 * Analyzer settings: rule keywords, optional builtin model, threshold.
 */
typedef struct IacsAnalyzer IacsAnalyzer;

/**
 * Ranked kept findings followed by ranked dropped findings.
 */
typedef struct IacsReport IacsReport;

/**
 * One finding. String pointers stay valid until the report is freed.
 */
typedef struct IacsFinding {
  const char *file_path;
  size_t line;
  /**
   * Index into the smell list, see `iacs_smell_name`.
   */
  uint32_t smell;
  double confidence;
  double fp_probability;
  /**
   * 1 when the finding survived pruning.
   */
  uint8_t kept;
  const char *rationale;
} IacsFinding;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an analyzer with default keyword lists and no model.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum IacsStatus iacs_analyzer_new(struct IacsAnalyzer **out);

/**
 * # Safety
 * `analyzer` must come from `iacs_analyzer_new` or be null.
 */
void iacs_analyzer_free(struct IacsAnalyzer *analyzer);

/**
 * Replaces the keyword lists with those in the config file at `path`.
 *
 * # Safety
 * `analyzer` must be live; `path` a NUL-terminated string.
 */
enum IacsStatus iacs_analyzer_load_config(struct IacsAnalyzer *analyzer, const char *path);

/**
 * Loads a builtin model; targeted findings are scored with it from now on.
 *
 * # Safety
 * `analyzer` must be live; `path` a NUL-terminated string.
 */
enum IacsStatus iacs_analyzer_load_model(struct IacsAnalyzer *analyzer, const char *path);

/**
 * # Safety
 * `analyzer` must be live.
 */
enum IacsStatus iacs_analyzer_set_threshold(struct IacsAnalyzer *analyzer, double threshold);

/**
 * Analyzes one file held in memory. The technology is taken from the
 * extension of `path`, or sniffed from `content`.
 *
 * # Safety
 * `analyzer` must be live, strings NUL-terminated, `out` writable.
 */
enum IacsStatus iacs_analyze_source(const struct IacsAnalyzer *analyzer,
                                    const char *path,
                                    const char *content,
                                    struct IacsReport **out);

/**
 * Analyzes every supported file below `root`. Files that fail to parse are
 * skipped.
 *
 * # Safety
 * `analyzer` must be live, `root` NUL-terminated, `out` writable.
 */
enum IacsStatus iacs_analyze_dir(const struct IacsAnalyzer *analyzer,
                                 const char *root,
                                 struct IacsReport **out);

/**
 * Total number of findings, kept and dropped. Zero for a null report.
 *
 * # Safety
 * `report` must be live or null.
 */
size_t iacs_report_len(const struct IacsReport *report);

/**
 * Number of kept findings; they occupy the first positions.
 *
 * # Safety
 * `report` must be live or null.
 */
size_t iacs_report_kept_len(const struct IacsReport *report);

/**
 * # Safety
 * `report` must be live and `out` writable.
 */
enum IacsStatus iacs_report_get(const struct IacsReport *report,
                                size_t index,
                                struct IacsFinding *out);

/**
 * # Safety
 * `report` must come from an analyze call or be null.
 */
void iacs_report_free(struct IacsReport *report);

/**
 * Message for the last failed call on this thread, empty after a success.
 * Valid until the next call on the same thread.
 */
const char *iacs_last_error_message(void);

/**
 * Static name of smell `index`, or null when out of range.
 */
const char *iacs_smell_name(uint32_t index);

/**
 * Number of smell types.
 */
uint32_t iacs_smell_count(void);

const char *iacs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IACSMELL_H */
