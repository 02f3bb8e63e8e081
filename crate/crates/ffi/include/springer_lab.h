#ifndef SPRINGER_LAB_H
#define SPRINGER_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  // Malformed configuration or invalid datum.
  SL_STATUS_CONFIG = 2,
  // Precision ceiling or enumeration budget reached.
  SL_STATUS_PRECISION = 3,
  // A checked identity or invariant failed.
  SL_STATUS_IDENTITY = 4,
  SL_STATUS_NULL_ARGUMENT = 5,
  SL_STATUS_INVALID_UTF8 = 6,
  SL_STATUS_BUFFER_TOO_SMALL = 7,
  SL_STATUS_PANIC = 8,
} SlStatus;

typedef enum SlCommand {
  SL_COMMAND_INVARIANTS = 0,
  SL_COMMAND_ENUMERATE = 1,
  SL_COMMAND_ORBITAL = 2,
  SL_COMMAND_STRATA = 3,
  SL_COMMAND_VERIFY_FL = 4,
} SlCommand;

// A parsed configuration together with its datum.
typedef struct SlDatum SlDatum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse a TOML configuration and build its datum.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum SlStatus sl_datum_from_toml(const char *toml, struct SlDatum **out);

// # Safety
// `d` must come from [`sl_datum_from_toml`] and not be used afterwards.
void sl_datum_free(struct SlDatum *d);

// # Safety
// `d` must be a live handle and `out` a valid pointer.
enum SlStatus sl_datum_branch_count(const struct SlDatum *d, size_t *out);

// delta computed from the order itself.
//
// # Safety
// `d` must be a live handle and `out` a valid pointer.
enum SlStatus sl_datum_delta(const struct SlDatum *d, int64_t *out);

// Conductor exponents, one per branch. `written` receives the branch count
// even when `len` is too small.
//
// # Safety
// `buf` must hold `len` values; `d` and `written` must be valid.
enum SlStatus sl_datum_conductor(const struct SlDatum *d,
                                 int64_t *buf,
                                 size_t len,
                                 size_t *written);

// Run a command and return its JSON report. A report whose checks failed
// is still returned, together with [`SlStatus::Identity`].
//
// # Safety
// `d` must be a live handle and `out` a valid pointer; free the result
// with [`sl_string_free`].
enum SlStatus sl_report_json(const struct SlDatum *d, enum SlCommand command, char **out);

// # Safety
// `s` must come from this library and not be used afterwards.
void sl_string_free(char *s);

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library from the same thread.
const char *sl_last_error(void);

// Report schema version.
uint32_t sl_schema_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPRINGER_LAB_H */
