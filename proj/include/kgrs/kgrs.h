#ifndef KGRS_H
#define KGRS_H

#include <stddef.h>
#include <stdint.h>

#if defined(KGRS_BUILDING_LIBRARY)
#define KGRS_API __attribute__((visibility("default")))
#else
#define KGRS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kgrs_status {
  KGRS_OK = 0,
  KGRS_ERR_INVALID_ARGUMENT = 1,
  KGRS_ERR_PARSE = 2,
  KGRS_ERR_VALIDATION = 3,
  KGRS_ERR_IO = 4,
  KGRS_ERR_NUMERIC = 5,       /* domain, singular metric, degenerate plane, step failure */
  KGRS_ERR_EMPTY_LEVEL = 6,
  KGRS_ERR_CROSS_CHECK = 7,
  KGRS_ERR_INTERNAL = 8
} kgrs_status;

typedef struct kgrs_system kgrs_system;
typedef struct kgrs_options kgrs_options;
typedef struct kgrs_report kgrs_report;

/* Library version string, static storage. */
KGRS_API const char* kgrs_version(void);
/* Message of the last failing call on this thread; "" if none. */
KGRS_API const char* kgrs_last_error(void);
/* Frees strings returned through char** out-parameters. */
KGRS_API void kgrs_string_free(char* s);

/* Systems. Loading validates the system at probe points. */
KGRS_API kgrs_status kgrs_system_load_file(const char* path, kgrs_system** out);
KGRS_API kgrs_status kgrs_system_load_string(const char* text, kgrs_system** out);
KGRS_API kgrs_status kgrs_system_from_gallery(const char* name, kgrs_system** out);
KGRS_API kgrs_status kgrs_system_export(const kgrs_system* sys, char** text);
KGRS_API void kgrs_system_free(kgrs_system* sys);

/* Gallery catalogue; names have static storage. NULL when out of range. */
KGRS_API size_t kgrs_gallery_count(void);
KGRS_API const char* kgrs_gallery_name(size_t index);

/* Run options. */
KGRS_API kgrs_status kgrs_options_new(kgrs_options** out);
KGRS_API void kgrs_options_free(kgrs_options* opt);
KGRS_API kgrs_status kgrs_options_set_seed(kgrs_options* opt, uint64_t seed);
KGRS_API kgrs_status kgrs_options_set_grid(kgrs_options* opt, int grid);
KGRS_API kgrs_status kgrs_options_set_tolerance(kgrs_options* opt, const char* key, double value);
KGRS_API kgrs_status kgrs_options_add_fiber(kgrs_options* opt, double c, double s);
KGRS_API kgrs_status kgrs_options_set_resolution(kgrs_options* opt, int resolution);
KGRS_API kgrs_status kgrs_options_set_expect_nondegenerate(kgrs_options* opt, int flag);

/* Runs "verify", "scan", "image", "fibers" or "report". Pipeline failures
 * still produce a report (exit code 2); the status reports misuse only.
 * opt may be NULL for defaults. */
KGRS_API kgrs_status kgrs_run(const kgrs_system* sys, const char* command, const kgrs_options* opt,
                              kgrs_report** out);

/* 0 all checks pass, 1 some check failed, 2 execution error. */
KGRS_API int kgrs_report_exit_code(const kgrs_report* rep);
/* Execution error text, "" when the run completed. Owned by the report. */
KGRS_API const char* kgrs_report_error(const kgrs_report* rep);
/* One line per check: "PASS|FAIL name value tolerance note". */
KGRS_API kgrs_status kgrs_report_summary(const kgrs_report* rep, char** text);
KGRS_API kgrs_status kgrs_report_json(const kgrs_report* rep, int include_timings, char** text);
/* format: "json", "csv" (image grid), "eigen-csv", "svg". */
KGRS_API kgrs_status kgrs_report_write(const kgrs_report* rep, const char* format, const char* path,
                                       int include_timings);
KGRS_API void kgrs_report_free(kgrs_report* rep);

#ifdef __cplusplus
}
#endif

#endif /* KGRS_H */
