#ifndef VITALBAND_H
#define VITALBAND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result codes. Zero is success.
 */
typedef enum VbStatus {
  VB_STATUS_OK = 0,
  VB_STATUS_NULL_POINTER = 1,
  VB_STATUS_INVALID_ARGUMENT = 2,
  VB_STATUS_IO = 3,
  VB_STATUS_FORMAT = 4,
  VB_STATUS_CONFIG = 5,
  VB_STATUS_RANGE = 6,
  VB_STATUS_PRECONDITION = 7,
  VB_STATUS_OUT_OF_BOUNDS = 8,
  VB_STATUS_PANIC = 99,
} VbStatus;

/*
 Chart selector for [`vb_grid_render_svg`].
 */
typedef enum VbChart {
  VB_CHART_HEATMAP = 0,
  VB_CHART_BARS = 1,
} VbChart;

/*
 Hourly means with baselines and ranges.
 */
typedef struct VbGrid VbGrid;

/*
 A patient's raw or filtered samples.
 */
typedef struct VbRecord VbRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. Valid until
 the next call into this library from the same thread.
 */
const char *vb_last_error_message(void);

/*
 Release a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void vb_string_free(char *s);

/*
 New empty record for an admission `[admission_start, admission_end]`
 in UTC seconds.

 # Safety
 `patient_id` must be a NUL-terminated string; `out` must be writable.
 */
enum VbStatus vb_record_new(const char *patient_id,
                            int64_t admission_start,
                            int64_t admission_end,
                            struct VbRecord **out);

/*
 Append one sample. `quality` outside 0..=100 means "no quality"
 when negative and is rejected when above 100.

 # Safety
 `record` must be a live handle; `signal` a NUL-terminated string.
 */
enum VbStatus vb_record_push(struct VbRecord *record,
                             const char *signal,
                             int64_t timestamp,
                             double value,
                             int32_t quality);

/*
 Load samples from a long-format CSV file
 (`timestamp,signal,value,quality`) into a new record.

 # Safety
 String arguments must be NUL-terminated; `out` must be writable.
 */
enum VbStatus vb_record_load_csv(const char *patient_id,
                                 int64_t admission_start,
                                 int64_t admission_end,
                                 const char *path,
                                 struct VbRecord **out);

/*
 Number of samples across all signals.

 # Safety
 `record` must be a live handle; `out` must be writable.
 */
enum VbStatus vb_record_sample_count(struct VbRecord *record, size_t *out);

/*
 Apply the cleansing cascade (admission crop, quality threshold,
 heart-rate presence) into a new record. The input is left untouched.

 # Safety
 `record` must be a live handle; `out` must be writable.
 */
enum VbStatus vb_record_filter(struct VbRecord *record,
                               int32_t quality_threshold,
                               struct VbRecord **out);

/*
 Hourly means in local time (`tz_offset_s` seconds east of UTC) with
 data-derived baselines and ranges.

 # Safety
 `record` must be a live handle; `out` must be writable.
 */
enum VbStatus vb_record_aggregate(struct VbRecord *record,
                                  int64_t tz_offset_s,
                                  struct VbGrid **out);

/*
 # Safety
 `record` must come from this library and not have been freed.
 */
void vb_record_free(struct VbRecord *record);

/*
 Number of hours the grid spans.

 # Safety
 `grid` must be a live handle; `out` must be writable.
 */
enum VbStatus vb_grid_hours(const struct VbGrid *grid, size_t *out);

/*
 UTC second at which the grid's first hour starts.

 # Safety
 `grid` must be a live handle; `out` must be writable.
 */
enum VbStatus vb_grid_start(const struct VbGrid *grid, int64_t *out);

/*
 Hourly mean of `signal` at `hour`, NaN for a missing hour.

 # Safety
 `grid` must be a live handle; `signal` a NUL-terminated string; `out`
 must be writable.
 */
enum VbStatus vb_grid_value(const struct VbGrid *grid,
                            const char *signal,
                            size_t hour,
                            double *out);

/*
 Baseline, minimum and maximum of `signal`. Fails with
 [`VbStatus::Range`] when the signal has no present hours.

 # Safety
 `grid` must be a live handle; `signal` a NUL-terminated string; the
 three outputs must be writable.
 */
enum VbStatus vb_grid_range(const struct VbGrid *grid,
                            const char *signal,
                            double *vmin,
                            double *baseline,
                            double *vmax);

/*
 Render the grid as SVG with the default layout and color scales.

 # Safety
 `grid` must be a live handle; `title` a NUL-terminated string; `out`
 must be writable. Free the result with [`vb_string_free`].
 */
enum VbStatus vb_grid_render_svg(const struct VbGrid *grid,
                                 const char *title,
                                 enum VbChart chart,
                                 char **out);

/*
 The grid as CSV (`hour_start,signal,mean,count`).

 # Safety
 `grid` must be a live handle; `out` must be writable. Free the result
 with [`vb_string_free`].
 */
enum VbStatus vb_grid_to_csv(const struct VbGrid *grid, char **out);

/*
 # Safety
 `grid` must come from this library and not have been freed.
 */
void vb_grid_free(struct VbGrid *grid);

/*
 Hours between axis ticks for a chart spanning `duration_hours`.
 */
uint32_t vb_tick_stride(double duration_hours);

/*
 Color of a normalized position (0 low, 0.5 center, 1 high) on a named
 scheme such as "RYGB" or "GB_SEQ", as `0xRRGGBB`. A NaN position gives
 the missing-data color.

 # Safety
 `scheme` must be a NUL-terminated string; `out_rgb` must be writable.
 */
enum VbStatus vb_color_at(const char *scheme, bool inverted, double position, uint32_t *out_rgb);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VITALBAND_H */
