#ifndef SWIPEKIT_H
#define SWIPEKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SWK_STATUS_OK = 0,
  SWK_STATUS_NULL_POINTER = 1,
  SWK_STATUS_INVALID_ARGUMENT = 2,
  SWK_STATUS_GEOMETRY = 3,
  SWK_STATUS_PARSE = 4,
  SWK_STATUS_DEVICE = 5,
  SWK_STATUS_SIM = 6,
  SWK_STATUS_BUFFER_TOO_SMALL = 7,
  SWK_STATUS_PANIC = 99,
} SwkStatus;

typedef enum {
  SWK_DIRECTION_UP = 0,
  SWK_DIRECTION_DOWN = 1,
  SWK_DIRECTION_LEFT = 2,
  SWK_DIRECTION_RIGHT = 3,
} SwkDirection;

typedef enum {
  SWK_KIND_COMPONENT = 0,
  SWK_KIND_REGION = 1,
} SwkKind;

// Seeded random source for candidate synthesis.
typedef struct SwkRng SwkRng;

// A running simulator instance.
typedef struct SwkSim SwkSim;

// Axis-aligned box, `x1 < x2` and `y1 < y2`.
typedef struct {
  int32_t x1;
  int32_t y1;
  int32_t x2;
  int32_t y2;
} SwkBox;

// A normalized swipe. Coordinates are in `[0, 1000]`.
typedef struct {
  SwkKind kind;
  int32_t start_x;
  int32_t start_y;
  int32_t end_x;
  int32_t end_y;
  SwkDirection direction;
  uint32_t duration_ms;
  SwkBox bbox;
} SwkSwipe;

typedef struct {
  bool format_valid;
  double r_start;
  double r_end;
  double r_dir;
  double r_dur;
  double r_acc;
  double r_format;
  double r_type;
  double total_norm;
} SwkReward;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next call into the library from the same thread.
const char *swk_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void swk_string_free(char *s);

// Pixel position to the `[0, 1000]` frame of a `width x height` screen.
//
// # Safety
// `out_x` and `out_y` must be valid for writes.
SwkStatus swk_normalize_point(uint32_t x,
                              uint32_t y,
                              uint32_t width,
                              uint32_t height,
                              int32_t *out_x,
                              int32_t *out_y);

// Normalized position to a pixel on a `width x height` screen.
//
// # Safety
// `out_x` and `out_y` must be valid for writes.
SwkStatus swk_denormalize_point(int32_t x,
                                int32_t y,
                                uint32_t width,
                                uint32_t height,
                                uint32_t *out_x,
                                uint32_t *out_y);

// Dominant direction from start to end. Fails when the points coincide.
//
// # Safety
// `out_dir` must be valid for writes.
SwkStatus swk_direction_of(int32_t start_x,
                           int32_t start_y,
                           int32_t end_x,
                           int32_t end_y,
                           SwkDirection *out_dir);

// `input swipe` shell command for a pixel swipe. Free the result with
// [`swk_string_free`].
//
// # Safety
// `out_cmd` must be valid for writes.
SwkStatus swk_render_adb_swipe(uint32_t x1,
                               uint32_t y1,
                               uint32_t x2,
                               uint32_t y2,
                               uint32_t duration_ms,
                               char **out_cmd);

// New random source. Returns NULL only on allocation failure.
SwkRng *swk_rng_new(uint64_t seed);

// # Safety
// `rng` must come from [`swk_rng_new`] and not have been freed. NULL is ignored.
void swk_rng_free(SwkRng *rng);

// Candidate swipes for a pixel-space target on a `width x height` screen, in
// execution order. Components yield 2, regions 4. `out_len` receives the
// count; when `capacity` is too small nothing is written to `out` and
// `SWK_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `rng` must be a live handle, `out` valid for `capacity` writes and
// `out_len` valid for one.
SwkStatus swk_candidates(SwkRng *rng,
                         SwkKind kind,
                         SwkBox target,
                         uint32_t width,
                         uint32_t height,
                         SwkSwipe *out,
                         size_t capacity,
                         size_t *out_len);

// Scores a raw model response against a gold swipe given as SwipeSpec JSON.
//
// # Safety
// `response` and `gold_json` must be NUL-terminated; `out_reward` valid for writes.
SwkStatus swk_score_response(const char *response, const char *gold_json, SwkReward *out_reward);

// Fraction of pixels in `roi` whose gray level differs by more than `delta`.
// Images are packed 8-bit RGB, `width * height * 3` bytes each.
//
// # Safety
// `a` and `b` must each hold `width * height * 3` readable bytes; `out_ratio`
// must be valid for writes.
SwkStatus swk_changed_ratio(const uint8_t *a,
                            const uint8_t *b,
                            uint32_t width,
                            uint32_t height,
                            SwkBox roi,
                            double delta,
                            double *out_ratio);

// Loads a built-in scene by name or a scene file by path. Returns NULL on
// failure; see [`swk_last_error`].
//
// # Safety
// `scene` must be NUL-terminated.
SwkSim *swk_sim_new(const char *scene);

// # Safety
// `sim` must come from [`swk_sim_new`] and not have been freed. NULL is ignored.
void swk_sim_free(SwkSim *sim);

// # Safety
// `sim` must be a live handle; `out_width` and `out_height` valid for writes.
SwkStatus swk_sim_size(const SwkSim *sim, uint32_t *out_width, uint32_t *out_height);

// Applies a pixel swipe.
//
// # Safety
// `sim` must be a live handle.
SwkStatus swk_sim_swipe(SwkSim *sim,
                        uint32_t x1,
                        uint32_t y1,
                        uint32_t x2,
                        uint32_t y2,
                        uint32_t duration_ms);

// # Safety
// `sim` must be a live handle.
SwkStatus swk_sim_tap(SwkSim *sim, uint32_t x, uint32_t y);

// # Safety
// `sim` must be a live handle.
SwkStatus swk_sim_back(SwkSim *sim);

// Id of the current screen. Free the result with [`swk_string_free`].
//
// # Safety
// `sim` must be a live handle; `out_id` valid for writes.
SwkStatus swk_sim_current_screen(const SwkSim *sim, char **out_id);

// Renders the current screen as packed RGB into `buf`, which must hold
// `width * height * 3` bytes.
//
// # Safety
// `sim` must be a live handle; `buf` valid for `len` writes.
SwkStatus swk_sim_render(const SwkSim *sim, uint8_t *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWIPEKIT_H */
