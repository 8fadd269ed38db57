#ifndef HEMOFLOW_H
#define HEMOFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HfStatus {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_POINTER = 1,
  HF_STATUS_INVALID_INPUT = 2,
  HF_STATUS_NUMERICAL = 3,
  HF_STATUS_IO = 4,
  HF_STATUS_BUFFER_TOO_SMALL = 5,
  HF_STATUS_PANIC = 6,
} HfStatus;

typedef enum HfViscosityKind {
  HF_VISCOSITY_KIND_NEWTONIAN = 0,
  HF_VISCOSITY_KIND_POWER_LAW = 1,
} HfViscosityKind;

// Opaque tetrahedral mesh.
typedef struct HfMesh HfMesh;

typedef struct HfPowerLaw {
  // Pa·s^n
  double m;
  double n;
  // percent
  double hct;
  double r2;
  // Pa·s
  double rmse;
} HfPowerLaw;

typedef struct HfWindkessel {
  double rp;
  double rd;
  double c;
  double pd0;
} HfWindkessel;

typedef struct HfViscosity {
  enum HfViscosityKind kind;
  // Pa·s, Newtonian only.
  double mu;
  // Power law only.
  double m;
  double n;
  // 1/s
  double shear_floor;
} HfViscosity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *hf_version(void);

// Length in bytes of the calling thread's last error message, without the
// terminating NUL; 0 after a successful call.
size_t hf_last_error_length(void);

// Copies the last error message into `buf` (NUL-terminated, truncated to
// `len - 1` bytes).
//
// # Safety
// `buf` must be valid for `len` bytes.
enum HfStatus hf_last_error_message(char *buf, size_t len);

// Weighted least-squares power-law fit of `count` viscosity samples taken
// at hematocrit `hct`.
//
// # Safety
// `shear_rate` and `viscosity` must hold `count` values; `out` must be valid.
enum HfStatus hf_fit_power_law(const double *shear_rate,
                               const double *viscosity,
                               size_t count,
                               double hct,
                               struct HfPowerLaw *out);

// Power law at any hematocrit between the bundled base curves.
//
// # Safety
// `out` must be valid.
enum HfStatus hf_fit_for_hct(double hct, struct HfPowerLaw *out);

// Mean power-law viscosity over `[gamma0, gamma1]`, Pa·s.
//
// # Safety
// `out_mu` must be valid.
enum HfStatus hf_newtonian_equivalent(double m,
                                      double n,
                                      double gamma0,
                                      double gamma1,
                                      double *out_mu);

// Bundled outlet parameters (CGS), `index` 0 to 3.
//
// # Safety
// `out` must be valid.
enum HfStatus hf_windkessel_outlet(size_t index, struct HfWindkessel *out);

// Outlet pressure over the last of `cycles` periods of the flow waveform
// `(times, flow)`, whose last sample closes the cycle. Writes the number of
// samples to `out_len`; with `out_p_wk` null only the length is reported.
//
// # Safety
// `times` and `flow` must hold `count` values; `out_p_wk` must hold
// `capacity` values when non-null.
enum HfStatus hf_windkessel_simulate(const struct HfWindkessel *params,
                                     const double *times,
                                     const double *flow,
                                     size_t count,
                                     double dt,
                                     size_t cycles,
                                     double *out_p_wk,
                                     size_t capacity,
                                     size_t *out_len);

// Oscillatory shear index of `points` WSS vectors over `frames` frames
// (frame-major packed triples) sampled at `times` within `period`.
//
// # Safety
// `wss` must hold `frames * points * 3` values, `times` `frames` values and
// `out` `points` values.
enum HfStatus hf_osi(const double *wss,
                     size_t frames,
                     size_t points_per_frame,
                     const double *times,
                     double period,
                     double *out);

// Loads a legacy VTK tetrahedral mesh.
//
// # Safety
// `path` must be a NUL-terminated UTF-8 string; `out` must be valid.
enum HfStatus hf_mesh_load(const char *path, struct HfMesh **out);

// Straight pipe along +z with the inlet at z = 0; `level` refines it.
//
// # Safety
// `out` must be valid.
enum HfStatus hf_mesh_pipe(double radius, double length, uint32_t level, struct HfMesh **out);

// # Safety
// `mesh` must come from this library and not be used afterwards; null is
// ignored.
void hf_mesh_free(struct HfMesh *mesh);

// Vertex and wall-vertex counts.
//
// # Safety
// `mesh` must be a live handle; outputs may be null.
enum HfStatus hf_mesh_counts(const struct HfMesh *mesh,
                             size_t *out_vertices,
                             size_t *out_wall_vertices);

// Mesh coordinates as packed triples.
//
// # Safety
// `out` must hold `3 * vertices` values.
enum HfStatus hf_mesh_vertices(const struct HfMesh *mesh, double *out);

// Sorted wall vertex ids; per-wall outputs follow this order.
//
// # Safety
// `out` must hold one value per wall vertex.
enum HfStatus hf_mesh_wall_vertices(const struct HfMesh *mesh, size_t *out);

// WSS magnitude (Pa) at every wall vertex and the total viscous energy loss
// rate (µW) of one steady velocity field.
//
// # Safety
// `velocity` must hold `3 * vertices` values and `out_wss` one value per
// wall vertex; `out_el_total` must be valid.
enum HfStatus hf_estimate_steady(const struct HfMesh *mesh,
                                 const double *velocity,
                                 struct HfViscosity viscosity,
                                 double *out_wss,
                                 double *out_el_total);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEMOFLOW_H */
