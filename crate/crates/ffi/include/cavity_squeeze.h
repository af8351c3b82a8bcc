#ifndef CAVITY_SQUEEZE_H
#define CAVITY_SQUEEZE_H

/* Generated by cbindgen from cavity-squeeze-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>
typedef struct CsSystem CsSystem;

/**
 * Status codes returned by every call.
 */
typedef enum CsStatus {
  CsOk = 0,
  CsErrNullArg = 1,
  CsErrInvalidArg = 2,
  CsErrInvalidParams = 3,
  CsErrDomain = 4,
  CsErrNumerics = 5,
  CsErrUtf8 = 6,
  CsErrUnknownName = 7,
} CsStatus;

/**
 * Drive-calibration convention.
 */
typedef enum CsDriveConvention {
  CsDriveInputCoupling = 0,
  CsDriveTotalKappa = 1,
} CsDriveConvention;

/**
 * Complex value as a (re, im) pair.
 */
typedef struct CsComplex {
  double re;
  double im;
} CsComplex;

/**
 * Dressed-doublet complex detunings in linear MHz: re = detuning,
 * im = half-linewidth.
 */
typedef struct CsDressed {
  struct CsComplex omega_plus_mhz;
  struct CsComplex omega_minus_mhz;
} CsDressed;

/**
 * Squeezing-kernel summary (dimensionless).
 */
typedef struct CsKernelInfo {
  struct CsComplex k_factor;
  struct CsComplex sigma_mean;
  struct CsComplex alpha_plus;
  struct CsComplex alpha_minus;
  struct CsComplex delta_a2;
} CsKernelInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cs_version(void);

/**
 * Copy the last error message of this thread into `buf` (truncated,
 * NUL-terminated). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be NULL (query length only).
 */
uintptr_t cs_last_error_message(char *buf, uintptr_t len);

/**
 * Create a system from a named preset ("configA" or "configB").
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum CsStatus cs_system_preset(const char *name, CsSystem **out);

/**
 * Create a system from explicit parameters (linear MHz). The detection
 * budget defaults to the mirror-budget η_out, η_d = 0.55 and P_in = 8.5 pW.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CsStatus cs_system_new(double g_mhz,
                            double kappa_mhz,
                            double gamma_mhz,
                            double gamma_motion_mhz,
                            double delta_c_mhz,
                            double delta_a_mhz,
                            double epsilon_mhz,
                            CsSystem **out);

/**
 * Release a system handle. NULL is tolerated.
 *
 * # Safety
 * `sys` must have been produced by this library and not freed before.
 */
void cs_system_free(CsSystem *sys);

/**
 * Set the drive amplitude directly (linear MHz).
 *
 * # Safety
 * `sys` must be a valid handle.
 */
enum CsStatus cs_system_set_epsilon_mhz(CsSystem *sys, double eps_mhz);

/**
 * Calibrate the drive from the preset's input power under a convention;
 * the resulting ε (linear MHz) is stored and also written to `eps_mhz_out`
 * when non-NULL.
 *
 * # Safety
 * `sys` must be a valid handle.
 */
enum CsStatus cs_system_calibrate_drive(CsSystem *sys,
                                        enum CsDriveConvention convention,
                                        double *eps_mhz_out);

/**
 * Complex detunings of the n-excitation dressed doublet, linear MHz.
 *
 * # Safety
 * `sys` and `out` must be valid pointers.
 */
enum CsStatus cs_dressed_detunings(const CsSystem *sys,
                                   uint32_t n,
                                   bool include_motion,
                                   struct CsDressed *out);

/**
 * Squeezing kernel (K, ⟨σ⟩, α±, ⟨Δa²⟩) at the current drive.
 *
 * # Safety
 * `sys` and `out` must be valid pointers.
 */
enum CsStatus cs_squeezing_kernel(const CsSystem *sys,
                                  bool include_motion,
                                  struct CsKernelInfo *out);

/**
 * ⟨:ΔX_θ(τ)ΔX_θ(0):⟩ evaluated on `len` lags (µs) into `out`.
 *
 * # Safety
 * `tau_us` and `out` must point to `len` readable/writable doubles.
 */
enum CsStatus cs_autocorrelation(const CsSystem *sys,
                                 double theta,
                                 bool include_motion,
                                 const double *tau_us,
                                 double *out,
                                 uintptr_t len);

/**
 * Squeezing spectrum S_θ (linear, shot noise = 1) on `len` frequencies
 * (linear MHz) with overall efficiency `eta`.
 *
 * # Safety
 * `freq_mhz` and `out` must point to `len` readable/writable doubles.
 */
enum CsStatus cs_spectrum(const CsSystem *sys,
                          double theta,
                          double eta,
                          bool include_motion,
                          const double *freq_mhz,
                          double *out,
                          uintptr_t len);

/**
 * Quadrature angle minimizing the equal-time variance and that minimum.
 *
 * # Safety
 * Out-pointers must be valid when non-NULL.
 */
enum CsStatus cs_optimal_angle(const CsSystem *sys,
                               bool include_motion,
                               double *theta_min,
                               double *value);

/**
 * Mean intracavity photon number |⟨a⟩|² at the current drive (bare γ).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CsStatus cs_mean_photon_number(const CsSystem *sys, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVITY_SQUEEZE_H */
