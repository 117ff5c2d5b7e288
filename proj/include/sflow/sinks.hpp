#pragma once

#include "sflow/pliss.hpp"
#include "sflow/poincare.hpp"

namespace sflow {

struct PeriodicOrbit {
  Vec anchor;
  double period = 0;
  double residual = 0;  // |phi_period(anchor) - anchor|
};

// Newton iteration on the first-return map to the normal section fixed at
// the initial guess; the return time is refined along with the point.
PeriodicOrbit refine_orbit(const VectorFieldModel& model, const Vec& guess,
                           double period_guess, Tol tol = {}, int max_iter = 50);

struct SinkCertificate {
  PeriodicOrbit orbit;
  double alpha = 0;
  double T = 0;
  int m = 0;  // certifying multiple of the period, 0 when not certified
  PartitionSchedule schedule;
  std::vector<double> leg_norms;  // worst starting phase, unrescaled
  double log_product = 0;         // worst-phase log product for the stored m
  bool certified = false;
  int phases = 0;
  std::vector<double> phase_logs;     // per-phase log products for the stored m
  std::vector<double> margins;        // per m tried: worst_log + alpha*m*period
  double achieved_exponent = 0;       // best contraction rate seen: max -worst/(m*period)
};

// Tries m = 1..m_max round trips; each m uses the uniform schedule over
// m*period with gaps <= T and evaluates the unrescaled chain product from
// `phases` equally spaced starting points on the orbit.  Certifies with the
// smallest m whose worst phase satisfies log_product <= -alpha*m*period.
SinkCertificate certify_sink(const VectorFieldModel& model, const PeriodicOrbit& orbit,
                             double alpha, double T, int m_max = 8, int phases = 16,
                             Tol tol = {}, ExecMode mode = ExecMode::serial);

struct ContractedPoint {
  Vec point;
  PartitionSchedule schedule;  // uniform legs, relative to the new start
  int offset = 0;              // legs skipped from the certificate anchor
  double time_offset = 0;
  WeightSequence legs;  // rescaled log leg-norms starting at the point
  double C = 1.0;
};

// Applies the Pliss-point selection to the certificate's rescaled leg data
// and returns the first orbit point whose forward tails all contract at
// rate eta (the (1, eta, T) condition with C = 1).
ContractedPoint extract_contracted_point(const VectorFieldModel& model,
                                         const SinkCertificate& cert, double eta,
                                         Tol tol = {}, ExecMode mode = ExecMode::serial);

// Max over n of (sum of the first n rescaled log leg-norms) + eta*t_n - log C
// along the schedule from x: <= 0 (up to tolerance) iff x is verified
// (C, eta, T)-contracted on this horizon.
double verify_contracted(const VectorFieldModel& model, const Vec& x, double C,
                         double eta, const PartitionSchedule& schedule, Tol tol = {},
                         ExecMode mode = ExecMode::serial);

struct ShiftResult {
  Vec z;
  bool success = false;
  int offset = 0;       // legs of length T skipped
  double shift_time = 0;
  double measured_C = 1.0;  // empirical constant for the returned point at rate eta/2
};

// Halves the contraction rate to buy a uniform constant: finds the first
// offset L in the uniform-T leg data of x whose tails all satisfy the
// eta/2 bound with C = 1, returning z = phi_{L*T}(x).  success = false when
// the horizon is too short to witness an offset.
ShiftResult shift_to_uniform_scale(const VectorFieldModel& model, const Vec& x, double C,
                                   double eta, double T, double horizon, Tol tol = {},
                                   ExecMode mode = ExecMode::serial);

}  // namespace sflow
