#pragma once

#include <random>

#include <doctest.h>

#include "sflow/field.hpp"
#include "sflow/flow.hpp"

// Runs the statement(s) and checks that they throw sflow::Error with the
// given code.
#define CHECK_THROWS_CODE(code_, ...)                  \
  do {                                                 \
    bool caught_ = false;                              \
    try {                                              \
      __VA_ARGS__;                                     \
    } catch (const sflow::Error& e_) {                 \
      caught_ = true;                                  \
      CHECK(e_.code() == sflow::errc::code_);          \
    }                                                  \
    CHECK_MESSAGE(caught_, "expected error " #code_);  \
  } while (0)

namespace testutil {

inline sflow::Vec random_unit(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g(0.0, 1.0);
  sflow::Vec v(d);
  do {
    for (int i = 0; i < d; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-8);
  v.normalize();
  return v;
}

// Central-difference Jacobian of the time-t flow map.
inline sflow::Mat fd_flow_jacobian(const sflow::VectorFieldModel& model, const sflow::Vec& x,
                                   double t, double h = 1e-6) {
  sflow::Mat J(model.dim, model.dim);
  for (int i = 0; i < model.dim; ++i) {
    sflow::Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) =
        (sflow::integrate(model, xp, t).back() - sflow::integrate(model, xm, t).back()) / (2 * h);
  }
  return J;
}

}  // namespace testutil
