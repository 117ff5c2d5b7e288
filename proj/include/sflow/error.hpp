#pragma once

#include <stdexcept>
#include <string>

namespace sflow {

// Every failure mode the library reports deliberately.  Callers that want to
// distinguish "no crossing found" from "stepper underflow" switch on code().
enum class errc {
  not_a_singularity,
  eigen_failure,
  singular_point,
  step_failure,
  degenerate_vector,
  zero_vector,
  no_crossing,
  left_domain,
  bad_parameters,
  no_pliss_point,
  no_convergence,
  singular_jacobian,
  no_dominated_f,
  resonance_obstruction,
  unsupported,
  config_error,
  unknown_series,
};

const char* errc_name(errc c);

class Error : public std::runtime_error {
public:
  Error(errc c, const std::string& msg)
      : std::runtime_error(std::string(errc_name(c)) + ": " + msg), code_(c) {}

  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail(errc c, const std::string& msg) { throw Error(c, msg); }

}  // namespace sflow
