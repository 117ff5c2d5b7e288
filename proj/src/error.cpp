#include "sflow/error.hpp"

namespace sflow {

const char* errc_name(errc c) {
  switch (c) {
    case errc::not_a_singularity: return "NotASingularity";
    case errc::eigen_failure: return "EigenFailure";
    case errc::singular_point: return "SingularPoint";
    case errc::step_failure: return "StepFailure";
    case errc::degenerate_vector: return "DegenerateVector";
    case errc::zero_vector: return "ZeroVector";
    case errc::no_crossing: return "NoCrossing";
    case errc::left_domain: return "LeftDomain";
    case errc::bad_parameters: return "BadParameters";
    case errc::no_pliss_point: return "NoPlissPoint";
    case errc::no_convergence: return "NoConvergence";
    case errc::singular_jacobian: return "SingularJacobian";
    case errc::no_dominated_f: return "NoDominatedF";
    case errc::resonance_obstruction: return "ResonanceObstruction";
    case errc::unsupported: return "Unsupported";
    case errc::config_error: return "ConfigError";
    case errc::unknown_series: return "UnknownSeries";
  }
  return "Error";
}

}  // namespace sflow
