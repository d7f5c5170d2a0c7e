#pragma once

#include <stdexcept>
#include <string>

namespace eeflow {

// Stable error codes. The CLI prints these verbatim on its diagnostic
// stream, so scripts can match on them; keep the names frozen.
enum class errc {
  dangling_link,
  self_loop,
  dimension_mismatch,
  non_positive_bandwidth,
  negative_power,
  negative_rate,
  non_positive_input,
  unroutable,
  capacity_infeasible,
  rate_box_infeasible,
  degenerate_instance,
  instance_infeasible,
  non_convergence,
  too_large,
  state_space_too_large,
  singular_system,
  zero_arrival_rate,
  unstable,
  parse_error,
  validation_error,
  missing_file,
  io_error,
};

constexpr const char* errc_name(errc c) {
  switch (c) {
    case errc::dangling_link: return "E_DANGLING_LINK";
    case errc::self_loop: return "E_SELF_LOOP";
    case errc::dimension_mismatch: return "E_DIMENSION_MISMATCH";
    case errc::non_positive_bandwidth: return "E_NON_POSITIVE_BANDWIDTH";
    case errc::negative_power: return "E_NEGATIVE_POWER";
    case errc::negative_rate: return "E_NEGATIVE_RATE";
    case errc::non_positive_input: return "E_NON_POSITIVE_INPUT";
    case errc::unroutable: return "E_UNROUTABLE";
    case errc::capacity_infeasible: return "E_CAPACITY_INFEASIBLE";
    case errc::rate_box_infeasible: return "E_RATE_BOX_INFEASIBLE";
    case errc::degenerate_instance: return "E_DEGENERATE_INSTANCE";
    case errc::instance_infeasible: return "E_INSTANCE_INFEASIBLE";
    case errc::non_convergence: return "E_NON_CONVERGENCE";
    case errc::too_large: return "E_TOO_LARGE";
    case errc::state_space_too_large: return "E_STATE_SPACE_TOO_LARGE";
    case errc::singular_system: return "E_SINGULAR_SYSTEM";
    case errc::zero_arrival_rate: return "E_ZERO_ARRIVAL_RATE";
    case errc::unstable: return "E_UNSTABLE";
    case errc::parse_error: return "E_PARSE";
    case errc::validation_error: return "E_VALIDATION";
    case errc::missing_file: return "E_MISSING_FILE";
    case errc::io_error: return "E_IO";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}

  errc code() const noexcept { return code_; }
  const char* code_name() const noexcept { return errc_name(code_); }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace eeflow
