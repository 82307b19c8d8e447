#include "core/error.hpp"

namespace dls {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::missing_parameter: return "missing-parameter";
    case Errc::protocol_violation: return "protocol-violation";
    case Errc::setup_error: return "setup-error";
    case Errc::undefined_metric: return "undefined-metric";
    case Errc::trace_error: return "trace-error";
    case Errc::io_error: return "io-error";
    case Errc::runtime_failure: return "runtime-failure";
  }
  return "unknown";
}

}  // namespace dls
