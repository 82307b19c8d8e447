#pragma once

#include <stdexcept>
#include <string>

namespace dls {

enum class Errc {
  invalid_argument = 1,
  missing_parameter,
  protocol_violation,
  setup_error,
  undefined_metric,
  trace_error,
  io_error,
  runtime_failure,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dls
