#pragma once

#include <stdexcept>
#include <string>

namespace rgan {

// Error taxonomy shared by the library and the CLI. The CLI maps the
// category to a machine-readable token on stderr, so categories are part
// of the external interface and must stay stable.
enum class ErrorCategory {
  config,       // invalid configuration or argument ranges
  data,         // unreadable / empty / malformed input data
  shape,        // tensor or matrix dimension mismatch
  numeric,      // non-finite values outside of training
  statistics,   // not enough samples for the requested estimate
  training,     // divergence during an optimization loop
  io,           // filesystem failures
  integrity,    // checksum mismatch in a persisted file
  version,      // persisted format version not supported
  dependency,   // checkpoint references a different AE/model hash
  capability,   // requested operation needs a component that is absent
};

inline const char* error_category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return "configuration_error";
    case ErrorCategory::data: return "data_error";
    case ErrorCategory::shape: return "shape_error";
    case ErrorCategory::numeric: return "numeric_error";
    case ErrorCategory::statistics: return "statistics_error";
    case ErrorCategory::training: return "training_error";
    case ErrorCategory::io: return "io_error";
    case ErrorCategory::integrity: return "integrity_error";
    case ErrorCategory::version: return "version_error";
    case ErrorCategory::dependency: return "dependency_error";
    case ErrorCategory::capability: return "capability_error";
  }
  return "unknown_error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }
  const char* category_name() const { return error_category_name(category_); }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) {
  throw Error(c, msg);
}

inline void require(bool cond, ErrorCategory c, const std::string& msg) {
  if (!cond) fail(c, msg);
}

}  // namespace rgan
