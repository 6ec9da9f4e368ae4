#pragma once

#include <string>
#include <string_view>

#include "errors.hpp"

namespace linconv {

enum class Mode { DT, CT };
enum class Status { Proven, Disproven, Unknown };

inline const char* to_string(Mode m) { return m == Mode::DT ? "dt" : "ct"; }

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Proven: return "proven";
    case Status::Disproven: return "disproven";
    case Status::Unknown: return "unknown";
  }
  return "unknown";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "dt") return Mode::DT;
  if (s == "ct") return Mode::CT;
  throw InputError("mode must be \"dt\" or \"ct\", got \"" + std::string(s) + "\"");
}

inline Status parse_status(std::string_view s) {
  if (s == "proven") return Status::Proven;
  if (s == "disproven") return Status::Disproven;
  if (s == "unknown") return Status::Unknown;
  throw InputError("unknown status \"" + std::string(s) + "\"");
}

}  // namespace linconv
