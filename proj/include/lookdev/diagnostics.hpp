#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace lookdev {

enum class Level { info, warning, error };

inline std::string_view to_string(Level level) {
  switch (level) {
    case Level::info: return "info";
    case Level::warning: return "warning";
    case Level::error: return "error";
  }
  return "error";
}

// Rendered as `level:code:message`, one per line.
struct Diagnostic {
  Level level = Level::info;
  std::string code;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const Diagnostic& d) {
  return os << to_string(d.level) << ':' << d.code << ':' << d.message;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.level == Level::error; });
}

}  // namespace lookdev
