#ifndef MISLAB_REPORT_HPP
#define MISLAB_REPORT_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mislab/model.hpp"

namespace mislab {

/// Thrown for malformed command-line input (exit status 1).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Parses an edge probability given as "num/den" or an integer-free fraction.
/// Decimal input ("0.5") is rejected with a hint; p must lie in (0,1).
ModelParams parse_probability(std::string_view text);

/// Grid syntax: "a:b:x2" (geometric, factor k), "a:b:+k" (arithmetic step k),
/// "a,b,c" (explicit list) or a single value. The result is strictly increasing.
std::vector<std::size_t> parse_grid(std::string_view text);

/// Ordered key/value pairs printed as `# key: value` lines ahead of a CSV report.
class ReportHeader {
 public:
  explicit ReportHeader(std::string command);
  ReportHeader& add(std::string key, std::string value);
  void write(std::ostream& out) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// `flag` if non-empty, else $MISLAB_CACHE_DIR, else "".
std::string resolve_cache_dir(const std::string& flag);

/// Fixed formatting of doubles in reports (17 significant digits).
std::string format_double(double v);

}  // namespace mislab

#endif  // MISLAB_REPORT_HPP
