#include "mislab/report.hpp"

#include <charconv>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mislab {

namespace {

std::size_t parse_size(std::string_view text, std::string_view what) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw UsageError("invalid " + std::string(what) + ": '" + std::string(text) + "'");
  return v;
}

}  // namespace

ModelParams parse_probability(std::string_view text) {
  if (text.find('.') != std::string_view::npos || text.find('e') != std::string_view::npos ||
      text.find('E') != std::string_view::npos)
    throw UsageError("p must be a rational 'num/den' (e.g. 1/2 instead of 0.5), got '" + std::string(text) + "'");
  Rational p;
  try {
    p = parse_rational(text);
  } catch (const std::exception&) {
    throw UsageError("p must be a rational 'num/den', got '" + std::string(text) + "'");
  }
  try {
    return ModelParams(p);
  } catch (const DomainError&) {
    throw UsageError("p must lie strictly between 0 and 1, got '" + std::string(text) + "'");
  }
}

std::vector<std::size_t> parse_grid(std::string_view text) {
  std::vector<std::size_t> out;
  if (text.find(':') != std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw UsageError("grid needs 'a:b:xk' or 'a:b:+k'");
    const std::size_t a = parse_size(text.substr(0, c1), "grid start");
    const std::size_t b = parse_size(text.substr(c1 + 1, c2 - c1 - 1), "grid end");
    const std::string_view step = text.substr(c2 + 1);
    if (step.size() < 2 || (step[0] != 'x' && step[0] != '+')) throw UsageError("grid step must be 'xk' or '+k'");
    const std::size_t k = parse_size(step.substr(1), "grid step");
    if (a > b) throw UsageError("grid start exceeds end");
    if (step[0] == 'x') {
      if (k < 2 || a == 0) throw UsageError("geometric grid needs start >= 1 and factor >= 2");
      for (std::size_t v = a; v <= b; v *= k) out.push_back(v);
    } else {
      if (k == 0) throw UsageError("arithmetic grid step must be positive");
      for (std::size_t v = a; v <= b; v += k) out.push_back(v);
    }
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      out.push_back(parse_size(piece, "grid value"));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1]) throw UsageError("grid must be strictly increasing");
  if (out.empty()) throw UsageError("empty grid");
  return out;
}

ReportHeader::ReportHeader(std::string command) {
  entries_.emplace_back("engine", kEngineVersion);
  entries_.emplace_back("command", std::move(command));
}

ReportHeader& ReportHeader::add(std::string key, std::string value) {
  entries_.emplace_back(std::move(key), std::move(value));
  return *this;
}

void ReportHeader::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << "# " << k << ": " << v << '\n';
}

std::string resolve_cache_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("MISLAB_CACHE_DIR")) return env;
  return {};
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace mislab
