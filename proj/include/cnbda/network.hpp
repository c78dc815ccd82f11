#ifndef CNBDA_NETWORK_HPP
#define CNBDA_NETWORK_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cnbda/random.hpp"

namespace cnbda {

/// Input could not be parsed. `line()` is 1-based, 0 when not line-specific.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line)
  {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Weighted directed social network. Entry (i, j) is the connection from j
/// to i, so row i holds the incoming associations of individual i.
///
/// Construction only checks shape (square, n >= 2). Weight invariants are
/// reported by validate() so that malformed inputs can be inspected.
class Network {
public:
  Network(std::size_t n, std::vector<double> weights, std::string label = {})
      : n_(n), weights_(std::move(weights)), label_(std::move(label))
  {
    if (n_ < 2)
      throw std::invalid_argument("network needs at least 2 individuals");
    if (weights_.size() != n_ * n_)
      throw std::invalid_argument("network weight count " + std::to_string(weights_.size()) +
                                  " does not match " + std::to_string(n_) + "x" +
                                  std::to_string(n_));
  }

  static Network from_rows(const std::vector<std::vector<double>>& rows, std::string label = {})
  {
    const std::size_t n = rows.size();
    std::vector<double> w;
    w.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n)
        throw std::invalid_argument("row " + std::to_string(i + 1) + " has " +
                                    std::to_string(rows[i].size()) + " entries, expected " +
                                    std::to_string(n));
      w.insert(w.end(), rows[i].begin(), rows[i].end());
    }
    return Network(n, std::move(w), std::move(label));
  }

  std::size_t size() const noexcept { return n_; }
  const std::string& label() const noexcept { return label_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return weights_[i * n_ + j]; }

  /// Incoming connections of individual i (the vector a_i).
  std::span<const double> row(std::size_t i) const
  {
    return std::span<const double>(weights_).subspan(i * n_, n_);
  }

  std::span<const double> weights() const noexcept { return weights_; }

  friend bool operator==(const Network& a, const Network& b)
  {
    return a.n_ == b.n_ && a.weights_ == b.weights_;
  }

private:
  std::size_t n_;
  std::vector<double> weights_;
  std::string label_;
};

struct WeightViolation {
  enum class Kind { negative, non_finite, nonzero_diagonal };
  Kind kind;
  std::size_t row;
  std::size_t col;
  double value;
};

inline const char* to_string(WeightViolation::Kind k)
{
  switch (k) {
  case WeightViolation::Kind::negative: return "negative weight";
  case WeightViolation::Kind::non_finite: return "non-finite weight";
  case WeightViolation::Kind::nonzero_diagonal: return "nonzero diagonal";
  }
  return "?";
}

/// All weight-invariant violations, row-major. Empty means valid.
inline std::vector<WeightViolation> validate(const Network& net)
{
  std::vector<WeightViolation> out;
  const std::size_t n = net.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double w = net(i, j);
      if (!std::isfinite(w))
        out.push_back({WeightViolation::Kind::non_finite, i, j, w});
      else if (w < 0.0)
        out.push_back({WeightViolation::Kind::negative, i, j, w});
      else if (i == j && w != 0.0)
        out.push_back({WeightViolation::Kind::nonzero_diagonal, i, j, w});
    }
  }
  return out;
}

/// Sum of incoming weights of individual i.
inline double total_connection(const Network& net, std::size_t i)
{
  if (i >= net.size())
    throw std::out_of_range("individual " + std::to_string(i) + " out of range for network of " +
                            std::to_string(net.size()));
  double sum = 0.0;
  for (double w : net.row(i))
    sum += w;
  return sum;
}

/// Random network generator settings.
struct GeneratorConfig {
  std::size_t n = 100;
  double sparsity_threshold = 0.7;  // entries drawn below this are zeroed
  double multiplier_max = 0.0;      // 0 disables the per-row multiplier
  std::uint64_t seed = 0;

  void check() const
  {
    if (n < 2)
      throw std::invalid_argument("generator n must be >= 2");
    if (!(sparsity_threshold >= 0.0 && sparsity_threshold <= 1.0))
      throw std::invalid_argument("generator sparsity_threshold must lie in [0, 1]");
    if (!(multiplier_max >= 0.0) || !std::isfinite(multiplier_max))
      throw std::invalid_argument("generator multiplier_max must be finite and >= 0");
  }
};

/// Draws an n x n matrix of U[0,1) entries (row-major), zeroes entries below
/// the sparsity threshold, then scales row i by one U[0, multiplier_max) draw
/// per row when multiplier_max > 0, and finally zeroes the diagonal.
inline Network generate_network(const GeneratorConfig& cfg)
{
  cfg.check();
  Rng rng(cfg.seed);
  const std::size_t n = cfg.n;
  std::vector<double> w(n * n);
  for (double& x : w) {
    const double u = rng.uniform();
    x = u < cfg.sparsity_threshold ? 0.0 : u;
  }
  if (cfg.multiplier_max > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double m = rng.uniform(0.0, cfg.multiplier_max);
      for (std::size_t j = 0; j < n; ++j)
        w[i * n + j] *= m;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    w[i * n + i] = 0.0;
  return Network(n, std::move(w), "generated");
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view field, std::size_t line)
{
  const std::string tok(trim(field));
  if (tok.empty())
    throw ParseError(line, "empty field");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "not a number: '" + tok + "'");
  }
  if (used != tok.size())
    throw ParseError(line, "not a number: '" + tok + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

} // namespace detail

/// Reads a square comma-separated matrix. Blank lines are skipped; a ragged
/// or non-square matrix is a ParseError naming the line.
inline Network read_network_csv(std::istream& in, bool has_header = false, std::string label = {})
{
  std::vector<double> w;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty())
      continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = detail::split(body, ',');
    if (rows == 0)
      width = fields.size();
    else if (fields.size() != width)
      throw ParseError(line_no, "ragged row: " + std::to_string(fields.size()) +
                                    " fields, expected " + std::to_string(width));
    for (auto f : fields)
      w.push_back(detail::parse_double(f, line_no));
    ++rows;
  }
  if (rows == 0)
    throw ParseError(0, "network file has no rows");
  if (rows != width)
    throw ParseError(0, "network is not square: " + std::to_string(rows) + " rows x " +
                            std::to_string(width) + " columns");
  return Network(rows, std::move(w), std::move(label));
}

inline Network load_network_csv(const std::string& path, bool has_header = false)
{
  std::ifstream in(path);
  if (!in)
    throw ParseError(0, "cannot open network file '" + path + "'");
  return read_network_csv(in, has_header, path);
}

inline void write_network_csv(std::ostream& out, const Network& net)
{
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (std::size_t j = 0; j < net.size(); ++j) {
      if (j)
        out << ',';
      out << net(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

} // namespace cnbda

#endif // CNBDA_NETWORK_HPP
