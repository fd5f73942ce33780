#include "mstp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mstp/error.hpp"

namespace mstp {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string& text, const std::string& where) {
  std::string s = text;
  for (auto& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(s);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw Error(Errc::ParseError, where + ": '" + token + "' is not a number");
    out.push_back(v);
  }
  return out;
}

}  // namespace

double product_bound(std::span<const double> accuracies) {
  if (accuracies.empty()) throw Error(Errc::InvalidArgument, "product bound needs at least one marginal");
  double p = 100.0;
  for (double a : accuracies) {
    if (!(a >= 0 && a <= 100)) throw Error(Errc::InvalidArgument, "marginal accuracy outside [0, 100]");
    p *= a / 100.0;
  }
  return p;
}

double product_bound(std::span<const Marginal> marginals) {
  std::vector<double> values;
  for (const auto& m : marginals) values.push_back(m.accuracy);
  return product_bound(values);
}

double mc_gap(double mc_accuracy, double pi) {
  if (!(mc_accuracy >= 0 && mc_accuracy <= 100) || !(pi >= 0 && pi <= 100)) {
    throw Error(Errc::InvalidArgument, "accuracies must lie in [0, 100]");
  }
  return mc_accuracy - pi;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The nudge absorbs binary representation error on exact ties.
  return std::round(value * scale * (1 + 1e-12)) / scale;
}

double correlation_t_statistic(double r, std::size_t n) {
  if (n < 3) return std::numeric_limits<double>::quiet_NaN();
  const double denom = 1 - r * r;
  if (denom <= 0) return r > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  return r * std::sqrt(static_cast<double>(n - 2) / denom);
}

RegressionFit fit_accuracy_fid(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw Error(Errc::DegenerateInput, "need at least two (accuracy, fid) points");
  const auto n = static_cast<double>(points.size());
  double mx = 0, my = 0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0) throw Error(Errc::DegenerateInput, "accuracy column is constant");

  RegressionFit fit;
  fit.n = points.size();
  const double b = sxy / sxx;  // fid = a + b * acc
  fit.slope = -b;
  fit.intercept = my - b * mx;
  fit.r = syy == 0 ? 0.0 : std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  fit.t_statistic = correlation_t_statistic(fit.r, fit.n);
  for (const auto& [x, y] : points) {
    fit.max_residual = std::max(fit.max_residual, std::abs(y - (fit.intercept - fit.slope * x)));
  }
  return fit;
}

std::vector<ProductRow> read_product_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<ProductRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    ProductRow row;
    if (auto colon = line.find(':'); colon != std::string::npos) {
      row.label = trim(line.substr(0, colon));
      line = line.substr(colon + 1);
    }
    std::string mc;
    if (auto semi = line.find(';'); semi != std::string::npos) {
      mc = line.substr(semi + 1);
      line.resize(semi);
    }
    row.marginals = parse_numbers(line, where);
    if (row.marginals.empty()) throw Error(Errc::ParseError, where + ": no marginal accuracies");
    if (!trim(mc).empty()) {
      const auto v = parse_numbers(mc, where);
      if (v.size() != 1) throw Error(Errc::ParseError, where + ": expected one MC accuracy after ';'");
      row.mc_accuracy = v.front();
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::EmptyInput, path.string() + ": no rows");
  return rows;
}

std::vector<std::pair<double, double>> read_accuracy_fid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<std::pair<double, double>> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::vector<double> v;
    try {
      v = parse_numbers(line, where);
    } catch (const Error&) {
      if (points.empty() && line_no == 1) continue;  // header
      throw;
    }
    if (v.size() != 2) throw Error(Errc::ParseError, where + ": expected accuracy,fid");
    points.emplace_back(v[0], v[1]);
  }
  return points;
}

void write_fit_plot(std::ostream& out, std::span<const std::pair<double, double>> points, const RegressionFit& fit) {
  out << "accuracy,fid,fitted\n";
  out.precision(10);
  for (const auto& [x, y] : points) out << x << ',' << y << ',' << (fit.intercept - fit.slope * x) << '\n';
}

}  // namespace mstp
