#include "mstp/feature_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mstp/error.hpp"
#include "mstp/log.hpp"
#include "mstp/random.hpp"

namespace mstp {
namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const Matrix> as_matrix(const FeatureSet& f) {
  return {f.values.data(), static_cast<Eigen::Index>(f.n), static_cast<Eigen::Index>(f.d)};
}

void check_pair(const FeatureSet& a, const FeatureSet& b) {
  if (a.d != b.d) {
    throw Error(Errc::DimensionMismatch,
                "feature dimensions differ: " + std::to_string(a.d) + " vs " + std::to_string(b.d));
  }
  if (a.n < 2 || b.n < 2) throw Error(Errc::EmptyInput, "need at least two feature vectors per set");
}

double read_number(std::istream& in, const std::filesystem::path& path) {
  double v;
  if (!(in >> v)) throw Error(Errc::ParseError, path.string() + ": truncated or non-numeric matrix data");
  if (!std::isfinite(v)) throw Error(Errc::ParseError, path.string() + ": non-finite value");
  return v;
}

nlohmann::json read_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, path.string() + ": bad header: " + e.what());
    }
  }
  return nullptr;
}

double kernel(std::span<const double> x, std::span<const double> y) {
  double dot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  const double base = dot / static_cast<double>(x.size()) + 1.0;
  return base * base * base;
}

double kid_rows(const FeatureSet& r, std::span<const std::size_t> ri, const FeatureSet& g,
                std::span<const std::size_t> gi) {
  const auto m = static_cast<double>(ri.size()), n = static_cast<double>(gi.size());
  double rr = 0, gg = 0, rg = 0;
  for (std::size_t i = 0; i < ri.size(); ++i)
    for (std::size_t j = i + 1; j < ri.size(); ++j) rr += kernel(r.row(ri[i]), r.row(ri[j]));
  for (std::size_t i = 0; i < gi.size(); ++i)
    for (std::size_t j = i + 1; j < gi.size(); ++j) gg += kernel(g.row(gi[i]), g.row(gi[j]));
  for (auto i : ri)
    for (auto j : gi) rg += kernel(r.row(i), g.row(j));
  return 2 * rr / (m * (m - 1)) + 2 * gg / (n * (n - 1)) - 2 * rg / (m * n);
}

}  // namespace

FeatureSet::FeatureSet(std::size_t rows, std::size_t dims, std::vector<double> data, std::string name)
    : n(rows), d(dims), values(std::move(data)), label(std::move(name)) {
  if (values.size() != n * d) throw Error(Errc::InvalidArgument, "feature data size does not match n*d");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "feature values must be finite");
  }
}

FeatureSet read_feature_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  const auto header = read_header(in, path);
  if (!header.is_object()) throw Error(Errc::ParseError, path.string() + ": missing {n, d} header");
  std::size_t n = 0, d = 0;
  try {
    n = header.at("n").get<std::size_t>();
    d = header.at("d").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": header needs integer n and d");
  }
  std::vector<double> values(n * d);
  if (header.value("format", "text") == "f64le") {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double))) {
      throw Error(Errc::ParseError, path.string() + ": truncated binary matrix");
    }
  } else {
    for (auto& v : values) v = read_number(in, path);
  }
  try {
    return FeatureSet(n, d, std::move(values), header.value("label", ""));
  } catch (const Error& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

void write_feature_set(const FeatureSet& f, const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  nlohmann::json header = {{"n", f.n}, {"d", f.d}, {"label", f.label}};
  if (binary) header["format"] = "f64le";
  out << header.dump() << '\n';
  if (binary) {
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  } else {
    out.precision(17);
    for (std::size_t i = 0; i < f.n; ++i) {
      for (std::size_t j = 0; j < f.d; ++j) out << (j ? " " : "") << f.values[i * f.d + j];
      out << '\n';
    }
  }
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

double fid(const FeatureSet& real, const FeatureSet& generated) {
  check_pair(real, generated);
  const auto r = as_matrix(real);
  const auto g = as_matrix(generated);
  const Eigen::RowVectorXd mu_r = r.colwise().mean();
  const Eigen::RowVectorXd mu_g = g.colwise().mean();
  const Eigen::MatrixXd cr = r.rowwise() - mu_r;
  const Eigen::MatrixXd cg = g.rowwise() - mu_g;
  const Eigen::MatrixXd sigma_r = (cr.transpose() * cr) / static_cast<double>(real.n - 1);
  const Eigen::MatrixXd sigma_g = (cg.transpose() * cg) / static_cast<double>(generated.n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(sigma_g);
  const Eigen::VectorXd root_vals = eg.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd root_g = eg.eigenvectors() * root_vals.asDiagonal() * eg.eigenvectors().transpose();
  Eigen::MatrixXd inner = root_g * sigma_r * root_g;
  inner = (inner + inner.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ei(inner, Eigen::EigenvaluesOnly);

  double trace_sqrt = 0;
  const double min_eig = ei.eigenvalues().minCoeff();
  if (min_eig < -1e-8) log::warn("fid: covariance product has eigenvalue " + std::to_string(min_eig) + "; clamping to 0");
  for (Eigen::Index i = 0; i < ei.eigenvalues().size(); ++i) trace_sqrt += std::sqrt(std::max(ei.eigenvalues()(i), 0.0));

  const double mean_term = (mu_r - mu_g).squaredNorm();
  const double value = mean_term + sigma_r.trace() + sigma_g.trace() - 2.0 * trace_sqrt;
  return std::max(value, 0.0);
}

double kid(const FeatureSet& real, const FeatureSet& generated) {
  check_pair(real, generated);
  std::vector<std::size_t> ri(real.n), gi(generated.n);
  std::iota(ri.begin(), ri.end(), 0);
  std::iota(gi.begin(), gi.end(), 0);
  return kid_rows(real, ri, generated, gi);
}

KidEstimate kid_subsets(const FeatureSet& real, const FeatureSet& generated, std::size_t subsets,
                        std::size_t subset_size, std::uint64_t seed) {
  check_pair(real, generated);
  if (subsets < 2) throw Error(Errc::InvalidArgument, "need at least two subsets for a standard error");
  if (subset_size < 2 || subset_size > real.n || subset_size > generated.n) {
    throw Error(Errc::InvalidArgument, "subset size must be in [2, min(n_real, n_generated)]");
  }
  RandomStream rng(seed);
  auto draw = [&](std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < subset_size; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(subset_size);
    return idx;
  };
  std::vector<double> values;
  for (std::size_t s = 0; s < subsets; ++s) {
    const auto ri = draw(real.n);
    const auto gi = draw(generated.n);
    values.push_back(kid_rows(real, ri, generated, gi));
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

Activations read_activations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  Activations acts;
  for (auto header = read_header(in, path); !header.is_null(); header = read_header(in, path)) {
    ActivationLayer layer;
    try {
      layer.name = header.at("layer").get<std::string>();
      layer.channels = header.at("C").get<std::size_t>();
      layer.height = header.at("H").get<std::size_t>();
      layer.width = header.at("W").get<std::size_t>();
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::ParseError, path.string() + ": layer header needs layer, C, H, W");
    }
    layer.values.resize(layer.channels * layer.height * layer.width);
    for (auto& v : layer.values) v = read_number(in, path);
    acts.push_back(std::move(layer));
    // Finish the current line so the next header starts clean.
    std::string rest;
    std::getline(in, rest);
  }
  return acts;
}

void write_activations(const Activations& acts, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.precision(17);
  for (const auto& l : acts) {
    out << nlohmann::json{{"layer", l.name}, {"C", l.channels}, {"H", l.height}, {"W", l.width}}.dump() << '\n';
    for (std::size_t i = 0; i < l.values.size(); ++i) out << (i ? " " : "") << l.values[i];
    out << '\n';
  }
}

double lpips(const Activations& a, const Activations& b, std::span<const double> weights) {
  if (a.size() != b.size()) throw Error(Errc::ShapeMismatch, "activation sets have different layer counts");
  if (!weights.empty() && weights.size() != a.size()) {
    throw Error(Errc::ShapeMismatch, "need one weight per layer");
  }
  constexpr double eps = 1e-10;
  double total = 0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    const auto& la = a[l];
    const auto& lb = b[l];
    if (la.channels != lb.channels || la.height != lb.height || la.width != lb.width ||
        la.values.size() != la.channels * la.height * la.width || lb.values.size() != la.values.size()) {
      throw Error(Errc::ShapeMismatch, "layer " + std::to_string(l) + " shapes differ");
    }
    const std::size_t cells = la.height * la.width;
    double layer_sum = 0;
    for (std::size_t p = 0; p < cells; ++p) {
      double na = 0, nb = 0;
      for (std::size_t c = 0; c < la.channels; ++c) {
        na += la.values[c * cells + p] * la.values[c * cells + p];
        nb += lb.values[c * cells + p] * lb.values[c * cells + p];
      }
      na = std::sqrt(na) + eps;
      nb = std::sqrt(nb) + eps;
      double dist = 0;
      for (std::size_t c = 0; c < la.channels; ++c) {
        const double d = la.values[c * cells + p] / na - lb.values[c * cells + p] / nb;
        dist += d * d;
      }
      layer_sum += dist;
    }
    const double w = weights.empty() ? 1.0 : weights[l];
    total += w * layer_sum / static_cast<double>(cells);
  }
  return total;
}

double clipscore(std::span<const double> image_embedding, std::span<const double> text_embedding) {
  if (image_embedding.size() != text_embedding.size()) {
    throw Error(Errc::DimensionMismatch, "embedding dimensions differ");
  }
  double dot = 0, ni = 0, nt = 0;
  for (std::size_t i = 0; i < image_embedding.size(); ++i) {
    dot += image_embedding[i] * text_embedding[i];
    ni += image_embedding[i] * image_embedding[i];
    nt += text_embedding[i] * text_embedding[i];
  }
  if (ni == 0 || nt == 0) throw Error(Errc::ZeroVector, "embedding has zero norm");
  const double cosine = std::clamp(dot / (std::sqrt(ni) * std::sqrt(nt)), -1.0, 1.0);
  return std::max(100.0 * cosine, 0.0);
}

double r_precision(std::span<const std::string> ranked, const std::set<std::string>& relevant, std::size_t r) {
  if (ranked.empty()) throw Error(Errc::EmptyRanking, "ranking is empty");
  if (r < 1) throw Error(Errc::InvalidArgument, "R must be >= 1");
  if (relevant.empty()) throw Error(Errc::InvalidArgument, "relevant set is empty");
  std::size_t hits = 0;
  const auto top = std::min(r, ranked.size());
  for (std::size_t i = 0; i < top; ++i) hits += relevant.count(ranked[i]);
  return static_cast<double>(hits) / static_cast<double>(std::min(r, relevant.size()));
}

}  // namespace mstp
