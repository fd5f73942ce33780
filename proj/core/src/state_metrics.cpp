#include "mstp/state_metrics.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include "mstp/error.hpp"

namespace mstp {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

StateMetricsReport state_metrics(std::span<const std::string> predicted, std::span<const std::string> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(Errc::LengthMismatch, "predicted has " + std::to_string(predicted.size()) + " labels, truth has " +
                                          std::to_string(truth.size()));
  }
  if (truth.empty()) throw Error(Errc::EmptyInput, "no frames to score");

  struct Counts {
    std::size_t tp = 0, gt = 0, pred = 0;
  };
  std::map<std::string, Counts> counts;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& g = counts[truth[i]];
    ++g.gt;
    ++counts[predicted[i]].pred;
    if (predicted[i] == truth[i]) {
      ++correct;
      ++g.tp;
    }
  }

  StateMetricsReport report;
  report.frame_count = truth.size();
  report.accuracy = ratio(correct, truth.size());
  for (const auto& [label, c] : counts) {
    ClassMetrics m;
    m.label = label;
    m.truth_count = c.gt;
    m.predicted_count = c.pred;
    m.precision = ratio(c.tp, c.pred);
    m.recall = ratio(c.tp, c.gt);
    m.jaccard = ratio(c.tp, c.gt + c.pred - c.tp);
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    report.macro_precision += m.precision;
    report.macro_recall += m.recall;
    report.macro_f1 += m.f1;
    report.macro_jaccard += m.jaccard;
    report.classes.push_back(std::move(m));
  }
  const auto n = static_cast<double>(report.classes.size());
  report.macro_precision /= n;
  report.macro_recall /= n;
  report.macro_f1 /= n;
  report.macro_jaccard /= n;
  return report;
}

std::string joint_label(const StateVector& state) {
  std::string out;
  for (std::size_t i = 0; i < state.labels.size(); ++i) {
    if (i) out += '|';
    out += state.labels[i];
  }
  return out;
}

StateMetricsReport joint_state_metrics(std::span<const StateVector> predicted, std::span<const StateVector> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(Errc::LengthMismatch, "predicted and truth sequences differ in length");
  }
  std::vector<std::string> p, t;
  p.reserve(predicted.size());
  t.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i].depth() != truth[i].depth()) {
      throw Error(Errc::LengthMismatch, "state depth differs at frame " + std::to_string(i));
    }
    p.push_back(joint_label(predicted[i]));
    t.push_back(joint_label(truth[i]));
  }
  return state_metrics(p, t);
}

StateMetricsReport level_state_metrics(std::span<const StateVector> predicted, std::span<const StateVector> truth,
                                       std::size_t level) {
  if (predicted.size() != truth.size()) {
    throw Error(Errc::LengthMismatch, "predicted and truth sequences differ in length");
  }
  std::vector<std::string> p, t;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (level < 1 || level > truth[i].depth() || level > predicted[i].depth()) {
      throw Error(Errc::InvalidArgument, "level " + std::to_string(level) + " outside the state depth");
    }
    p.push_back(predicted[i].at(level));
    t.push_back(truth[i].at(level));
  }
  return state_metrics(p, t);
}

void to_json(nlohmann::json& j, const ClassMetrics& m) {
  j = {{"label", m.label},         {"precision", m.precision},       {"recall", m.recall},
       {"f1", m.f1},               {"jaccard", m.jaccard},           {"truth_count", m.truth_count},
       {"predicted_count", m.predicted_count}};
}

void from_json(const nlohmann::json& j, ClassMetrics& m) {
  j.at("label").get_to(m.label);
  j.at("precision").get_to(m.precision);
  j.at("recall").get_to(m.recall);
  j.at("f1").get_to(m.f1);
  j.at("jaccard").get_to(m.jaccard);
  j.at("truth_count").get_to(m.truth_count);
  j.at("predicted_count").get_to(m.predicted_count);
}

void to_json(nlohmann::json& j, const StateMetricsReport& r) {
  j = {{"accuracy", r.accuracy},
       {"macro_precision", r.macro_precision},
       {"macro_recall", r.macro_recall},
       {"macro_f1", r.macro_f1},
       {"macro_jaccard", r.macro_jaccard},
       {"frame_count", r.frame_count},
       {"classes", r.classes}};
}

void from_json(const nlohmann::json& j, StateMetricsReport& r) {
  j.at("accuracy").get_to(r.accuracy);
  j.at("macro_precision").get_to(r.macro_precision);
  j.at("macro_recall").get_to(r.macro_recall);
  j.at("macro_f1").get_to(r.macro_f1);
  j.at("macro_jaccard").get_to(r.macro_jaccard);
  j.at("frame_count").get_to(r.frame_count);
  j.at("classes").get_to(r.classes);
}

std::string metrics_table(const StateMetricsReport& report, const std::string& scope) {
  std::ostringstream out;
  out << std::setprecision(17);
  const std::string prefix = scope.empty() ? "" : scope + ".";
  out << prefix << "accuracy\tall\t" << report.accuracy << '\n';
  out << prefix << "precision\tmacro\t" << report.macro_precision << '\n';
  out << prefix << "recall\tmacro\t" << report.macro_recall << '\n';
  out << prefix << "f1\tmacro\t" << report.macro_f1 << '\n';
  out << prefix << "jaccard\tmacro\t" << report.macro_jaccard << '\n';
  for (const auto& c : report.classes) {
    out << prefix << "precision\t" << c.label << '\t' << c.precision << '\n';
    out << prefix << "recall\t" << c.label << '\t' << c.recall << '\n';
    out << prefix << "f1\t" << c.label << '\t' << c.f1 << '\n';
    out << prefix << "jaccard\t" << c.label << '\t' << c.jaccard << '\n';
  }
  return out.str();
}

}  // namespace mstp
