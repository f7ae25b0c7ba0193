#pragma once

// Multi-label evaluation: per-dimension accuracy and macro-F1, partial
// match accuracy PMA@k, Hamming loss, Cohen's kappa and confusion matrices.

#include <array>
#include <set>
#include <string>
#include <vector>

#include "hyco/core.hpp"
#include "hyco/taxonomy.hpp"

namespace hyco::metrics {

struct PredictionRow {
  std::string id;
  taxonomy::CognitiveLabel pred;
  taxonomy::CognitiveLabel gold;
};

using PredictionSet = std::vector<PredictionRow>;

struct DimensionScores {
  double acc = 0.0;
  double macro_f1 = 0.0;
};

struct MetricsReport {
  std::array<DimensionScores, 4> per_dimension;  // emotion, thinking, stance, intent
  std::array<double, 4> pma;                     // pma[k-1] = fraction with >= k correct
  double hamming_loss = 0.0;
};

namespace detail {

inline void validate_rows(const taxonomy::Taxonomy& tax, const PredictionSet& preds) {
  if (preds.empty()) throw invalid_input_error("evaluate: empty prediction set");
  std::set<std::string> ids;
  for (const auto& row : preds) {
    if (!ids.insert(row.id).second)
      throw invalid_input_error("evaluate: duplicate id '" + row.id + "'");
    try {
      taxonomy::validate_label(tax, row.pred);
      taxonomy::validate_label(tax, row.gold);
    } catch (const error& e) {
      throw invalid_input_error("evaluate: row '" + row.id + "': " + e.what());
    }
  }
}

// Unweighted mean of per-class F1 over the full class set of one dimension.
// A class absent from both gold and predictions contributes F1 = 0.
inline double macro_f1_for_dim(const taxonomy::Taxonomy& tax, const PredictionSet& preds, int k) {
  const int classes = tax.dim(k).leaf_count();
  double sum = 0.0;
  for (int c = 0; c < classes; ++c) {
    long long tp = 0, fp = 0, fn = 0;
    for (const auto& row : preds) {
      const bool g = row.gold[k] == c;
      const bool p = row.pred[k] == c;
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
    }
    const double prec = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    sum += prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  return sum / classes;
}

}  // namespace detail

inline MetricsReport evaluate(const taxonomy::Taxonomy& tax, const PredictionSet& preds) {
  detail::validate_rows(tax, preds);
  const double n = static_cast<double>(preds.size());
  MetricsReport r;
  long long wrong_slots = 0;
  std::array<long long, 5> correct_count_hist{};  // histogram of per-sample correct dims
  for (int k = 0; k < 4; ++k) {
    long long correct = 0;
    for (const auto& row : preds) correct += row.pred[k] == row.gold[k];
    r.per_dimension[k].acc = correct / n;
    r.per_dimension[k].macro_f1 = detail::macro_f1_for_dim(tax, preds, k);
    wrong_slots += preds.size() - correct;
  }
  for (const auto& row : preds) {
    int c = 0;
    for (int k = 0; k < 4; ++k) c += row.pred[k] == row.gold[k];
    ++correct_count_hist[c];
  }
  for (int k = 1; k <= 4; ++k) {
    long long at_least = 0;
    for (int c = k; c <= 4; ++c) at_least += correct_count_hist[c];
    r.pma[k - 1] = at_least / n;
  }
  r.hamming_loss = wrong_slots / (4.0 * n);
  return r;
}

/// kappa = (p_o - p_e) / (1 - p_e); chance agreement p_e from the product of
/// the two marginal distributions. Degenerate fully-concentrated marginals
/// (p_e = 1) return 1.
inline double cohen_kappa(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw invalid_input_error("cohen_kappa: length mismatch");
  if (labels_a.empty()) throw invalid_input_error("cohen_kappa: empty input");
  const double n = static_cast<double>(labels_a.size());
  std::set<int> classes(labels_a.begin(), labels_a.end());
  classes.insert(labels_b.begin(), labels_b.end());
  double po = 0.0;
  for (size_t i = 0; i < labels_a.size(); ++i) po += labels_a[i] == labels_b[i];
  po /= n;
  double pe = 0.0;
  for (int c : classes) {
    double ca = 0.0, cb = 0.0;
    for (int v : labels_a) ca += v == c;
    for (int v : labels_b) cb += v == c;
    pe += (ca / n) * (cb / n);
  }
  if (pe >= 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

/// K x K count matrix for one dimension; rows index gold, columns predicted.
inline Mat confusion_matrix(const taxonomy::Taxonomy& tax, const PredictionSet& preds,
                            const std::string& dimension) {
  int k = -1;
  for (int i = 0; i < 4; ++i)
    if (tax.dim(i).name == dimension) k = i;
  if (k < 0) throw invalid_input_error("confusion_matrix: unknown dimension '" + dimension + "'");
  detail::validate_rows(tax, preds);
  const int classes = tax.dim(k).leaf_count();
  Mat m(classes, classes);
  for (const auto& row : preds) m(row.gold[k], row.pred[k]) += 1.0;
  return m;
}

}  // namespace hyco::metrics
