#pragma once

// Four-dimensional cognitive label hierarchy, complete b-ary tree metrics,
// JSONL dataset ingestion and a synthetic hierarchical feature generator.

#include <array>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hyco/core.hpp"
#include "hyco/hyperbolicity.hpp"

namespace hyco::taxonomy {

struct DimensionSpec {
  std::string name;
  // Category name -> leaf labels under it, in fixed order.
  std::vector<std::pair<std::string, std::vector<std::string>>> categories;
  std::vector<std::string> leaves;      // flattened in category order
  std::vector<int> leaf_category;       // leaf index -> category index

  int leaf_count() const { return static_cast<int>(leaves.size()); }

  /// Index of a leaf label, or -1 if the string is not a leaf here.
  int leaf_index(const std::string& label) const {
    for (size_t i = 0; i < leaves.size(); ++i)
      if (leaves[i] == label) return static_cast<int>(i);
    return -1;
  }
};

struct Taxonomy {
  std::vector<DimensionSpec> dimensions;  // emotion, thinking, stance, intent

  const DimensionSpec& dim(int k) const { return dimensions.at(k); }
  std::array<int, 4> leaf_counts() const {
    return {dimensions[0].leaf_count(), dimensions[1].leaf_count(), dimensions[2].leaf_count(),
            dimensions[3].leaf_count()};
  }
  long long joint_space_size() const {
    long long p = 1;
    for (const auto& d : dimensions) p *= d.leaf_count();
    return p;
  }
};

/// Joint cognitive state: one leaf id per dimension.
struct CognitiveLabel {
  int emotion = 0;
  int thinking = 0;
  int stance = 0;
  int intent = 0;

  int operator[](int k) const {
    switch (k) {
      case 0: return emotion;
      case 1: return thinking;
      case 2: return stance;
      case 3: return intent;
    }
    throw invalid_input_error("CognitiveLabel: dimension index out of range");
  }
  int& operator[](int k) {
    switch (k) {
      case 0: return emotion;
      case 1: return thinking;
      case 2: return stance;
      case 3: return intent;
    }
    throw invalid_input_error("CognitiveLabel: dimension index out of range");
  }
  bool operator==(const CognitiveLabel&) const = default;
};

struct Sample {
  std::string id;
  std::string context;
  std::string target;
  CognitiveLabel label;
  std::optional<std::string> topic;
  std::optional<std::string> stance_target;
};

struct SyntheticTree {
  int branching_b = 2;
  int depth_k = 1;
  double edge_length = 1.0;
};

namespace detail {

inline DimensionSpec make_dim(
    std::string name,
    std::vector<std::pair<std::string, std::vector<std::string>>> cats) {
  DimensionSpec d;
  d.name = std::move(name);
  d.categories = std::move(cats);
  for (size_t c = 0; c < d.categories.size(); ++c)
    for (const auto& leaf : d.categories[c].second) {
      d.leaves.push_back(leaf);
      d.leaf_category.push_back(static_cast<int>(c));
    }
  return d;
}

}  // namespace detail

/// The fixed 9/8/3/7-leaf hierarchy. Stance has no intermediate level, so
/// each stance leaf doubles as its own category.
inline Taxonomy builtin_taxonomy() {
  Taxonomy t;
  t.dimensions.push_back(detail::make_dim(
      "emotion", {{"Positive", {"Joy", "Trust", "Anticipation", "Surprise"}},
                  {"Negative", {"Anger", "Disgust", "Fear", "Sadness"}},
                  {"Neutral", {"Neutral"}}}));
  t.dimensions.push_back(detail::make_dim(
      "thinking",
      {{"Intuitive",
        {"Subjective Evaluation", "Identity Conformity", "Emotional Judgment", "Experience-Based"}},
       {"Analytical", {"Logical", "Balanced Consideration", "Evidence-Based", "Critical"}}}));
  t.dimensions.push_back(detail::make_dim(
      "stance", {{"Support", {"Support"}}, {"Oppose", {"Oppose"}}, {"Unclear", {"Unclear"}}}));
  t.dimensions.push_back(detail::make_dim(
      "intent", {{"Representatives", {"Information Sharing", "Opinion Expression"}},
                 {"Directives", {"Information Seeking", "Call to Action"}},
                 {"Expressives", {"Connection", "Conflict", "Emotional Expression"}}}));
  return t;
}

inline void validate_label(const Taxonomy& tax, const CognitiveLabel& y) {
  for (int k = 0; k < 4; ++k)
    if (y[k] < 0 || y[k] >= tax.dim(k).leaf_count())
      throw invalid_input_error("CognitiveLabel: leaf id out of range for " + tax.dim(k).name);
}

/// Pairwise shortest-path distances on the complete b-ary tree of the given
/// depth (nodes in breadth-first order, root first).
inline hyperbolicity::MetricSample tree_metric(const SyntheticTree& t) {
  if (t.branching_b < 2) throw invalid_input_error("tree_metric: branching factor must be > 1");
  if (t.depth_k < 0) throw invalid_input_error("tree_metric: negative depth");
  if (!(t.edge_length > 0.0)) throw invalid_input_error("tree_metric: edge length must be > 0");
  long long count = 0, layer = 1;
  for (int j = 0; j <= t.depth_k; ++j) {
    count += layer;
    if (count > 5000) throw too_large_error("tree_metric: node count exceeds 5000");
    layer *= t.branching_b;
  }
  const int n = static_cast<int>(count);
  std::vector<int> parent(n, -1), depth(n, 0);
  {
    // BFS order: node i's children occupy b*i+1 .. b*i+b.
    for (int i = 1; i < n; ++i) {
      parent[i] = (i - 1) / t.branching_b;
      depth[i] = depth[parent[i]] + 1;
    }
  }
  Mat d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int a = i, b = j, hops = 0;
      while (depth[a] > depth[b]) a = parent[a], ++hops;
      while (depth[b] > depth[a]) b = parent[b], ++hops;
      while (a != b) a = parent[a], b = parent[b], hops += 2;
      d(i, j) = d(j, i) = hops * t.edge_length;
    }
  return hyperbolicity::MetricSample::from_matrix(std::move(d));
}

/// Number of nodes at depth k of the complete b-ary tree.
inline long long leaf_count(const SyntheticTree& t) {
  long long c = 1;
  for (int j = 0; j < t.depth_k; ++j) c *= t.branching_b;
  return c;
}

namespace detail {

[[noreturn]] inline void reject(int line_no, const std::string& what) {
  throw schema_error("line " + std::to_string(line_no) + ": " + what);
}

inline std::string require_string(const nlohmann::json& obj, const char* field, int line_no) {
  auto it = obj.find(field);
  if (it == obj.end()) reject(line_no, std::string("missing field '") + field + "'");
  if (!it->is_string()) reject(line_no, std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

inline int require_leaf(const Taxonomy& tax, int dim, const nlohmann::json& obj, int line_no) {
  const auto& spec = tax.dim(dim);
  const std::string value = require_string(obj, spec.name.c_str(), line_no);
  const int idx = spec.leaf_index(value);
  if (idx < 0)
    reject(line_no, "field '" + spec.name + "': unknown label '" + value + "'");
  return idx;
}

}  // namespace detail

/// Parse a JSONL dataset. Every line must be an object carrying id, context,
/// target and the four label fields; topic and stance_target are optional.
/// Rejections name the offending line and field.
inline std::vector<Sample> load_dataset(const std::string& path, const Taxonomy& tax) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("load_dataset: cannot open " + path);
  std::vector<Sample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      detail::reject(line_no, "malformed JSON");
    }
    if (!obj.is_object()) detail::reject(line_no, "not a JSON object");
    Sample s;
    s.id = detail::require_string(obj, "id", line_no);
    s.context = detail::require_string(obj, "context", line_no);
    s.target = detail::require_string(obj, "target", line_no);
    s.label.emotion = detail::require_leaf(tax, 0, obj, line_no);
    s.label.thinking = detail::require_leaf(tax, 1, obj, line_no);
    s.label.stance = detail::require_leaf(tax, 2, obj, line_no);
    s.label.intent = detail::require_leaf(tax, 3, obj, line_no);
    if (auto it = obj.find("topic"); it != obj.end()) {
      if (!it->is_string()) detail::reject(line_no, "field 'topic' must be a string");
      s.topic = it->get<std::string>();
    }
    if (auto it = obj.find("stance_target"); it != obj.end()) {
      if (!it->is_string()) detail::reject(line_no, "field 'stance_target' must be a string");
      s.stance_target = it->get<std::string>();
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Inverse of load_dataset; field order is fixed so saves are reproducible.
inline void save_dataset(const std::string& path, const std::vector<Sample>& samples,
                         const Taxonomy& tax) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("save_dataset: cannot open " + path);
  for (const auto& s : samples) {
    validate_label(tax, s.label);
    nlohmann::ordered_json obj;
    obj["id"] = s.id;
    obj["context"] = s.context;
    obj["target"] = s.target;
    obj["emotion"] = tax.dim(0).leaves[s.label.emotion];
    obj["thinking"] = tax.dim(1).leaves[s.label.thinking];
    obj["stance"] = tax.dim(2).leaves[s.label.stance];
    obj["intent"] = tax.dim(3).leaves[s.label.intent];
    if (s.topic) obj["topic"] = *s.topic;
    if (s.stance_target) obj["stance_target"] = *s.stance_target;
    out << obj.dump() << '\n';
  }
}

/// Hierarchical feature generator: features = per-category prototype plus a
/// half-magnitude per-leaf prototype, summed over the four dimensions, plus
/// Gaussian noise. Prototypes are fixed (independent of the caller's seed);
/// label draws and noise derive from the seed.
///
/// Within each dimension the category prototypes are orthogonal with norm 2
/// and the leaf prototypes are unit vectors orthogonal to every category
/// prototype. Two noise-free samples differing only inside one category are
/// then at most 2 apart, while a category change contributes at least
/// sqrt(8) > 2, so hierarchy survives in Euclidean distance by construction.
inline std::pair<Mat, std::vector<CognitiveLabel>> generate_synthetic(
    const Taxonomy& tax, int n, int feature_dim, double noise, uint64_t seed,
    const std::array<std::vector<double>, 4>* leaf_weights = nullptr) {
  if (n < 1) throw invalid_input_error("generate_synthetic: n must be >= 1");
  if (feature_dim < 8) throw invalid_input_error("generate_synthetic: feature_dim must be >= 8");
  if (noise < 0.0) throw invalid_input_error("generate_synthetic: negative noise");

  Rng prng(0x9d2c5680u);  // prototype stream, independent of the caller's seed
  std::array<std::vector<Vec>, 4> cat_proto, leaf_proto;
  for (int k = 0; k < 4; ++k) {
    const auto& spec = tax.dim(k);
    const int ncat = static_cast<int>(spec.categories.size());
    cat_proto[k].assign(ncat, Vec(feature_dim, 0.0));
    for (int c = 0; c < ncat; ++c) {
      Vec& v = cat_proto[k][c];
      for (auto& x : v) x = prng.normal();
      for (int p = 0; p < c; ++p) {
        const double proj = dot(v, cat_proto[k][p]) / sqnorm(cat_proto[k][p]);
        for (int i = 0; i < feature_dim; ++i) v[i] -= proj * cat_proto[k][p][i];
      }
      const double nn = norm(v);
      for (auto& x : v) x *= 2.0 / nn;
    }
    leaf_proto[k].assign(spec.leaf_count(), Vec(feature_dim, 0.0));
    for (auto& v : leaf_proto[k]) {
      for (auto& x : v) x = prng.normal();
      for (int c = 0; c < ncat; ++c) {
        const double proj = dot(v, cat_proto[k][c]) / sqnorm(cat_proto[k][c]);
        for (int i = 0; i < feature_dim; ++i) v[i] -= proj * cat_proto[k][c][i];
      }
      const double nn = norm(v);
      for (auto& x : v) x *= 1.0 / nn;
    }
  }

  Rng rng(seed);
  auto draw_leaf = [&](int k) -> int {
    const int m = tax.dim(k).leaf_count();
    if (leaf_weights && !(*leaf_weights)[k].empty()) {
      const auto& w = (*leaf_weights)[k];
      if (static_cast<int>(w.size()) != m)
        throw invalid_input_error("generate_synthetic: weight vector length mismatch");
      double total = 0.0;
      for (double x : w) {
        if (x < 0.0) throw invalid_input_error("generate_synthetic: negative weight");
        total += x;
      }
      if (total <= 0.0) throw invalid_input_error("generate_synthetic: zero weight mass");
      double u = rng.uniform() * total;
      for (int i = 0; i < m; ++i) {
        u -= w[i];
        if (u < 0.0) return i;
      }
      return m - 1;
    }
    return static_cast<int>(rng.below(static_cast<uint64_t>(m)));
  };

  Mat features(n, feature_dim);
  std::vector<CognitiveLabel> labels(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 4; ++k) labels[i][k] = draw_leaf(k);
    auto row = features.row(i);
    for (int k = 0; k < 4; ++k) {
      const int leaf = labels[i][k];
      const int cat = tax.dim(k).leaf_category[leaf];
      // Leaf prototypes already carry the half magnitude (norm 1 vs 2).
      for (int j = 0; j < feature_dim; ++j)
        row[j] += cat_proto[k][cat][j] + leaf_proto[k][leaf][j];
    }
    for (int j = 0; j < feature_dim; ++j) row[j] += noise * rng.normal();
  }
  return {std::move(features), std::move(labels)};
}

}  // namespace hyco::taxonomy
