#pragma once

// Maximum-weight one-to-one bipartite matching and the object/typed-unit/
// event matching built on it. The assignment core is an exact Hungarian
// solve on the zero-padded square matrix; sub-threshold edges are zeroed and
// zero-weight pairs dropped from the result. Ties between optimal matchings
// are broken toward the lexicographically smallest (row, col) pair set by a
// greedy re-solve, which keeps golden fixtures reproducible.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "structreward/caption.hpp"
#include "structreward/similarity.hpp"

namespace structreward {

struct WeightMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> entries;  // row-major, values in [0,1]

  WeightMatrix() = default;
  WeightMatrix(int r, int c) : rows(r), cols(c), entries(static_cast<size_t>(r) * c, 0.0) {}

  double at(int r, int c) const { return entries[static_cast<size_t>(r) * cols + c]; }
  double& at(int r, int c) { return entries[static_cast<size_t>(r) * cols + c]; }
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // sorted ascending
  double total_weight = 0.0;
};

namespace detail {

// Exact max-weight assignment value for the given cell set. `allowed`
// restricts usable cells; rows/cols outside it are left unmatched.
// Classic O(n^3) potentials method on the padded square matrix.
inline double assignment_value(const WeightMatrix& w,
                               const std::vector<std::vector<bool>>& allowed) {
  const int n = std::max(w.rows, w.cols);
  if (n == 0) return 0.0;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // minimize cost = -weight; padding cells cost 0
  auto cost = [&](int r, int c) -> double {
    if (r < w.rows && c < w.cols && allowed[r][c]) return -w.at(r, c);
    return 0.0;
  };

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    const int r = p[j] - 1;
    const int c = j - 1;
    if (r < w.rows && c < w.cols && allowed[r][c]) total += w.at(r, c);
  }
  return total;
}

}  // namespace detail

// Returns the maximum-total-weight partial matching using only edges with
// weight >= min_weight, breaking ties toward the lexicographically smallest
// sorted (row, col) pair set.
inline Matching max_weight_matching(const WeightMatrix& w, double min_weight) {
  Matching result;
  if (w.rows == 0 || w.cols == 0) return result;

  std::vector<std::vector<bool>> allowed(w.rows, std::vector<bool>(w.cols, false));
  for (int r = 0; r < w.rows; ++r)
    for (int c = 0; c < w.cols; ++c)
      allowed[r][c] = w.at(r, c) >= min_weight && w.at(r, c) > 0.0;

  const double best = detail::assignment_value(w, allowed);
  // tolerance only matters for genuinely tied float sums; weight gaps in
  // practice are far larger
  const double eps = 1e-9;
  if (best <= 0.0) return result;

  // Greedy lexicographic refinement: a cell joins the result iff some
  // optimal matching contains the chosen prefix plus this cell, with every
  // remaining pair lexicographically greater.
  std::vector<bool> row_used(w.rows, false), col_used(w.cols, false);
  double prefix_weight = 0.0;
  for (int r = 0; r < w.rows; ++r) {
    for (int c = 0; c < w.cols; ++c) {
      if (!allowed[r][c] || row_used[r] || col_used[c]) continue;
      // completion may only use later rows and free columns
      std::vector<std::vector<bool>> residual(w.rows, std::vector<bool>(w.cols, false));
      for (int rr = r + 1; rr < w.rows; ++rr)
        for (int cc = 0; cc < w.cols; ++cc)
          residual[rr][cc] = allowed[rr][cc] && !col_used[cc] && cc != c;
      const double candidate =
          prefix_weight + w.at(r, c) + detail::assignment_value(w, residual);
      if (candidate >= best - eps) {
        row_used[r] = true;
        col_used[c] = true;
        prefix_weight += w.at(r, c);
        result.pairs.emplace_back(r, c);
        break;  // row r is now used; move to the next row
      }
    }
  }

  result.total_weight = 0.0;
  for (const auto& [r, c] : result.pairs) result.total_weight += w.at(r, c);
  return result;
}

// One-to-one alignment between generated and reference object instances.
struct ObjectMap {
  std::map<std::string, std::string> pairs;    // gen object id -> ref object id
  std::map<std::string, double> weights;       // keyed by gen object id
  std::map<std::string, std::string> reverse;  // ref object id -> gen object id

  bool maps_to(const std::string& gen_id, const std::string& ref_id) const {
    auto it = pairs.find(gen_id);
    return it != pairs.end() && it->second == ref_id;
  }
};

inline ObjectMap build_object_map(const StructuredCaption& gen, const StructuredCaption& ref,
                                  const SimilarityProvider& provider, const Lexicon& lex,
                                  double min_weight) {
  WeightMatrix w(static_cast<int>(gen.objects.size()), static_cast<int>(ref.objects.size()));
  std::vector<std::string> gen_phrases, ref_phrases;
  for (const auto& o : gen.objects) gen_phrases.push_back(canonicalize(o.phrase, lex));
  for (const auto& o : ref.objects) ref_phrases.push_back(canonicalize(o.phrase, lex));
  for (int r = 0; r < w.rows; ++r)
    for (int c = 0; c < w.cols; ++c)
      w.at(r, c) = provider.score(gen_phrases[r], ref_phrases[c]);

  const Matching m = max_weight_matching(w, min_weight);
  ObjectMap map;
  for (const auto& [r, c] : m.pairs) {
    map.pairs[gen.objects[r].id] = ref.objects[c].id;
    map.weights[gen.objects[r].id] = w.at(r, c);
    map.reverse[ref.objects[c].id] = gen.objects[r].id;
  }
  return map;
}

enum class UnitType { Obj, Attr, Rel };

inline const char* unit_type_name(UnitType t) {
  switch (t) {
    case UnitType::Obj: return "obj";
    case UnitType::Attr: return "attr";
    default: return "rel";
  }
}

struct TypedMatchResult {
  UnitType unit_type = UnitType::Obj;
  std::vector<std::pair<int, int>> exact_pairs;  // indices into the canonical unit lists
  std::vector<std::tuple<int, int, double>> residual_pairs;
  double matched_mass = 0.0;
  int gen_count = 0;
  int ref_count = 0;
};

namespace detail {

// Two-phase matching shared by all unit types: exact overlaps are removed
// first (value equality plus anchor compatibility, each unit claimed at most
// once), then an optimal partial matching runs on the residual units.
inline TypedMatchResult match_two_phase(UnitType type, const std::vector<std::string>& gen_values,
                                        const std::vector<std::string>& ref_values,
                                        const std::vector<std::vector<bool>>& compatible,
                                        const SimilarityProvider& provider, double min_weight) {
  TypedMatchResult result;
  result.unit_type = type;
  result.gen_count = static_cast<int>(gen_values.size());
  result.ref_count = static_cast<int>(ref_values.size());

  std::vector<bool> gen_claimed(gen_values.size(), false), ref_claimed(ref_values.size(), false);
  for (size_t g = 0; g < gen_values.size(); ++g) {
    for (size_t r = 0; r < ref_values.size(); ++r) {
      if (ref_claimed[r] || !compatible[g][r] || gen_values[g] != ref_values[r]) continue;
      gen_claimed[g] = true;
      ref_claimed[r] = true;
      result.exact_pairs.emplace_back(static_cast<int>(g), static_cast<int>(r));
      break;
    }
  }

  std::vector<int> gen_rest, ref_rest;
  for (size_t g = 0; g < gen_values.size(); ++g)
    if (!gen_claimed[g]) gen_rest.push_back(static_cast<int>(g));
  for (size_t r = 0; r < ref_values.size(); ++r)
    if (!ref_claimed[r]) ref_rest.push_back(static_cast<int>(r));

  WeightMatrix w(static_cast<int>(gen_rest.size()), static_cast<int>(ref_rest.size()));
  for (int i = 0; i < w.rows; ++i)
    for (int j = 0; j < w.cols; ++j)
      if (compatible[gen_rest[i]][ref_rest[j]])
        w.at(i, j) = provider.score(gen_values[gen_rest[i]], ref_values[ref_rest[j]]);

  const Matching residual = max_weight_matching(w, min_weight);
  double residual_mass = 0.0;
  for (const auto& [i, j] : residual.pairs) {
    result.residual_pairs.emplace_back(gen_rest[i], ref_rest[j], w.at(i, j));
    residual_mass += w.at(i, j);
  }
  result.matched_mass = static_cast<double>(result.exact_pairs.size()) + residual_mass;
  return result;
}

}  // namespace detail

// Typed-unit matching gated by the object map: an attribute is matchable
// only when its carrier objects are aligned, a relation only when both
// endpoints are aligned in the same direction, and objects pair freely on
// canonical phrase similarity.
inline TypedMatchResult match_typed_units(UnitType type, const StructuredCaption& gen,
                                          const StructuredCaption& ref, const ObjectMap& map,
                                          const SimilarityProvider& provider, const Lexicon& lex,
                                          double min_weight) {
  std::vector<std::string> gen_values, ref_values;
  std::vector<std::vector<bool>> compatible;

  if (type == UnitType::Obj) {
    for (const auto& o : gen.objects) gen_values.push_back(canonicalize(o.phrase, lex));
    for (const auto& o : ref.objects) ref_values.push_back(canonicalize(o.phrase, lex));
    compatible.assign(gen_values.size(), std::vector<bool>(ref_values.size(), true));
  } else if (type == UnitType::Attr) {
    for (const auto& a : gen.attributes) gen_values.push_back(canonicalize(a.value, lex));
    for (const auto& a : ref.attributes) ref_values.push_back(canonicalize(a.value, lex));
    compatible.assign(gen_values.size(), std::vector<bool>(ref_values.size(), false));
    for (size_t g = 0; g < gen.attributes.size(); ++g)
      for (size_t r = 0; r < ref.attributes.size(); ++r)
        compatible[g][r] = map.maps_to(gen.attributes[g].object, ref.attributes[r].object);
  } else {
    for (const auto& r : gen.relations) gen_values.push_back(canonicalize(r.predicate, lex));
    for (const auto& r : ref.relations) ref_values.push_back(canonicalize(r.predicate, lex));
    compatible.assign(gen_values.size(), std::vector<bool>(ref_values.size(), false));
    for (size_t g = 0; g < gen.relations.size(); ++g)
      for (size_t r = 0; r < ref.relations.size(); ++r)
        compatible[g][r] = map.maps_to(gen.relations[g].subject, ref.relations[r].subject) &&
                           map.maps_to(gen.relations[g].object, ref.relations[r].object);
  }

  return detail::match_two_phase(type, gen_values, ref_values, compatible, provider, min_weight);
}

struct EventMatching {
  std::map<std::string, std::string> pairs;    // gen event id -> ref event id
  std::map<std::string, double> similarities;  // keyed by gen event id
  std::map<std::string, std::string> reverse;  // ref event id -> gen event id

  bool ref_matched(const std::string& ref_id) const { return reverse.count(ref_id) > 0; }
};

// One-to-one event matching under predicate similarity; a candidate pair
// must have equal arity and positionally compatible participant anchors.
inline EventMatching match_events(const StructuredCaption& gen, const StructuredCaption& ref,
                                  const ObjectMap& map, const SimilarityProvider& provider,
                                  const Lexicon& lex, double min_weight) {
  WeightMatrix w(static_cast<int>(gen.events.size()), static_cast<int>(ref.events.size()));
  for (int g = 0; g < w.rows; ++g) {
    for (int r = 0; r < w.cols; ++r) {
      const auto& ge = gen.events[g];
      const auto& re = ref.events[r];
      if (ge.participants.size() != re.participants.size()) continue;
      bool ok = true;
      for (size_t i = 0; i < ge.participants.size() && ok; ++i)
        ok = map.maps_to(ge.participants[i], re.participants[i]);
      if (!ok) continue;
      w.at(g, r) = provider.score(canonicalize(ge.predicate, lex), canonicalize(re.predicate, lex));
    }
  }

  const Matching m = max_weight_matching(w, min_weight);
  EventMatching out;
  for (const auto& [g, r] : m.pairs) {
    out.pairs[gen.events[g].id] = ref.events[r].id;
    out.similarities[gen.events[g].id] = w.at(g, r);
    out.reverse[ref.events[r].id] = gen.events[g].id;
  }
  return out;
}

}  // namespace structreward
