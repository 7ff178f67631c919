#pragma once

// Top-down compositional consistency metrics. Each record carries three
// correctness flags for one sample: root relation, supporting attributes,
// endpoint existence. RRA averages the root flag over all records, ACA the
// attribute flag over root-correct records, ECA the existence flag over
// records with both root and attributes correct. Undefined conditional
// accuracies stay ABSENT rather than collapsing to 0 or 1. Also hosts the
// normalized filename-overlap audit.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "structreward/caption.hpp"
#include "structreward/errors.hpp"
#include "structreward/world.hpp"

namespace structreward {

struct AuditRecord {
  std::string sample_id;
  bool c_r = false;  // root relation correct
  bool c_a = false;  // supporting attributes correct
  bool c_e = false;  // endpoint existence correct
};

struct AuditSummary {
  int n_total = 0;
  int n_root_correct = 0;
  int n_root_and_attr_correct = 0;
  std::optional<double> rra, aca, eca;
};

inline AuditSummary audit_metrics(const std::vector<AuditRecord>& records) {
  if (records.empty()) throw EmptyInput("audit needs at least one record");
  AuditSummary s;
  s.n_total = static_cast<int>(records.size());
  int root_attr_exist = 0;
  for (const auto& r : records) {
    if (r.c_r) {
      ++s.n_root_correct;
      if (r.c_a) {
        ++s.n_root_and_attr_correct;
        if (r.c_e) ++root_attr_exist;
      }
    }
  }
  s.rra = static_cast<double>(s.n_root_correct) / s.n_total;
  if (s.n_root_correct > 0) {
    int attr_correct = 0;
    for (const auto& r : records) attr_correct += (r.c_r && r.c_a) ? 1 : 0;
    s.aca = static_cast<double>(attr_correct) / s.n_root_correct;
  }
  if (s.n_root_and_attr_correct > 0)
    s.eca = static_cast<double>(root_attr_exist) / s.n_root_and_attr_correct;
  return s;
}

// Derives one record from a generated caption against the ground-truth
// world. The root relation defaults to the caption's first RelationUnit in
// canonical order; pass `root` to override. Flags check three independent
// claim levels: the root relation (anchor-resolved), the attributes on its
// endpoints, and the existence grounding of every object instance the
// caption mentions. A root-endpoint-only existence flag would be implied by
// a correct root, so the existence check covers the whole object inventory;
// a fabricated duplicate instance (cup_2 in a one-cup world) fails it.
inline AuditRecord derive_record(const std::string& sample_id, const StructuredCaption& gen,
                                 const WorldState& world,
                                 const RelationUnit* root = nullptr) {
  if (!root) {
    if (gen.relations.empty())
      throw NoRootRelation("sample '" + sample_id + "' has no relation to audit");
    root = &gen.relations.front();
  }

  AuditRecord rec;
  rec.sample_id = sample_id;

  rec.c_r = world.has_relation(root->subject, root->predicate, root->object);

  rec.c_a = true;
  for (const auto& a : gen.attributes) {
    if (a.object != root->subject && a.object != root->object) continue;
    const WorldEntity* e = world.find_entity(a.object);
    if (!e || !e->attributes.count(a.value)) rec.c_a = false;
  }

  rec.c_e = true;
  for (const auto& o : gen.objects) {
    const WorldEntity* e = world.find_entity(o.id);
    if (!e || e->head != o.head) rec.c_e = false;
  }
  return rec;
}

inline nlohmann::json audit_record_to_json(const AuditRecord& r) {
  return {{"sample_id", r.sample_id}, {"c_r", r.c_r}, {"c_a", r.c_a}, {"c_e", r.c_e}};
}

inline AuditRecord audit_record_from_json(const nlohmann::json& j) {
  try {
    return {j.at("sample_id").get<std::string>(), j.at("c_r").get<bool>(),
            j.at("c_a").get<bool>(), j.at("c_e").get<bool>()};
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed audit record: ") + e.what());
  }
}

inline nlohmann::json audit_summary_to_json(const AuditSummary& s) {
  nlohmann::json j;
  j["n_total"] = s.n_total;
  j["n_root_correct"] = s.n_root_correct;
  j["n_root_and_attr_correct"] = s.n_root_and_attr_correct;
  j["rra"] = s.rra ? nlohmann::json(*s.rra) : nlohmann::json(nullptr);
  j["aca"] = s.aca ? nlohmann::json(*s.aca) : nlohmann::json(nullptr);
  j["eca"] = s.eca ? nlohmann::json(*s.eca) : nlohmann::json(nullptr);
  return j;
}

// lowercase, strip directory components and the extension
inline std::string normalize_filename(const std::string& name) {
  std::string base = name;
  if (auto slash = base.find_last_of("/\\"); slash != std::string::npos)
    base = base.substr(slash + 1);
  if (auto dot = base.find_last_of('.'); dot != std::string::npos && dot > 0)
    base = base.substr(0, dot);
  std::string out;
  for (char c : base) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

struct OverlapReport {
  struct PerSet {
    std::string name;
    int overlap = 0;
    int eval_size = 0;  // unique normalized names
  };
  std::vector<PerSet> sets;
  int union_overlap = 0;
  int union_size = 0;
};

// Exact normalized filename overlap of a training list against one or more
// evaluation lists, reported per set and against their union ("0/8193").
inline OverlapReport overlap_audit(const std::vector<std::string>& train_names,
                                   const std::vector<std::pair<std::string, std::vector<std::string>>>&
                                       eval_name_sets) {
  std::set<std::string> train;
  for (const auto& n : train_names) train.insert(normalize_filename(n));

  OverlapReport report;
  std::set<std::string> all_eval;
  for (const auto& [name, names] : eval_name_sets) {
    std::set<std::string> eval_set;
    for (const auto& n : names) eval_set.insert(normalize_filename(n));
    OverlapReport::PerSet per;
    per.name = name;
    per.eval_size = static_cast<int>(eval_set.size());
    for (const auto& n : eval_set)
      if (train.count(n)) ++per.overlap;
    report.sets.push_back(per);
    all_eval.insert(eval_set.begin(), eval_set.end());
  }
  report.union_size = static_cast<int>(all_eval.size());
  for (const auto& n : all_eval)
    if (train.count(n)) ++report.union_overlap;
  return report;
}

inline nlohmann::json overlap_report_to_json(const OverlapReport& r) {
  nlohmann::json j;
  j["sets"] = nlohmann::json::array();
  for (const auto& s : r.sets)
    j["sets"].push_back({{"name", s.name},
                         {"overlap", s.overlap},
                         {"eval_size", s.eval_size},
                         {"display", std::to_string(s.overlap) + "/" + std::to_string(s.eval_size)}});
  j["total"] = {{"overlap", r.union_overlap},
                {"eval_size", r.union_size},
                {"display",
                 std::to_string(r.union_overlap) + "/" + std::to_string(r.union_size)}};
  return j;
}

}  // namespace structreward
