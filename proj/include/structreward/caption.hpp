#pragma once

// Anchored structured-caption data model: objects with local instance ids
// (cup_1, cup_2), attributes/relations/events that inherit those anchors,
// and explicit order assertions. All types are immutable value types after
// normalize(); canonical JSON serialization keeps golden fixtures diffable.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "structreward/errors.hpp"

namespace structreward {

struct ObjectUnit {
  std::string id;      // "head_k", k >= 1, consecutive per head
  std::string head;    // canonical noun lemma
  std::string phrase;  // full surface noun phrase (no determiner)
  int clause = 0;      // zero-based clause of first mention

  auto key() const { return std::tie(clause, id, head, phrase); }
  bool operator==(const ObjectUnit&) const = default;
};

struct AttributeUnit {
  std::string object;  // anchor of the carrying object instance
  std::string value;   // canonical adjective lemma
  int clause = 0;

  auto key() const { return std::tie(clause, object, value); }
  bool operator==(const AttributeUnit&) const = default;
};

struct RelationUnit {
  std::string subject;
  std::string predicate;  // verb lemma or preposition
  std::string object;
  int clause = 0;

  auto key() const { return std::tie(clause, subject, predicate, object); }
  bool operator==(const RelationUnit&) const = default;
};

struct EventMention {
  std::string id;  // "pred#j", j >= 1, consecutive per predicate
  std::string predicate;
  std::vector<std::string> participants;  // agent first
  int clause = 0;
  int order_index = 0;  // position in the caption's narrated order

  auto key() const { return std::tie(clause, id, predicate, participants, order_index); }
  bool operator==(const EventMention&) const = default;
};

struct OrderAssertion {
  std::string before;  // EventMention id
  std::string after;
  bool explicit_marker = false;  // true iff stated by a temporal connective

  auto key() const { return std::tie(before, after, explicit_marker); }
  bool operator==(const OrderAssertion&) const = default;
};

// A validation finding. Violations are data, not exceptions; ingest_json is
// the strict entry point that promotes the first one to a typed error.
struct Violation {
  std::string rule;    // e.g. "DanglingAnchor", "NonConsecutiveInstanceId"
  std::string unit;    // offending unit id or rendered tuple
  std::string detail;
};

struct StructuredCaption {
  std::vector<ObjectUnit> objects;
  std::vector<AttributeUnit> attributes;
  std::vector<RelationUnit> relations;
  std::vector<EventMention> events;
  std::vector<OrderAssertion> orders;
  std::optional<std::string> source_text;

  bool operator==(const StructuredCaption&) const = default;

  // Sorts every unit list into canonical (clause, id) order and drops
  // duplicates that are equal on every field. Producers call this once;
  // matching treats the lists as deduplicated multisets afterwards.
  void normalize() {
    auto by_key = [](auto& units) {
      std::sort(units.begin(), units.end(),
                [](const auto& a, const auto& b) { return a.key() < b.key(); });
      units.erase(std::unique(units.begin(), units.end()), units.end());
    };
    by_key(objects);
    by_key(attributes);
    by_key(relations);
    by_key(events);
    by_key(orders);
  }

  const ObjectUnit* find_object(const std::string& id) const {
    for (const auto& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }

  const EventMention* find_event(const std::string& id) const {
    for (const auto& e : events)
      if (e.id == id) return &e;
    return nullptr;
  }

  bool has_explicit_order() const {
    return std::any_of(orders.begin(), orders.end(),
                       [](const OrderAssertion& o) { return o.explicit_marker; });
  }
};

namespace detail {

// Splits an anchor "head_3" / "lift#2" at the last marker; returns
// (prefix, index) or index 0 when the shape is wrong.
inline std::pair<std::string, int> split_anchor(const std::string& id, char marker) {
  auto pos = id.rfind(marker);
  if (pos == std::string::npos || pos == 0 || pos + 1 >= id.size()) return {"", 0};
  const std::string digits = id.substr(pos + 1);
  for (char c : digits)
    if (c < '0' || c > '9') return {"", 0};
  long value = std::strtol(digits.c_str(), nullptr, 10);
  if (value < 1 || value > 1'000'000) return {"", 0};
  return {id.substr(0, pos), static_cast<int>(value)};
}

inline void check_instance_numbering(const std::vector<std::pair<std::string, int>>& seen,
                                     const char* what, std::vector<Violation>& out) {
  std::map<std::string, std::set<int>> per_prefix;
  for (const auto& [prefix, k] : seen) per_prefix[prefix].insert(k);
  for (const auto& [prefix, ks] : per_prefix) {
    int expected = 1;
    for (int k : ks) {
      if (k != expected) {
        out.push_back({"NonConsecutiveInstanceId", prefix,
                       std::string(what) + " ids for '" + prefix +
                           "' skip index " + std::to_string(expected)});
        break;
      }
      ++expected;
    }
  }
}

}  // namespace detail

// Checks every type invariant; empty result means the caption is valid.
inline std::vector<Violation> validate(const StructuredCaption& c) {
  std::vector<Violation> out;

  std::set<std::string> object_ids;
  std::vector<std::pair<std::string, int>> object_numbering;
  for (const auto& o : c.objects) {
    if (!object_ids.insert(o.id).second)
      out.push_back({"DuplicateId", o.id, "object id declared twice"});
    auto [prefix, k] = detail::split_anchor(o.id, '_');
    if (k == 0 || prefix != o.head)
      out.push_back({"AnchorFormat", o.id, "object id must be head_k with k >= 1"});
    else
      object_numbering.emplace_back(prefix, k);
    if (o.clause < 0)
      out.push_back({"NegativeClause", o.id, "clause index below zero"});
  }
  detail::check_instance_numbering(object_numbering, "object", out);

  auto check_anchor = [&](const std::string& anchor, const std::string& unit) {
    if (!object_ids.count(anchor))
      out.push_back({"DanglingAnchor", unit, "reference to missing object id '" + anchor + "'"});
  };

  for (const auto& a : c.attributes) {
    check_anchor(a.object, a.object + ":" + a.value);
    if (a.clause < 0)
      out.push_back({"NegativeClause", a.object + ":" + a.value, "clause index below zero"});
  }
  for (const auto& r : c.relations) {
    check_anchor(r.subject, r.subject + ":" + r.predicate + ":" + r.object);
    check_anchor(r.object, r.subject + ":" + r.predicate + ":" + r.object);
    if (r.clause < 0)
      out.push_back({"NegativeClause", r.predicate, "clause index below zero"});
  }

  std::set<std::string> event_ids;
  std::vector<std::pair<std::string, int>> event_numbering;
  for (const auto& e : c.events) {
    if (!event_ids.insert(e.id).second)
      out.push_back({"DuplicateId", e.id, "event id declared twice"});
    auto [prefix, j] = detail::split_anchor(e.id, '#');
    if (j == 0 || prefix != e.predicate)
      out.push_back({"AnchorFormat", e.id, "event id must be predicate#j with j >= 1"});
    else
      event_numbering.emplace_back(prefix, j);
    if (e.participants.empty())
      out.push_back({"EmptyParticipants", e.id, "event has no participants"});
    for (const auto& p : e.participants) check_anchor(p, e.id);
    if (e.clause < 0)
      out.push_back({"NegativeClause", e.id, "clause index below zero"});
  }
  detail::check_instance_numbering(event_numbering, "event", out);

  // order_index must grow strictly with the clause index
  bool order_flagged = false;
  for (size_t i = 0; i < c.events.size() && !order_flagged; ++i)
    for (size_t j = 0; j < c.events.size() && !order_flagged; ++j) {
      const auto& a = c.events[i];
      const auto& b = c.events[j];
      if (a.clause < b.clause && a.order_index >= b.order_index) {
        out.push_back({"OrderIndexViolation", b.id,
                       "order_index does not increase from " + a.id + " to " + b.id});
        order_flagged = true;
      }
    }

  for (const auto& o : c.orders) {
    if (o.before == o.after)
      out.push_back({"SelfOrder", o.before, "order assertion relates an event to itself"});
    if (!event_ids.count(o.before))
      out.push_back({"DanglingAnchor", o.before, "order refers to missing event id"});
    if (!event_ids.count(o.after))
      out.push_back({"DanglingAnchor", o.after, "order refers to missing event id"});
  }

  return out;
}

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw SchemaError(message);
}

inline std::string get_string(const nlohmann::json& j, const char* field) {
  require(j.contains(field), std::string("missing field '") + field + "'");
  require(j[field].is_string(), std::string("field '") + field + "' must be a string");
  return j[field].get<std::string>();
}

inline int get_int(const nlohmann::json& j, const char* field) {
  require(j.contains(field), std::string("missing field '") + field + "'");
  require(j[field].is_number_integer(), std::string("field '") + field + "' must be an integer");
  return j[field].get<int>();
}

}  // namespace detail

// Strict ingestion: returns a caption with zero validate() violations or
// throws exactly one typed error. No partially valid output escapes.
inline StructuredCaption ingest_json(const std::string& bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("not valid JSON: ") + e.what());
  }
  detail::require(doc.is_object(), "top-level value must be an object");

  static const std::set<std::string> known = {"source_text", "objects",    "attributes",
                                              "relations",   "events",     "orders"};
  for (const auto& [key, _] : doc.items())
    detail::require(known.count(key) > 0, "unknown field '" + key + "'");

  auto array_of = [&](const char* field) {
    if (!doc.contains(field)) return nlohmann::json::array();
    detail::require(doc[field].is_array(), std::string("field '") + field + "' must be an array");
    return doc[field];
  };

  StructuredCaption c;
  if (doc.contains("source_text")) {
    detail::require(doc["source_text"].is_string(), "field 'source_text' must be a string");
    c.source_text = doc["source_text"].get<std::string>();
  }

  for (const auto& j : array_of("objects")) {
    detail::require(j.is_object(), "object entry must be an object");
    c.objects.push_back({detail::get_string(j, "id"), detail::get_string(j, "head"),
                         detail::get_string(j, "phrase"), detail::get_int(j, "clause")});
  }
  for (const auto& j : array_of("attributes")) {
    detail::require(j.is_object(), "attribute entry must be an object");
    c.attributes.push_back({detail::get_string(j, "object"), detail::get_string(j, "value"),
                            detail::get_int(j, "clause")});
  }
  for (const auto& j : array_of("relations")) {
    detail::require(j.is_object(), "relation entry must be an object");
    c.relations.push_back({detail::get_string(j, "subject"), detail::get_string(j, "predicate"),
                           detail::get_string(j, "object"), detail::get_int(j, "clause")});
  }
  for (const auto& j : array_of("events")) {
    detail::require(j.is_object(), "event entry must be an object");
    EventMention e;
    e.id = detail::get_string(j, "id");
    e.predicate = detail::get_string(j, "predicate");
    detail::require(j.contains("participants") && j["participants"].is_array(),
                    "event field 'participants' must be an array");
    for (const auto& p : j["participants"]) {
      detail::require(p.is_string(), "participants must be strings");
      e.participants.push_back(p.get<std::string>());
    }
    e.clause = detail::get_int(j, "clause");
    e.order_index = detail::get_int(j, "order_index");
    c.events.push_back(std::move(e));
  }
  for (const auto& j : array_of("orders")) {
    detail::require(j.is_object(), "order entry must be an object");
    OrderAssertion o;
    o.before = detail::get_string(j, "before");
    o.after = detail::get_string(j, "after");
    detail::require(j.contains("explicit") && j["explicit"].is_boolean(),
                    "order field 'explicit' must be a boolean");
    o.explicit_marker = j["explicit"].get<bool>();
    c.orders.push_back(std::move(o));
  }

  c.normalize();

  auto violations = validate(c);
  if (!violations.empty()) {
    const auto& v = violations.front();
    const std::string message = v.detail + " (" + v.unit + ")";
    if (v.rule == "DanglingAnchor") throw DanglingAnchor(message);
    if (v.rule == "DuplicateId") throw DuplicateId(message);
    throw InvariantViolation(v.rule + ": " + message);
  }
  return c;
}

// Canonical serialization: sorted keys, units in (clause, id) order, byte
// stable across runs. Equal captions serialize byte-identically.
inline std::string serialize(const StructuredCaption& input) {
  StructuredCaption c = input;
  c.normalize();

  nlohmann::json doc;
  doc["objects"] = nlohmann::json::array();
  for (const auto& o : c.objects)
    doc["objects"].push_back(
        {{"id", o.id}, {"head", o.head}, {"phrase", o.phrase}, {"clause", o.clause}});
  doc["attributes"] = nlohmann::json::array();
  for (const auto& a : c.attributes)
    doc["attributes"].push_back({{"object", a.object}, {"value", a.value}, {"clause", a.clause}});
  doc["relations"] = nlohmann::json::array();
  for (const auto& r : c.relations)
    doc["relations"].push_back({{"subject", r.subject},
                                {"predicate", r.predicate},
                                {"object", r.object},
                                {"clause", r.clause}});
  doc["events"] = nlohmann::json::array();
  for (const auto& e : c.events)
    doc["events"].push_back({{"id", e.id},
                             {"predicate", e.predicate},
                             {"participants", e.participants},
                             {"clause", e.clause},
                             {"order_index", e.order_index}});
  doc["orders"] = nlohmann::json::array();
  for (const auto& o : c.orders)
    doc["orders"].push_back(
        {{"before", o.before}, {"after", o.after}, {"explicit", o.explicit_marker}});
  if (c.source_text) doc["source_text"] = *c.source_text;

  return doc.dump(2) + "\n";
}

}  // namespace structreward
