#pragma once

// Synthetic closed-world scenes, the deterministic reference-caption
// renderer, and caption corruption operators. Worlds are the desk-scale
// stand-in for the video: entity ids share the caption anchor scheme
// (head_k), event ids the event scheme (pred#j), so a rendered reference
// parses back to unit sets identical to the world's.

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
#include "structreward/parser.hpp"
#include "structreward/rng.hpp"

namespace structreward {

struct WorldEntity {
  std::string id;  // head_k, shared with the caption anchor scheme
  std::string head;
  std::set<std::string> attributes;

  bool operator==(const WorldEntity&) const = default;
};

struct WorldRelation {
  std::string subject;
  std::string predicate;
  std::string object;

  auto key() const { return std::tie(subject, predicate, object); }
  bool operator==(const WorldRelation&) const = default;
};

struct WorldEvent {
  std::string id;  // pred#j
  std::string predicate;
  std::vector<std::string> participants;  // agent first
  int time_index = 0;                     // strictly increasing along the list

  bool operator==(const WorldEvent&) const = default;
};

struct WorldState {
  std::vector<WorldEntity> entities;
  std::vector<WorldRelation> relations;
  std::vector<WorldEvent> events;
  std::uint64_t rng_seed = 0;

  bool operator==(const WorldState&) const = default;

  const WorldEntity* find_entity(const std::string& id) const {
    for (const auto& e : entities)
      if (e.id == id) return &e;
    return nullptr;
  }

  const WorldEvent* find_event(const std::string& id) const {
    for (const auto& e : events)
      if (e.id == id) return &e;
    return nullptr;
  }

  // A relation claim holds if it is stated directly or realized by a
  // two-participant event (captions emit a RelationUnit for every
  // transitive verb clause, so both forms describe this world).
  bool has_relation(const std::string& subject, const std::string& predicate,
                    const std::string& object) const {
    for (const auto& r : relations)
      if (r.subject == subject && r.predicate == predicate && r.object == object) return true;
    for (const auto& e : events)
      if (e.participants.size() == 2 && e.predicate == predicate &&
          e.participants[0] == subject && e.participants[1] == object)
        return true;
    return false;
  }
};

struct WorldConfig {
  Lexicon lexicon;
  int entity_min = 2, entity_max = 3;
  int attrs_min = 1, attrs_max = 2;
  int relation_min = 1, relation_max = 2;
  int event_min = 1, event_max = 3;
  double repeat_event_prob = 0.25;
  double explicit_order_prob = 0.75;
};

inline WorldState sample_world(const WorldConfig& config, std::uint64_t seed) {
  const Lexicon& lex = config.lexicon;
  if (config.entity_min > config.entity_max || config.attrs_min > config.attrs_max ||
      config.relation_min > config.relation_max || config.event_min > config.event_max)
    throw SchemaError("world config ranges must satisfy min <= max");

  std::vector<std::string> nouns(lex.nouns.begin(), lex.nouns.end());
  std::vector<std::string> adjectives(lex.adjectives.begin(), lex.adjectives.end());
  std::vector<std::string> prepositions(lex.prepositions.begin(), lex.prepositions.end());
  std::vector<std::pair<std::string, int>> verbs(lex.verbs.begin(), lex.verbs.end());

  Rng rng(Rng::mix(seed, 0x776f726c64ULL));
  WorldState world;
  world.rng_seed = seed;

  const int entity_count = rng.next_range(config.entity_min, config.entity_max);
  if (entity_count > 0 && nouns.empty()) throw LexiconTooSmall("no nouns to sample entities from");
  if (config.attrs_max > static_cast<int>(adjectives.size()))
    throw LexiconTooSmall("not enough adjectives for the configured attribute range");

  std::map<std::string, int> instance_counts;
  for (int i = 0; i < entity_count; ++i) {
    WorldEntity e;
    e.head = nouns[rng.next_below(nouns.size())];
    e.id = e.head + "_" + std::to_string(++instance_counts[e.head]);
    const int attr_count = rng.next_range(config.attrs_min, config.attrs_max);
    std::vector<std::string> pool = adjectives;
    for (int a = 0; a < attr_count; ++a) {
      const size_t pick = rng.next_below(pool.size());
      e.attributes.insert(pool[pick]);
      pool.erase(pool.begin() + static_cast<long>(pick));
    }
    world.entities.push_back(std::move(e));
  }

  const int relation_count = rng.next_range(config.relation_min, config.relation_max);
  if (relation_count > 0) {
    if (world.entities.size() < 2)
      throw LexiconTooSmall("relations need at least two entities");
    if (prepositions.empty()) throw LexiconTooSmall("no prepositions to sample relations from");
    std::vector<WorldRelation> candidates;
    for (const auto& s : world.entities)
      for (const auto& p : prepositions)
        for (const auto& o : world.entities)
          if (s.id != o.id) candidates.push_back({s.id, p, o.id});
    if (static_cast<int>(candidates.size()) < relation_count)
      throw LexiconTooSmall("not enough distinct relation triples");
    for (int k = 0; k < relation_count; ++k) {
      const size_t pick = rng.next_below(candidates.size());
      world.relations.push_back(candidates[pick]);
      candidates.erase(candidates.begin() + static_cast<long>(pick));
    }
    std::sort(world.relations.begin(), world.relations.end(),
              [](const auto& a, const auto& b) { return a.key() < b.key(); });
  }

  const int event_count = rng.next_range(config.event_min, config.event_max);
  if (event_count > 0) {
    if (world.entities.empty()) throw LexiconTooSmall("events need at least one entity");
    std::vector<std::pair<std::string, int>> usable;
    for (const auto& [v, arity] : verbs)
      if (arity == 1 || world.entities.size() >= 2) usable.emplace_back(v, arity);
    if (usable.empty()) throw LexiconTooSmall("no verbs usable with this entity count");

    std::map<std::string, int> event_counts;
    for (int t = 1; t <= event_count; ++t) {
      std::string predicate;
      int arity = 0;
      if (!world.events.empty() && rng.next_double() < config.repeat_event_prob) {
        const auto& prior = world.events[rng.next_below(world.events.size())];
        predicate = prior.predicate;
        arity = lex.verbs.at(predicate);
      } else {
        const auto& [v, a] = usable[rng.next_below(usable.size())];
        predicate = v;
        arity = a;
      }
      WorldEvent ev;
      ev.predicate = predicate;
      ev.id = predicate + "#" + std::to_string(++event_counts[predicate]);
      ev.time_index = t;
      const size_t agent = rng.next_below(world.entities.size());
      ev.participants.push_back(world.entities[agent].id);
      if (arity == 2) {
        size_t patient = rng.next_below(world.entities.size() - 1);
        if (patient >= agent) ++patient;
        ev.participants.push_back(world.entities[patient].id);
      }
      world.events.push_back(std::move(ev));
    }
  }

  return world;
}

namespace detail {

inline std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// "the cup" / "the second cup" when the head is ambiguous in this world
inline std::string definite_np(const WorldState& world, const std::string& entity_id) {
  const WorldEntity* e = world.find_entity(entity_id);
  int same_head = 0;
  for (const auto& other : world.entities)
    if (other.head == e->head) ++same_head;
  if (same_head <= 1) return "the " + e->head;
  const auto [head, k] = split_anchor(e->id, '_');
  return "the " + grammar::ordinal_word(k) + " " + e->head;
}

inline std::string event_clause(const WorldState& world, const WorldEvent& ev) {
  std::string out = definite_np(world, ev.participants.front()) + " " + third_person(ev.predicate);
  if (ev.participants.size() > 1) out += " " + definite_np(world, ev.participants[1]);
  return out;
}

}  // namespace detail

// Deterministic grammar-conformant reference caption: one presence clause
// per entity (attributes as modifiers), one clause per relation, one clause
// per event in time order. Explicit "Then"/"Before" connectives are inserted
// with the given probability, seeded from the world; a "Before" sentence is
// only used across distinct predicates so narration never reorders
// same-predicate events.
inline std::string render_reference(const WorldState& world, double explicit_order_prob = 0.75) {
  if (world.entities.empty()) throw EmptyWorld("cannot render a world with no entities");

  std::vector<std::string> sentences;
  for (const auto& e : world.entities) {
    std::string np;
    for (const auto& a : e.attributes) np += a + " ";
    np += e.head;
    const std::string article = grammar::is_vowel_initial(np) ? "An" : "A";
    sentences.push_back(article + " " + np + " is present.");
  }
  for (const auto& r : world.relations)
    sentences.push_back(detail::capitalize(detail::definite_np(world, r.subject)) + " is " +
                        r.predicate + " " + detail::definite_np(world, r.object) + ".");

  const int n = static_cast<int>(world.events.size());
  Rng rng(Rng::mix(world.rng_seed, 0x72656e646572ULL));
  std::vector<bool> explicit_gap(std::max(n, 1), false);
  std::vector<bool> before_form(std::max(n, 1), false);
  for (int k = 1; k < n; ++k) {
    explicit_gap[k] = rng.next_double() < explicit_order_prob;
    before_form[k] = rng.next_double() < 0.25;
  }

  int k = 0;
  while (k < n) {
    const bool use_before = k + 1 < n && explicit_gap[k + 1] && before_form[k + 1] &&
                            world.events[k].predicate != world.events[k + 1].predicate &&
                            (k == 0 || !explicit_gap[k]);
    if (use_before) {
      sentences.push_back("Before " + detail::event_clause(world, world.events[k + 1]) + ", " +
                          detail::event_clause(world, world.events[k]) + ".");
      k += 2;
    } else {
      if (k > 0 && explicit_gap[k])
        sentences.push_back("Then " + detail::event_clause(world, world.events[k]) + ".");
      else
        sentences.push_back(detail::capitalize(detail::event_clause(world, world.events[k])) + ".");
      k += 1;
    }
  }

  std::string text;
  for (size_t i = 0; i < sentences.size(); ++i) {
    if (i) text += " ";
    text += sentences[i];
  }
  return text;
}

enum class CorruptionKind { AttributeSwap, RelationSwap, ParticipantSwap, OrderInvert, InstanceCollapse };

inline const char* corruption_name(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::AttributeSwap: return "attribute_swap";
    case CorruptionKind::RelationSwap: return "relation_swap";
    case CorruptionKind::ParticipantSwap: return "participant_swap";
    case CorruptionKind::OrderInvert: return "order_invert";
    default: return "instance_collapse";
  }
}

inline CorruptionKind corruption_from_name(const std::string& name) {
  for (CorruptionKind k : {CorruptionKind::AttributeSwap, CorruptionKind::RelationSwap,
                           CorruptionKind::ParticipantSwap, CorruptionKind::OrderInvert,
                           CorruptionKind::InstanceCollapse})
    if (name == corruption_name(k)) return k;
  throw SchemaError("unknown corruption kind '" + name + "'");
}

// Applies exactly one corruption of the requested kind and returns a valid
// caption. Each operator targets a seeded unit and guarantees a genuine
// conflict with the original (e.g. an attribute swap never picks a value the
// object already carries).
inline StructuredCaption corrupt(const StructuredCaption& caption, CorruptionKind kind,
                                 const Lexicon& lex, std::uint64_t seed) {
  StructuredCaption out = caption;
  out.source_text.reset();
  Rng rng(Rng::mix(seed, 0x636f727275707400ULL + static_cast<std::uint64_t>(kind)));

  auto rotated_indices = [&](size_t n) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    if (n > 1) std::rotate(idx.begin(), idx.begin() + static_cast<long>(rng.next_below(n)), idx.end());
    return idx;
  };

  if (kind == CorruptionKind::AttributeSwap) {
    if (out.attributes.empty()) throw NothingToCorrupt("caption has no attributes");
    const std::vector<std::string> adjectives(lex.adjectives.begin(), lex.adjectives.end());
    for (size_t i : rotated_indices(out.attributes.size())) {
      auto& target = out.attributes[i];
      std::set<std::string> taken;
      for (const auto& a : out.attributes)
        if (a.object == target.object) taken.insert(a.value);
      for (size_t j : rotated_indices(adjectives.size())) {
        if (!taken.count(adjectives[j])) {
          target.value = adjectives[j];
          out.normalize();
          return out;
        }
      }
    }
    throw NothingToCorrupt("no replacement adjective available");
  }

  if (kind == CorruptionKind::RelationSwap) {
    if (out.relations.empty()) throw NothingToCorrupt("caption has no relations");
    for (size_t i : rotated_indices(out.relations.size())) {
      auto& target = out.relations[i];
      const bool prepositional = lex.prepositions.count(target.predicate) > 0;
      std::vector<std::string> pool;
      if (prepositional)
        pool.assign(lex.prepositions.begin(), lex.prepositions.end());
      else
        for (const auto& [v, arity] : lex.verbs)
          if (arity == 2) pool.push_back(v);
      std::set<std::string> taken;  // predicates already claimed on this endpoint pair
      for (const auto& r : out.relations)
        if (r.subject == target.subject && r.object == target.object) taken.insert(r.predicate);
      for (size_t j : rotated_indices(pool.size())) {
        if (!taken.count(pool[j])) {
          target.predicate = pool[j];
          out.normalize();
          return out;
        }
      }
    }
    throw NothingToCorrupt("no replacement predicate available");
  }

  if (kind == CorruptionKind::ParticipantSwap) {
    if (out.events.empty()) throw NothingToCorrupt("caption has no events");
    auto tuple_exists = [&](const std::string& predicate, const std::vector<std::string>& parts) {
      for (const auto& e : caption.events)
        if (e.predicate == predicate && e.participants == parts) return true;
      return false;
    };
    for (size_t i : rotated_indices(out.events.size())) {
      auto& target = out.events[i];
      for (size_t pos : rotated_indices(target.participants.size())) {
        for (size_t j : rotated_indices(out.objects.size())) {
          const std::string& candidate = out.objects[j].id;
          if (candidate == target.participants[pos]) continue;
          std::vector<std::string> swapped = target.participants;
          swapped[pos] = candidate;
          if (tuple_exists(target.predicate, swapped)) continue;
          target.participants = swapped;
          out.normalize();
          return out;
        }
      }
    }
    throw NothingToCorrupt("no participant swap creates a new binding");
  }

  if (kind == CorruptionKind::OrderInvert) {
    std::vector<size_t> explicit_orders;
    for (size_t i = 0; i < out.orders.size(); ++i)
      if (out.orders[i].explicit_marker) explicit_orders.push_back(i);
    if (explicit_orders.empty()) throw NothingToCorrupt("caption has no explicit order assertions");
    auto& target = out.orders[explicit_orders[rng.next_below(explicit_orders.size())]];
    std::swap(target.before, target.after);
    out.normalize();
    return out;
  }

  // instance collapse: rebind a later event of a repeated predicate onto an
  // earlier instance's participants
  std::vector<std::pair<size_t, size_t>> candidates;
  for (size_t a = 0; a < out.events.size(); ++a)
    for (size_t b = 0; b < out.events.size(); ++b)
      if (a != b && out.events[a].predicate == out.events[b].predicate &&
          out.events[a].order_index < out.events[b].order_index &&
          out.events[a].participants != out.events[b].participants)
        candidates.emplace_back(a, b);
  if (candidates.empty()) throw NothingToCorrupt("caption has no repeated events to collapse");
  const auto [a, b] = candidates[rng.next_below(candidates.size())];
  out.events[b].participants = out.events[a].participants;
  out.normalize();
  return out;
}

// The closed world a caption asserts: entities from object units, attributes
// and relations as stated, and event times in narration order reordered to
// honor the caption's explicit order assertions (falling back to narration
// order if they cycle). Backs caption-oracle (self-verification) bindings.
inline WorldState implied_world(const StructuredCaption& caption) {
  WorldState world;
  for (const auto& o : caption.objects) world.entities.push_back({o.id, o.head, {}});
  for (const auto& a : caption.attributes)
    for (auto& e : world.entities)
      if (e.id == a.object) e.attributes.insert(a.value);
  for (const auto& r : caption.relations)
    world.relations.push_back({r.subject, r.predicate, r.object});

  // topological order over explicit assertions, narration order as tie-break
  const size_t n = caption.events.size();
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < n; ++i) index[caption.events[i].id] = i;
  std::vector<std::set<size_t>> successors(n);
  std::vector<int> indegree(n, 0);
  bool usable = true;
  for (const auto& o : caption.orders) {
    if (!o.explicit_marker) continue;
    auto it1 = index.find(o.before);
    auto it2 = index.find(o.after);
    if (it1 == index.end() || it2 == index.end()) continue;
    if (successors[it1->second].insert(it2->second).second) ++indegree[it2->second];
  }
  std::vector<size_t> order;
  {
    std::set<size_t> ready;
    std::vector<int> remaining = indegree;
    for (size_t i = 0; i < n; ++i)
      if (remaining[i] == 0) ready.insert(i);
    while (!ready.empty()) {
      const size_t next = *ready.begin();  // smallest narration index first
      ready.erase(ready.begin());
      order.push_back(next);
      for (size_t s : successors[next])
        if (--remaining[s] == 0) ready.insert(s);
    }
    if (order.size() != n) usable = false;  // cyclic assertions
  }
  if (!usable) {
    order.clear();
    for (size_t i = 0; i < n; ++i) order.push_back(i);
  }
  for (size_t t = 0; t < order.size(); ++t) {
    const auto& e = caption.events[order[t]];
    world.events.push_back({e.id, e.predicate, e.participants, static_cast<int>(t) + 1});
  }
  return world;
}

inline nlohmann::json world_to_json(const WorldState& world) {
  nlohmann::json doc;
  doc["entities"] = nlohmann::json::array();
  for (const auto& e : world.entities)
    doc["entities"].push_back({{"id", e.id},
                               {"head", e.head},
                               {"attributes", std::vector<std::string>(e.attributes.begin(),
                                                                       e.attributes.end())}});
  doc["relations"] = nlohmann::json::array();
  for (const auto& r : world.relations)
    doc["relations"].push_back(
        {{"subject", r.subject}, {"predicate", r.predicate}, {"object", r.object}});
  doc["events"] = nlohmann::json::array();
  for (const auto& e : world.events)
    doc["events"].push_back({{"id", e.id},
                             {"predicate", e.predicate},
                             {"participants", e.participants},
                             {"time_index", e.time_index}});
  doc["rng_seed"] = world.rng_seed;
  return doc;
}

inline WorldState world_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("world document must be an object");
  WorldState world;
  try {
    for (const auto& j : doc.value("entities", nlohmann::json::array())) {
      WorldEntity e;
      e.id = j.at("id").get<std::string>();
      e.head = j.at("head").get<std::string>();
      for (const auto& a : j.value("attributes", nlohmann::json::array()))
        e.attributes.insert(a.get<std::string>());
      world.entities.push_back(std::move(e));
    }
    for (const auto& j : doc.value("relations", nlohmann::json::array()))
      world.relations.push_back({j.at("subject").get<std::string>(),
                                 j.at("predicate").get<std::string>(),
                                 j.at("object").get<std::string>()});
    for (const auto& j : doc.value("events", nlohmann::json::array())) {
      WorldEvent e;
      e.id = j.at("id").get<std::string>();
      e.predicate = j.at("predicate").get<std::string>();
      for (const auto& p : j.at("participants")) e.participants.push_back(p.get<std::string>());
      e.time_index = j.at("time_index").get<int>();
      world.events.push_back(std::move(e));
    }
    world.rng_seed = doc.value("rng_seed", 0ULL);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed world document: ") + e.what());
  }
  std::sort(world.events.begin(), world.events.end(),
            [](const auto& a, const auto& b) { return a.time_index < b.time_index; });
  return world;
}

}  // namespace structreward
