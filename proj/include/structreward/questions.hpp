#pragma once

// Yes/no verification questions instantiated from the fixed template
// inventory. Positives come from the reference parse (support chains, event
// occurrences, ordered pairs); negatives only from anchor-compatible
// conflicts the generated caption creates at a matched slot. Labels are
// known by construction. Every question carries structured provenance slots
// so oracles never re-parse question text.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "structreward/caption.hpp"
#include "structreward/matching.hpp"
#include "structreward/parser.hpp"
#include "structreward/rng.hpp"
#include "structreward/similarity.hpp"

namespace structreward {

enum class Branch { Temporal, Factual };
enum class QuestionKind { Existence, Attribute, Relation, EventOccurrence, TemporalOrder };

inline const char* branch_name(Branch b) { return b == Branch::Temporal ? "temporal" : "factual"; }

inline const char* question_kind_name(QuestionKind k) {
  switch (k) {
    case QuestionKind::Existence: return "existence";
    case QuestionKind::Attribute: return "attribute";
    case QuestionKind::Relation: return "relation";
    case QuestionKind::EventOccurrence: return "event_occurrence";
    default: return "temporal_order";
  }
}

// One endpoint of an event claim: a slot id when the claim names a specific
// reference event instance (empty for purely descriptive claims), plus the
// claimed predicate and participant binding.
struct EventSlot {
  std::string event_id;
  std::string predicate;
  std::vector<std::string> participants;

  bool operator==(const EventSlot&) const = default;
};

struct Provenance {
  std::string source;                  // positive/negative construction rule
  std::vector<std::string> anchors;    // reference-side object anchors involved
  std::string head;                    // existence: head lemma
  std::vector<std::string> modifiers;  // existence: attribute values from the phrase
  std::string value;                   // attribute value under test
  std::string predicate;               // relation predicate under test
  EventSlot event1, event2;            // occurrence uses event1; order uses both

  bool operator==(const Provenance&) const = default;
};

struct VerificationQuestion {
  Branch branch = Branch::Factual;
  QuestionKind kind = QuestionKind::Existence;
  std::string text;
  bool label_yes = true;
  Provenance provenance;

  bool operator==(const VerificationQuestion&) const = default;
};

struct QuestionSet {
  std::vector<VerificationQuestion> questions;

  int positives_count() const {
    int n = 0;
    for (const auto& q : questions) n += q.label_yes ? 1 : 0;
    return n;
  }
  int negatives_count() const { return static_cast<int>(questions.size()) - positives_count(); }
};

// Template inventory, filled verbatim. The article rule picks "an" before a
// vowel-initial phrase.
inline std::string render_question(QuestionKind kind, const std::vector<std::string>& slots) {
  auto need = [&](size_t n) {
    if (slots.size() != n)
      throw MissingSlot(std::string(question_kind_name(kind)) + " template needs " +
                        std::to_string(n) + " slots, got " + std::to_string(slots.size()));
    for (const auto& s : slots)
      if (s.empty()) throw MissingSlot(std::string(question_kind_name(kind)) + " slot is empty");
  };
  switch (kind) {
    case QuestionKind::Existence:
      need(1);
      return std::string("Is there ") + (grammar::is_vowel_initial(slots[0]) ? "an " : "a ") +
             slots[0] + "?";
    case QuestionKind::Attribute:
      need(2);
      return "Is the " + slots[0] + " " + slots[1] + "?";
    case QuestionKind::Relation:
      need(3);
      return "Does the " + slots[0] + " " + slots[1] + " the " + slots[2] + "?";
    case QuestionKind::EventOccurrence:
      need(2);
      return "Does " + slots[0] + " " + slots[1] + "?";
    default:
      need(2);
      return "Did " + slots[0] + " happen before " + slots[1] + "?";
  }
}

namespace detail {

// d(o): the reference phrase for the instance, with an ordinal modifier only
// when several reference objects share the same canonical phrase.
inline std::string descriptor(const StructuredCaption& ref, const std::string& anchor,
                              const Lexicon& lex) {
  const ObjectUnit* unit = ref.find_object(anchor);
  if (!unit) return anchor;
  const std::string phrase = canonicalize(unit->phrase, lex);
  int same_phrase = 0;
  for (const auto& o : ref.objects)
    if (canonicalize(o.phrase, lex) == phrase) ++same_phrase;
  if (same_phrase <= 1) return phrase;
  const auto [head, k] = split_anchor(unit->id, '_');
  return grammar::ordinal_word(k) + " " + phrase;
}

// "the man lifts the cup" (third person, for order questions)
inline std::string event_clause_3p(const StructuredCaption& ref, const EventSlot& slot,
                                   const Lexicon& lex) {
  std::string out = "the " + descriptor(ref, slot.participants.front(), lex) + " " +
                    third_person(slot.predicate);
  if (slot.participants.size() > 1)
    out += " the " + descriptor(ref, slot.participants[1], lex);
  return out;
}

struct QuestionBuilder {
  const StructuredCaption& ref;
  const Lexicon& lex;
  QuestionSet set;
  std::set<std::string> seen;

  bool add(VerificationQuestion q, const std::string& dedup_key) {
    if (!seen.insert(std::string(question_kind_name(q.kind)) + "|" + dedup_key).second)
      return false;
    set.questions.push_back(std::move(q));
    return true;
  }

  void existence(Branch branch, const std::string& anchor, const std::string& source) {
    const ObjectUnit* unit = ref.find_object(anchor);
    if (!unit) return;
    const std::string phrase = canonicalize(unit->phrase, lex);
    VerificationQuestion q;
    q.branch = branch;
    q.kind = QuestionKind::Existence;
    q.label_yes = true;
    q.provenance.source = source;
    q.provenance.anchors = {anchor};
    q.provenance.head = unit->head;
    std::istringstream words(phrase);
    std::string w;
    while (words >> w)
      if (w != unit->head) q.provenance.modifiers.push_back(w);
    q.text = render_question(QuestionKind::Existence, {phrase});
    std::string key = unit->head;
    for (const auto& m : q.provenance.modifiers) key += "," + m;
    add(std::move(q), key);
  }

  void attribute(Branch branch, const std::string& anchor, const std::string& value, bool yes,
                 const std::string& source) {
    VerificationQuestion q;
    q.branch = branch;
    q.kind = QuestionKind::Attribute;
    q.label_yes = yes;
    q.provenance.source = source;
    q.provenance.anchors = {anchor};
    q.provenance.value = value;
    q.text = render_question(QuestionKind::Attribute, {descriptor(ref, anchor, lex), value});
    add(std::move(q), anchor + "|" + value);
  }

  void relation(Branch branch, const std::string& subject, const std::string& predicate,
                const std::string& object, bool yes, const std::string& source) {
    VerificationQuestion q;
    q.branch = branch;
    q.kind = QuestionKind::Relation;
    q.label_yes = yes;
    q.provenance.source = source;
    q.provenance.anchors = {subject, object};
    q.provenance.predicate = predicate;
    q.text = render_question(
        QuestionKind::Relation,
        {descriptor(ref, subject, lex), predicate, descriptor(ref, object, lex)});
    add(std::move(q), subject + "|" + predicate + "|" + object);
  }

  void occurrence(Branch branch, const EventSlot& slot, bool yes, const std::string& source) {
    VerificationQuestion q;
    q.branch = branch;
    q.kind = QuestionKind::EventOccurrence;
    q.label_yes = yes;
    q.provenance.source = source;
    q.provenance.anchors = slot.participants;
    q.provenance.event1 = slot;
    std::string participants = "the " + descriptor(ref, slot.participants.front(), lex);
    std::string event = slot.predicate;
    if (slot.participants.size() > 1)
      event += " the " + descriptor(ref, slot.participants[1], lex);
    q.text = render_question(QuestionKind::EventOccurrence, {participants, event});
    std::string key = slot.predicate;
    for (const auto& p : slot.participants) key += "," + p;
    add(std::move(q), key);
  }

  void order(Branch branch, const EventSlot& first, const EventSlot& second, bool yes,
             const std::string& source) {
    VerificationQuestion q;
    q.branch = branch;
    q.kind = QuestionKind::TemporalOrder;
    q.label_yes = yes;
    q.provenance.source = source;
    q.provenance.event1 = first;
    q.provenance.event2 = second;
    q.text = render_question(QuestionKind::TemporalOrder, {event_clause_3p(ref, first, lex),
                                                           event_clause_3p(ref, second, lex)});
    auto slot_key = [](const EventSlot& s) {
      std::string k = s.event_id + ";" + s.predicate;
      for (const auto& p : s.participants) k += "," + p;
      return k;
    };
    add(std::move(q), slot_key(first) + "|" + slot_key(second));
  }
};

inline EventSlot slot_of(const EventMention& e) { return {e.id, e.predicate, e.participants}; }

}  // namespace detail

// Support chains under every reference relation (root claim): endpoint
// existence, anchor-specific attributes, the relation itself, and event
// occurrences involving those endpoints. All labeled yes.
inline QuestionSet factual_positive_questions(const StructuredCaption& ref, const Lexicon& lex) {
  detail::QuestionBuilder b{ref, lex, {}, {}};
  for (const auto& r : ref.relations) {
    b.existence(Branch::Factual, r.subject, "reference_support_chain");
    b.existence(Branch::Factual, r.object, "reference_support_chain");
    for (const auto& a : ref.attributes)
      if (a.object == r.subject || a.object == r.object)
        b.attribute(Branch::Factual, a.object, a.value, true, "reference_support_chain");
    b.relation(Branch::Factual, r.subject, r.predicate, r.object, true,
               "reference_support_chain");
    for (const auto& e : ref.events) {
      const bool touches =
          std::find(e.participants.begin(), e.participants.end(), r.subject) !=
              e.participants.end() ||
          std::find(e.participants.begin(), e.participants.end(), r.object) !=
              e.participants.end();
      if (touches)
        b.occurrence(Branch::Factual, detail::slot_of(e), true, "reference_support_chain");
    }
  }
  return b.set;
}

// Negatives only from anchor-compatible conflicts at a matched slot: a wrong
// attribute on a matched object, a wrong relation between matched endpoints,
// or a wrong participant binding on a reference event slot. Content merely
// absent from the reference never creates a negative.
inline QuestionSet factual_negative_questions(const StructuredCaption& gen,
                                              const StructuredCaption& ref, const ObjectMap& map,
                                              const EventMatching& events, const Lexicon& lex) {
  detail::QuestionBuilder b{ref, lex, {}, {}};

  for (const auto& a : gen.attributes) {
    auto it = map.pairs.find(a.object);
    if (it == map.pairs.end()) continue;
    const std::string& ref_anchor = it->second;
    const std::string value = canonicalize(a.value, lex);
    std::set<std::string> ref_values;
    for (const auto& ra : ref.attributes)
      if (ra.object == ref_anchor) ref_values.insert(canonicalize(ra.value, lex));
    if (!ref_values.empty() && !ref_values.count(value))
      b.attribute(Branch::Factual, ref_anchor, value, false, "wrong_attribute_on_matched_object");
  }

  for (const auto& r : gen.relations) {
    auto s = map.pairs.find(r.subject);
    auto o = map.pairs.find(r.object);
    if (s == map.pairs.end() || o == map.pairs.end()) continue;
    const std::string predicate = canonicalize(r.predicate, lex);
    std::set<std::string> ref_predicates;
    for (const auto& rr : ref.relations)
      if (rr.subject == s->second && rr.object == o->second)
        ref_predicates.insert(canonicalize(rr.predicate, lex));
    if (!ref_predicates.empty() && !ref_predicates.count(predicate))
      b.relation(Branch::Factual, s->second, predicate, o->second, false,
                 "wrong_relation_on_matched_endpoints");
  }

  for (const auto& e : gen.events) {
    if (events.pairs.count(e.id)) continue;  // matched events agree with the reference
    std::vector<std::string> mapped;
    bool all_mapped = true;
    for (const auto& p : e.participants) {
      auto it = map.pairs.find(p);
      if (it == map.pairs.end()) {
        all_mapped = false;
        break;
      }
      mapped.push_back(it->second);
    }
    if (!all_mapped) continue;
    const std::string predicate = canonicalize(e.predicate, lex);
    bool slot_exists = false;
    bool binding_exists = false;
    std::string slot_id;
    for (const auto& re : ref.events) {
      if (canonicalize(re.predicate, lex) != predicate ||
          re.participants.size() != mapped.size())
        continue;
      if (slot_id.empty()) slot_id = re.id;
      slot_exists = true;
      if (re.participants == mapped) binding_exists = true;
    }
    if (slot_exists && !binding_exists)
      b.occurrence(Branch::Factual, {slot_id, predicate, mapped}, false,
                   "wrong_participant_binding");
  }

  return b.set;
}

// Temporal positives: event occurrences plus ordered pairs, instantiated
// only when the reference expresses explicit temporal structure. An
// order-free reference yields an empty set, occurrence questions included.
inline QuestionSet temporal_positive_questions(const StructuredCaption& ref, const Lexicon& lex) {
  detail::QuestionBuilder b{ref, lex, {}, {}};
  if (!ref.has_explicit_order()) return b.set;
  for (const auto& e : ref.events)
    b.occurrence(Branch::Temporal, detail::slot_of(e), true, "reference_event_occurrence");
  for (const auto& o : ref.orders) {
    if (!o.explicit_marker) continue;
    const EventMention* e1 = ref.find_event(o.before);
    const EventMention* e2 = ref.find_event(o.after);
    if (e1 && e2)
      b.order(Branch::Temporal, detail::slot_of(*e1), detail::slot_of(*e2), true,
              "reference_ordered_pair");
  }
  return b.set;
}

// Temporal negatives, gated like the positives: (a) the reversed question
// for each explicitly ordered reference pair; (b) instance collapse/swap —
// a generated event that binds a reference event slot to a different mapped
// anchor, or merges repeated events onto one binding, asked as a conflicting
// claim with label no.
inline QuestionSet temporal_negative_questions(const StructuredCaption& gen,
                                               const StructuredCaption& ref, const ObjectMap& map,
                                               const EventMatching& events, const Lexicon& lex) {
  detail::QuestionBuilder b{ref, lex, {}, {}};
  if (!ref.has_explicit_order()) return b.set;

  for (const auto& o : ref.orders) {
    if (!o.explicit_marker) continue;
    const EventMention* e1 = ref.find_event(o.before);
    const EventMention* e2 = ref.find_event(o.after);
    if (!e1 || !e2) continue;
    if (!events.ref_matched(e1->id) || !events.ref_matched(e2->id)) continue;
    b.order(Branch::Temporal, detail::slot_of(*e2), detail::slot_of(*e1), false,
            "order_inversion");
  }

  for (const auto& e : gen.events) {
    if (events.pairs.count(e.id)) continue;
    std::vector<std::string> mapped;
    bool all_mapped = true;
    for (const auto& p : e.participants) {
      auto it = map.pairs.find(p);
      if (it == map.pairs.end()) {
        all_mapped = false;
        break;
      }
      mapped.push_back(it->second);
    }
    if (!all_mapped) continue;
    const std::string predicate = canonicalize(e.predicate, lex);

    std::vector<const EventMention*> slot_events;
    for (const auto& re : ref.events)
      if (canonicalize(re.predicate, lex) == predicate &&
          re.participants.size() == mapped.size())
        slot_events.push_back(&re);
    if (slot_events.empty()) continue;

    const EventMention* same_binding = nullptr;
    for (const auto* re : slot_events)
      if (re->participants == mapped) same_binding = re;

    if (!same_binding) {
      // swap: the claimed binding exists nowhere on this slot
      b.occurrence(Branch::Temporal, {slot_events.front()->id, predicate, mapped}, false,
                   "instance_swap");
    } else {
      // collapse: the claim duplicates an existing instance's binding; ask
      // the repetition as a self-order, which is false unless the world
      // really holds two such instances
      std::string unmatched_slot;
      for (const auto* re : slot_events)
        if (!events.ref_matched(re->id) && re->id != same_binding->id) {
          unmatched_slot = re->id;
          break;
        }
      b.order(Branch::Temporal, {same_binding->id, predicate, mapped},
              {unmatched_slot, predicate, mapped}, false, "instance_collapse");
    }
  }

  return b.set;
}

// Downsamples the larger label class to within one of the smaller (when both
// are present), then uniformly subsamples to the budget. Deterministic under
// the seed; surviving questions keep their relative order.
inline QuestionSet balance_and_cap(const QuestionSet& qs, std::optional<int> budget,
                                   std::uint64_t rng_seed) {
  Rng rng(Rng::mix(rng_seed, 0x62616c616e6365ULL));

  auto pick = [&](int keep, int from) {
    std::vector<int> indices(from);
    for (int i = 0; i < from; ++i) indices[i] = i;
    for (int i = 0; i < keep; ++i) {
      const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(from - i)));
      std::swap(indices[i], indices[j]);
    }
    indices.resize(keep);
    std::sort(indices.begin(), indices.end());
    return indices;
  };

  std::vector<VerificationQuestion> positives, negatives;
  for (const auto& q : qs.questions) (q.label_yes ? positives : negatives).push_back(q);

  if (!positives.empty() && !negatives.empty()) {
    auto shrink = [&](std::vector<VerificationQuestion>& bigger, int target) {
      const auto keep = pick(target, static_cast<int>(bigger.size()));
      std::vector<VerificationQuestion> kept;
      for (int i : keep) kept.push_back(bigger[i]);
      bigger = std::move(kept);
    };
    if (positives.size() > negatives.size() + 1)
      shrink(positives, static_cast<int>(negatives.size()) + 1);
    else if (negatives.size() > positives.size() + 1)
      shrink(negatives, static_cast<int>(positives.size()) + 1);
  }

  QuestionSet out;
  for (auto& q : positives) out.questions.push_back(std::move(q));
  for (auto& q : negatives) out.questions.push_back(std::move(q));

  if (budget && static_cast<int>(out.questions.size()) > *budget) {
    const auto keep = pick(std::max(*budget, 0), static_cast<int>(out.questions.size()));
    std::vector<VerificationQuestion> kept;
    for (int i : keep) kept.push_back(out.questions[i]);
    out.questions = std::move(kept);
  }
  return out;
}

inline nlohmann::json provenance_to_json(const Provenance& p) {
  nlohmann::json j;
  j["source"] = p.source;
  if (!p.anchors.empty()) j["anchors"] = p.anchors;
  if (!p.head.empty()) j["head"] = p.head;
  if (!p.modifiers.empty()) j["modifiers"] = p.modifiers;
  if (!p.value.empty()) j["value"] = p.value;
  if (!p.predicate.empty()) j["predicate"] = p.predicate;
  auto slot = [](const EventSlot& s) {
    nlohmann::json e;
    if (!s.event_id.empty()) e["event_id"] = s.event_id;
    e["predicate"] = s.predicate;
    e["participants"] = s.participants;
    return e;
  };
  if (!p.event1.predicate.empty()) j["event1"] = slot(p.event1);
  if (!p.event2.predicate.empty()) j["event2"] = slot(p.event2);
  return j;
}

inline nlohmann::json question_to_json(const VerificationQuestion& q) {
  return {{"branch", branch_name(q.branch)},
          {"kind", question_kind_name(q.kind)},
          {"text", q.text},
          {"label", q.label_yes ? "yes" : "no"},
          {"provenance", provenance_to_json(q.provenance)}};
}

inline nlohmann::json question_set_to_json(const QuestionSet& qs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& q : qs.questions) arr.push_back(question_to_json(q));
  return arr;
}

}  // namespace structreward
