// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits non-zero if any fail.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "brute_force.hpp"
#include "structreward/audit.hpp"
#include "structreward/caption.hpp"
#include "structreward/config.hpp"
#include "structreward/parser.hpp"
#include "structreward/reward.hpp"
#include "structreward/trainer.hpp"
#include "structreward/verifier.hpp"
#include "structreward/world.hpp"

using namespace structreward;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

Lexicon demo_lexicon() {
  return parse_lexicon(R"(
[nouns] man cup table chair box cart
[adjectives] red blue wooden tall small
[verbs] lift/2 push/2 sit/1 stand/1
[prepositions] on near behind
[connectives] then=then before=before after=after first=first again=again
)");
}

WorldConfig rich_world_config() {
  WorldConfig c;
  c.lexicon = demo_lexicon();
  c.entity_min = 2;
  c.entity_max = 3;
  c.attrs_min = 1;
  c.attrs_max = 2;
  c.relation_min = 1;
  c.relation_max = 2;
  c.event_min = 2;
  c.event_max = 3;
  c.repeat_event_prob = 0.6;
  c.explicit_order_prob = 1.0;
  return c;
}

StructuredCaption reference_of(const WorldState& world, const WorldConfig& config) {
  return parse_caption(render_reference(world, config.explicit_order_prob), config.lexicon);
}

// ---------------------------------------------------------------- criterion 1
void criterion_matching_optimality() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(0xACC1);
  int checked = 0;
  bool ok = true;
  std::string detail;
  for (int i = 0; i < 200 && ok; ++i) {
    const auto w = brute::random_grid_matrix(rng, 7);
    const double min_weight = (i % 3 == 0) ? 0.5 : 0.0;
    const auto expected = brute::best_partial_injection(w, min_weight);
    const auto got = max_weight_matching(w, min_weight);
    if (got.total_weight != expected.total || got.pairs != expected.pairs) {
      ok = false;
      detail = "mismatch on matrix " + std::to_string(i);
    }
    ++checked;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (ok && seconds >= 10.0) {
    ok = false;
    detail = "runtime " + std::to_string(seconds) + "s exceeds 10s";
  }
  if (ok)
    detail = std::to_string(checked) + " matrices exact, " + std::to_string(seconds) + "s";
  report(1, "matching optimality vs exhaustive enumeration", ok, detail);
}

// ---------------------------------------------------------------- criterion 2
void criterion_dice_fixtures() {
  const Lexicon lex = demo_lexicon();
  const auto provider = SimilarityProvider::lexical();

  auto objects = [](std::vector<std::pair<std::string, std::string>> specs) {
    StructuredCaption c;
    std::map<std::string, int> counts;
    for (auto& [head, phrase] : specs) {
      const int k = ++counts[head];
      c.objects.push_back({head + "_" + std::to_string(k), head, phrase, 0});
    }
    c.normalize();
    return c;
  };
  auto with_attrs = [](StructuredCaption c, std::vector<std::pair<std::string, std::string>> attrs) {
    for (auto& [anchor, value] : attrs) c.attributes.push_back({anchor, value, 0});
    c.normalize();
    return c;
  };
  auto with_rels = [](StructuredCaption c,
                      std::vector<std::tuple<std::string, std::string, std::string>> rels) {
    for (auto& [s, p, o] : rels) c.relations.push_back({s, p, o, 0});
    c.normalize();
    return c;
  };

  RewardConfig cfg;
  int failures = 0;
  int index = 0;
  std::string first_failure;
  auto check = [&](double got, double want, const std::string& label) {
    ++index;
    if (std::abs(got - want) > 1e-12) {
      ++failures;
      if (first_failure.empty())
        first_failure = label + " got " + std::to_string(got) + " want " + std::to_string(want);
    }
  };

  const auto cup = objects({{"cup", "cup"}});
  const auto cup_table = objects({{"cup", "cup"}, {"table", "table"}});
  const auto cup_table_chair = objects({{"cup", "cup"}, {"table", "table"}, {"chair", "chair"}});
  const auto empty = StructuredCaption{};

  auto q = [&](const StructuredCaption& gen, const StructuredCaption& ref, UnitType t,
               const RewardConfig& c) {
    const auto map = build_object_map(gen, ref, provider, lex, c.min_weight);
    return dice_score(match_typed_units(t, gen, ref, map, provider, lex, c.min_weight));
  };

  // 1-5: object scores
  check(q(cup_table, cup_table, UnitType::Obj, cfg), 1.0, "identical objects");
  check(q(cup_table, cup_table_chair, UnitType::Obj, cfg), 2.0 * 2.0 / 5.0, "2 of 3 objects");
  check(q(empty, empty, UnitType::Obj, cfg), 1.0, "absent objects on both sides");
  check(q(cup, empty, UnitType::Obj, cfg), 0.0, "gen object with empty reference");
  check(q(objects({{"cup", "cup"}, {"cup", "cup"}}), cup, UnitType::Obj, cfg), 2.0 * 1.0 / 3.0,
        "two gen cups vs one ref cup");

  // 6-10: attribute scores under the identity map
  const auto attr_red = with_attrs(cup, {{"cup_1", "red"}});
  const auto attr_blue = with_attrs(cup, {{"cup_1", "blue"}});
  const auto attr_redd = with_attrs(cup, {{"cup_1", "redd"}});
  const auto attr_red_blue = with_attrs(cup, {{"cup_1", "red"}, {"cup_1", "blue"}});
  check(q(attr_red, attr_red, UnitType::Attr, cfg), 1.0, "exact attribute");
  check(q(attr_blue, attr_red, UnitType::Attr, cfg), 0.0, "disjoint attribute");
  check(q(attr_red_blue, attr_red, UnitType::Attr, cfg), 2.0 * 1.0 / 3.0, "extra attribute");
  check(q(attr_redd, attr_red, UnitType::Attr, cfg), 2.0 * 0.8 / 2.0,
        "residual attribute similarity 0.8");
  check(q(cup, cup, UnitType::Attr, cfg), 1.0, "absent attributes on both sides");

  // 11-14: relation scores
  const auto rel_on = with_rels(cup_table, {{"cup_1", "on", "table_1"}});
  const auto rel_near = with_rels(cup_table, {{"cup_1", "near", "table_1"}});
  check(q(rel_on, rel_on, UnitType::Rel, cfg), 1.0, "exact relation");
  check(q(rel_near, rel_on, UnitType::Rel, cfg), 0.0, "predicate below cutoff");
  RewardConfig loose = cfg;
  loose.min_weight = 0.2;
  // dice(near, on): bigrams {ne,ea,ar} vs {on} share nothing
  check(q(rel_near, rel_on, UnitType::Rel, loose), 0.0, "still nothing shared");
  check(q(rel_on, cup_table, UnitType::Rel, cfg), 0.0, "relation vs none");

  // 15-17: phrase-level residual objects
  const auto red_cup = objects({{"cup", "red cup"}});
  check(q(cup, red_cup, UnitType::Obj, cfg), 2.0 * 0.5 / 2.0, "residual phrase similarity 0.5");
  check(q(objects({{"cup", "cup"}, {"box", "box"}}), objects({{"cup", "cup"}}), UnitType::Obj, cfg),
        2.0 * 1.0 / 3.0, "extra gen object");
  check(q(objects({{"cup", "cup"}}), objects({{"cup", "cup"}, {"box", "box"}}), UnitType::Obj, cfg),
        2.0 * 1.0 / 3.0, "extra ref object");

  // 18-20: weighted q_sg combinations
  {
    const auto gen = with_attrs(cup_table, {{"cup_1", "red"}});
    const auto ref = with_attrs(cup_table_chair, {{"cup_1", "red"}});
    const auto s = scene_graph_score(gen, ref, cfg, provider, lex);
    check(s.q_sg, (2.0 * 2.0 / 5.0 + 1.0 + 1.0) / 3.0, "uniform alpha q_sg");
    RewardConfig heavy = cfg;
    heavy.alpha_obj = 0.5;
    heavy.alpha_attr = 0.25;
    heavy.alpha_rel = 0.25;
    const auto s2 = scene_graph_score(gen, ref, heavy, provider, lex);
    check(s2.q_sg, 0.5 * (2.0 * 2.0 / 5.0) + 0.25 * 1.0 + 0.25 * 1.0, "weighted alpha q_sg");
    const auto s3 = scene_graph_score(empty, empty, cfg, provider, lex);
    check(s3.q_sg, 1.0, "empty pair scores one");
  }

  report(2, "dice scores on golden fixtures", failures == 0,
         failures == 0 ? std::to_string(index) + " fixtures exact" : first_failure);
}

// ---------------------------------------------------------------- criterion 3
void criterion_anti_reward_hacking() {
  const Lexicon lex = demo_lexicon();
  const auto provider = SimilarityProvider::lexical();
  const WorldConfig wc = rich_world_config();
  RewardConfig cfg;

  int violations = 0;
  int strict_pairs = 0;
  int pairs = 0;
  for (std::uint64_t seed = 0; pairs < 500; ++seed) {
    const auto world = sample_world(wc, seed);
    const auto ref = reference_of(world, wc);
    const auto gen = ref;  // every unit has an exact, claimed match
    ++pairs;

    const auto base = scene_graph_score(gen, ref, cfg, provider, lex);

    const int variant = static_cast<int>(seed % 3);
    StructuredCaption grown = gen;
    double q_before = 0.0, q_after = 0.0;
    bool denominator_grew = false;
    if (variant == 0 && !gen.attributes.empty()) {
      AttributeUnit dup = gen.attributes.front();
      dup.value += "d";  // near-synonym, bigram dice 2*len/(len+1+len) >= 0.5
      grown.attributes.push_back(dup);
      grown.normalize();
      denominator_grew = grown.attributes.size() > gen.attributes.size();
      q_before = base.q_attr;
      q_after = scene_graph_score(grown, ref, cfg, provider, lex).q_attr;
    } else if (variant == 1 && !gen.objects.empty()) {
      const ObjectUnit& src = gen.objects.front();
      int max_k = 0;
      for (const auto& o : gen.objects)
        if (o.head == src.head) ++max_k;
      grown.objects.push_back(
          {src.head + "_" + std::to_string(max_k + 1), src.head, src.phrase, 0});
      grown.normalize();
      denominator_grew = true;
      q_before = base.q_obj;
      q_after = scene_graph_score(grown, ref, cfg, provider, lex).q_obj;
    } else if (!gen.relations.empty()) {
      RelationUnit dup = gen.relations.front();
      dup.clause += 100;  // duplicate claim at the same slot, same predicate
      grown.relations.push_back(dup);
      grown.normalize();
      denominator_grew = grown.relations.size() > gen.relations.size();
      q_before = base.q_rel;
      q_after = scene_graph_score(grown, ref, cfg, provider, lex).q_rel;
    } else {
      continue;
    }

    if (q_after > q_before + 1e-12) ++violations;
    if (denominator_grew) {
      ++strict_pairs;
      if (!(q_after < q_before - 1e-12)) ++violations;
    }
  }
  report(3, "anti-reward-hacking monotonicity", violations == 0,
         std::to_string(pairs) + " pairs, " + std::to_string(strict_pairs) +
             " strict, violations " + std::to_string(violations));
}

// ---------------------------------------------------------------- criterion 4
void criterion_label_soundness() {
  const Lexicon lex = demo_lexicon();
  const auto provider = SimilarityProvider::lexical();
  const WorldConfig wc = rich_world_config();
  RewardConfig cfg;

  int violations = 0;
  std::map<std::string, int> negatives_per_kind;
  int positives_checked = 0;

  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto world = sample_world(wc, seed);
    const auto ref = reference_of(world, wc);

    for (const auto& qs : {factual_positive_questions(ref, lex),
                           temporal_positive_questions(ref, lex)}) {
      for (const auto& q : qs.questions) {
        ++positives_checked;
        if (oracle_answer(world, q) != Answer::Yes) ++violations;
      }
    }

    for (CorruptionKind kind :
         {CorruptionKind::AttributeSwap, CorruptionKind::RelationSwap,
          CorruptionKind::ParticipantSwap, CorruptionKind::OrderInvert,
          CorruptionKind::InstanceCollapse}) {
      StructuredCaption gen;
      try {
        gen = corrupt(ref, kind, lex, seed);
      } catch (const NothingToCorrupt&) {
        continue;
      }
      const auto map = build_object_map(gen, ref, provider, lex, cfg.min_weight);
      const auto events = match_events(gen, ref, map, provider, lex, cfg.min_weight);
      for (const auto& qs : {factual_negative_questions(gen, ref, map, events, lex),
                             temporal_negative_questions(gen, ref, map, events, lex)}) {
        for (const auto& q : qs.questions) {
          ++negatives_per_kind[corruption_name(kind)];
          if (oracle_answer(world, q) != Answer::No) ++violations;
        }
      }
    }
  }

  bool all_kinds = true;
  std::string counts;
  for (const char* kind : {"attribute_swap", "relation_swap", "participant_swap", "order_invert",
                           "instance_collapse"}) {
    all_kinds = all_kinds && negatives_per_kind[kind] > 0;
    counts += std::string(kind) + "=" + std::to_string(negatives_per_kind[kind]) + " ";
  }
  report(4, "label soundness end to end", violations == 0 && all_kinds,
         std::to_string(positives_checked) + " positives, negatives " + counts + "violations " +
             std::to_string(violations));
}

// ---------------------------------------------------------------- criterion 5
void criterion_round_trip() {
  const WorldConfig wc = rich_world_config();
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto world = sample_world(wc, seed);
    const auto caption = reference_of(world, wc);

    // content isomorphism: every world unit appears with identical anchors;
    // the relation comparison closes the world side over arity-2 events,
    // since transitive verb clauses parse into a relation plus an event
    bool ok = caption.objects.size() == world.entities.size() &&
              caption.events.size() == world.events.size();
    for (const auto& e : world.entities) {
      const ObjectUnit* o = caption.find_object(e.id);
      if (!o || o->head != e.head) ok = false;
      std::set<std::string> claimed;
      for (const auto& a : caption.attributes)
        if (a.object == e.id) claimed.insert(a.value);
      if (claimed != e.attributes) ok = false;
    }
    std::set<std::tuple<std::string, std::string, std::string>> world_rels, caption_rels;
    for (const auto& r : world.relations) world_rels.insert({r.subject, r.predicate, r.object});
    for (const auto& e : world.events)
      if (e.participants.size() == 2)
        world_rels.insert({e.participants[0], e.predicate, e.participants[1]});
    for (const auto& r : caption.relations)
      caption_rels.insert({r.subject, r.predicate, r.object});
    if (world_rels != caption_rels) ok = false;
    for (const auto& e : world.events) {
      const EventMention* m = caption.find_event(e.id);
      if (!m || m->predicate != e.predicate || m->participants != e.participants) ok = false;
    }
    if (!ok) ++violations;
  }
  report(5, "round-trip isomorphism parse(render(world))", violations == 0,
         "200 worlds, violations " + std::to_string(violations));
}

// ---------------------------------------------------------------- criterion 6
void criterion_corruption_detectability() {
  const Lexicon lex = demo_lexicon();
  const auto provider = SimilarityProvider::lexical();
  const WorldConfig wc = rich_world_config();
  RewardConfig cfg;
  cfg.seed = 5;

  int violations = 0;
  std::string detail;
  for (CorruptionKind kind :
       {CorruptionKind::AttributeSwap, CorruptionKind::RelationSwap,
        CorruptionKind::ParticipantSwap, CorruptionKind::OrderInvert,
        CorruptionKind::InstanceCollapse}) {
    int tested = 0;
    for (std::uint64_t seed = 0; tested < 100 && seed < 20000; ++seed) {
      const auto world = sample_world(wc, seed);
      const auto ref = reference_of(world, wc);
      StructuredCaption gen;
      try {
        gen = corrupt(ref, kind, lex, seed);
      } catch (const NothingToCorrupt&) {
        continue;
      }
      ++tested;
      const auto clean = score_pair(ref, ref, cfg, VerifierBinding::self_verify(), provider, lex);
      const auto bad = score_pair(gen, ref, cfg, VerifierBinding::self_verify(), provider, lex);
      if (!(bad.R < clean.R)) ++violations;
    }
    detail += std::string(corruption_name(kind)) + "=" + std::to_string(tested) + " ";
  }
  report(6, "corruption detectability under self-verification", violations == 0,
         detail + "violations " + std::to_string(violations));
}

// ---------------------------------------------------------------- criterion 7
void criterion_audit_metrics() {
  auto rec = [](bool r, bool a, bool e) { return AuditRecord{"x", r, a, e}; };
  int failures = 0;
  auto expect = [&](const AuditSummary& s, std::optional<double> rra, std::optional<double> aca,
                    std::optional<double> eca) {
    auto same = [](const std::optional<double>& got, const std::optional<double>& want) {
      if (got.has_value() != want.has_value()) return false;
      return !got || *got == *want;
    };
    if (!same(s.rra, rra) || !same(s.aca, aca) || !same(s.eca, eca)) ++failures;
  };

  expect(audit_metrics({rec(1, 1, 1)}), 1.0, 1.0, 1.0);
  expect(audit_metrics({rec(0, 0, 0)}), 0.0, std::nullopt, std::nullopt);
  expect(audit_metrics({rec(1, 1, 1), rec(1, 0, 1), rec(0, 1, 1), rec(1, 1, 0)}), 3.0 / 4.0,
         2.0 / 3.0, 1.0 / 2.0);
  expect(audit_metrics({rec(1, 0, 0), rec(1, 0, 1)}), 1.0, 0.0, std::nullopt);
  expect(audit_metrics({rec(0, 1, 1), rec(0, 1, 0)}), 0.0, std::nullopt, std::nullopt);
  expect(audit_metrics({rec(1, 1, 0)}), 1.0, 1.0, 0.0);
  expect(audit_metrics({rec(1, 1, 0), rec(1, 1, 1)}), 1.0, 1.0, 0.5);
  expect(audit_metrics({rec(1, 0, 1), rec(0, 0, 0), rec(0, 0, 1)}), 1.0 / 3.0, 0.0, std::nullopt);
  expect(audit_metrics({rec(1, 1, 1), rec(1, 1, 1), rec(1, 1, 1), rec(0, 1, 1)}), 3.0 / 4.0, 1.0,
         1.0);
  expect(audit_metrics({rec(1, 1, 1), rec(1, 0, 0), rec(1, 1, 0), rec(0, 0, 0), rec(1, 1, 1)}),
         4.0 / 5.0, 3.0 / 4.0, 2.0 / 3.0);

  bool empty_throws = false;
  try {
    audit_metrics({});
  } catch (const EmptyInput&) {
    empty_throws = true;
  }
  report(7, "audit metrics on hand-counted fixtures", failures == 0 && empty_throws,
         "10 fixtures, failures " + std::to_string(failures));
}

// ---------------------------------------------------------------- criterion 8
void criterion_gradient_fidelity() {
  const Lexicon lex = demo_lexicon();
  WorldConfig wc = rich_world_config();
  Rng rng(0xACC8);
  int checked = 0;
  int failures = 0;
  double worst = 0.0;

  for (int trial = 0; trial < 50; ++trial) {
    TokenPolicy policy = make_uniform_policy(lex);
    for (auto& [context, logits] : policy.logits)
      for (double& l : logits) l = rng.next_double() * 4.0 - 2.0;
    TokenPolicy ref = make_uniform_policy(lex);
    for (auto& [context, logits] : ref.logits)
      for (double& l : logits) l = rng.next_double() * 4.0 - 2.0;

    RolloutBatch batch;
    const int b = rng.next_range(1, 3);
    for (int i = 0; i < b; ++i) {
      const auto world = sample_world(wc, rng.next_u64());
      batch.samples.push_back(sample(policy, world, rng.next_u64()));
      batch.rewards.push_back(rng.next_double() * 2.0 - 1.0);
    }
    const double beta = trial % 2 ? 0.5 : 0.0;

    const auto grad = surrogate_gradient(policy, ref, batch, beta);
    const double h = 1e-5;
    for (const auto& [context, g] : grad) {
      for (size_t j = 0; j < g.size(); ++j) {
        TokenPolicy plus = policy;
        TokenPolicy minus = policy;
        plus.logits.at(context)[j] += h;
        minus.logits.at(context)[j] -= h;
        const double fd = (surrogate_loss(plus, ref, batch, beta) -
                           surrogate_loss(minus, ref, batch, beta)) /
                          (2.0 * h);
        const double denom = std::max({std::abs(g[j]), std::abs(fd), 1e-6});
        const double rel = std::abs(g[j] - fd) / denom;
        worst = std::max(worst, rel);
        ++checked;
        if (rel >= 1e-5) ++failures;
      }
    }
  }
  std::ostringstream detail;
  detail << checked << " coordinates, worst rel err " << worst;
  report(8, "analytic gradients vs central differences", failures == 0, detail.str());
}

// --------------------------------------------------------- criteria 9 and 10
TrainerConfig toy_config(std::uint64_t seed, const std::string& mode, double beta) {
  TrainerConfig c;
  c.world.lexicon = parse_lexicon(R"(
[nouns] man cup table box
[adjectives] red blue tall
[verbs] lift/2 sit/1
[prepositions] on near
[connectives] then=then before=before
)");
  c.world.entity_min = 2;
  c.world.entity_max = 2;
  c.world.attrs_min = 1;
  c.world.attrs_max = 1;
  c.world.relation_min = 1;
  c.world.relation_max = 1;
  c.world.event_min = 1;
  c.world.event_max = 2;
  c.world.repeat_event_prob = 0.25;
  c.world.explicit_order_prob = 1.0;
  c.steps = 800;
  c.batch_size = 8;
  c.learning_rate = 4.0;
  c.baseline = "moving_average";
  c.beta = beta;
  c.eval_interval = 800;
  c.eval_worlds = 60;
  c.eval_samples_per_world = 10;
  c.seed = seed;
  c.reward_mode = mode;
  return c;
}

double final_q_sg(const TrainingHistory& h) {
  double sum = 0.0;
  int n = 0;
  for (size_t i = h.records.size() >= 10 ? h.records.size() - 10 : 0; i < h.records.size(); ++i)
    if (h.records[i].q_sg) {
      sum += *h.records[i].q_sg;
      ++n;
    }
  return n ? sum / n : 0.0;
}

const StepRecord* last_eval(const TrainingHistory& h) {
  for (auto it = h.records.rbegin(); it != h.records.rend(); ++it)
    if (it->aca) return &*it;
  return nullptr;
}

void criteria_toy_rl() {
  const auto start = std::chrono::steady_clock::now();
  int q_sg_failures = 0;
  int improve_failures = 0;
  int baseline_wins = 0;
  int kl_wins = 0;
  bool kl_nonneg = true;
  std::string detail9, detail10;

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto structured = train(toy_config(seed, "structured", 0.01));
    const auto baseline = train(toy_config(seed, "sentence_baseline", 0.01));

    if (final_q_sg(structured) < 0.9) ++q_sg_failures;

    const StepRecord& initial = structured.records.front();
    const StepRecord* final_rec = last_eval(structured);
    if (!final_rec || !initial.aca || !initial.eca || !final_rec->aca || !final_rec->eca ||
        !(*final_rec->aca > *initial.aca) || !(*final_rec->eca > *initial.eca))
      ++improve_failures;

    const StepRecord* base_rec = last_eval(baseline);
    if (final_rec && base_rec && base_rec->aca && base_rec->eca &&
        *base_rec->aca < *final_rec->aca && *base_rec->eca < *final_rec->eca)
      ++baseline_wins;

    // criterion 10: beta damping of the sampled KL
    const auto with_kl = train(toy_config(seed, "structured", 0.5));
    const auto no_kl = train(toy_config(seed, "structured", 0.0));
    const double kl_with = with_kl.records.back().mean_kl.value_or(0.0);
    const double kl_without = no_kl.records.back().mean_kl.value_or(0.0);
    if (kl_with < kl_without) ++kl_wins;
    for (const auto& [context, _] : with_kl.final_policy.logits) {
      const TokenPolicy ref = make_uniform_policy(demo_lexicon());
      if (kl_closed_form(with_kl.final_policy, ref, context) < 0.0) kl_nonneg = false;
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const bool ok9 = q_sg_failures == 0 && improve_failures == 0 && baseline_wins >= 8 &&
                   seconds < 300.0;
  detail9 = "q_sg failures " + std::to_string(q_sg_failures) + ", improvement failures " +
            std::to_string(improve_failures) + ", baseline lower in " +
            std::to_string(baseline_wins) + "/10, " + std::to_string(seconds) + "s";
  report(9, "toy RL improvement over the sentence baseline", ok9, detail9);

  const bool ok10 = kl_wins >= 9 && kl_nonneg;
  detail10 = "KL lower with beta in " + std::to_string(kl_wins) + "/10, closed form non-negative " +
             (kl_nonneg ? "yes" : "no");
  report(10, "KL behavior under beta", ok10, detail10);
}

// --------------------------------------------------------------- criterion 11
void criterion_overlap_audit() {
  bool ok = true;
  std::string detail;

  std::vector<std::string> train_names, eval1, eval2;
  for (int i = 0; i < 100; ++i) train_names.push_back("train_" + std::to_string(i) + ".mp4");
  for (int i = 0; i < 8193; ++i) eval1.push_back("eval_" + std::to_string(i) + ".mp4");
  for (int i = 0; i < 50; ++i) eval2.push_back("other_" + std::to_string(i) + ".avi");
  const auto disjoint = overlap_audit(train_names, {{"benchmark", eval1}, {"small", eval2}});
  if (disjoint.sets[0].overlap != 0 || disjoint.sets[1].overlap != 0 ||
      disjoint.union_overlap != 0 || disjoint.sets[0].eval_size != 8193) {
    ok = false;
    detail = "disjoint fixture produced nonzero overlap";
  }
  const auto j = overlap_report_to_json(disjoint);
  if (j["sets"][0]["display"] != "0/8193") {
    ok = false;
    detail = "display shape mismatch: " + j["sets"][0]["display"].get<std::string>();
  }

  // adversarial: case and extension variants, directories
  const auto adversarial = overlap_audit(
      {"Video_001.mp4", "clips/Second.MOV", "x/y/Third.webm", "unrelated.mp4"},
      {{"adv", {"video_001.avi", "second.mp4", "THIRD.mkv", "fourth.mp4"}}});
  if (adversarial.sets[0].overlap != 3 || adversarial.union_overlap != 3) {
    ok = false;
    detail = "adversarial overlap expected 3, got " + std::to_string(adversarial.union_overlap);
  }
  if (ok) detail = "0/8193 shape and 3 normalized collisions";
  report(11, "overlap audit shapes and collisions", ok, detail);
}

// --------------------------------------------------------------- criterion 12
void criterion_cli_determinism() {
#ifndef STRUCTREWARD_CLI_PATH
  report(12, "CLI determinism", false, "CLI path not wired into the build");
#else
  const fs::path dir = fs::temp_directory_path() / "structreward_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name);
    out << content;
    return (dir / name).string();
  };
  auto slurp = [&](const std::string& name) {
    std::ifstream in(dir / name);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(STRUCTREWARD_CLI_PATH) + " " + args + " 2>/dev/null";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };

  const auto lexicon = put("lexicon.txt", R"(
[nouns] man cup table chair box cart
[adjectives] red blue wooden tall small
[verbs] lift/2 push/2 sit/1 stand/1
[prepositions] on near behind
[connectives] then=then before=before after=after first=first again=again
)");
  const auto config = put("config.txt", "world.lexicon = " + lexicon + R"(
world.entity_min = 2
world.entity_max = 3
trainer.steps = 5
trainer.batch_size = 4
trainer.eval_interval = 5
trainer.eval_worlds = 4
)");
  const auto gen = put("gen.txt", "A blue cup is on the table. Then a man lifts the cup.");
  const auto ref = put("ref.txt", "A red cup is on the table. Then a man lifts the cup.");

  bool ok = true;
  std::string detail;
  auto check_same = [&](const std::string& what, const std::string& args1,
                        const std::string& out1, const std::string& args2,
                        const std::string& out2) {
    if (run(args1) != 0 || run(args2) != 0) {
      ok = false;
      detail = what + " command failed";
      return;
    }
    if (slurp(out1) != slurp(out2)) {
      ok = false;
      detail = what + " outputs differ between runs";
    }
  };

  check_same("parse",
             "parse --lexicon " + lexicon + " --in " + gen + " --out " + (dir / "p1.json").string(),
             "p1.json",
             "parse --lexicon " + lexicon + " --in " + gen + " --out " + (dir / "p2.json").string(),
             "p2.json");
  const std::string score_args = "score --gen " + gen + " --ref " + ref + " --lexicon " + lexicon +
                                 " --verifier self --seed 3 --out ";
  check_same("score", score_args + (dir / "s1.json").string(), "s1.json",
             score_args + (dir / "s2.json").string(), "s2.json");
  const std::string q_args = "questions --gen " + gen + " --ref " + ref + " --lexicon " + lexicon +
                             " --budget 4 --seed 3 --out ";
  check_same("questions", q_args + (dir / "q1.json").string(), "q1.json",
             q_args + (dir / "q2.json").string(), "q2.json");
  check_same("gen-world", "gen-world --config " + config + " --seed 11 --out " +
                              (dir / "w1.json").string(),
             "w1.json",
             "gen-world --config " + config + " --seed 11 --out " + (dir / "w2.json").string(),
             "w2.json");
  if (ok) {
    check_same("render", "render --world " + (dir / "w1.json").string() + " --out " +
                             (dir / "t1.txt").string(),
               "t1.txt",
               "render --world " + (dir / "w1.json").string() + " --out " +
                   (dir / "t2.txt").string(),
               "t2.txt");
  }
  if (run("train --config " + config + " --seed 4 --out " + (dir / "runA").string()) != 0 ||
      run("train --config " + config + " --seed 4 --out " + (dir / "runB").string()) != 0) {
    ok = false;
    detail = "train command failed";
  } else if (slurp("runA/history.jsonl") != slurp("runB/history.jsonl") ||
             slurp("runA/policy.json") != slurp("runB/policy.json")) {
    ok = false;
    detail = "train outputs differ between runs";
  }

  if (ok) detail = "parse, score, questions, gen-world, render, train byte-identical";
  fs::remove_all(dir);
  report(12, "CLI determinism", ok, detail);
#endif
}

}  // namespace

int main() {
  criterion_matching_optimality();
  criterion_dice_fixtures();
  criterion_anti_reward_hacking();
  criterion_label_soundness();
  criterion_round_trip();
  criterion_corruption_detectability();
  criterion_audit_metrics();
  criterion_gradient_fidelity();
  criteria_toy_rl();
  criterion_overlap_audit();
  criterion_cli_determinism();

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
