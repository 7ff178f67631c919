#pragma once

// Desk-scale REINFORCE + KL trainer. The policy is tabular over grammar
// decisions keyed by world-independent contexts (which entity to mention,
// which head/attribute/relation word to emit, whether to merge repeated
// events, which order to assert). Tabular softmax tables admit exact
// analytic gradients, so the surrogate-loss gradient can be checked against
// finite differences.

#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "structreward/audit.hpp"
#include "structreward/caption.hpp"
#include "structreward/parser.hpp"
#include "structreward/reward.hpp"
#include "structreward/rng.hpp"
#include "structreward/world.hpp"

namespace structreward {

struct TokenPolicy {
  std::map<std::string, std::vector<std::string>> choices;  // context -> choice labels
  std::map<std::string, std::vector<double>> logits;        // context -> logits
  double temperature = 1.0;

  std::vector<double> probabilities(const std::string& context) const {
    const auto& l = logits.at(context);
    std::vector<double> p(l.size());
    const double t = std::max(temperature, 1e-9);
    double max_logit = l.empty() ? 0.0 : l.front();
    for (double x : l) max_logit = std::max(max_logit, x);
    double z = 0.0;
    for (size_t i = 0; i < l.size(); ++i) {
      p[i] = std::exp((l[i] - max_logit) / t);
      z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
  }

  int choice_index(const std::string& context, const std::string& label) const {
    const auto& c = choices.at(context);
    for (size_t i = 0; i < c.size(); ++i)
      if (c[i] == label) return static_cast<int>(i);
    throw SchemaError("choice '" + label + "' missing from context '" + context + "'");
  }
};

// Uniform-logit policy covering every decision the lexicon can pose. The
// mention context can fabricate a duplicate instance ("phantom"), the
// attribute and relation contexts can substitute any lexicon word,
// merge_repeat can collapse repeated events, and order can invert an
// asserted pair.
inline TokenPolicy make_uniform_policy(const Lexicon& lex, double temperature = 1.0) {
  TokenPolicy p;
  p.temperature = temperature;
  const std::vector<std::string> adjectives(lex.adjectives.begin(), lex.adjectives.end());
  const std::vector<std::string> prepositions(lex.prepositions.begin(), lex.prepositions.end());

  auto add = [&](const std::string& context, std::vector<std::string> options) {
    p.logits[context] = std::vector<double>(options.size(), 0.0);
    p.choices[context] = std::move(options);
  };
  add("mention", {"yes", "no", "phantom"});
  for (const auto& a : adjectives) add("attr:" + a, adjectives);
  for (const auto& r : prepositions) add("rel:" + r, prepositions);
  add("merge_repeat", {"distinct", "merge"});
  add("order", {"forward", "inverted"});
  return p;
}

struct Decision {
  std::string context;
  int choice = 0;
  double log_prob = 0.0;
};

struct SampledCaption {
  StructuredCaption caption;
  std::string text;
  std::vector<Decision> decisions;
  double mean_logprob = 0.0;
  int length = 0;
};

namespace detail {

inline int sample_choice(const TokenPolicy& policy, const std::string& context, Rng& rng,
                         double& log_prob) {
  const auto p = policy.probabilities(context);
  if (policy.temperature < 1e-9) {
    int best = 0;
    for (size_t i = 1; i < p.size(); ++i)
      if (p[i] > p[best]) best = static_cast<int>(i);
    log_prob = 0.0;
    return best;
  }
  const double u = rng.next_double();
  double acc = 0.0;
  int picked = static_cast<int>(p.size()) - 1;
  for (size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) {
      picked = static_cast<int>(i);
      break;
    }
  }
  log_prob = std::log(std::max(p[static_cast<size_t>(picked)], 1e-300));
  return picked;
}

}  // namespace detail

// Ancestral sampling through the decision schedule for one world. The
// all-faithful decision sequence reproduces the reference renderer's unit
// sets exactly, so the policy family contains the target.
inline SampledCaption sample(const TokenPolicy& policy, const WorldState& world,
                             std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0x73616d706c65ULL));
  SampledCaption out;

  auto decide = [&](const std::string& context) {
    double lp = 0.0;
    const int c = detail::sample_choice(policy, context, rng, lp);
    out.decisions.push_back({context, c, lp});
    return policy.choices.at(context)[static_cast<size_t>(c)];
  };

  // emitted world: what the sampled caption asserts. "phantom" mentions the
  // true entity and additionally fabricates a duplicate instance of its
  // head, the instance-level hallucination that sentence overlap cannot see.
  // Phantoms are narrated last, after every reference to the real instance,
  // so the duplicate introduction is the caption's only trace of them.
  WorldState emitted;
  std::map<std::string, std::string> anchor_of;  // world entity id -> emitted anchor
  std::map<std::string, int> head_counts;
  std::vector<std::string> phantom_heads;
  for (const auto& entity : world.entities) {
    const std::string choice = decide("mention");
    if (choice == "no") continue;
    WorldEntity e;
    e.head = entity.head;
    e.id = e.head + "_" + std::to_string(++head_counts[e.head]);
    for (const auto& attr : entity.attributes) e.attributes.insert(decide("attr:" + attr));
    anchor_of[entity.id] = e.id;
    emitted.entities.push_back(std::move(e));
    if (choice == "phantom") phantom_heads.push_back(entity.head);
  }

  for (const auto& r : world.relations) {
    auto s = anchor_of.find(r.subject);
    auto o = anchor_of.find(r.object);
    if (s == anchor_of.end() || o == anchor_of.end()) continue;
    emitted.relations.push_back({s->second, decide("rel:" + r.predicate), o->second});
  }

  struct EmittedEvent {
    WorldEvent event;
    bool forward = true;  // order decision for the connective to the previous event
  };
  std::vector<EmittedEvent> events;
  std::map<std::string, int> event_counts;
  for (const auto& ev : world.events) {
    std::vector<std::string> participants;
    bool all_mentioned = true;
    for (const auto& p : ev.participants) {
      auto it = anchor_of.find(p);
      if (it == anchor_of.end()) {
        all_mentioned = false;
        break;
      }
      participants.push_back(it->second);
    }
    if (!all_mentioned) continue;

    const EmittedEvent* prior_same = nullptr;
    for (const auto& e : events)
      if (e.event.predicate == ev.predicate) prior_same = &e;
    if (prior_same && prior_same->event.participants.size() == participants.size() &&
        decide("merge_repeat") == "merge")
      participants = prior_same->event.participants;

    EmittedEvent e;
    e.event.predicate = ev.predicate;
    e.event.id = ev.predicate + "#" + std::to_string(++event_counts[ev.predicate]);
    e.event.participants = participants;
    e.event.time_index = static_cast<int>(events.size()) + 1;
    e.forward = events.empty() ? true : decide("order") == "forward";
    events.push_back(std::move(e));
  }
  for (const auto& e : events) emitted.events.push_back(e.event);

  // caption IR mirrors the emitted world; clause indices follow narration,
  // with fabricated duplicates in the trailing clauses
  StructuredCaption& c = out.caption;
  int clause = 0;
  for (const auto& e : emitted.entities) {
    c.objects.push_back({e.id, e.head, e.head, clause});
    for (const auto& a : e.attributes) c.attributes.push_back({e.id, a, clause});
    ++clause;
  }
  const int phantom_clause_base =
      clause + static_cast<int>(emitted.relations.size()) + static_cast<int>(events.size());
  std::vector<WorldEntity> phantoms;
  for (size_t i = 0; i < phantom_heads.size(); ++i) {
    WorldEntity phantom;
    phantom.head = phantom_heads[i];
    phantom.id = phantom.head + "_" + std::to_string(++head_counts[phantom.head]);
    c.objects.push_back(
        {phantom.id, phantom.head, phantom.head, phantom_clause_base + static_cast<int>(i)});
    phantoms.push_back(std::move(phantom));
  }
  for (const auto& r : emitted.relations) {
    c.relations.push_back({r.subject, r.predicate, r.object, clause});
    ++clause;
  }
  for (size_t i = 0; i < events.size(); ++i) {
    EventMention m;
    m.id = events[i].event.id;
    m.predicate = events[i].event.predicate;
    m.participants = events[i].event.participants;
    m.clause = clause;
    m.order_index = static_cast<int>(i);
    // a transitive event clause also states the relation, like the parser
    if (m.participants.size() == 2)
      c.relations.push_back({m.participants[0], m.predicate, m.participants[1], clause});
    c.events.push_back(std::move(m));
    if (i > 0) {
      const std::string& prev = events[i - 1].event.id;
      const std::string& cur = events[i].event.id;
      if (events[i].forward)
        c.orders.push_back({prev, cur, true});
      else
        c.orders.push_back({cur, prev, true});
    }
    ++clause;
  }

  // rendered text (inverted order assertions stay IR-only; the clause is
  // narrated plainly)
  std::vector<std::string> sentences;
  for (const auto& e : emitted.entities) {
    std::string np;
    for (const auto& a : e.attributes) np += a + " ";
    np += e.head;
    sentences.push_back(std::string(grammar::is_vowel_initial(np) ? "An " : "A ") + np +
                        " is present.");
  }
  for (const auto& r : emitted.relations)
    sentences.push_back(detail::capitalize(detail::definite_np(emitted, r.subject)) + " is " +
                        r.predicate + " " + detail::definite_np(emitted, r.object) + ".");
  for (size_t i = 0; i < events.size(); ++i) {
    const std::string clause_text = detail::event_clause(emitted, events[i].event);
    if (i > 0 && events[i].forward)
      sentences.push_back("Then " + clause_text + ".");
    else
      sentences.push_back(detail::capitalize(clause_text) + ".");
  }
  for (const auto& phantom : phantoms) {
    const std::string np = phantom.head;
    sentences.push_back(std::string(grammar::is_vowel_initial(np) ? "An " : "A ") + np +
                        " is present.");
  }
  for (size_t i = 0; i < sentences.size(); ++i) {
    if (i) out.text += " ";
    out.text += sentences[i];
  }

  c.source_text = out.text;
  c.normalize();

  out.length = static_cast<int>(out.decisions.size());
  double sum = 0.0;
  for (const auto& d : out.decisions) sum += d.log_prob;
  out.mean_logprob = out.length > 0 ? sum / out.length : 0.0;
  return out;
}

// Per-decision mean of sampled log-probability ratios against the frozen
// reference policy.
inline double kl_estimate(const TokenPolicy& policy, const TokenPolicy& ref_policy,
                          const SampledCaption& sample) {
  if (sample.decisions.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& d : sample.decisions) {
    const auto p = policy.probabilities(d.context);
    const auto q = ref_policy.probabilities(d.context);
    sum += std::log(std::max(p[static_cast<size_t>(d.choice)], 1e-300)) -
           std::log(std::max(q[static_cast<size_t>(d.choice)], 1e-300));
  }
  return sum / static_cast<double>(sample.decisions.size());
}

// Closed-form KL(policy || ref) for one context; the monitored quantity is
// non-negative by construction.
inline double kl_closed_form(const TokenPolicy& policy, const TokenPolicy& ref_policy,
                             const std::string& context) {
  const auto p = policy.probabilities(context);
  const auto q = ref_policy.probabilities(context);
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / std::max(q[i], 1e-300));
  return kl;
}

struct RolloutBatch {
  std::vector<SampledCaption> samples;
  std::vector<double> rewards;  // advantage-adjusted rewards used by the update
};

// Surrogate batch loss whose gradient is the REINFORCE + KL update:
// L = -(1/B) sum_i R_i * mean_logprob_i + beta * (1/B) sum_i KL_i, where the
// penalty term takes the closed-form per-context KL at each sampled decision
// point. The sampled log-ratio (kl_estimate) stays the monitored quantity,
// but its naive gradient vanishes in expectation, so it cannot regularize.
inline double surrogate_loss(const TokenPolicy& policy, const TokenPolicy& ref_policy,
                             const RolloutBatch& batch, double beta) {
  const size_t n = batch.samples.size();
  if (n == 0) return 0.0;
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const auto& s = batch.samples[i];
    double mean_lp = 0.0;
    double kl = 0.0;
    if (!s.decisions.empty()) {
      for (const auto& d : s.decisions) {
        const auto p = policy.probabilities(d.context);
        mean_lp += std::log(std::max(p[static_cast<size_t>(d.choice)], 1e-300));
        kl += kl_closed_form(policy, ref_policy, d.context);
      }
      mean_lp /= static_cast<double>(s.decisions.size());
      kl /= static_cast<double>(s.decisions.size());
    }
    loss += -batch.rewards[i] * mean_lp + beta * kl;
  }
  return loss / static_cast<double>(n);
}

// Exact analytic gradient of surrogate_loss with respect to every logit.
// d(log pi(a|c))/d(theta_{c,j}) = (1[j=a] - pi(j|c)) / temperature, and
// d KL(p||q) / d(theta_{c,j}) = p_j ((log p_j - log q_j) - KL) / temperature.
inline std::map<std::string, std::vector<double>> surrogate_gradient(
    const TokenPolicy& policy, const TokenPolicy& ref_policy, const RolloutBatch& batch,
    double beta) {
  std::map<std::string, std::vector<double>> grad;
  for (const auto& [context, logits] : policy.logits)
    grad[context] = std::vector<double>(logits.size(), 0.0);

  const size_t n = batch.samples.size();
  if (n == 0) return grad;
  const double t = std::max(policy.temperature, 1e-9);

  for (size_t i = 0; i < n; ++i) {
    const auto& s = batch.samples[i];
    if (s.decisions.empty()) continue;
    const double per_decision =
        1.0 / (static_cast<double>(s.decisions.size()) * static_cast<double>(n));
    for (const auto& d : s.decisions) {
      const auto p = policy.probabilities(d.context);
      auto& g = grad[d.context];
      const double reward_scale = -batch.rewards[i] * per_decision;
      for (size_t j = 0; j < p.size(); ++j) {
        const double indicator = static_cast<int>(j) == d.choice ? 1.0 : 0.0;
        g[j] += reward_scale * (indicator - p[j]) / t;
      }
      if (beta != 0.0) {
        const auto q = ref_policy.probabilities(d.context);
        const double kl = kl_closed_form(policy, ref_policy, d.context);
        for (size_t j = 0; j < p.size(); ++j) {
          const double ratio = std::log(std::max(p[j], 1e-300)) - std::log(std::max(q[j], 1e-300));
          g[j] += beta * per_decision * p[j] * (ratio - kl) / t;
        }
      }
    }
  }
  return grad;
}

struct StepMetrics {
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double loss = 0.0;
};

// One gradient descent step on the surrogate loss. Throws on non-finite
// gradients.
inline StepMetrics step(TokenPolicy& policy, const TokenPolicy& ref_policy,
                        const RolloutBatch& batch, double beta, double learning_rate) {
  StepMetrics metrics;
  const size_t n = batch.samples.size();
  for (size_t i = 0; i < n; ++i) {
    metrics.mean_reward += batch.rewards[i];
    metrics.mean_kl += kl_estimate(policy, ref_policy, batch.samples[i]);
  }
  if (n > 0) {
    metrics.mean_reward /= static_cast<double>(n);
    metrics.mean_kl /= static_cast<double>(n);
  }
  metrics.loss = surrogate_loss(policy, ref_policy, batch, beta);

  const auto grad = surrogate_gradient(policy, ref_policy, batch, beta);
  for (const auto& [context, g] : grad) {
    auto& l = policy.logits.at(context);
    for (size_t j = 0; j < g.size(); ++j) {
      if (!std::isfinite(g[j])) throw NonFiniteGradient("gradient blew up in '" + context + "'");
      l[j] -= learning_rate * g[j];
    }
  }
  return metrics;
}

struct TrainerConfig {
  double beta = 0.0;  // KL coefficient
  int steps = 200;
  int batch_size = 8;
  double learning_rate = 0.5;
  std::string baseline = "none";  // none | moving_average
  double baseline_decay = 0.9;
  std::uint64_t seed = 0;
  std::string reward_mode = "structured";  // structured | sentence_baseline
  int eval_interval = 25;
  int eval_worlds = 16;
  int eval_samples_per_world = 1;
  double temperature = 1.0;
  int jobs = 1;
  RewardConfig reward;
  WorldConfig world;

  void validate() const {
    if (beta < 0) throw TypeMismatch("beta must be non-negative");
    if (steps < 0) throw TypeMismatch("steps must be non-negative");
    if (batch_size < 1) throw TypeMismatch("batch_size must be positive");
    if (baseline != "none" && baseline != "moving_average")
      throw TypeMismatch("baseline must be 'none' or 'moving_average'");
    if (reward_mode != "structured" && reward_mode != "sentence_baseline")
      throw TypeMismatch("reward_mode must be 'structured' or 'sentence_baseline'");
    reward.validate();
  }
};

struct StepRecord {
  int step = 0;
  std::optional<double> mean_R, mean_kl, loss, q_sg, q_temp, q_vqa, rra, aca, eca;
};

struct TrainingHistory {
  std::vector<StepRecord> records;
  TokenPolicy final_policy;
};

// Bag-of-words Dice over unique whitespace tokens: the sentence-overlap
// baseline reward core. Deliberately instance-blind, like any whole-sentence
// overlap metric.
inline double token_dice(const std::string& a, const std::string& b) {
  auto tokens = [](const std::string& s) {
    std::set<std::string> out;
    std::istringstream in(s);
    std::string t;
    while (in >> t) out.insert(t);
    return out;
  };
  const auto ta = tokens(a);
  const auto tb = tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  std::vector<std::string> common;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
  return 2.0 * static_cast<double>(common.size()) / static_cast<double>(ta.size() + tb.size());
}

namespace detail {

struct RolloutResult {
  SampledCaption sample;
  double reward = 0.0;
  std::optional<double> q_sg, q_temp, q_vqa;
};

// One rollout: sample a caption, score it against the rendered reference
// with the world-oracle verifier. The sentence-overlap baseline is the
// controlled substitution: the same three-branch reward with the structured
// scene-graph score replaced by whole-sentence token overlap.
inline RolloutResult roll_one(const TokenPolicy& policy, const TrainerConfig& config,
                              const SimilarityProvider& provider, std::uint64_t world_seed,
                              std::uint64_t sample_seed) {
  const WorldState world = sample_world(config.world, world_seed);
  RolloutResult r;
  r.sample = sample(policy, world, sample_seed);
  const std::string ref_text = render_reference(world, config.world.explicit_order_prob);
  const StructuredCaption ref = parse_caption(ref_text, config.world.lexicon);
  const auto breakdown = score_pair(r.sample.caption, ref, config.reward,
                                    VerifierBinding::world_oracle(world), provider,
                                    config.world.lexicon);
  r.q_sg = breakdown.scene_graph.q_sg;
  r.q_temp = breakdown.q_temp;
  r.q_vqa = breakdown.q_vqa;
  if (config.reward_mode == "sentence_baseline") {
    const double q_overlap = token_dice(r.sample.text, ref_text);
    r.reward = combine(q_overlap, breakdown.q_temp, breakdown.q_vqa, config.reward).total;
  } else {
    r.reward = breakdown.R;
  }
  return r;
}

}  // namespace detail

// Full training loop: rollout -> score against the rendered reference with
// the world-oracle verifier -> policy step; audits RRA/ACA/ECA on a held-out
// world set at the configured interval. Identical config and seed give a
// bit-identical history.
inline TrainingHistory train(const TrainerConfig& config) {
  config.validate();
  const SimilarityProvider provider = SimilarityProvider::lexical();
  TokenPolicy policy = make_uniform_policy(config.world.lexicon, config.temperature);
  const TokenPolicy ref_policy = policy;  // frozen snapshot at step 0

  std::vector<WorldState> eval_worlds;
  for (int i = 0; i < config.eval_worlds; ++i)
    eval_worlds.push_back(
        sample_world(config.world, Rng::mix(config.seed, 0xe7a1000000ULL + static_cast<std::uint64_t>(i))));

  auto evaluate_audit = [&](int step_index, StepRecord& record) {
    std::vector<AuditRecord> records;
    const int repeats = std::max(config.eval_samples_per_world, 1);
    for (size_t i = 0; i < eval_worlds.size(); ++i) {
      for (int k = 0; k < repeats; ++k) {
        const auto s = sample(
            policy, eval_worlds[i],
            Rng::mix(config.seed,
                     0xea10000000ULL +
                         static_cast<std::uint64_t>(step_index) * 1000003ULL +
                         static_cast<std::uint64_t>(i) * 131ULL + static_cast<std::uint64_t>(k)));
        if (s.caption.relations.empty()) continue;  // nothing to audit on this sample
        records.push_back(derive_record("eval_" + std::to_string(i) + "_" + std::to_string(k),
                                        s.caption, eval_worlds[i]));
      }
    }
    if (!records.empty()) {
      const AuditSummary summary = audit_metrics(records);
      record.rra = summary.rra;
      record.aca = summary.aca;
      record.eca = summary.eca;
    }
  };

  TrainingHistory history;
  {
    StepRecord initial;
    initial.step = 0;
    evaluate_audit(0, initial);
    history.records.push_back(initial);
  }

  double moving_baseline = 0.0;
  bool baseline_started = false;

  for (int step_index = 1; step_index <= config.steps; ++step_index) {
    std::vector<detail::RolloutResult> results(static_cast<size_t>(config.batch_size));
    auto roll_range = [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        const std::uint64_t world_seed =
            Rng::mix(config.seed, 0x570000000ULL + static_cast<std::uint64_t>(step_index) * 131071 +
                                      static_cast<std::uint64_t>(i));
        const std::uint64_t sample_seed =
            Rng::mix(config.seed, 0x5a0000000ULL + static_cast<std::uint64_t>(step_index) * 131071 +
                                      static_cast<std::uint64_t>(i));
        results[static_cast<size_t>(i)] = detail::roll_one(policy, config, provider, world_seed,
                                                           sample_seed);
      }
    };
    if (config.jobs > 1 && config.batch_size > 1) {
      const int jobs = std::min(config.jobs, config.batch_size);
      std::vector<std::thread> workers;
      const int chunk = (config.batch_size + jobs - 1) / jobs;
      for (int j = 0; j < jobs; ++j) {
        const int begin = j * chunk;
        const int end = std::min(config.batch_size, begin + chunk);
        if (begin < end) workers.emplace_back(roll_range, begin, end);
      }
      for (auto& w : workers) w.join();
    } else {
      roll_range(0, config.batch_size);
    }

    RolloutBatch batch;
    double mean_raw = 0.0;
    for (auto& r : results) {
      mean_raw += r.reward;
      batch.samples.push_back(std::move(r.sample));
    }
    mean_raw /= static_cast<double>(config.batch_size);

    double baseline_value = 0.0;
    if (config.baseline == "moving_average") {
      baseline_value = baseline_started ? moving_baseline : mean_raw;
      moving_baseline = baseline_started
                            ? config.baseline_decay * moving_baseline +
                                  (1.0 - config.baseline_decay) * mean_raw
                            : mean_raw;
      baseline_started = true;
    }
    for (const auto& r : results) batch.rewards.push_back(r.reward - baseline_value);

    const StepMetrics metrics =
        step(policy, ref_policy, batch, config.beta, config.learning_rate);

    StepRecord record;
    record.step = step_index;
    record.mean_R = mean_raw;
    record.mean_kl = metrics.mean_kl;
    record.loss = metrics.loss;
    auto mean_of = [&](auto getter) -> std::optional<double> {
      double sum = 0.0;
      int n = 0;
      for (const auto& r : results) {
        if (auto v = getter(r)) {
          sum += *v;
          ++n;
        }
      }
      if (n == 0) return std::nullopt;
      return sum / n;
    };
    record.q_sg = mean_of([](const auto& r) { return r.q_sg; });
    record.q_temp = mean_of([](const auto& r) { return r.q_temp; });
    record.q_vqa = mean_of([](const auto& r) { return r.q_vqa; });
    if (config.eval_interval > 0 &&
        (step_index % config.eval_interval == 0 || step_index == config.steps))
      evaluate_audit(step_index, record);
    history.records.push_back(std::move(record));
  }

  history.final_policy = std::move(policy);
  return history;
}

inline nlohmann::json step_record_to_json(const StepRecord& r) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(detail::round6(*v)) : nlohmann::json(nullptr);
  };
  return {{"step", r.step},       {"mean_R", opt(r.mean_R)}, {"mean_kl", opt(r.mean_kl)},
          {"loss", opt(r.loss)},  {"q_sg", opt(r.q_sg)},     {"q_temp", opt(r.q_temp)},
          {"q_vqa", opt(r.q_vqa)}, {"rra", opt(r.rra)},      {"aca", opt(r.aca)},
          {"eca", opt(r.eca)}};
}

inline nlohmann::json policy_to_json(const TokenPolicy& p) {
  nlohmann::json j;
  j["temperature"] = p.temperature;
  j["contexts"] = nlohmann::json::object();
  for (const auto& [context, labels] : p.choices)
    j["contexts"][context] = {{"choices", labels}, {"logits", p.logits.at(context)}};
  return j;
}

}  // namespace structreward
