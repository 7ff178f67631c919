#pragma once

// Three-branch structured consistency reward: Dice-style scene-graph scores
// over matched typed units, temporal and factual question accuracies from a
// verifier, the shared affine centering r_b = rho * (q_b - kappa), and the
// weighted combination R. score_pair composes the whole pipeline and keeps
// every intermediate artifact for the report.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "structreward/caption.hpp"
#include "structreward/matching.hpp"
#include "structreward/questions.hpp"
#include "structreward/similarity.hpp"
#include "structreward/verifier.hpp"

namespace structreward {

struct RewardConfig {
  double alpha_obj = 1.0 / 3.0;
  double alpha_attr = 1.0 / 3.0;
  double alpha_rel = 1.0 / 3.0;
  double lambda_sg = 0.15;
  double lambda_temp = 0.25;
  double lambda_vqa = 0.35;
  double rho = 2.0;    // reward range scale: r_b in [-rho*kappa, rho*(1-kappa)]
  double kappa = 0.5;  // shared centering constant
  double min_weight = 0.5;
  std::optional<int> question_budget;
  std::uint64_t seed = 0;

  void validate() const {
    if (std::abs(alpha_obj + alpha_attr + alpha_rel - 1.0) > 1e-9)
      throw TypeMismatch("alpha weights must sum to 1");
    if (alpha_obj < 0 || alpha_attr < 0 || alpha_rel < 0)
      throw TypeMismatch("alpha weights must be non-negative");
    if (lambda_sg < 0 || lambda_temp < 0 || lambda_vqa < 0)
      throw TypeMismatch("lambda weights must be non-negative");
    if (rho <= 0) throw TypeMismatch("rho must be positive");
    if (kappa < 0 || kappa > 1) throw TypeMismatch("kappa must lie in [0, 1]");
    if (min_weight < 0 || min_weight > 1) throw TypeMismatch("min_weight must lie in [0, 1]");
  }
};

struct SceneGraphScore {
  double q_obj = 1.0, q_attr = 1.0, q_rel = 1.0, q_sg = 1.0;
  ObjectMap object_map;
  TypedMatchResult obj, attr, rel;
};

// q_tau = 2 m_tau / (|U_tau(gen)| + |U_tau(ref)|); a type absent on both
// sides scores 1.
inline double dice_score(const TypedMatchResult& m) {
  if (m.gen_count == 0 && m.ref_count == 0) return 1.0;
  return 2.0 * m.matched_mass / static_cast<double>(m.gen_count + m.ref_count);
}

inline SceneGraphScore scene_graph_score(const StructuredCaption& gen,
                                         const StructuredCaption& ref, const RewardConfig& config,
                                         const SimilarityProvider& provider, const Lexicon& lex) {
  SceneGraphScore s;
  s.object_map = build_object_map(gen, ref, provider, lex, config.min_weight);
  s.obj = match_typed_units(UnitType::Obj, gen, ref, s.object_map, provider, lex, config.min_weight);
  s.attr =
      match_typed_units(UnitType::Attr, gen, ref, s.object_map, provider, lex, config.min_weight);
  s.rel = match_typed_units(UnitType::Rel, gen, ref, s.object_map, provider, lex, config.min_weight);
  s.q_obj = dice_score(s.obj);
  s.q_attr = dice_score(s.attr);
  s.q_rel = dice_score(s.rel);
  s.q_sg = config.alpha_obj * s.q_obj + config.alpha_attr * s.q_attr + config.alpha_rel * s.q_rel;
  return s;
}

struct AnsweredQuestion {
  VerificationQuestion question;
  Answer answer = Answer::No;
  bool correct = false;
};

struct BranchResult {
  std::vector<AnsweredQuestion> answered;
  std::optional<double> accuracy;  // ABSENT when the question set is empty
};

// Average binary accuracy of the verifier against the constructed labels.
template <typename AnswerFn>
inline BranchResult branch_accuracy(const QuestionSet& qs, AnswerFn&& answer_fn) {
  BranchResult result;
  if (qs.questions.empty()) return result;
  int correct = 0;
  for (const auto& q : qs.questions) {
    AnsweredQuestion a;
    a.question = q;
    a.answer = answer_fn(q);
    a.correct = (a.answer == Answer::Yes) == q.label_yes;
    correct += a.correct ? 1 : 0;
    result.answered.push_back(std::move(a));
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(qs.questions.size());
  return result;
}

inline BranchResult branch_accuracy(const QuestionSet& qs, const VerifierBinding& binding) {
  return branch_accuracy(qs, [&](const VerificationQuestion& q) { return binding.answer(q); });
}

struct CombinedReward {
  double r_sg = 0.0, r_temp = 0.0, r_vqa = 0.0;
  double total = 0.0;
};

// r_b = rho * (q_b - kappa) for present branches; an ABSENT branch
// contributes zero, neither reward nor penalty.
inline CombinedReward combine(std::optional<double> q_sg, std::optional<double> q_temp,
                              std::optional<double> q_vqa, const RewardConfig& config) {
  CombinedReward r;
  auto centered = [&](std::optional<double> q) { return q ? config.rho * (*q - config.kappa) : 0.0; };
  r.r_sg = centered(q_sg);
  r.r_temp = centered(q_temp);
  r.r_vqa = centered(q_vqa);
  r.total = config.lambda_sg * r.r_sg + config.lambda_temp * r.r_temp + config.lambda_vqa * r.r_vqa;
  return r;
}

struct RewardBreakdown {
  SceneGraphScore scene_graph;
  EventMatching event_matching;
  BranchResult temporal, vqa;
  std::optional<double> q_temp, q_vqa;
  CombinedReward reward;
  double R = 0.0;
};

// Full pipeline: match under the object map, synthesize both question
// branches, verify, score, and combine. With a self-verify binding the
// questions are answered from the generated caption's own belief world.
inline RewardBreakdown score_pair(const StructuredCaption& gen, const StructuredCaption& ref,
                                  const RewardConfig& config, const VerifierBinding& binding,
                                  const SimilarityProvider& provider, const Lexicon& lex) {
  config.validate();
  RewardBreakdown out;
  out.scene_graph = scene_graph_score(gen, ref, config, provider, lex);
  out.event_matching =
      match_events(gen, ref, out.scene_graph.object_map, provider, lex, config.min_weight);

  QuestionSet temporal = temporal_positive_questions(ref, lex);
  {
    QuestionSet negatives =
        temporal_negative_questions(gen, ref, out.scene_graph.object_map, out.event_matching, lex);
    for (auto& q : negatives.questions) temporal.questions.push_back(std::move(q));
  }
  temporal = balance_and_cap(temporal, config.question_budget, Rng::mix(config.seed, 1));

  QuestionSet vqa = factual_positive_questions(ref, lex);
  {
    QuestionSet negatives =
        factual_negative_questions(gen, ref, out.scene_graph.object_map, out.event_matching, lex);
    for (auto& q : negatives.questions) vqa.questions.push_back(std::move(q));
  }
  vqa = balance_and_cap(vqa, config.question_budget, Rng::mix(config.seed, 2));

  if (binding.kind() == VerifierBinding::Kind::SelfVerify) {
    const CaptionOracle oracle(gen, out.scene_graph.object_map, out.event_matching);
    auto fn = [&](const VerificationQuestion& q) { return oracle.answer(q); };
    out.temporal = branch_accuracy(temporal, fn);
    out.vqa = branch_accuracy(vqa, fn);
  } else {
    out.temporal = branch_accuracy(temporal, binding);
    out.vqa = branch_accuracy(vqa, binding);
  }
  out.q_temp = out.temporal.accuracy;
  out.q_vqa = out.vqa.accuracy;

  out.reward = combine(out.scene_graph.q_sg, out.q_temp, out.q_vqa, config);
  out.R = out.reward.total;
  return out;
}

namespace detail {

// report reals are serialized with six decimal places
inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

inline nlohmann::json optional_q(const std::optional<double>& q) {
  if (!q) return nullptr;
  return round6(*q);
}

inline nlohmann::json typed_match_to_json(const TypedMatchResult& m) {
  nlohmann::json j;
  j["unit_type"] = unit_type_name(m.unit_type);
  j["gen_count"] = m.gen_count;
  j["ref_count"] = m.ref_count;
  j["matched_mass"] = round6(m.matched_mass);
  j["exact_pairs"] = nlohmann::json::array();
  for (const auto& [g, r] : m.exact_pairs) j["exact_pairs"].push_back({{"gen", g}, {"ref", r}});
  j["residual_pairs"] = nlohmann::json::array();
  for (const auto& [g, r, w] : m.residual_pairs)
    j["residual_pairs"].push_back({{"gen", g}, {"ref", r}, {"similarity", round6(w)}});
  return j;
}

inline nlohmann::json branch_to_json(const BranchResult& b) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : b.answered) {
    nlohmann::json q = question_to_json(a.question);
    q["answer"] = answer_name(a.answer);
    q["correct"] = a.correct;
    arr.push_back(std::move(q));
  }
  return arr;
}

}  // namespace detail

inline nlohmann::json breakdown_to_json(const RewardBreakdown& b) {
  nlohmann::json j;
  j["q_obj"] = detail::round6(b.scene_graph.q_obj);
  j["q_attr"] = detail::round6(b.scene_graph.q_attr);
  j["q_rel"] = detail::round6(b.scene_graph.q_rel);
  j["q_sg"] = detail::round6(b.scene_graph.q_sg);
  j["q_temp"] = detail::optional_q(b.q_temp);
  j["q_vqa"] = detail::optional_q(b.q_vqa);
  j["r_sg"] = detail::round6(b.reward.r_sg);
  j["r_temp"] = detail::round6(b.reward.r_temp);
  j["r_vqa"] = detail::round6(b.reward.r_vqa);
  j["R"] = detail::round6(b.R);

  j["object_map"] = nlohmann::json::array();
  for (const auto& [gen_id, ref_id] : b.scene_graph.object_map.pairs)
    j["object_map"].push_back({{"gen", gen_id},
                               {"ref", ref_id},
                               {"weight", detail::round6(b.scene_graph.object_map.weights.at(gen_id))}});
  j["typed_matches"] = {{"obj", detail::typed_match_to_json(b.scene_graph.obj)},
                        {"attr", detail::typed_match_to_json(b.scene_graph.attr)},
                        {"rel", detail::typed_match_to_json(b.scene_graph.rel)}};
  j["event_matching"] = nlohmann::json::array();
  for (const auto& [gen_id, ref_id] : b.event_matching.pairs)
    j["event_matching"].push_back(
        {{"gen", gen_id},
         {"ref", ref_id},
         {"similarity", detail::round6(b.event_matching.similarities.at(gen_id))}});
  j["questions"] = {{"temporal", detail::branch_to_json(b.temporal)},
                    {"vqa", detail::branch_to_json(b.vqa)}};
  return j;
}

}  // namespace structreward
