#include <catch_amalgamated.hpp>

#include <cmath>

#include "structreward/config.hpp"
#include "structreward/trainer.hpp"

using namespace structreward;

namespace {

Lexicon demo_lexicon() {
  return parse_lexicon(R"(
[nouns] man cup table box
[adjectives] red blue tall
[verbs] lift/2 sit/1
[prepositions] on near
[connectives] then=then before=before
)");
}

WorldConfig small_world() {
  WorldConfig w;
  w.lexicon = demo_lexicon();
  w.entity_min = 2;
  w.entity_max = 2;
  w.attrs_min = 1;
  w.attrs_max = 1;
  w.relation_min = 1;
  w.relation_max = 1;
  w.event_min = 1;
  w.event_max = 2;
  return w;
}

}  // namespace

TEST_CASE("uniform policy samples every choice at its fair rate") {
  const Lexicon lex = demo_lexicon();
  TokenPolicy policy = make_uniform_policy(lex);
  const auto p = policy.probabilities("attr:red");
  REQUIRE(p.size() == 3);
  for (double x : p) REQUIRE(x == Catch::Approx(1.0 / 3.0));

  // frequency check over many samples of one decision context
  Rng rng(5);
  std::map<int, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    double lp = 0.0;
    counts[detail::sample_choice(policy, "attr:red", rng, lp)]++;
  }
  for (const auto& [choice, count] : counts) {
    const double freq = static_cast<double>(count) / n;
    // 3 sigma for a binomial with p = 1/3
    REQUIRE(std::abs(freq - 1.0 / 3.0) < 3.0 * std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / n));
  }
}

TEST_CASE("temperature zero takes the argmax deterministically") {
  const Lexicon lex = demo_lexicon();
  TokenPolicy policy = make_uniform_policy(lex, 0.0);
  policy.logits.at("attr:red") = {0.1, 2.0, 0.3};
  const WorldState world = sample_world(small_world(), 3);
  const auto a = sample(policy, world, 1);
  const auto b = sample(policy, world, 2);  // different seed, same argmax path
  REQUIRE(a.caption == b.caption);
  REQUIRE(a.mean_logprob == 0.0);
}

TEST_CASE("faithful decisions reproduce the reference exactly") {
  const Lexicon lex = demo_lexicon();
  const WorldConfig wc = small_world();
  // concentrate the policy on the faithful choice in every context
  TokenPolicy policy = make_uniform_policy(lex, 0.0);
  for (auto& [context, logits] : policy.logits) {
    const auto& labels = policy.choices.at(context);
    for (size_t i = 0; i < labels.size(); ++i) {
      bool faithful = false;
      if (context == "mention") faithful = labels[i] == "yes";
      else if (context == "merge_repeat") faithful = labels[i] == "distinct";
      else if (context == "order") faithful = labels[i] == "forward";
      else faithful = context.substr(context.find(':') + 1) == labels[i];
      logits[i] = faithful ? 10.0 : 0.0;
    }
  }

  const auto provider = SimilarityProvider::lexical();
  RewardConfig rc;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const WorldState world = sample_world(wc, seed);
    const auto s = sample(policy, world, seed);
    const auto ref = parse_caption(render_reference(world, wc.explicit_order_prob), lex);
    const auto score = scene_graph_score(s.caption, ref, rc, provider, lex);
    REQUIRE(score.q_sg == 1.0);
  }
}

TEST_CASE("kl estimate and closed form") {
  const Lexicon lex = demo_lexicon();
  TokenPolicy policy = make_uniform_policy(lex);
  const TokenPolicy ref = policy;

  SECTION("identical policies have zero kl") {
    const WorldState world = sample_world(small_world(), 9);
    const auto s = sample(policy, world, 4);
    REQUIRE(kl_estimate(policy, ref, s) == 0.0);
    for (const auto& [context, _] : policy.logits)
      REQUIRE(kl_closed_form(policy, ref, context) == Catch::Approx(0.0));
  }

  SECTION("sampled kl approximates the closed form for a two-choice context") {
    TokenPolicy biased = policy;
    biased.logits.at("merge_repeat") = {1.0, 0.0};
    const double closed = kl_closed_form(biased, ref, "merge_repeat");

    // Monte Carlo estimate over single-decision pseudo-samples
    Rng rng(17);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      double lp = 0.0;
      const int choice = detail::sample_choice(biased, "merge_repeat", rng, lp);
      SampledCaption s;
      s.decisions = {{"merge_repeat", choice, lp}};
      sum += kl_estimate(biased, ref, s);
    }
    REQUIRE(std::abs(sum / n - closed) < 0.01);
  }

  SECTION("closed form is non-negative for random tables") {
    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
      TokenPolicy a = policy;
      TokenPolicy b = policy;
      for (auto& [context, logits] : a.logits)
        for (double& l : logits) l = rng.next_double() * 4.0 - 2.0;
      for (auto& [context, logits] : b.logits)
        for (double& l : logits) l = rng.next_double() * 4.0 - 2.0;
      for (const auto& [context, _] : a.logits)
        REQUIRE(kl_closed_form(a, b, context) >= 0.0);
    }
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  const Lexicon lex = demo_lexicon();
  Rng rng(41);
  const WorldConfig wc = small_world();

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
      const WorldState world = sample_world(wc, rng.next_u64());
      batch.samples.push_back(sample(policy, world, rng.next_u64()));
      batch.rewards.push_back(rng.next_double() * 2.0 - 1.0);
    }
    const double beta = trial % 2 == 0 ? 0.0 : 0.5;

    const auto grad = surrogate_gradient(policy, ref, batch, beta);
    const double h = 1e-5;
    int checked = 0;
    for (const auto& [context, g] : grad) {
      for (size_t j = 0; j < g.size(); ++j) {
        if (checked++ % 3 != 0) continue;  // probe a third of the coordinates
        TokenPolicy plus = policy;
        TokenPolicy minus = policy;
        plus.logits.at(context)[j] += h;
        minus.logits.at(context)[j] -= h;
        const double fd =
            (surrogate_loss(plus, ref, batch, beta) - surrogate_loss(minus, ref, batch, beta)) /
            (2.0 * h);
        const double denom = std::max({std::abs(g[j]), std::abs(fd), 1e-6});
        REQUIRE(std::abs(g[j] - fd) / denom < 1e-5);
      }
    }
  }
}

TEST_CASE("zero reward and zero beta leave parameters unchanged") {
  const Lexicon lex = demo_lexicon();
  TokenPolicy policy = make_uniform_policy(lex);
  const TokenPolicy ref = policy;
  RolloutBatch batch;
  const WorldState world = sample_world(small_world(), 2);
  batch.samples.push_back(sample(policy, world, 1));
  batch.rewards.push_back(0.0);
  const TokenPolicy before = policy;
  step(policy, ref, batch, 0.0, 0.5);
  REQUIRE(policy.logits == before.logits);
}

TEST_CASE("rewarded choice gains probability monotonically") {
  const Lexicon lex = demo_lexicon();
  TokenPolicy policy = make_uniform_policy(lex);
  const TokenPolicy ref = policy;

  // craft single-decision samples: choice 0 pays +1, choice 1 pays -1
  double last = 0.5;
  for (int it = 0; it < 30; ++it) {
    RolloutBatch batch;
    for (int choice = 0; choice < 2; ++choice) {
      SampledCaption s;
      const auto p = policy.probabilities("merge_repeat");
      s.decisions = {{"merge_repeat", choice, std::log(p[static_cast<size_t>(choice)])}};
      s.mean_logprob = s.decisions[0].log_prob;
      s.length = 1;
      batch.samples.push_back(std::move(s));
      batch.rewards.push_back(choice == 0 ? 1.0 : -1.0);
    }
    step(policy, ref, batch, 0.0, 0.3);
    const double now = policy.probabilities("merge_repeat")[0];
    REQUIRE(now > last);
    last = now;
  }
}

TEST_CASE("reinforce with unit reward is weighted mle") {
  // with beta = 0 and R = 1, the surrogate gradient equals the negative
  // mean-log-likelihood gradient of the sampled decisions
  const Lexicon lex = demo_lexicon();
  TokenPolicy policy = make_uniform_policy(lex);
  for (auto& [context, logits] : policy.logits)
    for (size_t j = 0; j < logits.size(); ++j) logits[j] = 0.1 * static_cast<double>(j);
  const TokenPolicy ref = policy;

  RolloutBatch batch;
  const WorldState world = sample_world(small_world(), 8);
  batch.samples.push_back(sample(policy, world, 3));
  batch.rewards.push_back(1.0);

  const auto grad = surrogate_gradient(policy, ref, batch, 0.0);
  // maximum-likelihood ascent direction: d mean_logprob / d theta
  const auto& s = batch.samples[0];
  for (const auto& [context, g] : grad) {
    std::vector<double> mle(g.size(), 0.0);
    for (const auto& d : s.decisions) {
      if (d.context != context) continue;
      const auto p = policy.probabilities(context);
      for (size_t j = 0; j < p.size(); ++j)
        mle[j] += ((static_cast<int>(j) == d.choice ? 1.0 : 0.0) - p[j]) /
                  static_cast<double>(s.decisions.size());
    }
    for (size_t j = 0; j < g.size(); ++j) REQUIRE(g[j] == Catch::Approx(-mle[j]).margin(1e-12));
  }
}

TEST_CASE("training history is reproducible and improves the structured objective") {
  TrainerConfig config;
  config.world = small_world();
  config.steps = 120;
  config.batch_size = 8;
  config.learning_rate = 4.0;
  config.baseline = "moving_average";
  config.eval_interval = 60;
  config.eval_worlds = 8;
  config.seed = 13;

  const auto h1 = train(config);
  const auto h2 = train(config);
  REQUIRE(h1.records.size() == h2.records.size());
  for (size_t i = 0; i < h1.records.size(); ++i)
    REQUIRE(step_record_to_json(h1.records[i]).dump() ==
            step_record_to_json(h2.records[i]).dump());

  // reward trend: late mean R beats early mean R
  const auto& r = h1.records;
  double early = 0.0, late = 0.0;
  for (size_t i = 1; i <= 10; ++i) early += *r[i].mean_R;
  for (size_t i = r.size() - 10; i < r.size(); ++i) late += *r[i].mean_R;
  REQUIRE(late > early);
}

TEST_CASE("steps zero yields only the initial evaluation") {
  TrainerConfig config;
  config.world = small_world();
  config.steps = 0;
  config.eval_worlds = 4;
  const auto h = train(config);
  REQUIRE(h.records.size() == 1);
  REQUIRE(h.records[0].step == 0);
}

TEST_CASE("parallel rollouts produce the same history") {
  TrainerConfig config;
  config.world = small_world();
  config.steps = 10;
  config.batch_size = 6;
  config.eval_worlds = 4;
  config.seed = 21;

  TrainerConfig parallel = config;
  parallel.jobs = 2;
  const auto a = train(config);
  const auto b = train(parallel);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i)
    REQUIRE(step_record_to_json(a.records[i]).dump() ==
            step_record_to_json(b.records[i]).dump());
}
