#pragma once

// Flat key-value configuration with dotted sections
// (`reward.lambda_sg = 0.15`). File values override built-in defaults;
// unknown keys are errors, not warnings.

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "structreward/errors.hpp"
#include "structreward/trainer.hpp"

namespace structreward {

struct LoadedConfig {
  TrainerConfig trainer;  // carries the reward and world sections
  std::string lexicon_path;
  std::string similarity_provider = "lexical";  // lexical | embedding_table
  std::string similarity_table_path;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  double v = 0.0;
  char leftover = 0;
  if (!(in >> v) || in >> leftover)
    throw TypeMismatch("key '" + key + "' needs a real number, got '" + value + "'");
  return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  long long v = 0;
  char leftover = 0;
  if (!(in >> v) || in >> leftover)
    throw TypeMismatch("key '" + key + "' needs an integer, got '" + value + "'");
  return static_cast<int>(v);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  std::uint64_t v = 0;
  char leftover = 0;
  if (!(in >> v) || in >> leftover)
    throw TypeMismatch("key '" + key + "' needs an unsigned integer, got '" + value + "'");
  return v;
}

}  // namespace detail

// Parses config text over the given defaults. Every recognized key is
// listed here; anything else raises UnknownKey.
inline LoadedConfig load_config_text(const std::string& text, LoadedConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw TypeMismatch("line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));

    RewardConfig& r = base.trainer.reward;
    TrainerConfig& t = base.trainer;
    WorldConfig& w = base.trainer.world;

    if (key == "reward.alpha_obj") r.alpha_obj = detail::parse_double(key, value);
    else if (key == "reward.alpha_attr") r.alpha_attr = detail::parse_double(key, value);
    else if (key == "reward.alpha_rel") r.alpha_rel = detail::parse_double(key, value);
    else if (key == "reward.lambda_sg") r.lambda_sg = detail::parse_double(key, value);
    else if (key == "reward.lambda_temp") r.lambda_temp = detail::parse_double(key, value);
    else if (key == "reward.lambda_vqa") r.lambda_vqa = detail::parse_double(key, value);
    else if (key == "reward.rho") r.rho = detail::parse_double(key, value);
    else if (key == "reward.kappa") r.kappa = detail::parse_double(key, value);
    else if (key == "reward.min_weight") r.min_weight = detail::parse_double(key, value);
    else if (key == "reward.question_budget") r.question_budget = detail::parse_int(key, value);
    else if (key == "reward.seed") r.seed = detail::parse_u64(key, value);
    else if (key == "trainer.beta") t.beta = detail::parse_double(key, value);
    else if (key == "trainer.steps") t.steps = detail::parse_int(key, value);
    else if (key == "trainer.batch_size") t.batch_size = detail::parse_int(key, value);
    else if (key == "trainer.learning_rate") t.learning_rate = detail::parse_double(key, value);
    else if (key == "trainer.baseline") t.baseline = value;
    else if (key == "trainer.baseline_decay") t.baseline_decay = detail::parse_double(key, value);
    else if (key == "trainer.seed") t.seed = detail::parse_u64(key, value);
    else if (key == "trainer.reward_mode") t.reward_mode = value;
    else if (key == "trainer.eval_interval") t.eval_interval = detail::parse_int(key, value);
    else if (key == "trainer.eval_worlds") t.eval_worlds = detail::parse_int(key, value);
    else if (key == "trainer.eval_samples_per_world")
      t.eval_samples_per_world = detail::parse_int(key, value);
    else if (key == "trainer.temperature") t.temperature = detail::parse_double(key, value);
    else if (key == "trainer.jobs") t.jobs = detail::parse_int(key, value);
    else if (key == "world.lexicon") base.lexicon_path = value;
    else if (key == "world.entity_min") w.entity_min = detail::parse_int(key, value);
    else if (key == "world.entity_max") w.entity_max = detail::parse_int(key, value);
    else if (key == "world.attrs_min") w.attrs_min = detail::parse_int(key, value);
    else if (key == "world.attrs_max") w.attrs_max = detail::parse_int(key, value);
    else if (key == "world.relation_min") w.relation_min = detail::parse_int(key, value);
    else if (key == "world.relation_max") w.relation_max = detail::parse_int(key, value);
    else if (key == "world.event_min") w.event_min = detail::parse_int(key, value);
    else if (key == "world.event_max") w.event_max = detail::parse_int(key, value);
    else if (key == "world.repeat_event_prob") w.repeat_event_prob = detail::parse_double(key, value);
    else if (key == "world.explicit_order_prob")
      w.explicit_order_prob = detail::parse_double(key, value);
    else if (key == "similarity.provider") base.similarity_provider = value;
    else if (key == "similarity.table") base.similarity_table_path = value;
    else throw UnknownKey("unknown config key '" + key + "'");
  }

  base.trainer.reward.validate();
  if (base.similarity_provider != "lexical" && base.similarity_provider != "embedding_table")
    throw TypeMismatch("similarity.provider must be 'lexical' or 'embedding_table'");
  return base;
}

}  // namespace structreward
