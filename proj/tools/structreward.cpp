// structreward: anchored caption parsing, structured consistency rewards,
// verification questions, synthetic worlds, audits, and the toy RL trainer,
// behind one subcommand-style binary.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "structreward/audit.hpp"
#include "structreward/caption.hpp"
#include "structreward/config.hpp"
#include "structreward/manifest.hpp"
#include "structreward/parser.hpp"
#include "structreward/reward.hpp"
#include "structreward/similarity.hpp"
#include "structreward/trainer.hpp"
#include "structreward/verifier.hpp"
#include "structreward/world.hpp"

namespace sr = structreward;
namespace fs = std::filesystem;

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

struct Logger {
  LogLevel level = LogLevel::Info;

  void log(LogLevel at, const std::string& message,
           const nlohmann::json& fields = nlohmann::json::object()) const {
    if (at > level) return;
    nlohmann::json line = fields;
    line["level"] = at == LogLevel::Error ? "error" : at == LogLevel::Info ? "info" : "debug";
    line["message"] = message;
    std::cerr << line.dump() << "\n";
  }
};

Logger g_log;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sr::SchemaError("cannot read file '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw sr::SchemaError("cannot write file '" + path + "'");
  out << content;
}

// seed precedence: explicit flag, then STRUCTREWARD_SEED, then the fallback
// (config value or zero)
std::uint64_t effective_seed(const std::optional<std::uint64_t>& flag,
                             std::uint64_t fallback = 0) {
  if (flag) return *flag;
  if (const char* env = std::getenv("STRUCTREWARD_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw sr::TypeMismatch("STRUCTREWARD_SEED must be an unsigned integer");
    }
  }
  return fallback;
}

struct ManifestWriter {
  sr::RunManifest manifest;
  std::string path;  // empty when the command writes to stdout only

  void start(const std::string& command, std::uint64_t seed, const std::string& config_text,
             const std::map<std::string, std::string>& inputs, const std::string& out_path) {
    manifest.command = command;
    manifest.seed = seed;
    manifest.config_digest = sr::content_digest(config_text);
    for (const auto& [name, content] : inputs)
      manifest.input_digests[name] = sr::content_digest(content);
    manifest.started_at = sr::iso_timestamp_now();
    if (!out_path.empty()) {
      const fs::path out(out_path);
      path = fs::is_directory(out) || out.extension().empty()
                 ? (out / "manifest.json").string()
                 : out_path + ".manifest.json";
      write_file(path, manifest.to_json().dump(2) + "\n");  // lands before the outputs
    }
  }

  void finish() {
    if (path.empty()) return;
    manifest.finished_at = sr::iso_timestamp_now();
    write_file(path, manifest.to_json().dump(2) + "\n");
  }
};

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    write_file(out_path, content);
}

// caption inputs: .json documents are ingested, anything else is parsed as
// controlled-grammar text
sr::StructuredCaption load_caption(const std::string& path, const sr::Lexicon& lex) {
  const std::string content = read_file(path);
  if (fs::path(path).extension() == ".json") return sr::ingest_json(content);
  return sr::parse_caption(content, lex);
}

sr::VerifierBinding parse_verifier(const std::string& spec) {
  if (spec.rfind("world:", 0) == 0)
    return sr::VerifierBinding::world_oracle(
        sr::world_from_json(nlohmann::json::parse(read_file(spec.substr(6)))));
  if (spec == "self") return sr::VerifierBinding::self_verify();
  if (spec.rfind("tcp:", 0) == 0) {
    const std::string rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos)
      throw sr::TypeMismatch("tcp verifier needs host:port, got '" + rest + "'");
    return sr::VerifierBinding::external(rest.substr(0, colon),
                                         std::stoi(rest.substr(colon + 1)));
  }
  throw sr::TypeMismatch("verifier must be world:<file>, tcp:<host:port>, or self");
}

sr::SimilarityProvider make_provider(const sr::LoadedConfig& config) {
  if (config.similarity_provider == "embedding_table") {
    if (config.similarity_table_path.empty())
      throw sr::TypeMismatch("similarity.provider embedding_table needs similarity.table");
    return sr::SimilarityProvider::embedding(
        sr::EmbeddingTable::parse(read_file(config.similarity_table_path)));
  }
  return sr::SimilarityProvider::lexical();
}

std::vector<std::string> read_name_list(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (auto end = line.find_last_not_of(" \t\r"); end != std::string::npos)
      line = line.substr(0, end + 1);
    else
      line.clear();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured consistency rewards for captions over synthetic worlds"};
  app.require_subcommand(1);

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "error, info, or debug")
      ->check(CLI::IsMember({"error", "info", "debug"}));

  // ---- parse ----
  auto* cmd_parse = app.add_subcommand("parse", "parse caption text into anchored units");
  std::string parse_lexicon_path, parse_text, parse_in, parse_out;
  cmd_parse->add_option("--lexicon", parse_lexicon_path, "lexicon file")->required();
  auto* text_opt = cmd_parse->add_option("--text", parse_text, "caption text");
  cmd_parse->add_option("--in", parse_in, "caption text file")->excludes(text_opt);
  cmd_parse->add_option("--out", parse_out, "output caption JSON (stdout when omitted)");

  // ---- score ----
  auto* cmd_score = app.add_subcommand("score", "score a generated caption against a reference");
  std::string score_gen, score_ref, score_lexicon, score_config, score_verifier = "self",
              score_out;
  std::optional<std::uint64_t> score_seed;
  cmd_score->add_option("--gen", score_gen, "generated caption (.json or text file)")->required();
  cmd_score->add_option("--ref", score_ref, "reference caption (.json or text file)")->required();
  cmd_score->add_option("--lexicon", score_lexicon, "lexicon file")->required();
  cmd_score->add_option("--config", score_config, "key-value config file");
  cmd_score->add_option("--verifier", score_verifier,
                        "world:<file>, tcp:<host:port>, or self (default)");
  cmd_score->add_option("--seed", score_seed, "question sampling seed");
  cmd_score->add_option("--out", score_out, "report path (stdout when omitted)");

  // ---- questions ----
  auto* cmd_questions = app.add_subcommand("questions", "emit verification questions for a pair");
  std::string q_gen, q_ref, q_lexicon, q_out;
  std::optional<int> q_budget;
  std::optional<std::uint64_t> q_seed;
  cmd_questions->add_option("--gen", q_gen, "generated caption")->required();
  cmd_questions->add_option("--ref", q_ref, "reference caption")->required();
  cmd_questions->add_option("--lexicon", q_lexicon, "lexicon file")->required();
  cmd_questions->add_option("--budget", q_budget, "per-branch question cap");
  cmd_questions->add_option("--seed", q_seed, "balancing seed");
  cmd_questions->add_option("--out", q_out, "output path (stdout when omitted)");

  // ---- gen-world ----
  auto* cmd_world = app.add_subcommand("gen-world", "sample a synthetic world");
  std::string world_config_path, world_out;
  std::optional<std::uint64_t> world_seed;
  cmd_world->add_option("--config", world_config_path, "config with world.* keys")->required();
  cmd_world->add_option("--seed", world_seed, "world seed");
  cmd_world->add_option("--out", world_out, "world JSON path (stdout when omitted)");

  // ---- render ----
  auto* cmd_render = app.add_subcommand("render", "render a world's reference caption");
  std::string render_world, render_out;
  double render_explicit_prob = 0.75;
  cmd_render->add_option("--world", render_world, "world JSON file")->required();
  cmd_render->add_option("--explicit-prob", render_explicit_prob,
                         "probability of explicit connectives");
  cmd_render->add_option("--out", render_out, "output path (stdout when omitted)");

  // ---- audit ----
  auto* cmd_audit = app.add_subcommand("audit", "aggregate consistency audit records");
  std::string audit_records, audit_out;
  cmd_audit->add_option("--records", audit_records, "JSONL audit records")->required();
  cmd_audit->add_option("--out", audit_out, "summary path (stdout when omitted)");

  // ---- overlap ----
  auto* cmd_overlap = app.add_subcommand("overlap", "normalized filename overlap audit");
  std::string overlap_train, overlap_out;
  std::vector<std::string> overlap_evals;
  cmd_overlap->add_option("--train", overlap_train, "training name list")->required();
  cmd_overlap->add_option("--eval", overlap_evals, "evaluation name list (repeatable)")
      ->required()
      ->expected(-1);
  cmd_overlap->add_option("--out", overlap_out, "report path (stdout when omitted)");

  // ---- train ----
  auto* cmd_train = app.add_subcommand("train", "run the toy REINFORCE+KL loop");
  std::string train_config_path, train_out;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> train_jobs;
  cmd_train->add_option("--config", train_config_path, "config file")->required();
  cmd_train->add_option("--out", train_out, "output directory")->required();
  cmd_train->add_option("--seed", train_seed, "seed override");
  cmd_train->add_option("--jobs", train_jobs, "parallel rollout workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  g_log.level = log_level == "error" ? LogLevel::Error
                : log_level == "debug" ? LogLevel::Debug
                                       : LogLevel::Info;

  try {
    if (*cmd_parse) {
      const std::string lexicon_text = read_file(parse_lexicon_path);
      const sr::Lexicon lex = sr::parse_lexicon(lexicon_text);
      const std::string text = text_opt->count() ? parse_text : read_file(parse_in);
      ManifestWriter mw;
      mw.start("parse", 0, "", {{parse_lexicon_path, lexicon_text}, {"text", text}}, parse_out);
      const auto caption = sr::parse_caption(text, lex);
      emit(parse_out, sr::serialize(caption));
      mw.finish();
      g_log.log(LogLevel::Info, "parsed caption",
                {{"objects", caption.objects.size()}, {"events", caption.events.size()}});
    } else if (*cmd_score) {
      const std::string lexicon_text = read_file(score_lexicon);
      const sr::Lexicon lex = sr::parse_lexicon(lexicon_text);
      const std::string config_text = score_config.empty() ? "" : read_file(score_config);
      sr::LoadedConfig config = sr::load_config_text(config_text);
      config.trainer.reward.seed = effective_seed(score_seed, config.trainer.reward.seed);
      const auto provider = make_provider(config);
      const auto gen = load_caption(score_gen, lex);
      const auto ref = load_caption(score_ref, lex);
      const auto binding = parse_verifier(score_verifier);
      ManifestWriter mw;
      mw.start("score", config.trainer.reward.seed, config_text,
               {{score_gen, read_file(score_gen)}, {score_ref, read_file(score_ref)},
                {score_lexicon, lexicon_text}},
               score_out);
      const auto breakdown =
          sr::score_pair(gen, ref, config.trainer.reward, binding, provider, lex);
      emit(score_out, sr::breakdown_to_json(breakdown).dump(2) + "\n");
      mw.finish();
      g_log.log(LogLevel::Info, "scored pair", {{"R", breakdown.R}});
    } else if (*cmd_questions) {
      const std::string lexicon_text = read_file(q_lexicon);
      const sr::Lexicon lex = sr::parse_lexicon(lexicon_text);
      const auto gen = load_caption(q_gen, lex);
      const auto ref = load_caption(q_ref, lex);
      const std::uint64_t seed = effective_seed(q_seed);
      const auto provider = sr::SimilarityProvider::lexical();
      const auto map = sr::build_object_map(gen, ref, provider, lex, 0.5);
      const auto events = sr::match_events(gen, ref, map, provider, lex, 0.5);

      sr::QuestionSet temporal = sr::temporal_positive_questions(ref, lex);
      for (auto& q : sr::temporal_negative_questions(gen, ref, map, events, lex).questions)
        temporal.questions.push_back(std::move(q));
      temporal = sr::balance_and_cap(temporal, q_budget, sr::Rng::mix(seed, 1));
      sr::QuestionSet vqa = sr::factual_positive_questions(ref, lex);
      for (auto& q : sr::factual_negative_questions(gen, ref, map, events, lex).questions)
        vqa.questions.push_back(std::move(q));
      vqa = sr::balance_and_cap(vqa, q_budget, sr::Rng::mix(seed, 2));

      nlohmann::json out = nlohmann::json::array();
      for (const auto& q : temporal.questions) out.push_back(sr::question_to_json(q));
      for (const auto& q : vqa.questions) out.push_back(sr::question_to_json(q));
      ManifestWriter mw;
      mw.start("questions", seed, "",
               {{q_gen, read_file(q_gen)}, {q_ref, read_file(q_ref)}, {q_lexicon, lexicon_text}},
               q_out);
      emit(q_out, out.dump(2) + "\n");
      mw.finish();
      g_log.log(LogLevel::Info, "generated questions", {{"count", out.size()}});
    } else if (*cmd_world) {
      const std::string config_text = read_file(world_config_path);
      sr::LoadedConfig config = sr::load_config_text(config_text);
      if (config.lexicon_path.empty())
        throw sr::TypeMismatch("gen-world needs world.lexicon in the config");
      config.trainer.world.lexicon = sr::parse_lexicon(read_file(config.lexicon_path));
      const std::uint64_t seed = effective_seed(world_seed);
      ManifestWriter mw;
      mw.start("gen-world", seed, config_text, {{world_config_path, config_text}}, world_out);
      const auto world = sr::sample_world(config.trainer.world, seed);
      emit(world_out, sr::world_to_json(world).dump(2) + "\n");
      mw.finish();
      g_log.log(LogLevel::Info, "sampled world",
                {{"entities", world.entities.size()}, {"events", world.events.size()}});
    } else if (*cmd_render) {
      const std::string world_text = read_file(render_world);
      const auto world = sr::world_from_json(nlohmann::json::parse(world_text));
      ManifestWriter mw;
      mw.start("render", world.rng_seed, "", {{render_world, world_text}}, render_out);
      emit(render_out, sr::render_reference(world, render_explicit_prob) + "\n");
      mw.finish();
    } else if (*cmd_audit) {
      const std::string records_text = read_file(audit_records);
      std::istringstream in(records_text);
      std::vector<sr::AuditRecord> records;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(sr::audit_record_from_json(nlohmann::json::parse(line)));
      }
      ManifestWriter mw;
      mw.start("audit", 0, "", {{audit_records, records_text}}, audit_out);
      const auto summary = sr::audit_metrics(records);
      emit(audit_out, sr::audit_summary_to_json(summary).dump(2) + "\n");
      mw.finish();
    } else if (*cmd_overlap) {
      std::map<std::string, std::string> inputs;
      inputs[overlap_train] = read_file(overlap_train);
      std::vector<std::pair<std::string, std::vector<std::string>>> evals;
      for (const auto& path : overlap_evals) {
        inputs[path] = read_file(path);
        evals.emplace_back(fs::path(path).stem().string(), read_name_list(path));
      }
      ManifestWriter mw;
      mw.start("overlap", 0, "", inputs, overlap_out);
      const auto report = sr::overlap_audit(read_name_list(overlap_train), evals);
      emit(overlap_out, sr::overlap_report_to_json(report).dump(2) + "\n");
      mw.finish();
    } else if (*cmd_train) {
      const std::string config_text = read_file(train_config_path);
      sr::LoadedConfig config = sr::load_config_text(config_text);
      if (config.lexicon_path.empty())
        throw sr::TypeMismatch("train needs world.lexicon in the config");
      config.trainer.world.lexicon = sr::parse_lexicon(read_file(config.lexicon_path));
      config.trainer.seed = effective_seed(train_seed, config.trainer.seed);
      if (train_jobs) config.trainer.jobs = *train_jobs;
      config.trainer.validate();

      ManifestWriter mw;
      mw.start("train", config.trainer.seed, config_text, {{train_config_path, config_text}},
               train_out);
      const auto history = sr::train(config.trainer);
      std::string jsonl;
      for (const auto& r : history.records) jsonl += sr::step_record_to_json(r).dump() + "\n";
      write_file((fs::path(train_out) / "history.jsonl").string(), jsonl);
      write_file((fs::path(train_out) / "policy.json").string(),
                 sr::policy_to_json(history.final_policy).dump(2) + "\n");
      mw.finish();
      const auto& last = history.records.back();
      g_log.log(LogLevel::Info, "training finished",
                {{"steps", config.trainer.steps},
                 {"mean_R", last.mean_R ? nlohmann::json(*last.mean_R) : nlohmann::json(nullptr)}});
    }
  } catch (const sr::Error& e) {
    g_log.log(LogLevel::Error, e.what(), {{"error", e.name()}});
    return 1;
  } catch (const nlohmann::json::exception& e) {
    g_log.log(LogLevel::Error, e.what(), {{"error", "SchemaError"}});
    return 1;
  } catch (const std::exception& e) {
    g_log.log(LogLevel::Error, e.what(), {{"error", "InternalError"}});
    return 1;
  }
  return 0;
}
