#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttrk/ttrk.hpp"

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  json j;
  in >> j;
  return j;
}

ttrk::TrainConfig load_train_config(const std::string& path, std::uint64_t seed,
                                    bool seed_given) {
  ttrk::TrainConfig cfg;
  if (!path.empty()) cfg = read_json_file(path).get<ttrk::TrainConfig>();
  if (seed_given) cfg.seed = seed;
  return cfg;
}

void write_jsonl(const std::string& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  for (const auto& j : lines) out << j.dump() << "\n";
}

void write_step_log(const std::string& path, const ttrk::StepLog& log) {
  if (path.empty()) {
    for (const auto& j : log) std::cerr << j.dump() << "\n";
  } else {
    write_jsonl(path, std::vector<json>(log.begin(), log.end()));
  }
}

ttrk::Vocab build_vocab_from_files(const std::vector<std::string>& paths,
                                   int min_count) {
  std::vector<std::vector<std::string>> docs;
  for (const auto& path : paths) {
    for (const auto& conv : ttrk::load_conversations(path)) {
      for (const auto& u : conv.utterances) docs.push_back(u.tokens);
    }
  }
  return ttrk::Vocab::build(docs, min_count);
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::uint64_t seed) {
  ttrk::SyntheticSpec spec;
  if (!spec_path.empty()) spec = read_json_file(spec_path).get<ttrk::SyntheticSpec>();
  spec.validate();
  ttrk::Rng rng(seed);
  const ttrk::SyntheticCorpus corpus = ttrk::generate_synthetic(spec, rng);
  std::filesystem::create_directories(out_dir);

  std::vector<json> conv_lines, ent_lines, sel_lines;
  for (const auto& c : corpus.conversations)
    conv_lines.push_back(ttrk::conversation_to_json(c));
  for (const auto& c : corpus.entangled)
    ent_lines.push_back(ttrk::conversation_to_json(c));
  for (const auto& s : corpus.selection)
    sel_lines.push_back(ttrk::selection_to_json(s));
  write_jsonl(out_dir + "/conversations.jsonl", conv_lines);
  write_jsonl(out_dir + "/entangled.jsonl", ent_lines);
  write_jsonl(out_dir + "/selection.jsonl", sel_lines);
  std::cerr << "wrote " << conv_lines.size() << " conversations, "
            << ent_lines.size() << " entangled streams, " << sel_lines.size()
            << " selection instances to " << out_dir << "\n";
  return 0;
}

int cmd_pretrain(const std::string& corpus_path, const std::string& config_path,
                 const std::string& out_path, const std::string& log_path,
                 std::uint64_t seed, bool seed_given) {
  ttrk::TrainConfig cfg = load_train_config(config_path, seed, seed_given);
  auto conversations = ttrk::load_conversations(corpus_path);
  ttrk::Vocab vocab = build_vocab_from_files({corpus_path}, 1);

  ttrk::EncoderConfig enc;
  if (!config_path.empty()) {
    const json j = read_json_file(config_path);
    if (j.contains("encoder")) enc = j["encoder"].get<ttrk::EncoderConfig>();
  }
  auto model = ttrk::ModelParams<float>::init(enc, vocab, cfg.seed);

  ttrk::Rng pair_rng(cfg.seed);
  auto pairs =
      ttrk::build_stp_pairs(conversations, cfg.negatives_per_positive, pair_rng);
  const ttrk::StepLog log = ttrk::pretrain(pairs, model, cfg);
  ttrk::save_model(model, out_path);
  write_step_log(log_path, log);
  return 0;
}

int cmd_train(const std::string& selection_path, const std::string& windows_path,
              const std::string& dev_path, const std::string& init_path,
              const std::string& config_path, const std::string& out_path,
              const std::string& log_path, bool grid, std::uint64_t seed,
              bool seed_given) {
  ttrk::TrainConfig cfg = load_train_config(config_path, seed, seed_given);
  if (grid) cfg.grid_search = true;

  std::vector<ttrk::SelectionInstance> selection;
  if (!selection_path.empty()) selection = ttrk::load_selection(selection_path);
  std::vector<ttrk::DisentangleWindow> windows;
  if (!windows_path.empty()) {
    for (const auto& conv : ttrk::load_conversations(windows_path, true)) {
      auto ws = ttrk::sliding_windows(conv, cfg.window);
      windows.insert(windows.end(), ws.windows.begin(), ws.windows.end());
    }
  }
  if (selection.empty() && windows.empty())
    throw std::runtime_error("train: all task datasets are empty");

  ttrk::ModelParams<float> model;
  if (!init_path.empty()) {
    model = ttrk::load_model(init_path);
  } else {
    std::vector<std::string> vocab_sources;
    if (!selection_path.empty()) vocab_sources.push_back(selection_path);
    if (!windows_path.empty()) vocab_sources.push_back(windows_path);
    ttrk::Vocab vocab = build_vocab_from_files(vocab_sources, 1);
    ttrk::EncoderConfig enc;
    if (!config_path.empty()) {
      const json j = read_json_file(config_path);
      if (j.contains("encoder")) enc = j["encoder"].get<ttrk::EncoderConfig>();
    }
    model = ttrk::ModelParams<float>::init(enc, vocab, cfg.seed);
  }

  if (cfg.grid_search) {
    std::vector<ttrk::SelectionInstance> dev =
        dev_path.empty() ? selection : ttrk::load_selection(dev_path);
    std::size_t best = 0;
    const auto results =
        ttrk::grid_search(selection, windows, dev, model, cfg, &best);
    for (const auto& r : results) {
      std::cout << json({{"alpha", r.weights.alpha},
                         {"beta", r.weights.beta},
                         {"gamma", r.weights.gamma},
                         {"recall@1", r.recall_at_1}})
                       .dump()
                << "\n";
    }
    std::cout << json({{"best",
                        {{"alpha", results[best].weights.alpha},
                         {"beta", results[best].weights.beta},
                         {"gamma", results[best].weights.gamma},
                         {"recall@1", results[best].recall_at_1}}}})
                     .dump()
              << "\n";
    ttrk::TrainConfig final_cfg = cfg;
    final_cfg.weights = results[best].weights;
    final_cfg.grid_search = false;
    const auto& bw = final_cfg.weights;
    const bool trainable =
        (!selection.empty() && (bw.alpha > 0.0 || bw.beta > 0.0)) ||
        (!windows.empty() && bw.gamma > 0.0);
    if (trainable) ttrk::train_multitask(selection, windows, model, final_cfg);
    ttrk::save_model(model, out_path);
    return 0;
  }

  const ttrk::StepLog log = ttrk::train_multitask(selection, windows, model, cfg);
  ttrk::save_model(model, out_path);
  write_step_log(log_path, log);
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& selection_path,
             const std::string& windows_path, double threshold, int window) {
  auto model = ttrk::load_model(model_path);
  std::vector<ttrk::SelectionInstance> selection;
  if (!selection_path.empty()) selection = ttrk::load_selection(selection_path);
  std::vector<ttrk::Conversation> entangled;
  if (!windows_path.empty())
    entangled = ttrk::load_conversations(windows_path, true);
  const json report =
      ttrk::metrics_report(model, selection, entangled, threshold, 10, window);
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_rank(const std::string& model_path, const std::string& context_path,
             double threshold) {
  auto model = ttrk::load_model(model_path);
  const json j = read_json_file(context_path);
  const ttrk::SelectionInstance inst =
      ttrk::detail::parse_selection(j, context_path);
  const auto scores = ttrk::score_candidates(model, inst);
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  json out;
  out["none"] = ttrk::apply_no_answer(scores, threshold);
  out["ranking"] = json::array();
  for (std::size_t i : order) {
    out["ranking"].push_back({{"candidate", static_cast<int>(i)},
                              {"speaker", inst.candidates[i].speaker},
                              {"text", inst.candidates[i].text},
                              {"score", scores[i]}});
  }
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topic-tracking multi-task dialogue toolkit"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, corpus_path, config_path, out_path, log_path;
  std::string selection_path, windows_path, dev_path, init_path, model_path;
  std::string context_path;
  std::uint64_t seed = 0;
  double threshold = 0.90;
  int window = 10;
  bool grid = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--spec", spec_path, "synthetic spec JSON");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", seed, "rng seed (default 0)");

  auto* pretrain = app.add_subcommand("pretrain", "self-supervised pretraining");
  pretrain->add_option("--corpus", corpus_path, "conversations JSONL")->required();
  pretrain->add_option("--config", config_path, "train config JSON");
  pretrain->add_option("--out", out_path, "output model path")->required();
  pretrain->add_option("--log", log_path, "step log JSONL path");
  auto* pre_seed = pretrain->add_option("--seed", seed, "rng seed");

  auto* train = app.add_subcommand("train", "multi-task fine-tuning");
  train->add_option("--selection", selection_path, "selection JSONL");
  train->add_option("--windows", windows_path, "linked conversations JSONL");
  train->add_option("--dev", dev_path, "dev selection JSONL (grid mode)");
  train->add_option("--init", init_path, "initial model (omit for fresh params)");
  train->add_option("--config", config_path, "train config JSON");
  train->add_option("--out", out_path, "output model path")->required();
  train->add_option("--log", log_path, "step log JSONL path");
  train->add_flag("--grid", grid, "grid-search the loss weights");
  auto* train_seed = train->add_option("--seed", seed, "rng seed");

  auto* eval_cmd = app.add_subcommand("eval", "metrics report");
  eval_cmd->add_option("--model", model_path, "model path")->required();
  eval_cmd->add_option("--selection", selection_path, "selection JSONL");
  eval_cmd->add_option("--windows", windows_path, "linked conversations JSONL");
  eval_cmd->add_option("--threshold", threshold, "no-answer threshold");
  eval_cmd->add_option("--window", window, "disentanglement window size");

  auto* rank = app.add_subcommand("rank", "rank candidates for one context");
  rank->add_option("--model", model_path, "model path")->required();
  rank->add_option("--context-json", context_path, "selection-schema JSON file")
      ->required();
  rank->add_option("--threshold", threshold, "no-answer threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(spec_path, out_dir, seed);
    if (pretrain->parsed())
      return cmd_pretrain(corpus_path, config_path, out_path, log_path, seed,
                          pre_seed->count() > 0);
    if (train->parsed())
      return cmd_train(selection_path, windows_path, dev_path, init_path,
                       config_path, out_path, log_path, grid, seed,
                       train_seed->count() > 0);
    if (eval_cmd->parsed())
      return cmd_eval(model_path, selection_path, windows_path, threshold, window);
    if (rank->parsed()) return cmd_rank(model_path, context_path, threshold);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
