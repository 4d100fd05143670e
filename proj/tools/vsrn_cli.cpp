// Command-line front end: corpus generation, training, retrieval evaluation
// and attention-map export.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vsrn/vsrn.hpp"

namespace {

using namespace vsrn;

struct GenDataArgs {
  std::string out;
  CorpusOptions opt{.n_items = 96, .n_test = 16};
};

struct TrainArgs {
  std::string config;
  std::string corpus;
  std::string out;
  std::string log;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string corpus;
  std::string out;
  std::string split = "test";
  std::size_t folds = 1;
};

struct AttendArgs {
  std::string checkpoint;
  std::string corpus;
  std::string out;
  std::size_t item = 0;
  double lambda = kDefaultAttentionLambda;
};

void check_compatible(const RestoredModel& r, const SyntheticCorpus& corpus,
                      const std::string& path) {
  if (r.model.w_f.dim(0) != corpus.feature_dim()) {
    throw InputError("checkpoint '" + path + "' expects region features of width " +
                     std::to_string(r.model.w_f.dim(0)) + ", corpus has " +
                     std::to_string(corpus.feature_dim()));
  }
  if (r.model.text.vocab_size() != corpus.vocab.size()) {
    throw InputError("checkpoint '" + path + "' has a vocabulary of " +
                     std::to_string(r.model.text.vocab_size()) + " tokens, corpus has " +
                     std::to_string(corpus.vocab.size()));
  }
}

int run_gen_data(const GenDataArgs& a) {
  const auto corpus = generate_synthetic_corpus(a.opt);
  save_corpus(corpus, a.out);
  std::cout << "wrote " << corpus.items.size() << " items (" << corpus.indices(Split::train).size()
            << " train, " << corpus.indices(Split::val).size() << " val, "
            << corpus.indices(Split::test).size() << " test) to " << a.out << '\n';
  return 0;
}

int run_train(const TrainArgs& a) {
  TrainConfig config = parse_config(io::read_file(a.config));
  if (a.seed_given) config.seed = a.seed;
  const auto corpus = load_corpus(a.corpus);

  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log);
    if (!log) throw IoError("cannot open log file '" + a.log + "'");
    log << "epoch\tlr\tmatching_loss\tgeneration_loss\tval_rsum\n";
  }
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e, const VsrnModel&) {
    if (log.is_open()) {
      char line[160];
      std::snprintf(line, sizeof line, "%zu\t%.17g\t%.17g\t%.17g\t%.17g\n", e.epoch, e.lr,
                    e.matching_loss, e.generation_loss, e.val_rsum);
      log << line << std::flush;
    }
    return true;
  };
  const auto result = train(config, corpus, hooks);
  save_checkpoint(result.best, a.out);
  std::cout << "best epoch " << result.best_epoch << " of " << result.log.size()
            << ", validation rsum " << result.best.val_rsum << ", saved " << a.out << '\n';
  return 0;
}

int run_eval(const EvalArgs& a) {
  const auto corpus = load_corpus(a.corpus);
  const Split split = parse_split(a.split);
  std::vector<SimilarityMatrix> mats;
  for (const auto& path : a.checkpoints) {
    const auto restored = restore(load_checkpoint(path));
    check_compatible(restored, corpus, path);
    mats.push_back(split_similarity(restored.model, restored.config, corpus, split));
  }
  const auto report = evaluate_folds(ensemble_scores(mats), a.folds);
  write_report(a.out, report);
  std::cout << format_report(report);
  return 0;
}

int run_attend(const AttendArgs& a) {
  const auto corpus = load_corpus(a.corpus);
  if (a.item >= corpus.items.size()) {
    throw InputError("item " + std::to_string(a.item) + " out of range (corpus has " +
                     std::to_string(corpus.items.size()) + " items)");
  }
  const auto restored = restore(load_checkpoint(a.checkpoint));
  check_compatible(restored, corpus, a.checkpoint);
  const auto& regions = corpus.items[a.item].regions;
  NoRecord inference;
  const auto f = forward_image(restored.model, regions, ordering_for(restored.config, a.item),
                               restored.config.normalize_embeddings);
  const auto scores = region_rank_scores(f.v_star, f.image, a.lambda);
  write_graymap(render_heatmap(regions.boxes, scores, corpus.canvas_width, corpus.canvas_height),
                a.out);
  std::cout << "wrote " << corpus.canvas_width << "x" << corpus.canvas_height
            << " attention map to " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual-semantic reasoning: data generation, training, evaluation"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic corpus");
  gen_cmd->add_option("--out", gen.out, "Corpus file (vocabulary goes to <out>.vocab)")->required();
  gen_cmd->add_option("--seed", gen.opt.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--items", gen.opt.n_items, "Number of image-caption pairs")
      ->capture_default_str();
  gen_cmd->add_option("--concepts", gen.opt.n_concepts, "Number of concepts")->capture_default_str();
  gen_cmd->add_option("--regions", gen.opt.k_regions, "Regions per image")->capture_default_str();
  gen_cmd->add_option("--feature-dim", gen.opt.feature_dim, "Region feature width")
      ->capture_default_str();
  gen_cmd->add_option("--concepts-per-item", gen.opt.concepts_per_item, "Concepts per caption")
      ->capture_default_str();
  gen_cmd->add_option("--val", gen.opt.n_val, "Validation items")->capture_default_str();
  gen_cmd->add_option("--test", gen.opt.n_test, "Test items")->capture_default_str();
  gen_cmd->add_option("--noise", gen.opt.noise, "Feature noise standard deviation")
      ->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and save the best snapshot");
  train_cmd->add_option("--config", tr.config, "Config file of key = value lines")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--corpus", tr.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tr.out, "Checkpoint file to write")->required();
  train_cmd->add_option("--seed", tr.seed, "Override the config seed");
  train_cmd->add_option("--log", tr.log, "Per-epoch TSV log");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compute the retrieval report");
  eval_cmd->add_option("--checkpoint", ev.checkpoints, "Checkpoint; repeat to ensemble")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--corpus", ev.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", ev.out, "Report file to write")->required();
  eval_cmd->add_option("--split", ev.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  eval_cmd->add_option("--folds", ev.folds, "Contiguous folds to average over")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  AttendArgs at;
  auto* attend_cmd = app.add_subcommand("attend", "Write a region attention map as a P5 graymap");
  attend_cmd->add_option("--checkpoint", at.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  attend_cmd->add_option("--corpus", at.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  attend_cmd->add_option("--item", at.item, "Corpus item index")->required();
  attend_cmd->add_option("--out", at.out, "Graymap file to write")->required();
  attend_cmd->add_option("--lambda", at.lambda, "Rank score scale")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "vsrn: " << e.what() << '\n';
    return 2;
  }
  tr.seed_given = train_cmd->count("--seed") > 0;

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*attend_cmd) return run_attend(at);
  } catch (const std::exception& e) {
    std::cerr << "vsrn: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
