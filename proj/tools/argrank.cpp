// Command line entry point: argrank <command> [flags].

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "argrank/errors.hpp"
#include "argrank/pipeline.hpp"
#include "argrank/synthetic.hpp"
#include "argrank/util.hpp"

using namespace argrank;

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::string> mode, out, provider, corpus_dir, split_table, endpoint;
  std::vector<std::string> connectors;
  std::optional<std::size_t> runs, epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool no_coeff = false, no_att = false, no_hinge = false, quiet = false;
};

// Flags win over file values.
PipelineConfig resolve(const Flags& f) {
  PipelineConfig c;
  if (!f.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(f.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigInvalid(f.config_path + ": " + e.what());
    } catch (const MissingArtifact&) {
      throw ConfigInvalid("cannot read config file " + f.config_path);
    }
    c = PipelineConfig::from_json(j);
  }
  if (f.mode) c.mode = parse_view_mode(*f.mode);
  if (f.out) c.output_dir = *f.out;
  if (f.corpus_dir) c.corpus_dir = *f.corpus_dir;
  if (f.split_table) c.split_table = *f.split_table;
  if (f.provider && *f.provider != c.provider.kind) {
    const auto keep_endpoint = c.provider.endpoint;
    c.provider = ProviderSettings::defaults_for(*f.provider);
    c.provider.endpoint = keep_endpoint;
  }
  if (f.endpoint) c.provider.endpoint = *f.endpoint;
  if (f.runs) c.train.runs = *f.runs;
  if (f.epochs) c.train.max_epochs = *f.epochs;
  if (f.seed) c.train.seed_base = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.no_coeff) c.use_coefficients = false;
  if (f.no_att) c.use_attention = false;
  if (f.no_hinge) c.train.hinge = false;
  c.validate();
  return c;
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return 1;
    case ErrorCategory::data: return 2;
    case ErrorCategory::runtime: return 3;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Argument relation classification by plausibility ranking of reconstructed readings"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  const std::vector<std::string> connector_names = {"AA", "AD", "MH", "YN", "NODISC"};

  app.add_option("--config", f.config_path, "JSON configuration file");
  app.add_option("--mode", f.mode, "ESSAY or ESSAY_CONTENT");
  app.add_option("--connector", f.connectors, "connector(s) to train (default: all configured plus NODISC)")
      ->check(CLI::IsMember(connector_names));
  app.add_option("--runs", f.runs, "training runs per connector");
  app.add_option("--seed", f.seed, "seed of the first run (run k uses seed + k)");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--provider", f.provider, "embedding provider")
      ->check(CLI::IsMember({"reference", "elmo-style", "test"}));
  app.add_option("--endpoint", f.endpoint, "embedding service URL");
  app.add_option("--corpus-dir", f.corpus_dir, "directory of <id>.txt / <id>.ann files");
  app.add_option("--split-table", f.split_table, "train/test split CSV");
  app.add_option("--epochs", f.epochs, "maximum epochs");
  app.add_option("--threads", f.threads, "OpenMP threads (0: default)");
  app.add_flag("--no-coeff", f.no_coeff, "disable the coefficient vectors");
  app.add_flag("--no-att", f.no_att, "disable self-attention and pooling");
  app.add_flag("--no-hinge", f.no_hinge, "use the unclamped rank loss");
  app.add_flag("-q,--quiet", f.quiet, "no progress output");

  auto* prepare = app.add_subcommand("prepare", "parse the corpus, build views and the data split");
  auto* embed = app.add_subcommand("embed", "build minimal pairs and fill the embedding cache");
  auto* train = app.add_subcommand("train", "train connector models from cached embeddings");
  auto* eval = app.add_subcommand("eval", "evaluate trained models and the vote ensemble");
  auto* ablate = app.add_subcommand("ablate", "train and evaluate the ablation grid");
  auto* report = app.add_subcommand("report", "consolidate tables and export coefficients");
  auto* synth = app.add_subcommand("synth", "write a synthetic standoff corpus");
  std::string synth_dir;
  std::size_t synth_docs = 200, synth_relations = 10;
  std::uint64_t synth_seed = 1;
  synth->add_option("dir", synth_dir, "target directory")->required();
  synth->add_option("--docs", synth_docs, "essays");
  synth->add_option("--relations", synth_relations, "relations per essay");
  synth->add_option("--synth-seed", synth_seed, "generator seed");
  auto* print_config = app.add_subcommand("config", "print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const Logger log = [&](const std::string& line) {
    if (!f.quiet) std::cerr << line << '\n';
  };
  try {
    if (*synth) {
      SyntheticConfig sc;
      sc.seed = synth_seed;
      const auto docs = synthetic_corpus(synth_docs, synth_relations, sc);
      std::set<std::string> test;
      for (std::size_t d = 0; d < docs.size(); ++d)
        if (d % 5 == 4) test.insert(docs[d].doc_id);
      write_standoff_corpus(docs, synth_dir, test);
      log("synth: " + std::to_string(docs.size()) + " essays in " + synth_dir + " (signal token '" +
          sc.signal_token + "')");
      return 0;
    }
    const PipelineConfig config = resolve(f);
    if (*print_config) {
      std::cout << config.to_json().dump(2) << '\n';
    } else if (*prepare) {
      cmd_prepare(config, log);
    } else if (*embed) {
      cmd_embed(config, log);
    } else if (*train) {
      std::vector<std::string> codes = f.connectors;
      if (codes.empty()) {
        for (const auto& c : config.connectors) codes.push_back(find_connector(c).code);
        if (std::find(codes.begin(), codes.end(), "NODISC") == codes.end()) codes.push_back("NODISC");
      }
      for (const auto& code : codes) std::cout << cmd_train(config, code, log) << '\n';
    } else if (*eval) {
      const auto rows = cmd_eval(config, log);
      std::cout << macro_table_csv(rows);
    } else if (*ablate) {
      std::cout << ablation_csv(cmd_ablate(config, log));
    } else if (*report) {
      cmd_report(config, log);
    }
  } catch (const Error& e) {
    std::cerr << "argrank: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "argrank: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
