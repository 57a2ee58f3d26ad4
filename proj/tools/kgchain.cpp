// SPDX-License-Identifier: Apache-2.0
// kgchain: sample, build, oracle, eval, decompose, answer.
//
// Exit codes: 0 success, 1 validation failure, 2 I/O failure.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kgchain/pipeline.hpp"

namespace {

using namespace kgchain;

struct Flags {
  std::string config;
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::string mix;
  std::string types;
  std::size_t per_type = 0;
  std::size_t train_per_type = 0;
  std::size_t relation_cap = 0;
  std::size_t step_cap = 0;
  std::size_t stage_size = 0;
  unsigned jobs = 0;
  std::string split;
  std::string graph;
  std::string predictions;
  std::string corpus;
  std::string query;
  bool exact = false;
  bool quiet = false;
};

// Config file first, then any flag given on the command line.
PipelineConfig resolve(const CLI::App& sub, const Flags& f) {
  PipelineConfig cfg;
  auto given = [&](const char* name) {
    try {
      return sub.get_option(name)->count() > 0;
    } catch (const CLI::OptionNotFound&) {
      return false;
    }
  };
  if (!f.config.empty()) load_config(cfg, f.config);
  if (given("--dataset")) cfg.dataset = f.dataset;
  if (given("--out")) cfg.out = f.out;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--budget")) cfg.budget = f.budget;
  if (given("--mix")) parse_mix(f.mix, cfg.schedule);
  if (given("--types")) cfg.types = parse_types(f.types);
  if (given("--per-type")) cfg.per_type = f.per_type;
  if (given("--train-per-type")) cfg.train_per_type = f.train_per_type;
  if (given("--relation-cap")) cfg.relation_cap = f.relation_cap;
  if (given("--step-cap")) cfg.step_cap = f.step_cap;
  if (given("--stage-size")) cfg.stage_size = f.stage_size;
  if (given("--jobs")) cfg.jobs = f.jobs;
  if (given("--split")) cfg.split = split_from_name(f.split);
  if (given("--graph")) {
    if (f.graph == "train") cfg.graph = OracleGraph::train;
    else if (f.graph == "complete") cfg.graph = OracleGraph::complete;
    else throw ValidationError("--graph must be train or complete");
  }
  if (given("--predictions")) cfg.predictions = f.predictions;
  if (given("--corpus")) cfg.corpus = f.corpus;
  if (f.exact) cfg.accuracy = AccuracyMode::exact_set;
  cfg.quiet = f.quiet;
  return cfg;
}

void common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file; flags override its keys");
  sub->add_option("--dataset", f.dataset, "directory with train/valid/test triples and label files");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--seed", f.seed, "root seed");
  sub->add_option("--jobs", f.jobs, "worker threads");
  sub->add_flag("--quiet", f.quiet, "no progress lines on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph query decomposition and corpus toolkit"};
  app.require_subcommand(1);
  Flags f;

  auto* sample = app.add_subcommand("sample", "sample grounded queries for every split");
  common(sample, f);
  sample->add_option("--types", f.types, "comma-separated query types (default: all 14)");
  sample->add_option("--per-type", f.per_type, "valid/test queries per type");
  sample->add_option("--train-per-type", f.train_per_type, "training queries per type (default: --per-type)");

  auto* build = app.add_subcommand("build", "assemble corpus, curriculum stages and stats");
  common(build, f);
  build->add_option("--budget", f.budget, "token budget per sample");
  build->add_option("--mix", f.mix, "stage mixes, e.g. s1=80,10,10;s2=10,80,10;s3=10,10,80");
  build->add_option("--relation-cap", f.relation_cap, "relation triples kept for 1p context");
  build->add_option("--step-cap", f.step_cap, "entities shown per STEP line");
  build->add_option("--stage-size", f.stage_size, "samples per stage (default: largest possible)");
  build->add_option("--corpus", f.corpus, "directory with queries_<split>.tsv (default: --out)");

  auto* oracle = app.add_subcommand("oracle", "write symbolic predictions for a corpus split");
  common(oracle, f);
  oracle->add_option("--split", f.split, "train, valid or test (default: test)");
  oracle->add_option("--graph", f.graph, "train or complete (default: complete)");
  oracle->add_option("--predictions", f.predictions, "output path");
  oracle->add_option("--corpus", f.corpus, "directory with corpus_<split>.jsonl (default: --out)");
  oracle->add_option("--step-cap", f.step_cap, "entities shown per STEP line");

  auto* eval = app.add_subcommand("eval", "score predictions with filtered MRR");
  common(eval, f);
  eval->add_option("--split", f.split, "valid or test (default: test)");
  eval->add_option("--predictions", f.predictions, "predictions JSONL")->required();
  eval->add_option("--corpus", f.corpus, "directory with corpus_<split>.jsonl (default: --out)");
  eval->add_flag("--exact", f.exact, "accuracy is exact set match instead of recall");

  auto* decompose = app.add_subcommand("decompose", "print the subquery chain of one query");
  decompose->add_option("--query", f.query, "s-expression")->required();

  auto* answer = app.add_subcommand("answer", "print easy and hard answers of one query");
  common(answer, f);
  answer->add_option("--query", f.query, "s-expression")->required();
  answer->add_option("--split", f.split, "graph pair to split on (default: test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sample->parsed()) {
      cmd_sample(resolve(*sample, f));
    } else if (build->parsed()) {
      cmd_build(resolve(*build, f));
    } else if (oracle->parsed()) {
      cmd_oracle(resolve(*oracle, f));
    } else if (eval->parsed()) {
      std::cout << report_table(cmd_eval(resolve(*eval, f)));
    } else if (decompose->parsed()) {
      std::cout << cmd_decompose(f.query);
    } else if (answer->parsed()) {
      std::cout << cmd_answer(resolve(*answer, f), f.query);
    }
  } catch (const IoError& e) {
    std::cerr << "kgchain: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "kgchain: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
