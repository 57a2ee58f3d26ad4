// SPDX-License-Identifier: Apache-2.0
#pragma once
// Subcommand bodies behind the kgchain binary. Every file a command writes is
// a pure function of its inputs and the root seed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgchain/compiler.hpp"
#include "kgchain/corpus.hpp"
#include "kgchain/error.hpp"
#include "kgchain/evaluator.hpp"
#include "kgchain/executor.hpp"
#include "kgchain/oracle.hpp"
#include "kgchain/query.hpp"
#include "kgchain/retrieval.hpp"
#include "kgchain/sampler.hpp"
#include "kgchain/util.hpp"

namespace kgchain {

namespace fs = std::filesystem;

enum class OracleGraph : std::uint8_t { train, complete };

struct PipelineConfig {
  fs::path dataset;
  fs::path out = "out";
  std::uint64_t seed = 42;
  std::size_t budget = kDefaultTokenBudget;
  CurriculumSchedule schedule;
  std::vector<QueryType> types{kAllTypes.begin(), kAllTypes.end()};
  std::size_t per_type = 20;        // valid and test queries per type
  std::size_t train_per_type = 0;   // 0: same as per_type
  std::size_t relation_cap = kDefaultRelationCap;
  std::size_t step_cap = kDefaultStepDisplayCap;
  std::size_t stage_size = 0;       // 0: largest size the pools allow
  unsigned jobs = 1;
  Split split = Split::test;        // oracle / eval / answer
  OracleGraph graph = OracleGraph::complete;
  fs::path predictions;             // empty: derived from out
  fs::path corpus;                  // empty: same as out
  AccuracyMode accuracy = AccuracyMode::recall;
  bool quiet = false;

  void validate() const {
    if (budget == 0) throw ValidationError("budget must be positive");
    if (per_type == 0) throw ValidationError("per-type must be positive");
    if (relation_cap == 0) throw ValidationError("relation-cap must be positive");
    if (step_cap == 0) throw ValidationError("step-cap must be positive");
    if (jobs == 0) throw ValidationError("jobs must be positive");
    if (types.empty()) throw ValidationError("no query types selected");
    schedule.validate();
  }

  std::size_t train_count() const { return train_per_type ? train_per_type : per_type; }
  fs::path corpus_dir() const { return corpus.empty() ? out : corpus; }
  fs::path predictions_path() const {
    if (!predictions.empty()) return predictions;
    return out / ("predictions_" + std::string(graph == OracleGraph::complete ? "complete" : "train") + "_" +
                  std::string(split_name(split)) + ".jsonl");
  }
  CorpusConfig corpus_config() const {
    CorpusConfig c;
    c.retrieval.budget.max_tokens = budget;
    c.retrieval.relation_cap = relation_cap;
    c.step_cap = step_cap;
    c.jobs = jobs;
    return c;
  }
};

inline std::vector<QueryType> parse_types(std::string_view text) {
  std::vector<QueryType> out;
  for (auto t : split(text, ',')) {
    t = trim(t);
    if (t.empty()) continue;
    auto q = type_from_tag(t);
    if (q == QueryType::general) throw ValidationError("unknown query type '" + std::string(t) + "'");
    out.push_back(q);
  }
  return out;
}

/// Applies keys of a JSON config object. Unknown keys are rejected so typos
/// do not silently fall back to defaults.
inline void apply_config(PipelineConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "dataset") cfg.dataset = v.get<std::string>();
      else if (key == "out") cfg.out = v.get<std::string>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "budget") cfg.budget = v.get<std::size_t>();
      else if (key == "mix") parse_mix(v.get<std::string>(), cfg.schedule);
      else if (key == "types") cfg.types = parse_types(v.get<std::string>());
      else if (key == "per_type") cfg.per_type = v.get<std::size_t>();
      else if (key == "train_per_type") cfg.train_per_type = v.get<std::size_t>();
      else if (key == "relation_cap") cfg.relation_cap = v.get<std::size_t>();
      else if (key == "step_cap") cfg.step_cap = v.get<std::size_t>();
      else if (key == "stage_size") cfg.stage_size = v.get<std::size_t>();
      else if (key == "jobs") cfg.jobs = v.get<unsigned>();
      else if (key == "split") cfg.split = split_from_name(v.get<std::string>());
      else if (key == "disjoint") cfg.schedule.disjoint = v.get<bool>();
      else throw ValidationError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
}

inline void load_config(PipelineConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  apply_config(cfg, j);
}

namespace detail {

inline void log(const PipelineConfig& cfg, const std::string& msg) {
  if (!cfg.quiet) std::cerr << "[kgchain] " << msg << '\n';
}

inline void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

inline std::uint64_t stream_seed(std::uint64_t root, Split s, QueryType t) {
  return splitmix64(root ^ splitmix64((static_cast<std::uint64_t>(s) + 1) << 8 | static_cast<std::uint64_t>(t)));
}

inline SplitGraphs load_dataset(const PipelineConfig& cfg) {
  if (cfg.dataset.empty()) throw IoError("no dataset directory given");
  if (!fs::is_directory(cfg.dataset)) throw IoError("dataset directory not found: " + cfg.dataset.string());
  return load_splits(cfg.dataset);
}

inline const std::array<Split, 3> kSplits{Split::train, Split::valid, Split::test};

inline fs::path queries_file(const fs::path& dir, Split s) {
  return dir / ("queries_" + std::string(split_name(s)) + ".tsv");
}

}  // namespace detail

inline void write_queries(const fs::path& path, const std::vector<GroundedQuery>& qs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& q : qs) out << q.id << '\t' << type_tag(q.type) << '\t' << render(q.expr) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<GroundedQuery> read_queries(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<GroundedQuery> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto where = path.string() + ":" + std::to_string(lineno) + ": ";
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw ValidationError(where + "expected id, type and query");
    QueryExpr expr;
    try {
      expr = parse(fields[2]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    auto q = GroundedQuery::make(std::string(fields[0]), std::move(expr));
    if (type_tag(q.type) != fields[1])
      throw ValidationError(where + "query has shape " + std::string(type_tag(q.type)) + ", file says " +
                            std::string(fields[1]));
    out.push_back(std::move(q));
  }
  return out;
}

/// Samples queries_<split>.tsv for all three splits. Eval-split queries must
/// have at least one answer that the smaller graph cannot reach.
inline void cmd_sample(const PipelineConfig& cfg) {
  cfg.validate();
  auto graphs = detail::load_dataset(cfg);
  detail::ensure_dir(cfg.out);
  for (auto s : detail::kSplits) {
    const KnowledgeGraph* source = &graphs.train;
    SampleOptions opts;
    opts.id_prefix = std::string(split_name(s));
    std::size_t n = cfg.per_type;
    if (s == Split::train) {
      n = cfg.train_count();
    } else if (s == Split::valid) {
      source = &graphs.train_valid;
      opts.easy_graph = &graphs.train;
    } else {
      source = &graphs.train_valid_test;
      opts.easy_graph = &graphs.train_valid;
    }
    std::vector<std::vector<GroundedQuery>> per_type(cfg.types.size());
    parallel_for(cfg.types.size(), cfg.jobs, [&](std::size_t i) {
      per_type[i] = sample_queries(*source, cfg.types[i], n, detail::stream_seed(cfg.seed, s, cfg.types[i]), opts);
    });
    std::vector<GroundedQuery> all;
    for (auto& v : per_type) all.insert(all.end(), v.begin(), v.end());
    write_queries(detail::queries_file(cfg.out, s), all);
    detail::log(cfg, "sampled " + std::to_string(all.size()) + " " + std::string(split_name(s)) + " queries");
  }
}

struct BuildResult {
  CorpusStats stats;
  StagePlan plan;
};

/// corpus_<split>.jsonl, discarded_<split>.jsonl, stage1-3.jsonl (training
/// split only) and stats.json.
inline BuildResult cmd_build(const PipelineConfig& cfg) {
  cfg.validate();
  auto graphs = detail::load_dataset(cfg);
  const auto qdir = cfg.corpus_dir();
  std::vector<TaggedQuery> tagged;
  for (auto s : detail::kSplits) {
    for (auto& q : read_queries(detail::queries_file(qdir, s))) {
      check_vocabulary(q.expr, graphs.train_valid_test);
      tagged.push_back({s, std::move(q)});
    }
  }
  auto built = build_corpus(graphs, tagged, cfg.corpus_config());
  detail::ensure_dir(cfg.out);
  std::vector<CorpusSample> train;
  for (auto s : detail::kSplits) {
    std::vector<CorpusSample> kept;
    std::vector<CorpusSample> dropped;
    for (const auto& x : built.samples)
      if (x.split == s) kept.push_back(x);
    for (const auto& x : built.discarded)
      if (x.split == s) dropped.push_back(x);
    write_samples(cfg.out / ("corpus_" + std::string(split_name(s)) + ".jsonl"), kept);
    write_samples(cfg.out / ("discarded_" + std::string(split_name(s)) + ".jsonl"), dropped);
    if (s == Split::train) train = std::move(kept);
  }
  auto sched = cfg.schedule;
  sched.seed = cfg.seed;
  if (cfg.stage_size)
    for (auto& st : sched.stages) st.count = cfg.stage_size;
  BuildResult r;
  r.plan = schedule_stages(train, sched);
  for (std::size_t st = 0; st < 3; ++st)
    write_samples(cfg.out / ("stage" + std::to_string(st + 1) + ".jsonl"), r.plan.stages[st]);
  r.stats = built.stats;
  {
    std::ofstream out(cfg.out / "stats.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (cfg.out / "stats.json").string());
    out << stats_to_json(r.stats, &r.plan).dump(2) << '\n';
  }
  detail::log(cfg, "emitted " + std::to_string(r.stats.emitted) + " samples, discarded " +
                       std::to_string(r.stats.discarded));
  return r;
}

namespace detail {

inline std::vector<CorpusRecord> read_split_records(const PipelineConfig& cfg, bool with_discarded) {
  const auto name = std::string(split_name(cfg.split));
  auto records = read_records(cfg.corpus_dir() / ("corpus_" + name + ".jsonl"));
  if (with_discarded) {
    auto path = cfg.corpus_dir() / ("discarded_" + name + ".jsonl");
    if (fs::exists(path)) {
      auto more = read_records(path);
      records.insert(records.end(), more.begin(), more.end());
    }
  }
  return records;
}

}  // namespace detail

/// Writes one {"id", "output_text"} line per corpus sample of the split.
inline fs::path cmd_oracle(const PipelineConfig& cfg) {
  cfg.validate();
  auto graphs = detail::load_dataset(cfg);
  auto records = detail::read_split_records(cfg, false);
  const KnowledgeGraph& g = cfg.graph == OracleGraph::complete ? graphs.train_valid_test : graphs.train;
  std::vector<nlohmann::ordered_json> rows(records.size());
  parallel_for(records.size(), cfg.jobs, [&](std::size_t i) {
    rows[i] = {{"id", records[i].id}, {"output_text", oracle_answer(records[i], g, cfg.step_cap)}};
  });
  auto path = cfg.predictions_path();
  if (path.has_parent_path()) detail::ensure_dir(path.parent_path());
  write_jsonl(path, rows);
  detail::log(cfg, "wrote " + std::to_string(rows.size()) + " predictions to " + path.string());
  return path;
}

/// Scores predictions against corpus_<split>.jsonl; discarded samples and
/// samples without a prediction score 0. Writes report.json and report.txt.
inline EvalReport cmd_eval(const PipelineConfig& cfg) {
  cfg.validate();
  auto graphs = detail::load_dataset(cfg);
  const auto name = std::string(split_name(cfg.split));
  auto kept = read_records(cfg.corpus_dir() / ("corpus_" + name + ".jsonl"));
  std::vector<CorpusRecord> dropped;
  if (auto p = cfg.corpus_dir() / ("discarded_" + name + ".jsonl"); fs::exists(p)) dropped = read_records(p);

  std::map<std::string, std::string> outputs;
  EvalCounts counts;
  std::map<std::string, bool> known;
  for (const auto& r : kept) known[r.id] = true;
  for (const auto& r : dropped) known[r.id] = true;
  for (const auto& j : read_jsonl(cfg.predictions_path())) {
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
      throw ValidationError("prediction line without a string id");
    auto id = j["id"].get<std::string>();
    auto text = j.contains("output_text") && j["output_text"].is_string() ? j["output_text"].get<std::string>() : "";
    if (!known.contains(id)) {
      counts.unknown_ids.push_back(id);
      continue;
    }
    outputs.try_emplace(id, std::move(text));
  }

  const LabelIndex labels(graphs.train_valid_test);
  std::vector<SampleScore> scores(kept.size());
  std::vector<char> failed(kept.size(), 0);
  std::vector<char> missing(kept.size(), 0);
  parallel_for(kept.size(), cfg.jobs, [&](std::size_t i) {
    const auto& r = kept[i];
    if (r.answers.hard.empty())
      throw ValidationError("sample " + r.id + " has no hard answers; only valid and test splits can be scored");
    scores[i].type = r.type;
    auto it = outputs.find(r.id);
    if (it == outputs.end()) {
      missing[i] = 1;
      return;
    }
    auto pred = parse_prediction(it->second, labels, r.id);
    failed[i] = pred.parse_ok ? 0 : 1;
    scores[i].mrr = mrr_filtered(pred, r.answers);
    scores[i].accuracy = accuracy(pred, r.answers, cfg.accuracy);
  });
  for (std::size_t i = 0; i < kept.size(); ++i) {
    counts.parse_failures += failed[i];
    counts.missing += missing[i];
  }
  for (const auto& r : dropped) scores.push_back({r.type, 0.0, 0.0});
  counts.discarded = dropped.size();

  auto report = aggregate(scores, counts);
  detail::ensure_dir(cfg.out);
  {
    std::ofstream out(cfg.out / "report.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (cfg.out / "report.json").string());
    out << report_to_json(report).dump(2) << '\n';
  }
  {
    std::ofstream out(cfg.out / "report.txt", std::ios::binary);
    if (!out) throw IoError("cannot write " + (cfg.out / "report.txt").string());
    out << report_table(report);
  }
  return report;
}

/// Chain listing for one query plus a summary comment line.
inline std::string cmd_decompose(std::string_view query_text) {
  auto q = parse(query_text);
  auto chain = compile(q);
  auto d = difficulty(chain);
  return render_chain(chain) + "# type=" + std::string(type_tag(classify(q))) +
         " subqueries=" + std::to_string(d.subquery_count) + " difficulty=" + std::string(difficulty_name(d.level)) + "\n";
}

/// `<id>\teasy:<ids>\thard:<ids>` against the graphs of the configured split.
inline std::string cmd_answer(const PipelineConfig& cfg, std::string_view query_text, std::string_view id = "query") {
  auto graphs = detail::load_dataset(cfg);
  auto q = parse(query_text);
  check_vocabulary(q, graphs.train_valid_test);
  AnswerSplit a;
  switch (cfg.split) {
    case Split::train: a.easy = answer(q, graphs.train); break;
    case Split::valid: a = split_answers(q, graphs.train, graphs.train_valid); break;
    case Split::test: a = split_answers(q, graphs.train_valid, graphs.train_valid_test); break;
  }
  auto ids = [](const EntitySet& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out;
  };
  return std::string(id) + "\teasy:" + ids(a.easy) + "\thard:" + ids(a.hard) + "\n";
}

}  // namespace kgchain
