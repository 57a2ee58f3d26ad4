// SPDX-License-Identifier: Apache-2.0
#pragma once
// Instruction-tuning samples and the three-stage curriculum.
//
// Graph roles per split:
//   split  context     easy answers   completion / full answers
//   train  train       train          train
//   valid  train       train          train+valid
//   test   train+valid train+valid    train+valid+test

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgchain/compiler.hpp"
#include "kgchain/error.hpp"
#include "kgchain/executor.hpp"
#include "kgchain/prompt.hpp"
#include "kgchain/query.hpp"
#include "kgchain/retrieval.hpp"
#include "kgchain/util.hpp"

namespace kgchain {

enum class Split : std::uint8_t { train, valid, test };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

inline Split split_from_name(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

struct TaggedQuery {
  Split split = Split::train;
  GroundedQuery query;
};

struct CorpusSample {
  std::string id;
  GroundedQuery query;
  RetrievedContext context;
  std::string prompt;
  std::string completion;
  Difficulty difficulty = Difficulty::easy;
  Split split = Split::train;
  AnswerSplit answers;
  std::size_t token_estimate = 0;
};

struct CorpusConfig {
  RetrievalOptions retrieval;
  std::size_t step_cap = kDefaultStepDisplayCap;
  unsigned jobs = 1;
};

struct CorpusStats {
  std::size_t input = 0;
  std::size_t emitted = 0;
  std::size_t discarded = 0;
  std::map<std::string, std::map<std::string, std::size_t>> emitted_by_split_type;
  std::map<std::string, std::map<std::string, std::size_t>> discarded_by_split_type;
  std::map<std::size_t, std::size_t> token_histogram;  // bucket floor (256 wide) -> count

  static constexpr std::size_t kBucket = 256;
};

struct BuiltCorpus {
  std::vector<CorpusSample> samples;    // emitted, input order
  std::vector<CorpusSample> discarded;  // over budget, input order
  CorpusStats stats;
};

namespace detail {

struct GraphRoles {
  const KnowledgeGraph* context;
  const KnowledgeGraph* easy;
  const KnowledgeGraph* full;
};

inline GraphRoles roles_for(Split s, const SplitGraphs& g) {
  switch (s) {
    case Split::train: return {&g.train, &g.train, &g.train};
    case Split::valid: return {&g.train, &g.train, &g.train_valid};
    case Split::test: return {&g.train_valid, &g.train_valid, &g.train_valid_test};
  }
  return {&g.train, &g.train, &g.train};
}

}  // namespace detail

inline CorpusSample assemble_sample(const TaggedQuery& tq, const SplitGraphs& graphs, const CorpusConfig& cfg) {
  const auto roles = detail::roles_for(tq.split, graphs);
  CorpusSample s;
  s.id = tq.query.id;
  s.query = tq.query;
  s.split = tq.split;
  auto chain = compile(tq.query.expr);
  s.difficulty = difficulty(chain).level;
  s.context = retrieve(tq.query, *roles.context, cfg.retrieval);
  PromptParts parts;
  parts.context = s.context.triples;
  parts.query = &s.query.expr;
  s.prompt = render_prompt(parts, *roles.context);
  auto result = answer_chain(chain, *roles.full);
  s.completion = render_completion(chain, result, *roles.full, cfg.step_cap);
  if (tq.split == Split::train) {
    s.answers.easy = result.final_answers;
  } else {
    s.answers.easy = answer(tq.query.expr, *roles.easy);
    s.answers.hard = set_difference(result.final_answers, s.answers.easy);
  }
  s.token_estimate = estimate_tokens(s.prompt + "\n" + s.completion);
  return s;
}

/// Assembles every query; samples whose prompt or prompt+completion exceed the
/// budget are moved to `discarded`.
inline BuiltCorpus build_corpus(const SplitGraphs& graphs, const std::vector<TaggedQuery>& queries,
                                const CorpusConfig& cfg = {}) {
  std::vector<CorpusSample> all(queries.size());
  parallel_for(queries.size(), cfg.jobs, [&](std::size_t i) { all[i] = assemble_sample(queries[i], graphs, cfg); });
  BuiltCorpus out;
  out.stats.input = queries.size();
  for (auto& s : all) {
    const auto split = std::string(split_name(s.split));
    const auto type = std::string(type_tag(s.query.type));
    if (s.context.truncated || s.token_estimate > cfg.retrieval.budget.max_tokens) {
      ++out.stats.discarded;
      ++out.stats.discarded_by_split_type[split][type];
      out.discarded.push_back(std::move(s));
      continue;
    }
    ++out.stats.emitted;
    ++out.stats.emitted_by_split_type[split][type];
    ++out.stats.token_histogram[(s.token_estimate / CorpusStats::kBucket) * CorpusStats::kBucket];
    out.samples.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL

inline nlohmann::ordered_json sample_to_json(const CorpusSample& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["type"] = std::string(type_tag(s.query.type));
  j["difficulty"] = static_cast<int>(s.difficulty);
  j["split"] = std::string(split_name(s.split));
  j["prompt"] = s.prompt;
  j["completion"] = s.completion;
  j["easy_answers"] = s.answers.easy;
  j["hard_answers"] = s.answers.hard;
  j["token_estimate"] = s.token_estimate;
  return j;
}

/// The fields of a corpus line that downstream tools rely on.
struct CorpusRecord {
  std::string id;
  QueryType type = QueryType::general;
  Difficulty difficulty = Difficulty::easy;
  Split split = Split::train;
  std::string prompt;
  std::string completion;
  AnswerSplit answers;
  std::size_t token_estimate = 0;
};

inline CorpusRecord record_from_json(const nlohmann::json& j) {
  CorpusRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.type = type_from_tag(j.at("type").get<std::string>());
    r.difficulty = static_cast<Difficulty>(j.at("difficulty").get<int>());
    r.split = split_from_name(j.at("split").get<std::string>());
    r.prompt = j.value("prompt", "");
    r.completion = j.value("completion", "");
    r.answers.easy = j.at("easy_answers").get<EntitySet>();
    r.answers.hard = j.at("hard_answers").get<EntitySet>();
    r.token_estimate = j.value("token_estimate", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad corpus record: ") + e.what());
  }
  return r;
}

inline CorpusRecord to_record(const CorpusSample& s) { return record_from_json(nlohmann::json(sample_to_json(s))); }

inline void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<nlohmann::json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

inline void write_samples(const std::filesystem::path& path, const std::vector<CorpusSample>& samples) {
  std::vector<nlohmann::ordered_json> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(sample_to_json(s));
  write_jsonl(path, rows);
}

inline std::vector<CorpusRecord> read_records(const std::filesystem::path& path) {
  std::vector<CorpusRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(record_from_json(j));
  return out;
}

// ---------------------------------------------------------------------------
// Curriculum

struct StageSpec {
  std::array<unsigned, 3> mix{80, 10, 10};  // percent easy / medium / hard
  std::size_t count = 0;                    // 0 = derive from pools
};

struct CurriculumSchedule {
  std::array<StageSpec, 3> stages{StageSpec{{80, 10, 10}, 0}, StageSpec{{10, 80, 10}, 0},
                                  StageSpec{{10, 10, 80}, 0}};
  std::uint64_t seed = 0;
  bool disjoint = true;  // a sample is used by at most one stage

  void validate() const {
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const auto& m = stages[i].mix;
      if (m[0] + m[1] + m[2] != 100)
        throw ValidationError("stage " + std::to_string(i + 1) + " mix does not sum to 100");
    }
  }
};

/// Mix parser for `s1=80,10,10;s2=10,80,10;s3=10,10,80`.
inline void parse_mix(std::string_view text, CurriculumSchedule& sched) {
  for (auto part : split(text, ';')) {
    part = trim(part);
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string_view::npos || eq != 2 || part[0] != 's' || part[1] < '1' || part[1] > '3')
      throw ValidationError("bad mix entry '" + std::string(part) + "'");
    auto& mix = sched.stages[static_cast<std::size_t>(part[1] - '1')].mix;
    auto nums = split(part.substr(eq + 1), ',');
    if (nums.size() != 3) throw ValidationError("mix entry needs three percentages: '" + std::string(part) + "'");
    for (std::size_t i = 0; i < 3; ++i) {
      auto n = trim(nums[i]);
      unsigned v = 0;
      if (n.empty()) throw ValidationError("empty percentage in '" + std::string(part) + "'");
      for (char c : n) {
        if (c < '0' || c > '9') throw ValidationError("bad percentage in '" + std::string(part) + "'");
        v = v * 10 + static_cast<unsigned>(c - '0');
        if (v > 100) throw ValidationError("percentage above 100 in '" + std::string(part) + "'");
      }
      mix[i] = v;
    }
  }
  sched.validate();
}

/// Largest-remainder split of `total` by percentages; each count is within one
/// of the exact share.
inline std::array<std::size_t, 3> class_counts(std::size_t total, const std::array<unsigned, 3>& mix) {
  std::array<std::size_t, 3> counts{};
  std::array<std::size_t, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    counts[c] = total * mix[c] / 100;
    rem[c] = total * mix[c] % 100;
    assigned += counts[c];
  }
  while (assigned < total) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
      if (rem[c] > rem[best]) best = c;
    ++counts[best];
    rem[best] = 0;
    ++assigned;
  }
  return counts;
}

inline std::string_view difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
  }
  return "?";
}

struct StagePlan {
  std::array<std::vector<CorpusSample>, 3> stages;  // each sorted by id
  std::array<std::array<std::size_t, 3>, 3> class_counts{};
};

/// Largest equal stage size the pools can serve under `sched`.
inline std::size_t auto_stage_size(const std::array<std::size_t, 3>& pool, const CurriculumSchedule& sched) {
  std::size_t best = 0;
  std::size_t hi = pool[0] + pool[1] + pool[2];
  for (std::size_t n = 1; n <= hi; ++n) {
    std::array<std::size_t, 3> need{};
    for (const auto& st : sched.stages) {
      auto c = class_counts(n, st.mix);
      for (std::size_t k = 0; k < 3; ++k) need[k] = sched.disjoint ? need[k] + c[k] : std::max(need[k], c[k]);
    }
    if (need[0] <= pool[0] && need[1] <= pool[1] && need[2] <= pool[2])
      best = n;
    else
      break;
  }
  return best;
}

inline StagePlan schedule_stages(const std::vector<CorpusSample>& samples, const CurriculumSchedule& sched) {
  sched.validate();
  std::array<std::vector<std::size_t>, 3> pools;
  for (std::size_t i = 0; i < samples.size(); ++i)
    pools[static_cast<std::size_t>(samples[i].difficulty) - 1].push_back(i);
  // canonical pool order before seeded shuffles
  for (auto& p : pools)
    std::sort(p.begin(), p.end(), [&](std::size_t a, std::size_t b) { return samples[a].id < samples[b].id; });

  std::array<std::size_t, 3> sizes{pools[0].size(), pools[1].size(), pools[2].size()};
  const std::size_t derived = auto_stage_size(sizes, sched);

  StagePlan plan;
  for (std::size_t st = 0; st < 3; ++st) {
    const auto& spec = sched.stages[st];
    const std::size_t total = spec.count ? spec.count : derived;
    auto counts = class_counts(total, spec.mix);
    auto rng = make_rng(sched.seed ^ (0x5354414745ULL + st));
    std::vector<std::size_t> chosen;
    for (std::size_t c = 0; c < 3; ++c) {
      auto& pool = pools[c];
      if (pool.size() < counts[c])
        throw ValidationError("stage " + std::to_string(st + 1) + ": " + std::string(difficulty_name(Difficulty(c + 1))) +
                              " pool exhausted: need " + std::to_string(counts[c]) + ", have " +
                              std::to_string(pool.size()) + " (short by " + std::to_string(counts[c] - pool.size()) + ")");
      auto order = pool;
      shuffle(order, rng);
      order.resize(counts[c]);
      chosen.insert(chosen.end(), order.begin(), order.end());
      if (sched.disjoint) {
        std::sort(order.begin(), order.end());
        std::erase_if(pool, [&](std::size_t i) { return std::binary_search(order.begin(), order.end(), i); });
      }
      plan.class_counts[st][c] = counts[c];
    }
    std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) { return samples[a].id < samples[b].id; });
    for (auto i : chosen) plan.stages[st].push_back(samples[i]);
  }
  return plan;
}

inline nlohmann::ordered_json stats_to_json(const CorpusStats& stats, const StagePlan* plan) {
  nlohmann::ordered_json j;
  j["input"] = stats.input;
  j["emitted"] = stats.emitted;
  j["discarded"] = stats.discarded;
  j["emitted_by_split_type"] = stats.emitted_by_split_type;
  j["discarded_by_split_type"] = stats.discarded_by_split_type;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [bucket, n] : stats.token_histogram) hist[std::to_string(bucket)] = n;
  j["token_histogram"] = hist;
  j["token_bucket_width"] = CorpusStats::kBucket;
  if (plan) {
    nlohmann::ordered_json stages = nlohmann::ordered_json::array();
    for (std::size_t st = 0; st < 3; ++st) {
      nlohmann::ordered_json s;
      s["file"] = "stage" + std::to_string(st + 1) + ".jsonl";
      s["size"] = plan->stages[st].size();
      s["easy"] = plan->class_counts[st][0];
      s["medium"] = plan->class_counts[st][1];
      s["hard"] = plan->class_counts[st][2];
      stages.push_back(s);
    }
    j["stages"] = stages;
  }
  return j;
}

}  // namespace kgchain
