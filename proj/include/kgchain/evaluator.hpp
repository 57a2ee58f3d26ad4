// SPDX-License-Identifier: Apache-2.0
#pragma once
// Scoring of generated answers.
//
// A prediction's ranking is the order of labels in its last FINAL: {...}
// block. For each hard answer a, rank(a) = 1 + number of listed entities
// before a that are not correct answers (easy or hard); an absent answer
// contributes 0. Per-sample MRR averages over the hard answers.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgchain/error.hpp"
#include "kgchain/executor.hpp"
#include "kgchain/kg_store.hpp"
#include "kgchain/prompt.hpp"
#include "kgchain/query.hpp"

namespace kgchain {

/// Label -> id lookup: exact first, then ASCII case-insensitive. When two
/// entities share a label the smaller id wins.
class LabelIndex {
 public:
  explicit LabelIndex(const KnowledgeGraph& g) {
    for (const auto& [id, label] : g.entities()) {
      exact_.try_emplace(label, id);
      folded_.try_emplace(fold(label), id);
    }
  }

  std::optional<EntityId> find(std::string_view label) const {
    if (auto it = exact_.find(std::string(label)); it != exact_.end()) return it->second;
    if (auto it = folded_.find(fold(label)); it != folded_.end()) return it->second;
    return std::nullopt;
  }

 private:
  static std::string fold(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }

  std::unordered_map<std::string, EntityId> exact_;
  std::unordered_map<std::string, EntityId> folded_;
};

struct Prediction {
  std::string sample_id;
  std::string raw_text;
  std::vector<EntityId> parsed;  // rank order, first occurrence kept
  bool parse_ok = false;
  std::size_t unmatched = 0;
};

namespace detail {

// Splits "a, b, c" into labels. Pieces that do not resolve on their own are
// glued to the following pieces while the glued label resolves, so labels
// that contain ", " survive.
inline std::vector<std::string> split_labels(std::string_view body, const LabelIndex& labels,
                                             std::size_t* unmatched) {
  std::vector<std::string> pieces;
  for (auto p : split(body, ',')) pieces.emplace_back(p);
  // longest run of pieces that names a label wins, so "Paris, Texas" beats "Paris"
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < pieces.size()) {
    std::optional<std::size_t> end;
    std::string best;
    std::string glued;
    for (std::size_t j = i; j < pieces.size(); ++j) {
      glued += (j == i ? "" : ",") + pieces[j];
      auto t = std::string(trim(glued));
      if (labels.find(t)) {
        end = j;
        best = std::move(t);
      }
    }
    if (end) {
      out.push_back(best);
      i = *end + 1;
      continue;
    }
    if (!trim(pieces[i]).empty() && unmatched) ++*unmatched;
    ++i;
  }
  return out;
}

}  // namespace detail

inline Prediction parse_prediction(std::string_view raw, const LabelIndex& labels, std::string sample_id = {}) {
  Prediction p;
  p.sample_id = std::move(sample_id);
  p.raw_text = std::string(raw);
  const std::string_view marker = "FINAL:";
  auto at = raw.rfind(marker);
  if (at == std::string_view::npos) return p;
  auto rest = raw.substr(at + marker.size());
  auto open = rest.find('{');
  if (open == std::string_view::npos) return p;
  // stop at the end of the line so trailing chatter is ignored
  auto line_end = rest.find('\n', open);
  auto line = rest.substr(open + 1, line_end == std::string_view::npos ? std::string_view::npos : line_end - open - 1);
  auto close = line.rfind('}');
  if (close == std::string_view::npos) return p;
  p.parse_ok = true;
  std::set<EntityId> seen;
  for (const auto& label : detail::split_labels(line.substr(0, close), labels, &p.unmatched)) {
    auto id = labels.find(label);
    if (id && seen.insert(*id).second) p.parsed.push_back(*id);
  }
  return p;
}

/// Recovers the query s-expression from a rendered prompt.
inline std::optional<QueryExpr> extract_query(std::string_view prompt) {
  auto at = prompt.rfind(std::string("\n") + std::string(kQueryPrefix));
  if (at == std::string_view::npos) return std::nullopt;
  auto text = prompt.substr(at + 1 + kQueryPrefix.size());
  try {
    return parse_prefix(text).first;
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

struct StepLine {
  std::size_t index = 0;
  std::string output;
  std::vector<std::string> labels;  // displayed entities, without any "+N more" marker
  std::size_t hidden = 0;
};

/// Parses the `STEP k: ... -> var = {...}` lines of a completion.
inline std::vector<StepLine> parse_step_lines(std::string_view text, const LabelIndex& labels) {
  std::vector<StepLine> out;
  for (auto line : split(text, '\n')) {
    if (!line.starts_with("STEP ")) continue;
    StepLine s;
    auto colon = line.find(':');
    auto arrow = line.find(" -> ");
    auto eq = line.find(" = {", arrow == std::string_view::npos ? 0 : arrow);
    if (colon == std::string_view::npos || arrow == std::string_view::npos || eq == std::string_view::npos) continue;
    s.index = std::stoul(std::string(line.substr(5, colon - 5)));
    s.output = std::string(line.substr(arrow + 4, eq - arrow - 4));
    auto body = line.substr(eq + 4);
    if (!body.empty() && body.back() == '}') body.remove_suffix(1);
    auto more = body.rfind("…+");
    if (more != std::string_view::npos) {
      auto tail = body.substr(more + std::string_view("…+").size());
      s.hidden = std::stoul(std::string(tail.substr(0, tail.find(' '))));
      body = trim(body.substr(0, more));
      if (!body.empty() && body.back() == ',') body.remove_suffix(1);
    }
    s.labels = detail::split_labels(body, labels, nullptr);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

inline double mrr_filtered(const Prediction& pred, const AnswerSplit& answers) {
  if (answers.hard.empty()) throw ValidationError("mrr_filtered: empty hard answer set");
  if (!pred.parse_ok) return 0.0;
  auto correct = answers.all();
  double total = 0.0;
  for (auto a : answers.hard) {
    std::size_t wrong_before = 0;
    bool found = false;
    for (auto e : pred.parsed) {
      if (e == a) {
        found = true;
        break;
      }
      if (!std::binary_search(correct.begin(), correct.end(), e)) ++wrong_before;
    }
    if (found) total += 1.0 / static_cast<double>(wrong_before + 1);
  }
  return total / static_cast<double>(answers.hard.size());
}

/// Raw list position, nothing filtered. Only used to check that filtering
/// never lowers a score.
inline double mrr_unfiltered(const Prediction& pred, const AnswerSplit& answers) {
  if (answers.hard.empty()) throw ValidationError("mrr_unfiltered: empty hard answer set");
  if (!pred.parse_ok) return 0.0;
  double total = 0.0;
  for (auto a : answers.hard) {
    auto it = std::find(pred.parsed.begin(), pred.parsed.end(), a);
    if (it != pred.parsed.end()) total += 1.0 / static_cast<double>(it - pred.parsed.begin() + 1);
  }
  return total / static_cast<double>(answers.hard.size());
}

enum class AccuracyMode { recall, exact_set };

inline double accuracy(const Prediction& pred, const AnswerSplit& answers, AccuracyMode mode = AccuracyMode::recall) {
  if (answers.hard.empty()) throw ValidationError("accuracy: empty hard answer set");
  if (!pred.parse_ok) return 0.0;
  EntitySet got(pred.parsed.begin(), pred.parsed.end());
  std::sort(got.begin(), got.end());
  if (mode == AccuracyMode::exact_set) return got == answers.all() ? 1.0 : 0.0;
  return static_cast<double>(set_intersection(got, answers.hard).size()) / static_cast<double>(answers.hard.size());
}

// ---------------------------------------------------------------------------
// Aggregation

struct SampleScore {
  QueryType type = QueryType::general;
  double mrr = 0.0;
  double accuracy = 0.0;
};

struct TypeScore {
  double mrr = 0.0;
  double accuracy = 0.0;
  std::size_t samples = 0;
};

struct EvalCounts {
  std::size_t samples = 0;
  std::size_t parse_failures = 0;
  std::size_t missing = 0;    // no prediction for a corpus id
  std::size_t discarded = 0;  // over budget at build time
  std::vector<std::string> unknown_ids;
};

struct GroupScore {
  double mrr = 0.0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::map<QueryType, TypeScore> per_type;
  std::optional<GroupScore> avg_p;
  std::optional<GroupScore> avg_ood;
  std::optional<GroupScore> avg_n;
  EvalCounts counts;
};

inline constexpr std::array<QueryType, 9> kPositiveTypes{QueryType::p1, QueryType::p2, QueryType::p3,
                                                         QueryType::i2, QueryType::i3, QueryType::pi,
                                                         QueryType::ip, QueryType::u2, QueryType::up};
inline constexpr std::array<QueryType, 4> kOodTypes{QueryType::pi, QueryType::ip, QueryType::u2, QueryType::up};
inline constexpr std::array<QueryType, 5> kNegationTypes{QueryType::in2, QueryType::in3, QueryType::inp,
                                                         QueryType::pin, QueryType::pni};

/// Unweighted mean over the group's types that have scores.
template <std::size_t N>
std::optional<GroupScore> group_mean(const std::map<QueryType, TypeScore>& per_type,
                                     const std::array<QueryType, N>& group) {
  GroupScore g;
  std::size_t n = 0;
  for (auto t : group) {
    auto it = per_type.find(t);
    if (it == per_type.end()) continue;
    g.mrr += it->second.mrr;
    g.accuracy += it->second.accuracy;
    ++n;
  }
  if (n == 0) return std::nullopt;
  g.mrr /= static_cast<double>(n);
  g.accuracy /= static_cast<double>(n);
  return g;
}

/// Per-type means of the given scores, then the three group columns.
inline EvalReport aggregate(const std::vector<SampleScore>& scores, EvalCounts counts = {}) {
  EvalReport r;
  for (const auto& s : scores) {
    if (s.type == QueryType::general) throw ValidationError("aggregate: sample without a benchmark type");
    auto& t = r.per_type[s.type];
    t.mrr += s.mrr;
    t.accuracy += s.accuracy;
    ++t.samples;
  }
  for (auto& [type, t] : r.per_type) {
    t.mrr /= static_cast<double>(t.samples);
    t.accuracy /= static_cast<double>(t.samples);
  }
  r.avg_p = group_mean(r.per_type, kPositiveTypes);
  r.avg_ood = group_mean(r.per_type, kOodTypes);
  r.avg_n = group_mean(r.per_type, kNegationTypes);
  counts.samples = scores.size();
  r.counts = std::move(counts);
  return r;
}

/// Percent with one decimal, half-up.
inline double display_percent(double fraction) {
  return std::floor(fraction * 1000.0 + 0.5 + 1e-9) / 10.0;
}

inline std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", display_percent(fraction));
  return buf;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  auto group = [](const std::optional<GroupScore>& g) -> nlohmann::ordered_json {
    if (!g) return nullptr;
    return {{"mrr", g->mrr}, {"accuracy", g->accuracy}};
  };
  j["avg_p"] = group(r.avg_p);
  j["avg_ood"] = group(r.avg_ood);
  j["avg_n"] = group(r.avg_n);
  nlohmann::ordered_json types = nlohmann::ordered_json::object();
  for (auto t : kAllTypes) {
    auto it = r.per_type.find(t);
    if (it == r.per_type.end()) continue;
    types[std::string(type_tag(t))] = {
        {"mrr", it->second.mrr}, {"accuracy", it->second.accuracy}, {"samples", it->second.samples}};
  }
  j["per_type"] = types;
  j["counts"] = {{"samples", r.counts.samples},
                 {"parse_failures", r.counts.parse_failures},
                 {"missing", r.counts.missing},
                 {"discarded", r.counts.discarded},
                 {"unknown_ids", r.counts.unknown_ids}};
  return j;
}

/// Fixed-width table in the column order avg_p avg_ood avg_n 1p ... pni.
inline std::string report_table(const EvalReport& r) {
  std::vector<std::string> header{"Metric", "avg_p", "avg_ood", "avg_n"};
  for (auto t : kAllTypes) header.emplace_back(type_tag(t));
  auto row = [&](std::string name, bool mrr) {
    std::vector<std::string> cells{std::move(name)};
    for (const auto* g : {&r.avg_p, &r.avg_ood, &r.avg_n})
      cells.push_back(*g ? format_percent(mrr ? (*g)->mrr : (*g)->accuracy) : "-");
    for (auto t : kAllTypes) {
      auto it = r.per_type.find(t);
      cells.push_back(it == r.per_type.end() ? "-" : format_percent(mrr ? it->second.mrr : it->second.accuracy));
    }
    return cells;
  };
  std::vector<std::vector<std::string>> rows{header, row("MRR", true), row("Accuracy", false)};
  std::string out;
  for (const auto& cells : rows) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char buf[64];
      if (i == 0)
        std::snprintf(buf, sizeof buf, "%-9s", cells[i].c_str());
      else
        std::snprintf(buf, sizeof buf, "%8s", cells[i].c_str());
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace kgchain
