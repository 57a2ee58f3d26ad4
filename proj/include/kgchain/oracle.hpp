// SPDX-License-Identifier: Apache-2.0
#pragma once
// Symbolic stand-in for a model: reads the query back out of the prompt and
// executes it on a chosen graph. On the complete graph it sets the metric
// ceiling; on the training graph it shows what pure lookup misses.

#include <string>

#include "kgchain/compiler.hpp"
#include "kgchain/corpus.hpp"
#include "kgchain/error.hpp"
#include "kgchain/evaluator.hpp"
#include "kgchain/executor.hpp"
#include "kgchain/prompt.hpp"

namespace kgchain {

inline std::string oracle_answer(const std::string& prompt, const KnowledgeGraph& g,
                                 std::size_t step_cap = kDefaultStepDisplayCap) {
  auto q = extract_query(prompt);
  if (!q) throw ValidationError("oracle: prompt carries no parsable QUERY line");
  auto chain = compile(*q);
  auto result = answer_chain(chain, g);
  return render_completion(chain, result, g, step_cap);
}

inline std::string oracle_answer(const CorpusRecord& r, const KnowledgeGraph& g,
                                 std::size_t step_cap = kDefaultStepDisplayCap) {
  return oracle_answer(r.prompt, g, step_cap);
}

}  // namespace kgchain
