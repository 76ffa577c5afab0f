#pragma once

// Plans a query and opens answer streams for one evaluation method.

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "thetarank/anyk.hpp"
#include "thetarank/enum_graph.hpp"
#include "thetarank/model.hpp"
#include "thetarank/plan.hpp"
#include "thetarank/workbench.hpp"

namespace thetarank {

enum class EngineMethod { kAuto, kBinary, kMultiway, kShared, kDirect, kQuadEqui, kBatch };

const char* to_string(EngineMethod m) noexcept;
std::optional<EngineMethod> parse_engine_method(std::string_view text);

struct EngineOptions {
  EngineMethod method = EngineMethod::kAuto;
  bool unranked = false;
  // Order equal-weight answers by choice vector.
  bool sort_ties = true;
  std::size_t edge_limit = std::size_t{1} << 28;
  BatchOptions batch;
};

struct OpenStats {
  double preprocessing_seconds = 0.0;
  std::size_t graph_size = 0;
  std::size_t graph_nodes = 0;
  std::size_t graph_edges = 0;
  std::size_t layers = 0;
  std::size_t duplication_bound = 1;
  std::vector<EdgeRegion> regions;
};

class Engine {
 public:
  // Plans `q`; throws UnsupportedError when no join tree exists.
  Engine(JoinQuery q, EngineOptions options = {});

  const JoinQuery& query() const noexcept { return query_; }
  const PlanResult& plan() const noexcept { return plan_; }
  const EngineOptions& options() const noexcept { return options_; }

  // "R.A" per attribute of every atom in query order, then "weight".
  std::vector<std::string> column_names() const;

  // Plan description followed by the enumeration graph summary.
  std::string explain() const;

  // A fresh stream; `stats`, when given, receives the preprocessing figures.
  std::unique_ptr<AnswerStream> open(OpenStats* stats = nullptr) const;

 private:
  JoinQuery query_;
  EngineOptions options_;
  PlanResult plan_;
};

// JSON object describing a finished or partial run.
std::string stats_json(const Engine& engine, const OpenStats& stats,
                       std::size_t answers, double total_seconds);

}  // namespace thetarank
