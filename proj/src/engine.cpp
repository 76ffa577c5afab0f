#include "thetarank/engine.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "thetarank/equi_reduction.hpp"
#include "thetarank/error.hpp"

namespace thetarank {

const char* to_string(EngineMethod m) noexcept {
  switch (m) {
    case EngineMethod::kAuto: return "auto";
    case EngineMethod::kBinary: return "binary";
    case EngineMethod::kMultiway: return "multiway";
    case EngineMethod::kShared: return "shared";
    case EngineMethod::kDirect: return "direct";
    case EngineMethod::kQuadEqui: return "quadequi";
    case EngineMethod::kBatch: return "batch";
  }
  return "?";
}

std::optional<EngineMethod> parse_engine_method(std::string_view text) {
  std::string s(text);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (auto m : {EngineMethod::kAuto, EngineMethod::kBinary, EngineMethod::kMultiway,
                 EngineMethod::kShared, EngineMethod::kDirect,
                 EngineMethod::kQuadEqui, EngineMethod::kBatch}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

namespace {

Method tlfg_method(EngineMethod m) {
  switch (m) {
    case EngineMethod::kBinary: return Method::kBinary;
    case EngineMethod::kMultiway: return Method::kMultiway;
    case EngineMethod::kShared: return Method::kShared;
    case EngineMethod::kDirect:
    case EngineMethod::kBatch: return Method::kDirect;
    default: return Method::kAuto;
  }
}

void fill(OpenStats* stats, const EnumerationGraph& g) {
  if (!stats) return;
  stats->graph_size = g.size();
  stats->graph_nodes = g.node_count() - 1;
  stats->graph_edges = g.edge_count() - g.heads(0).size();
  stats->layers = g.layer_count();
  stats->duplication_bound = g.duplication_bound();
  stats->regions = g.regions();
}

}  // namespace

Engine::Engine(JoinQuery q, EngineOptions options)
    : query_(std::move(q)), options_(options) {
  plan_ = plan_query(query_);
  if (plan_.outcome == PlanOutcome::kNoTree || !plan_.tree) {
    throw UnsupportedError("no theta-join tree covers this query");
  }
}

std::vector<std::string> Engine::column_names() const {
  std::vector<std::string> out;
  for (const auto& a : query_.atoms()) {
    for (const auto& attr : a->attributes()) out.push_back(a->name() + "." + attr);
  }
  out.push_back("weight");
  return out;
}

std::string Engine::explain() const {
  std::ostringstream out;
  out << describe(query_, plan_);
  out << "method: " << to_string(options_.method) << '\n';
  AssembleOptions opts;
  opts.method = tlfg_method(options_.method);
  opts.edge_limit = options_.edge_limit;
  if (options_.method == EngineMethod::kQuadEqui) {
    const auto qp = quad_equi_plan(query_, *plan_.tree, options_.edge_limit);
    out << thetarank::explain(assemble(qp.query, qp.tree, opts));
  } else {
    out << thetarank::explain(assemble(query_, *plan_.tree, opts));
  }
  return out.str();
}

std::unique_ptr<AnswerStream> Engine::open(OpenStats* stats) const {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& tree = *plan_.tree;
  std::unique_ptr<AnswerStream> s;
  bool ranked_ties_sorted = false;
  if (options_.method == EngineMethod::kBatch) {
    s = batch_baseline(query_, tree, options_.batch);
    ranked_ties_sorted = true;
  } else {
    AssembleOptions opts;
    opts.method = tlfg_method(options_.method);
    opts.edge_limit = options_.edge_limit;
    std::shared_ptr<const EnumerationGraph> g;
    std::size_t atoms = query_.atom_count();
    if (options_.method == EngineMethod::kQuadEqui) {
      const auto qp = quad_equi_plan(query_, tree, options_.edge_limit);
      g = std::make_shared<const EnumerationGraph>(assemble(qp.query, qp.tree, opts));
    } else {
      g = std::make_shared<const EnumerationGraph>(assemble(query_, tree, opts));
    }
    fill(stats, *g);
    if (options_.unranked) {
      s = std::make_unique<UnrankedEnumerator>(g);
    } else {
      s = std::make_unique<RankedEnumerator>(g);
    }
    if (g->atom_count() != atoms) s = std::make_unique<ProjectedStream>(std::move(s), atoms);
  }
  if (!plan_.residual_predicates.empty()) {
    s = std::make_unique<ResidualFilter>(std::move(s), query_,
                                         plan_.residual_predicates);
  }
  if (!options_.unranked && options_.sort_ties && !ranked_ties_sorted) {
    s = std::make_unique<TieSorted>(std::move(s));
  }
  if (stats) {
    stats->preprocessing_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return s;
}

std::string stats_json(const Engine& engine, const OpenStats& stats,
                       std::size_t answers, double total_seconds) {
  nlohmann::json j;
  j["method"] = to_string(engine.options().method);
  j["ranked"] = !engine.options().unranked;
  j["plan"] = to_string(engine.plan().outcome);
  j["residual_predicates"] = engine.plan().residual.size();
  j["answers"] = answers;
  j["preprocessing_seconds"] = stats.preprocessing_seconds;
  j["total_seconds"] = total_seconds;
  j["graph"] = {{"size", stats.graph_size},
                {"nodes", stats.graph_nodes},
                {"edges", stats.graph_edges},
                {"layers", stats.layers},
                {"duplication_bound", stats.duplication_bound}};
  auto regions = nlohmann::json::array();
  const auto& q = engine.query();
  for (const auto& r : stats.regions) {
    if (r.parent >= q.atom_count() || r.child >= q.atom_count()) continue;
    regions.push_back({{"parent", q.atom(r.parent).name()},
                       {"child", q.atom(r.child).name()},
                       {"size", r.stats.size},
                       {"depth", r.stats.depth},
                       {"duplication", r.stats.duplication},
                       {"distinct_values", r.stats.distinct_values}});
  }
  j["tlfgs"] = regions;
  j["allocated_bytes"] = allocated_bytes();
  return j.dump(2);
}

}  // namespace thetarank
