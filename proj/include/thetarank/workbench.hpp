#pragma once

// Verification and experiment scaffolding: the nested-loop oracle, the
// materialize-then-sort baseline, synthetic generators, query templates and
// TT(k) / delay / memory measurement.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "thetarank/anyk.hpp"
#include "thetarank/model.hpp"
#include "thetarank/plan.hpp"

namespace thetarank {

// Every answer of q (residual predicates included), stable-sorted by
// (ranking weight, choice). Throws GuardExceeded when the cross product
// exceeds `guard`.
std::vector<Answer> oracle_join(const JoinQuery& q, double guard = 1e7);

struct BatchOptions {
  // Limits on the direct TLFG edges and on the materialized answers.
  std::size_t edge_limit = std::size_t{1} << 26;
  std::size_t answer_limit = std::size_t{1} << 26;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

// Progress of a batch run that stopped at a guard.
struct BatchAbort {
  std::string reason;
  double seconds = 0.0;
  // Work finished before stopping: direct-TLFG pairs or answers.
  std::size_t produced = 0;
  // Work needed to finish that phase (the output size).
  std::size_t required = 0;
};

// Materializes all answers by unranked enumeration over direct TLFGs, then
// emits them from a binary heap. Throws GuardExceeded past any limit; when
// `abort` is given it is filled in first.
std::unique_ptr<AnswerStream> batch_baseline(const JoinQuery& q,
                                             const ThetaJoinTree& tree,
                                             const BatchOptions& options = {},
                                             BatchAbort* abort = nullptr);

// Exact number of answers of an acyclic plan (saturating), by counting tree
// solutions of the factorized enumeration graph.
std::size_t count_answers(const JoinQuery& q, const ThetaJoinTree& tree);

// Relations S_1..S_l with columns A<2i-1>, A<2i> and weight W: values
// uniform in [0, 10^4), duplicate value pairs discarded and redrawn,
// weights uniform reals in [0, 10^4).
std::vector<Relation> gen_synthetic(std::size_t n, std::size_t l,
                                    std::uint64_t seed);

// Line-item style relation Item(SK, Q, S, C, R) with weight P; SK is drawn
// from a small domain so the equality on it is selective but not unique.
Relation gen_items(std::size_t n, std::uint64_t seed,
                   const std::string& name = "Item");
// Observation style relation Birds(Lat, Lon) with weight Count.
Relation gen_birds(std::size_t n, std::uint64_t seed,
                   const std::string& name = "Birds");

// Query templates. Relations are shared into the query as copies.
//   QS1: S_i.A<2i> < S_{i+1}.A<2i+1>                     min
//   QS2: |S_i.A<2i> - S_{i+1}.A<2i+1>| < 50 and
//        S_i.A<2i-1> != S_{i+1}.A<2i+2>                  min
//   QT : Item_i.SK = Item_{i+1}.SK, Q_i < Q_{i+1}, S_i < S_{i+1}      min
//   QTD: Item_i.SK = Item_{i+1}.SK, Q_i < Q_{i+1},
//        (S_i < S_{i+1} or C_i < C_{i+1} or R_i < R_{i+1})            min
//   QB : |Lat_1 - Lat_2| < eps and |Lon_1 - Lon_2| < eps             max
enum class QueryTemplate { kQS1, kQS2, kQT, kQTD, kQB };

const char* to_string(QueryTemplate t) noexcept;
std::optional<QueryTemplate> parse_template(std::string_view text);

JoinQuery make_query(QueryTemplate t, std::size_t n, std::size_t l,
                     std::uint64_t seed, double band_epsilon = 50.0);

// Allocator bytes in use (mallinfo2), the memory proxy.
std::size_t allocated_bytes();

struct MetricsReport {
  // (k, seconds since the stream was opened), for each checkpoint reached.
  std::vector<std::pair<std::size_t, double>> tt_k;
  // (k, allocated bytes above the baseline) at the same checkpoints, the
  // first entry after opening the stream (k = 0).
  std::vector<std::pair<std::size_t, std::size_t>> mem;
  std::size_t mem_peak = 0;
  // Mean gap between answers per window of `window` answers.
  std::vector<double> delay_windows;
  double delay_mean = 0.0;
  double delay_max_window = 0.0;
  std::size_t graph_size = 0;
  std::size_t answers = 0;
  bool exhausted = false;
};

struct Opened {
  std::unique_ptr<AnswerStream> stream;
  std::size_t graph_size = 0;
};

// Opens a stream (timed as preprocessing) and pulls answers up to the last
// checkpoint. Checkpoints must be ascending.
MetricsReport measure(const std::function<Opened()>& open,
                      const std::vector<std::size_t>& checkpoints,
                      std::size_t window = 1000);

}  // namespace thetarank
