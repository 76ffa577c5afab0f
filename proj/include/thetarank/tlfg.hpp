#pragma once

// Tuple-level factorization graphs (TLFGs): layered DAGs between a source
// and a target relation whose source-to-target paths are exactly the
// joining tuple pairs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thetarank/model.hpp"

namespace thetarank {

enum class TlfgNodeKind : std::uint8_t { kSource, kTarget, kIntermediate };

// Node ids: sources [0, S), targets [S, S + T), intermediates after that.
class Tlfg {
 public:
  using NodeId = std::uint32_t;
  using Edge = std::pair<NodeId, NodeId>;

  Tlfg() = default;
  Tlfg(std::size_t sources, std::size_t targets);

  NodeId source(Tid tid) const noexcept { return tid; }
  NodeId target(Tid tid) const noexcept {
    return static_cast<NodeId>(sources_ + tid);
  }
  NodeId add_intermediate();
  void add_edge(NodeId tail, NodeId head);

  // Sorts and indexes the edges and assigns layers; must be called once
  // after the last add_edge.
  void finalize();

  std::size_t source_count() const noexcept { return sources_; }
  std::size_t target_count() const noexcept { return targets_; }
  std::size_t intermediate_count() const noexcept { return intermediates_; }
  std::size_t node_count() const noexcept {
    return sources_ + targets_ + intermediates_;
  }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t size() const noexcept { return node_count() + edge_count(); }

  TlfgNodeKind kind(NodeId v) const noexcept;
  // Edges sorted by (tail, head).
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const NodeId> successors(NodeId v) const;
  // Nodes in a topological order (valid after finalize).
  std::span<const NodeId> topological_order() const noexcept { return topo_; }

  // Layer per node: sources 0, intermediates the longest path from a
  // source, targets one past the deepest intermediate.
  std::uint32_t layer(NodeId v) const { return layer_.at(v); }
  std::uint32_t target_layer() const noexcept { return target_layer_; }
  // Longest source-to-target path in edges; 0 for an empty graph.
  std::size_t depth() const noexcept { return depth_; }
  // Every edge connects layer i - 1 to layer i.
  bool adjacent_layers() const;

  // Upper bound on the number of paths between a source and a target,
  // recorded by the builder.
  std::size_t duplication_bound = 1;
  // Distinct join-attribute values the builder encountered.
  std::size_t distinct_values = 0;

  // One line per node ("node <id> <kind> <layer>") then per edge
  // ("edge <tail> <head>"), in id order.
  std::string dump() const;

 private:
  std::size_t sources_ = 0;
  std::size_t targets_ = 0;
  std::size_t intermediates_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> heads_;
  std::vector<NodeId> topo_;
  std::vector<std::uint32_t> layer_;
  std::uint32_t target_layer_ = 1;
  std::size_t depth_ = 0;
  bool finalized_ = false;
};

struct TlfgStats {
  std::size_t size = 0;
  std::size_t depth = 0;
  std::size_t duplication = 1;
  bool duplication_exact = true;  // false: `duplication` is the builder bound
  std::size_t distinct_values = 0;
};

// Path counting for the duplication factor costs O(|S| * size); above
// `duplication_budget` the builder's bound is reported instead.
TlfgStats stats(const Tlfg& g,
                std::size_t duplication_budget = std::size_t{1} << 26);

// Which single-inequality construction serves as the base case.
enum class InequalityBase { kBinary, kMultiway, kShared };

// Factorization method for a whole DNF condition. kAuto uses multiway
// partitioning for single predicates and for the last predicate of a
// conjunction; kMultiway and kShared accept at most one non-equality
// predicate per conjunction.
enum class Method { kAuto, kBinary, kMultiway, kShared, kDirect };

const char* to_string(Method m) noexcept;
std::optional<Method> parse_method(std::string_view text);

struct BuildOptions {
  Method method = Method::kAuto;
  // Direct construction fails with GuardExceeded beyond this many edges.
  std::size_t edge_limit = std::numeric_limits<std::size_t>::max();
};

// Connects every joining pair directly (depth 1, O(|S| |T|) edges).
Tlfg build_direct(const Relation& S, const Relation& T,
                  const PredicateDNF& condition,
                  std::size_t edge_limit = std::numeric_limits<std::size_t>::max());
Tlfg build_direct(std::size_t sources, std::size_t targets,
                  const std::function<bool(Tid, Tid)>& joins,
                  std::size_t edge_limit = std::numeric_limits<std::size_t>::max());

// One intermediate node per joint value of the equality attributes present
// on both sides.
Tlfg build_equality(const Relation& S, const Relation& T,
                    const std::vector<AtomicPredicate>& equalities);

// Single inequality (<, >, <=, >=).
Tlfg build_binary_partition(const Relation& S, const Relation& T,
                            const AtomicPredicate& inequality);
Tlfg build_multiway_partition(const Relation& S, const Relation& T,
                              const AtomicPredicate& inequality);
Tlfg build_shared_ranges(const Relation& S, const Relation& T,
                         const AtomicPredicate& inequality);

Tlfg build_nonequality(const Relation& S, const Relation& T,
                       const AtomicPredicate& neq,
                       InequalityBase base = InequalityBase::kMultiway);
Tlfg build_band(const Relation& S, const Relation& T,
                const AtomicPredicate& band,
                InequalityBase base = InequalityBase::kMultiway);

// Conjunction of atoms: equalities partition both sides first, then the
// remaining inequalities are factorized by nested binary partitioning with
// `base` handling the last predicate.
Tlfg build_conjunction(const Relation& S, const Relation& T,
                       const Conjunction& conjunction,
                       InequalityBase base = InequalityBase::kBinary);

Tlfg build_dnf(const Relation& S, const Relation& T, const PredicateDNF& dnf,
               const BuildOptions& options = {});

struct BandGroup {
  double start = 0.0;
  double end = 0.0;
  double epsilon = 0.0;
  std::vector<Tid> target_tids;
  std::vector<Tid> source_tids;
};

// Greedy epsilon-interval grouping of the targets and the sources assigned
// to each group.
std::vector<BandGroup> band_groups(const Relation& S, const Relation& T,
                                   const AtomicPredicate& band);

}  // namespace thetarank
