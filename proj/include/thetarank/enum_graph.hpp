#pragma once

// The enumeration graph: relation layers joined by per-edge TLFGs along a
// rooted theta-join tree. Its tree solutions are the query answers.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "thetarank/model.hpp"
#include "thetarank/plan.hpp"
#include "thetarank/tlfg.hpp"

namespace thetarank {

enum class EnumNodeKind : std::uint8_t { kRoot, kRelation, kIntermediate };

struct EdgeRegion {
  std::size_t parent = 0;  // atom
  std::size_t child = 0;   // atom
  TlfgStats stats;
  std::size_t first_layer = 0;  // layer of the region's first intermediate
};

// Node 0 is a virtual root whose single group fans out to the root atom's
// tuples. A relation node has one group per child atom (ascending); an
// intermediate node has one group. A tree solution picks one edge per
// group of every node it reaches.
//
// Node ids are a topological order: edges always go from lower to higher
// ids.
class EnumerationGraph {
 public:
  using NodeId = std::uint32_t;
  static constexpr NodeId kRootNode = 0;
  static constexpr std::size_t kNoAtom = std::numeric_limits<std::size_t>::max();

  std::size_t node_count() const noexcept { return kind_.size(); }
  std::size_t group_count() const noexcept { return group_edges_.size() - 1; }
  std::size_t edge_count() const noexcept { return heads_.size(); }
  // Nodes excluding the virtual root, plus edges excluding its fan-out.
  std::size_t size() const noexcept;

  EnumNodeKind kind(NodeId v) const { return kind_.at(v); }
  // Relation nodes: their atom. Intermediates: the child atom of their
  // tree edge. Root: kNoAtom.
  std::size_t atom(NodeId v) const { return atom_.at(v); }
  Tid tid(NodeId v) const { return tid_.at(v); }
  // Ranking weight (negated tuple weight under MAX); 0 off relation nodes.
  double weight(NodeId v) const { return weight_.at(v); }
  std::uint32_t layer(NodeId v) const { return layer_.at(v); }

  std::size_t group_begin(NodeId v) const { return node_groups_.at(v); }
  std::size_t group_end(NodeId v) const { return node_groups_.at(v + 1); }
  std::size_t edge_begin(std::size_t group) const { return group_edges_.at(group); }
  std::size_t edge_end(std::size_t group) const { return group_edges_.at(group + 1); }
  // Edge heads of a group, ascending.
  std::span<const NodeId> heads(std::size_t group) const;
  std::span<const NodeId> all_heads() const noexcept { return heads_; }

  // Number of layers (the root relation layer is 0; the virtual root has
  // no layer of its own).
  std::size_t layer_count() const noexcept { return layer_count_; }
  const ThetaJoinTree& tree() const noexcept { return tree_; }
  const std::vector<EdgeRegion>& regions() const noexcept { return regions_; }
  const std::vector<std::shared_ptr<const Relation>>& atoms() const noexcept {
    return atoms_;
  }
  std::size_t atom_count() const noexcept { return atoms_.size(); }
  Direction direction() const noexcept { return direction_; }
  // Product of per-edge duplication factors (saturating).
  std::size_t duplication_bound() const noexcept { return duplication_; }
  // Relation nodes per atom.
  std::size_t relation_nodes(std::size_t atom) const;
  bool empty() const { return heads(0).empty(); }

 private:
  friend class GraphBuilder;

  std::vector<EnumNodeKind> kind_;
  std::vector<std::size_t> atom_;
  std::vector<Tid> tid_;
  std::vector<double> weight_;
  std::vector<std::uint32_t> layer_;
  std::vector<std::size_t> node_groups_{0};
  std::vector<std::size_t> group_edges_{0};
  std::vector<NodeId> heads_;

  std::size_t layer_count_ = 0;
  ThetaJoinTree tree_;
  std::vector<EdgeRegion> regions_;
  std::vector<std::shared_ptr<const Relation>> atoms_;
  Direction direction_ = Direction::kMin;
  std::size_t duplication_ = 1;
};

struct AssembleOptions {
  Method method = Method::kAuto;
  std::size_t edge_limit = std::numeric_limits<std::size_t>::max();
  bool prune = true;
  // Work limit for exact duplication counting in region stats.
  std::size_t stats_budget = std::size_t{1} << 24;
};

// Builds one TLFG per tree edge and links them through the relation layers
// in depth-first preorder of the tree, then prunes (unless disabled).
EnumerationGraph assemble(const JoinQuery& q, const ThetaJoinTree& tree,
                          const AssembleOptions& options = {});

// Removes nodes that cannot complete a tree solution (some group has no
// live edge) and nodes the virtual root cannot reach. Idempotent.
EnumerationGraph prune_unreachable(const EnumerationGraph& g);

// Per-region TLFG stats and totals, one item per line.
std::string explain(const EnumerationGraph& g);

}  // namespace thetarank
