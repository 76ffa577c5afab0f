#pragma once

// Theta-join tree construction: GYO reduction over the equality skeleton,
// assignment of the remaining predicates to covering tree edges, and the
// residual-predicate fallback for cyclic queries.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thetarank/model.hpp"

namespace thetarank {

// Undirected join tree over query atoms (a forest's components are linked
// with predicate-free edges).
struct JoinTree {
  std::size_t atom_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (a, b), a < b
};

// Variable classes induced by the pure-equality predicates of a query.
struct EqualitySkeleton {
  // variable id per (atom, column); columns equated through a pure-equality
  // predicate share an id.
  std::vector<std::vector<std::size_t>> variable;
  // Per atom, the sorted variables it shares with at least one other atom.
  std::vector<std::vector<std::size_t>> shared;

  bool contains(std::size_t atom, std::size_t var) const;
  // Column of `atom` holding `var`, lowest index first.
  std::optional<std::size_t> column_of(std::size_t atom, std::size_t var) const;
};

// Builds the skeleton from the pure-equality predicates selected by `keep`
// (all of them when `keep` is empty).
EqualitySkeleton build_skeleton(const JoinQuery& q,
                                const std::vector<bool>& keep = {});

// GYO ear removal on the skeleton hypergraph. Ties are broken by atom index.
// Returns nullopt when the skeleton is cyclic.
std::optional<JoinTree> gyo_join_tree(const JoinQuery& q,
                                      const std::vector<bool>& keep = {});
std::optional<JoinTree> gyo_join_tree(const EqualitySkeleton& skeleton);

// True iff, for every shared variable, the atoms containing it are connected
// in `tree`.
bool has_connected_subtrees(const EqualitySkeleton& skeleton,
                            const JoinTree& tree);

struct TreeEdge {
  std::size_t parent = 0;
  std::size_t child = 0;
  // Assigned predicates conjoined with the equalities on shared variables,
  // with references rewritten onto the parent and child atoms.
  PredicateDNF condition;
  std::vector<std::size_t> assigned;  // query predicate indices
};

struct ThetaJoinTree {
  std::size_t root = 0;
  std::vector<std::optional<std::size_t>> parent;  // per atom
  std::vector<std::vector<std::size_t>> children;  // ascending atom index
  std::vector<std::size_t> depth;
  std::vector<std::size_t> preorder;
  std::vector<TreeEdge> edges;  // in preorder of their child atom

  std::size_t atom_count() const noexcept { return parent.size(); }
  // Index into `edges` of the edge whose child is `atom`.
  std::optional<std::size_t> edge_into(std::size_t atom) const;
};

enum class PlanOutcome { kAcyclic, kCyclic, kNoTree };

struct PlanResult {
  PlanOutcome outcome = PlanOutcome::kNoTree;
  std::optional<ThetaJoinTree> tree;
  std::vector<std::size_t> residual;  // query predicate indices
  std::vector<PredicateDNF> residual_predicates;
};

const char* to_string(PlanOutcome outcome) noexcept;

// Roots `tree` at atom 0 with ascending child order; edge conditions are
// left empty.
ThetaJoinTree root_tree(const JoinTree& tree);

// Assigns the non-skeleton predicates of `q` to edges of some join tree.
// Searches all join trees of the skeleton (via forced-edge maximum spanning
// trees); if none admits every predicate, drops the fewest predicates into
// the residual, preferring to keep lower-indexed predicates.
PlanResult assign_predicates(const JoinQuery& q);

// Full planning entry point: validates `q` and calls assign_predicates.
PlanResult plan_query(const JoinQuery& q);

// Human-readable plan, used by `explain`.
std::string describe(const JoinQuery& q, const PlanResult& plan);

}  // namespace thetarank
