#pragma once

// Reduction of a theta-join to an equi-join through the edges of a TLFG,
// and the QuadEqui baseline built on the direct TLFG.

#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "thetarank/anyk.hpp"
#include "thetarank/model.hpp"
#include "thetarank/plan.hpp"
#include "thetarank/tlfg.hpp"

namespace thetarank {

// E_1..E_d: E_i holds the edges from layer i-1 to layer i. Source and
// target nodes are keyed by their tuple's values (columns "s_<attr>" and
// "t_<attr>"), intermediate nodes by their ordinal (column "v<layer>").
// Rows are distinct; weights are 0.
struct AuxRelationChain {
  std::vector<Relation> relations;
  std::size_t depth() const noexcept { return relations.size(); }
};

// Throws UnsupportedError if some edge skips a layer (shared ranges).
AuxRelationChain materialize_chain(const Relation& S, const Relation& T,
                                   const Tlfg& g,
                                   const std::string& prefix = "E");

// Equi-join version of a planned query: one direct edge relation per tree
// edge, spliced between parent and child. The first `original_atoms` atoms
// of `query` are the original ones, in their original order.
struct QuadEquiPlan {
  JoinQuery query;
  ThetaJoinTree tree;
  std::size_t original_atoms = 0;
};

QuadEquiPlan quad_equi_plan(
    const JoinQuery& q, const ThetaJoinTree& tree,
    std::size_t edge_limit = std::numeric_limits<std::size_t>::max());

// Keeps the first `atoms` entries of each answer's choice.
class ProjectedStream : public AnswerStream {
 public:
  ProjectedStream(std::unique_ptr<AnswerStream> inner, std::size_t atoms)
      : inner_(std::move(inner)), atoms_(atoms) {}
  std::optional<Answer> next() override;

 private:
  std::unique_ptr<AnswerStream> inner_;
  std::size_t atoms_;
};

// Writes every relation of the chain to `<dir>/<name>.csv`.
void export_chain(const AuxRelationChain& chain, const std::string& dir);

}  // namespace thetarank
