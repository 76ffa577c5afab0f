#pragma once

// Ranked and unranked enumeration of tree solutions over an enumeration
// graph, plus the stream adapters the engine composes.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <unordered_set>
#include <vector>

#include "thetarank/enum_graph.hpp"
#include "thetarank/model.hpp"

namespace thetarank {

class AnswerStream {
 public:
  virtual ~AnswerStream() = default;
  // Next answer, or nullopt once exhausted.
  virtual std::optional<Answer> next() = 0;
};

struct DPAnnotation {
  // Weight of the lightest completion below each node, its own weight
  // included.
  std::vector<double> completion;
  // Per group, the heads ordered by (completion, id); laid out like
  // EnumerationGraph::all_heads().
  std::vector<EnumerationGraph::NodeId> ranked_heads;

  std::span<const EnumerationGraph::NodeId> ranked(
      const EnumerationGraph& g, std::size_t group) const {
    return std::span<const EnumerationGraph::NodeId>(
        ranked_heads.data() + g.edge_begin(group),
        ranked_heads.data() + g.edge_end(group));
  }
};

// One reverse-topological pass, O(|E| log |E|) including the sorts.
DPAnnotation dp_bottom_up(const EnumerationGraph& g);

struct TidVectorHash {
  std::size_t operator()(const std::vector<Tid>& v) const noexcept;
};

struct RankedOptions {
  // Keep every emitted answer in the duplicate filter instead of clearing
  // it when the weight increases.
  bool never_clear_dedup = false;
};

// Lawler-style best-first enumeration over the depth-first serialization of
// a solution's decision points (one per reached node and group).
class RankedEnumerator : public AnswerStream {
 public:
  explicit RankedEnumerator(std::shared_ptr<const EnumerationGraph> g,
                            RankedOptions options = {});

  std::optional<Answer> next() override;

  const DPAnnotation& dp() const noexcept { return dp_; }
  // Solutions popped so far, duplicates included.
  std::size_t popped() const noexcept { return popped_; }

 private:
  struct Solution {
    std::vector<std::uint32_t> ranks;
    // Positions after the deviation with a second choice, ascending by the
    // cost of switching to it.
    std::vector<std::uint32_t> chain;
    std::vector<double> chain_delta;
    double weight = 0.0;
  };
  struct Entry {
    double weight;
    std::uint64_t seq;
    std::uint32_t solution;
    std::uint32_t position;  // deviation position, or chain index
    std::uint32_t rank;      // 0 marks a chain entry
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const noexcept {
      if (a.weight != b.weight) return a.weight > b.weight;
      return a.seq > b.seq;
    }
  };

  // Walks the solution that follows `base` ranks before `position`, takes
  // `rank` there and rank 0 afterwards. Fills ranks, chain and choice.
  Solution materialize(const std::vector<std::uint32_t>* base,
                       std::uint32_t position, std::uint32_t rank,
                       std::vector<Tid>& choice);
  void push(double weight, std::uint32_t solution, std::uint32_t position,
            std::uint32_t rank);

  std::shared_ptr<const EnumerationGraph> g_;
  DPAnnotation dp_;
  RankedOptions options_;
  std::vector<Solution> solutions_;
  std::vector<std::uint32_t> scratch_groups_;  // groups of the last walk
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t seq_ = 0;
  std::size_t popped_ = 0;
  bool dedup_ = false;
  std::unordered_set<std::vector<Tid>, TidVectorHash> seen_;
  std::optional<double> last_weight_;
};

// Arbitrary-order enumeration: an odometer over the decision points, O(λ)
// per answer after the graph is built.
class UnrankedEnumerator : public AnswerStream {
 public:
  explicit UnrankedEnumerator(std::shared_ptr<const EnumerationGraph> g);
  std::optional<Answer> next() override;

 private:
  void walk(std::size_t keep);

  std::shared_ptr<const EnumerationGraph> g_;
  std::vector<std::uint32_t> ranks_;
  std::vector<std::uint32_t> groups_;
  std::vector<Tid> choice_;
  bool started_ = false;
  bool done_ = false;
  bool dedup_ = false;
  std::unordered_set<std::vector<Tid>, TidVectorHash> seen_;
};

// Sum of original tuple weights in atom order.
double canonical_weight(const EnumerationGraph& g, std::span<const Tid> choice);

// Drops answers failing any residual predicate; order is preserved.
class ResidualFilter : public AnswerStream {
 public:
  ResidualFilter(std::unique_ptr<AnswerStream> inner, const JoinQuery& q,
                 const std::vector<PredicateDNF>& residual);
  std::optional<Answer> next() override;

 private:
  struct Atom {
    PredicateKind kind;
    ColumnRef left;
    ColumnRef right;
    double epsilon;
  };
  bool accepts(const std::vector<Tid>& choice) const;

  std::unique_ptr<AnswerStream> inner_;
  std::vector<std::shared_ptr<const Relation>> atoms_;
  std::vector<std::vector<std::vector<Atom>>> residual_;
};

// Reorders each run of equal-weight answers lexicographically by choice.
class TieSorted : public AnswerStream {
 public:
  explicit TieSorted(std::unique_ptr<AnswerStream> inner);
  std::optional<Answer> next() override;

 private:
  std::unique_ptr<AnswerStream> inner_;
  std::vector<Answer> tier_;
  std::size_t pos_ = 0;
  std::optional<Answer> pending_;
  bool exhausted_ = false;
};

// Stops after `limit` answers.
class Limited : public AnswerStream {
 public:
  Limited(std::unique_ptr<AnswerStream> inner, std::size_t limit)
      : inner_(std::move(inner)), left_(limit) {}
  std::optional<Answer> next() override {
    if (left_ == 0) return std::nullopt;
    auto a = inner_->next();
    if (a) --left_;
    return a;
  }

 private:
  std::unique_ptr<AnswerStream> inner_;
  std::size_t left_;
};

// Replays a precomputed answer list.
class VectorStream : public AnswerStream {
 public:
  explicit VectorStream(std::vector<Answer> answers)
      : answers_(std::move(answers)) {}
  std::optional<Answer> next() override {
    if (pos_ == answers_.size()) return std::nullopt;
    return std::move(answers_[pos_++]);
  }

 private:
  std::vector<Answer> answers_;
  std::size_t pos_ = 0;
};

}  // namespace thetarank
