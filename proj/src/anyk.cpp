#include "thetarank/anyk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "thetarank/error.hpp"

namespace thetarank {

using NodeId = EnumerationGraph::NodeId;

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
constexpr double kTieTolerance = 1e-9;

bool strictly_heavier(double w, double last) {
  return w > last + kTieTolerance * std::max(1.0, std::fabs(last));
}

}  // namespace

DPAnnotation dp_bottom_up(const EnumerationGraph& g) {
  DPAnnotation dp;
  const std::size_t n = g.node_count();
  dp.completion.assign(n, 0.0);
  dp.ranked_heads.assign(g.all_heads().begin(), g.all_heads().end());
  for (std::size_t i = n; i-- > 0;) {
    const auto v = static_cast<NodeId>(i);
    double c = g.weight(v);
    for (std::size_t grp = g.group_begin(v); grp < g.group_end(v); ++grp) {
      auto first = dp.ranked_heads.begin() + static_cast<std::ptrdiff_t>(g.edge_begin(grp));
      auto last = dp.ranked_heads.begin() + static_cast<std::ptrdiff_t>(g.edge_end(grp));
      if (first == last) {
        c = std::numeric_limits<double>::infinity();
        continue;
      }
      std::sort(first, last, [&](NodeId a, NodeId b) {
        if (dp.completion[a] != dp.completion[b]) {
          return dp.completion[a] < dp.completion[b];
        }
        return a < b;
      });
      c += dp.completion[*first];
    }
    dp.completion[v] = c;
  }
  return dp;
}

std::size_t TidVectorHash::operator()(const std::vector<Tid>& v) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (Tid t : v) {
    h ^= t + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

double canonical_weight(const EnumerationGraph& g, std::span<const Tid> choice) {
  double w = 0.0;
  for (std::size_t i = 0; i < choice.size(); ++i) {
    w += g.atoms()[i]->tuple(choice[i]).weight;
  }
  return w;
}

RankedEnumerator::RankedEnumerator(std::shared_ptr<const EnumerationGraph> g,
                                   RankedOptions options)
    : g_(std::move(g)), dp_(dp_bottom_up(*g_)), options_(options) {
  dedup_ = g_->duplication_bound() > 1;
  if (!g_->empty()) push(dp_.completion[EnumerationGraph::kRootNode], kNone, 0, 0);
}

void RankedEnumerator::push(double weight, std::uint32_t solution,
                            std::uint32_t position, std::uint32_t rank) {
  heap_.push(Entry{weight, seq_++, solution, position, rank});
}

RankedEnumerator::Solution RankedEnumerator::materialize(
    const std::vector<std::uint32_t>* base, std::uint32_t position,
    std::uint32_t rank, std::vector<Tid>& choice) {
  const auto& g = *g_;
  Solution s;
  scratch_groups_.clear();
  std::vector<std::pair<NodeId, std::size_t>> stack;
  stack.emplace_back(EnumerationGraph::kRootNode,
                     g.group_begin(EnumerationGraph::kRootNode));
  while (!stack.empty()) {
    const auto [v, grp] = stack.back();
    if (grp == g.group_end(v)) {
      stack.pop_back();
      continue;
    }
    ++stack.back().second;
    const auto pos = static_cast<std::uint32_t>(s.ranks.size());
    std::uint32_t r = 0;
    if (base != nullptr && pos < position) {
      r = (*base)[pos];
    } else if (base != nullptr && pos == position) {
      r = rank;
    }
    const auto heads = dp_.ranked(g, grp);
    const NodeId h = heads[r];
    s.ranks.push_back(r);
    scratch_groups_.push_back(static_cast<std::uint32_t>(grp));
    if ((base == nullptr || pos > position) && heads.size() > 1) {
      s.chain.push_back(pos);
    }
    if (g.kind(h) == EnumNodeKind::kRelation) choice[g.atom(h)] = g.tid(h);
    stack.emplace_back(h, g.group_begin(h));
  }
  std::vector<double> delta(s.chain.size());
  for (std::size_t k = 0; k < s.chain.size(); ++k) {
    const auto heads = dp_.ranked(g, scratch_groups_[s.chain[k]]);
    delta[k] = dp_.completion[heads[1]] - dp_.completion[heads[0]];
  }
  std::vector<std::size_t> order(s.chain.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return delta[a] < delta[b]; });
  std::vector<std::uint32_t> chain(order.size());
  s.chain_delta.resize(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    chain[k] = s.chain[order[k]];
    s.chain_delta[k] = delta[order[k]];
  }
  s.chain = std::move(chain);
  return s;
}

std::optional<Answer> RankedEnumerator::next() {
  const auto& g = *g_;
  const double sign = g.direction() == Direction::kMax ? -1.0 : 1.0;
  std::vector<Tid> choice(g.atom_count());
  while (!heap_.empty()) {
    const Entry e = heap_.top();
    heap_.pop();
    ++popped_;
    if (solutions_.size() >= kNone) throw GuardExceeded("too many solutions");
    const auto id = static_cast<std::uint32_t>(solutions_.size());

    Solution y;
    std::uint32_t deviation = kNone;
    std::uint32_t used_rank = 0;
    if (e.solution == kNone) {
      y = materialize(nullptr, 0, 0, choice);
    } else if (e.rank == 0) {
      const Solution& x = solutions_[e.solution];
      deviation = x.chain[e.position];
      used_rank = 1;
      if (e.position + 1 < x.chain.size()) {
        push(x.weight + x.chain_delta[e.position + 1], e.solution,
             e.position + 1, 0);
      }
      y = materialize(&solutions_[e.solution].ranks, deviation, 1, choice);
    } else {
      deviation = e.position;
      used_rank = e.rank;
      y = materialize(&solutions_[e.solution].ranks, deviation, e.rank, choice);
    }
    y.weight = e.weight;
    if (deviation != kNone) {
      const auto heads = dp_.ranked(g, scratch_groups_[deviation]);
      if (used_rank + 1 < heads.size()) {
        push(y.weight + dp_.completion[heads[used_rank + 1]] -
                 dp_.completion[heads[used_rank]],
             id, deviation, used_rank + 1);
      }
    }
    if (!y.chain.empty()) push(y.weight + y.chain_delta[0], id, 0, 0);
    solutions_.push_back(std::move(y));

    const double w = canonical_weight(g, choice);
    if (dedup_) {
      const double ranked = sign * w;
      if (!options_.never_clear_dedup && last_weight_ &&
          strictly_heavier(ranked, *last_weight_)) {
        seen_.clear();
      }
      last_weight_ = ranked;
      if (!seen_.insert(choice).second) continue;
    }
    return Answer{std::move(choice), w};
  }
  return std::nullopt;
}

UnrankedEnumerator::UnrankedEnumerator(std::shared_ptr<const EnumerationGraph> g)
    : g_(std::move(g)) {
  dedup_ = g_->duplication_bound() > 1;
  choice_.assign(g_->atom_count(), 0);
}

void UnrankedEnumerator::walk(std::size_t keep) {
  const auto& g = *g_;
  std::vector<std::uint32_t> ranks;
  ranks.swap(ranks_);
  ranks_.clear();
  groups_.clear();
  std::vector<std::pair<NodeId, std::size_t>> stack;
  stack.emplace_back(EnumerationGraph::kRootNode,
                     g.group_begin(EnumerationGraph::kRootNode));
  while (!stack.empty()) {
    const auto [v, grp] = stack.back();
    if (grp == g.group_end(v)) {
      stack.pop_back();
      continue;
    }
    ++stack.back().second;
    const std::size_t pos = ranks_.size();
    const std::uint32_t r = pos < keep ? ranks[pos] : 0;
    const NodeId h = g.heads(grp)[r];
    ranks_.push_back(r);
    groups_.push_back(static_cast<std::uint32_t>(grp));
    if (g.kind(h) == EnumNodeKind::kRelation) choice_[g.atom(h)] = g.tid(h);
    stack.emplace_back(h, g.group_begin(h));
  }
}

std::optional<Answer> UnrankedEnumerator::next() {
  const auto& g = *g_;
  while (!done_) {
    if (!started_) {
      started_ = true;
      if (g.empty()) {
        done_ = true;
        break;
      }
      walk(0);
    } else {
      std::size_t i = ranks_.size();
      while (i > 0 && ranks_[i - 1] + 1 >= g.heads(groups_[i - 1]).size()) --i;
      if (i == 0) {
        done_ = true;
        break;
      }
      ++ranks_[i - 1];
      walk(i);
    }
    if (dedup_ && !seen_.insert(choice_).second) continue;
    return Answer{choice_, canonical_weight(g, choice_)};
  }
  return std::nullopt;
}

ResidualFilter::ResidualFilter(std::unique_ptr<AnswerStream> inner,
                               const JoinQuery& q,
                               const std::vector<PredicateDNF>& residual)
    : inner_(std::move(inner)), atoms_(q.atoms()) {
  for (const auto& dnf : residual) {
    auto& compiled = residual_.emplace_back();
    for (const auto& c : dnf.disjuncts) {
      auto& conj = compiled.emplace_back();
      for (const auto& a : c) {
        conj.push_back(Atom{a.kind, q.resolve(a.left), q.resolve(a.right),
                            a.epsilon.value_or(0.0)});
      }
    }
  }
}

bool ResidualFilter::accepts(const std::vector<Tid>& choice) const {
  auto value = [&](const ColumnRef& r) {
    return r.apply(atoms_[r.atom]->tuple(choice[r.atom]).values[r.column]);
  };
  for (const auto& dnf : residual_) {
    const bool ok = std::any_of(dnf.begin(), dnf.end(), [&](const auto& conj) {
      return std::all_of(conj.begin(), conj.end(), [&](const Atom& a) {
        return compare_values(a.kind, value(a.left), value(a.right), a.epsilon);
      });
    });
    if (!ok) return false;
  }
  return true;
}

std::optional<Answer> ResidualFilter::next() {
  while (auto a = inner_->next()) {
    if (accepts(a->choice)) return a;
  }
  return std::nullopt;
}

TieSorted::TieSorted(std::unique_ptr<AnswerStream> inner)
    : inner_(std::move(inner)) {}

std::optional<Answer> TieSorted::next() {
  if (pos_ < tier_.size()) return std::move(tier_[pos_++]);
  tier_.clear();
  pos_ = 0;
  std::optional<Answer> first = std::move(pending_);
  pending_.reset();
  if (!first && !exhausted_) first = inner_->next();
  if (!first) {
    exhausted_ = true;
    return std::nullopt;
  }
  tier_.push_back(std::move(*first));
  while (!exhausted_) {
    auto a = inner_->next();
    if (!a) {
      exhausted_ = true;
      break;
    }
    if (a->weight != tier_.front().weight) {
      pending_ = std::move(a);
      break;
    }
    tier_.push_back(std::move(*a));
  }
  std::sort(tier_.begin(), tier_.end(),
            [](const Answer& a, const Answer& b) { return a.choice < b.choice; });
  return std::move(tier_[pos_++]);
}

}  // namespace thetarank
