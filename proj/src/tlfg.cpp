#include "thetarank/tlfg.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "thetarank/error.hpp"
#include "tlfg_internal.hpp"

namespace thetarank {

Tlfg::Tlfg(std::size_t sources, std::size_t targets)
    : sources_(sources), targets_(targets) {}

Tlfg::NodeId Tlfg::add_intermediate() {
  if (finalized_) throw Error(ErrorCode::kInternal, "TLFG already finalized");
  return static_cast<NodeId>(sources_ + targets_ + intermediates_++);
}

void Tlfg::add_edge(NodeId tail, NodeId head) {
  if (finalized_) throw Error(ErrorCode::kInternal, "TLFG already finalized");
  if (tail >= node_count() || head >= node_count() ||
      kind(tail) == TlfgNodeKind::kTarget ||
      kind(head) == TlfgNodeKind::kSource) {
    throw Error(ErrorCode::kInternal, "invalid TLFG edge");
  }
  edges_.emplace_back(tail, head);
}

TlfgNodeKind Tlfg::kind(NodeId v) const noexcept {
  if (v < sources_) return TlfgNodeKind::kSource;
  if (v < sources_ + targets_) return TlfgNodeKind::kTarget;
  return TlfgNodeKind::kIntermediate;
}

std::span<const Tlfg::NodeId> Tlfg::successors(NodeId v) const {
  if (!finalized_) throw Error(ErrorCode::kInternal, "TLFG not finalized");
  return std::span<const NodeId>(heads_.data() + offsets_.at(v),
                                 heads_.data() + offsets_.at(v + 1));
}

void Tlfg::finalize() {
  if (finalized_) return;
  finalized_ = true;
  std::sort(edges_.begin(), edges_.end());
  const std::size_t n = node_count();
  offsets_.assign(n + 1, 0);
  heads_.resize(edges_.size());
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& [t, h] : edges_) {
    ++offsets_[t + 1];
    ++indegree[h];
  }
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] += offsets_[v];
  for (std::size_t e = 0; e < edges_.size(); ++e) heads_[e] = edges_[e].second;

  topo_.clear();
  topo_.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) topo_.push_back(static_cast<NodeId>(v));
  }
  for (std::size_t k = 0; k < topo_.size(); ++k) {
    for (NodeId h : successors(topo_[k])) {
      if (--indegree[h] == 0) topo_.push_back(h);
    }
  }
  if (topo_.size() != n) throw Error(ErrorCode::kInternal, "TLFG has a cycle");

  layer_.assign(n, 0);
  std::vector<std::size_t> dist(n, 0);
  std::vector<bool> reached(n, false);
  for (std::size_t s = 0; s < sources_; ++s) reached[s] = true;
  std::uint32_t deepest = 0;
  for (NodeId v : topo_) {
    if (kind(v) == TlfgNodeKind::kIntermediate) {
      if (layer_[v] == 0) layer_[v] = 1;
      deepest = std::max(deepest, layer_[v]);
    }
    for (NodeId h : successors(v)) {
      layer_[h] = std::max(layer_[h], layer_[v] + 1);
      if (reached[v]) {
        reached[h] = true;
        dist[h] = std::max(dist[h], dist[v] + 1);
      }
    }
  }
  target_layer_ = std::max<std::uint32_t>(1, deepest + 1);
  depth_ = 0;
  for (std::size_t t = 0; t < targets_; ++t) {
    const auto v = sources_ + t;
    layer_[v] = target_layer_;
    if (reached[v]) depth_ = std::max(depth_, dist[v]);
  }
}

bool Tlfg::adjacent_layers() const {
  return std::all_of(edges_.begin(), edges_.end(), [&](const Edge& e) {
    return layer_.at(e.second) == layer_.at(e.first) + 1;
  });
}

std::string Tlfg::dump() const {
  std::ostringstream out;
  for (std::size_t v = 0; v < node_count(); ++v) {
    const auto id = static_cast<NodeId>(v);
    const char* k = kind(id) == TlfgNodeKind::kSource   ? "source"
                    : kind(id) == TlfgNodeKind::kTarget ? "target"
                                                        : "intermediate";
    out << "node " << v << ' ' << k << ' '
        << (finalized_ ? layer(id) : 0u) << '\n';
  }
  for (const auto& [t, h] : edges_) out << "edge " << t << ' ' << h << '\n';
  return out.str();
}

TlfgStats stats(const Tlfg& g, std::size_t duplication_budget) {
  TlfgStats st;
  st.size = g.size();
  st.depth = g.depth();
  st.distinct_values = g.distinct_values;
  const double work =
      static_cast<double>(g.source_count()) * static_cast<double>(g.size());
  if (work > static_cast<double>(duplication_budget)) {
    st.duplication = g.duplication_bound;
    st.duplication_exact = false;
    return st;
  }
  const auto topo = g.topological_order();
  std::vector<std::size_t> position(g.node_count());
  for (std::size_t k = 0; k < topo.size(); ++k) position[topo[k]] = k;
  std::vector<std::uint64_t> paths(g.node_count(), 0);
  std::vector<Tlfg::NodeId> reach, stack;
  std::vector<bool> seen(g.node_count(), false);
  std::size_t best = 1;
  for (std::size_t s = 0; s < g.source_count(); ++s) {
    reach.clear();
    stack.assign(1, static_cast<Tlfg::NodeId>(s));
    seen[s] = true;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      reach.push_back(v);
      for (auto h : g.successors(v)) {
        if (!seen[h]) {
          seen[h] = true;
          stack.push_back(h);
        }
      }
    }
    std::sort(reach.begin(), reach.end(), [&](auto a, auto b) {
      return position[a] < position[b];
    });
    paths[s] = 1;
    for (auto v : reach) {
      for (auto h : g.successors(v)) {
        const auto sum = paths[h] + paths[v];
        paths[h] = sum < paths[h] ? UINT64_MAX : sum;
      }
    }
    for (auto v : reach) {
      if (g.kind(v) == TlfgNodeKind::kTarget) {
        best = std::max<std::size_t>(best, paths[v]);
      }
      paths[v] = 0;
      seen[v] = false;
    }
  }
  st.duplication = best;
  return st;
}

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::kAuto: return "auto";
    case Method::kBinary: return "binary";
    case Method::kMultiway: return "multiway";
    case Method::kShared: return "shared";
    case Method::kDirect: return "direct";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view text) {
  std::string lower(text);
  for (auto& c : lower) c = static_cast<char>(std::tolower(c));
  for (auto m : {Method::kAuto, Method::kBinary, Method::kMultiway,
                 Method::kShared, Method::kDirect}) {
    if (lower == to_string(m)) return m;
  }
  return std::nullopt;
}

namespace {

using detail::all_tids;
using detail::Factorizer;
using detail::OrientedAtom;

bool is_inequality(PredicateKind k) {
  return k == PredicateKind::kLt || k == PredicateKind::kGt ||
         k == PredicateKind::kLe || k == PredicateKind::kGe;
}

std::size_t distinct_over(const Relation& S, const Relation& T,
                          const std::vector<OrientedAtom>& atoms) {
  const auto Sa = all_tids(S.size());
  const auto Ta = all_tids(T.size());
  std::size_t best = 0;
  for (const auto& a : atoms) {
    best = std::max(best, detail::count_distinct(Sa, Ta, a.source_values,
                                                 a.target_values));
  }
  return best;
}

OrientedAtom oriented_checked(const Relation& S, const Relation& T,
                              const AtomicPredicate& p) {
  p.check();
  return detail::orient(S, T, p);
}

// One conjunction, factorized into `f`'s graph. NEQ atoms next to other
// non-equalities are split into their < and > branches; BAND atoms become
// two inequalities.
class ConjunctionPlan {
 public:
  ConjunctionPlan(const Relation& S, const Relation& T, const Conjunction& c) {
    for (const auto& p : c) {
      auto o = oriented_checked(S, T, p);
      if (o.kind == PredicateKind::kEq) {
        eqs_.push_back(std::move(o));
      } else {
        rest_.push_back(std::move(o));
      }
    }
    if (rest_.size() == 1) {
      const auto& a = rest_.front();
      if (is_inequality(a.kind)) {
        keyed_.push_back(detail::as_keyed(a));
      } else if (a.kind == PredicateKind::kNeq) {
        keyed_.push_back(detail::less_than(a.source_values, a.target_values));
        keyed_.push_back(detail::greater_than(a.source_values, a.target_values));
      } else {
        band_ = detail::band_atoms(a);
      }
    } else {
      for (const auto& a : rest_) {
        if (is_inequality(a.kind)) {
          keyed_.push_back(detail::as_keyed(a));
        } else if (a.kind == PredicateKind::kNeq) {
          keyed_.push_back(detail::less_than(a.source_values, a.target_values));
          keyed_.push_back(
              detail::greater_than(a.source_values, a.target_values));
        } else {
          auto b = detail::band_atoms(a);
          keyed_.push_back(std::move(b.upper));
          keyed_.push_back(std::move(b.lower));
        }
      }
    }
  }

  std::size_t non_equalities() const noexcept { return rest_.size(); }
  const std::vector<OrientedAtom>& atoms_for_stats() const noexcept {
    return rest_.empty() ? eqs_ : rest_;
  }

  void build(Factorizer& f, std::size_t ns, std::size_t nt,
             InequalityBase base) const {
    std::vector<const OrientedAtom*> eqs;
    for (const auto& e : eqs_) eqs.push_back(&e);
    detail::for_each_equality_group(
        eqs, ns, nt, [&](std::vector<Tid> S, std::vector<Tid> T) {
          build_group(f, std::move(S), std::move(T), base);
        });
  }

 private:
  void build_group(Factorizer& f, std::vector<Tid> S, std::vector<Tid> T,
                   InequalityBase base) const {
    if (rest_.empty()) {
      f.connect_all(S, T);
      return;
    }
    if (rest_.size() == 1) {
      const auto& a = rest_.front();
      if (is_inequality(a.kind)) {
        f.inequality(std::move(S), std::move(T), keyed_[0], base);
      } else if (a.kind == PredicateKind::kNeq) {
        f.nonequality(S, T, keyed_[0], keyed_[1], base);
      } else {
        f.band(std::move(S), std::move(T), a, band_, base);
      }
      return;
    }
    // Each NEQ contributes a binary choice between its two keyed atoms.
    std::vector<std::size_t> neq_slots;
    std::vector<const detail::KeyedAtom*> atoms;
    std::size_t k = 0;
    for (const auto& a : rest_) {
      if (a.kind == PredicateKind::kNeq) neq_slots.push_back(atoms.size());
      atoms.push_back(&keyed_[k]);
      k += (is_inequality(a.kind) ? 1 : 2);
      if (a.kind == PredicateKind::kBand) atoms.push_back(&keyed_[k - 1]);
    }
    const std::size_t branches = std::size_t{1} << neq_slots.size();
    for (std::size_t mask = 0; mask < branches; ++mask) {
      auto chosen = atoms;
      for (std::size_t b = 0; b < neq_slots.size(); ++b) {
        if (mask & (std::size_t{1} << b)) chosen[neq_slots[b]] += 1;
      }
      f.conjunction(S, T, std::move(chosen), base);
    }
  }

  std::vector<OrientedAtom> eqs_;
  std::vector<OrientedAtom> rest_;
  std::vector<detail::KeyedAtom> keyed_;
  detail::BandAtoms band_;
};

InequalityBase base_for(Method m) {
  switch (m) {
    case Method::kBinary: return InequalityBase::kBinary;
    case Method::kShared: return InequalityBase::kShared;
    default: return InequalityBase::kMultiway;
  }
}

Tlfg single_atom(const Relation& S, const Relation& T,
                 const AtomicPredicate& p, InequalityBase base) {
  ConjunctionPlan plan(S, T, Conjunction{p});
  Tlfg g(S.size(), T.size());
  Factorizer f(g);
  plan.build(f, S.size(), T.size(), base);
  g.distinct_values = distinct_over(S, T, plan.atoms_for_stats());
  g.finalize();
  return g;
}

}  // namespace

Tlfg build_direct(std::size_t sources, std::size_t targets,
                  const std::function<bool(Tid, Tid)>& joins,
                  std::size_t edge_limit) {
  Tlfg g(sources, targets);
  std::size_t edges = 0;
  for (Tid s = 0; s < sources; ++s) {
    for (Tid t = 0; t < targets; ++t) {
      if (!joins(s, t)) continue;
      if (++edges > edge_limit) {
        throw GuardExceeded("direct TLFG exceeds " +
                            std::to_string(edge_limit) + " edges");
      }
      g.add_edge(g.source(s), g.target(t));
    }
  }
  g.finalize();
  return g;
}

Tlfg build_direct(const Relation& S, const Relation& T,
                  const PredicateDNF& condition, std::size_t edge_limit) {
  std::vector<std::vector<OrientedAtom>> compiled;
  for (const auto& c : condition.disjuncts) {
    auto& out = compiled.emplace_back();
    for (const auto& p : c) out.push_back(oriented_checked(S, T, p));
  }
  auto g = build_direct(
      S.size(), T.size(),
      [&](Tid s, Tid t) {
        for (const auto& c : compiled) {
          bool all = true;
          for (const auto& a : c) {
            if (!compare_values(a.kind, a.source_values[s], a.target_values[t],
                                a.epsilon)) {
              all = false;
              break;
            }
          }
          if (all) return true;
        }
        return false;
      },
      edge_limit);
  std::vector<OrientedAtom> flat;
  for (auto& c : compiled) {
    for (auto& a : c) flat.push_back(std::move(a));
  }
  g.distinct_values = distinct_over(S, T, flat);
  return g;
}

Tlfg build_equality(const Relation& S, const Relation& T,
                    const std::vector<AtomicPredicate>& equalities) {
  if (equalities.empty()) {
    throw InvalidArgument("equality grouping needs at least one predicate");
  }
  for (const auto& p : equalities) {
    if (p.kind != PredicateKind::kEq) {
      throw InvalidArgument("not an equality: " + p.to_string());
    }
  }
  ConjunctionPlan plan(S, T, equalities);
  Tlfg g(S.size(), T.size());
  Factorizer f(g);
  plan.build(f, S.size(), T.size(), InequalityBase::kBinary);
  g.distinct_values = distinct_over(S, T, plan.atoms_for_stats());
  g.finalize();
  return g;
}

Tlfg build_binary_partition(const Relation& S, const Relation& T,
                            const AtomicPredicate& inequality) {
  if (!is_inequality(inequality.kind)) {
    throw InvalidArgument("not an inequality: " + inequality.to_string());
  }
  return single_atom(S, T, inequality, InequalityBase::kBinary);
}

Tlfg build_multiway_partition(const Relation& S, const Relation& T,
                              const AtomicPredicate& inequality) {
  if (!is_inequality(inequality.kind)) {
    throw InvalidArgument("not an inequality: " + inequality.to_string());
  }
  return single_atom(S, T, inequality, InequalityBase::kMultiway);
}

Tlfg build_shared_ranges(const Relation& S, const Relation& T,
                         const AtomicPredicate& inequality) {
  if (!is_inequality(inequality.kind)) {
    throw InvalidArgument("not an inequality: " + inequality.to_string());
  }
  return single_atom(S, T, inequality, InequalityBase::kShared);
}

Tlfg build_nonequality(const Relation& S, const Relation& T,
                       const AtomicPredicate& neq, InequalityBase base) {
  if (neq.kind != PredicateKind::kNeq) {
    throw InvalidArgument("not a non-equality: " + neq.to_string());
  }
  return single_atom(S, T, neq, base);
}

Tlfg build_band(const Relation& S, const Relation& T,
                const AtomicPredicate& band, InequalityBase base) {
  if (band.kind != PredicateKind::kBand) {
    throw InvalidArgument("not a band predicate: " + band.to_string());
  }
  return single_atom(S, T, band, base);
}

Tlfg build_conjunction(const Relation& S, const Relation& T,
                       const Conjunction& conjunction, InequalityBase base) {
  if (conjunction.empty()) throw InvalidArgument("empty conjunction");
  ConjunctionPlan plan(S, T, conjunction);
  Tlfg g(S.size(), T.size());
  Factorizer f(g);
  plan.build(f, S.size(), T.size(), base);
  g.distinct_values = distinct_over(S, T, plan.atoms_for_stats());
  g.finalize();
  return g;
}

Tlfg build_dnf(const Relation& S, const Relation& T, const PredicateDNF& dnf,
               const BuildOptions& options) {
  if (dnf.disjuncts.empty()) throw InvalidArgument("empty DNF");
  if (options.method == Method::kDirect) {
    auto g = build_direct(S, T, dnf, options.edge_limit);
    return g;
  }
  if ((options.method == Method::kMultiway ||
       options.method == Method::kShared) &&
      dnf.max_non_equality() >= 2) {
    throw UnsupportedError(std::string("method '") + to_string(options.method) +
                           "' supports one non-equality predicate per "
                           "conjunction: " +
                           dnf.to_string());
  }
  const auto base = base_for(options.method);
  Tlfg g(S.size(), T.size());
  Factorizer f(g);
  std::vector<OrientedAtom> seen;
  for (const auto& c : dnf.disjuncts) {
    if (c.empty()) {
      f.connect_all(all_tids(S.size()), all_tids(T.size()));
      continue;
    }
    ConjunctionPlan plan(S, T, c);
    plan.build(f, S.size(), T.size(), base);
    for (const auto& a : plan.atoms_for_stats()) seen.push_back(a);
  }
  g.duplication_bound = dnf.disjuncts.size();
  g.distinct_values = distinct_over(S, T, seen);
  g.finalize();
  return g;
}

std::vector<BandGroup> band_groups(const Relation& S, const Relation& T,
                                   const AtomicPredicate& band) {
  if (band.kind != PredicateKind::kBand) {
    throw InvalidArgument("not a band predicate: " + band.to_string());
  }
  const auto a = oriented_checked(S, T, band);
  auto Sa = all_tids(S.size());
  auto Ta = all_tids(T.size());
  auto by = [](const std::vector<double>& key) {
    return [&key](Tid x, Tid y) {
      return key[x] != key[y] ? key[x] < key[y] : x < y;
    };
  };
  std::sort(Sa.begin(), Sa.end(), by(a.source_values));
  std::sort(Ta.begin(), Ta.end(), by(a.target_values));
  return detail::make_band_groups(Sa, Ta, a.source_values, a.target_values,
                                  a.epsilon);
}

}  // namespace thetarank
