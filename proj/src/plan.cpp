#include "thetarank/plan.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "thetarank/error.hpp"

namespace thetarank {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

bool kept(const std::vector<bool>& keep, std::size_t i) {
  return keep.empty() || keep[i];
}

std::size_t shared_count(const EqualitySkeleton& s, std::size_t a,
                         std::size_t b) {
  std::vector<std::size_t> common;
  std::set_intersection(s.shared[a].begin(), s.shared[a].end(),
                        s.shared[b].begin(), s.shared[b].end(),
                        std::back_inserter(common));
  return common.size();
}

struct ColumnUse {
  std::size_t atom;
  std::size_t variable;
};

// The resolved columns a predicate reads.
std::vector<ColumnUse> column_uses(const JoinQuery& q,
                                   const EqualitySkeleton& s,
                                   const PredicateDNF& dnf) {
  std::vector<ColumnUse> uses;
  for (const auto& c : dnf.disjuncts) {
    for (const auto& a : c) {
      for (const auto* ref : {&a.left, &a.right}) {
        const auto col = q.resolve(*ref);
        uses.push_back({col.atom, s.variable[col.atom][col.column]});
      }
    }
  }
  return uses;
}

bool covers(const EqualitySkeleton& s, std::size_t x,
            const ColumnUse& use) {
  return use.atom == x || s.contains(x, use.variable);
}

// Candidate tree edges able to host a predicate: the predicate's own atom
// pair first, then other covering pairs in lexicographic order.
std::vector<std::pair<std::size_t, std::size_t>> candidate_edges(
    const JoinQuery& q, const EqualitySkeleton& s, const PredicateDNF& dnf) {
  const auto own = q.predicate_atoms(dnf);
  const auto uses = column_uses(q, s, dnf);
  std::vector<std::pair<std::size_t, std::size_t>> out{own};
  const auto n = q.atom_count();
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      if (std::make_pair(x, y) == own) continue;
      const bool ok = std::all_of(uses.begin(), uses.end(), [&](const auto& u) {
        return covers(s, x, u) || covers(s, y, u);
      });
      if (ok) out.emplace_back(x, y);
    }
  }
  return out;
}

// Completes the forced edges to a maximum-weight spanning tree of the
// skeleton's intersection graph.
JoinTree complete_tree(const EqualitySkeleton& s, std::size_t n,
                       const std::vector<std::pair<std::size_t, std::size_t>>&
                           forced) {
  JoinTree tree{n, {}};
  DisjointSets ds(n);
  for (const auto& e : forced) {
    if (ds.unite(e.first, e.second)) tree.edges.push_back(e);
  }
  struct Weighted {
    std::size_t weight, a, b;
  };
  std::vector<Weighted> all;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      all.push_back({shared_count(s, a, b), a, b});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Weighted& x, const Weighted& y) {
                     return x.weight > y.weight;
                   });
  for (const auto& e : all) {
    if (ds.unite(e.a, e.b)) tree.edges.emplace_back(e.a, e.b);
  }
  std::sort(tree.edges.begin(), tree.edges.end());
  return tree;
}

constexpr std::size_t kSearchBudget = 200000;

// Backtracking over one covering edge per predicate; the forced edges must
// form a forest and extend to a join tree.
std::optional<JoinTree> find_theta_tree(
    const EqualitySkeleton& s, std::size_t n,
    const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>&
        candidates,
    std::size_t& budget) {
  std::vector<std::pair<std::size_t, std::size_t>> forced;
  std::optional<JoinTree> found;
  std::function<void(std::size_t)> search = [&](std::size_t i) {
    if (found || budget == 0) return;
    --budget;
    if (i == candidates.size()) {
      auto tree = complete_tree(s, n, forced);
      if (has_connected_subtrees(s, tree)) found = std::move(tree);
      return;
    }
    for (const auto& e : candidates[i]) {
      const bool already =
          std::find(forced.begin(), forced.end(), e) != forced.end();
      if (!already) {
        DisjointSets ds(n);
        for (const auto& f : forced) ds.unite(f.first, f.second);
        if (ds.find(e.first) == ds.find(e.second)) continue;
        forced.push_back(e);
      }
      search(i + 1);
      if (!already) forced.pop_back();
      if (found) return;
    }
  };
  search(0);
  return found;
}

// Drop sets of size k over [0, m), ordered so that higher indices are
// dropped first.
std::vector<std::vector<std::size_t>> drop_sets(std::size_t m, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t hi) {
    if (cur.size() == k) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = hi; i-- > 0;) {
      if (i + 1 < k - cur.size()) break;
      cur.push_back(i);
      rec(i);
      cur.pop_back();
    }
  };
  rec(m);
  return out;
}

AttrRef rewrite_ref(const JoinQuery& q, const EqualitySkeleton& s,
                    const AttrRef& ref, std::size_t parent, std::size_t child) {
  const auto col = q.resolve(ref);
  if (col.atom == parent || col.atom == child) return ref;
  const auto var = s.variable[col.atom][col.column];
  for (const auto target : {parent, child}) {
    if (auto c = s.column_of(target, var)) {
      const auto& rel = q.atom(target);
      return AttrRef{rel.name(), rel.attributes()[*c], ref.scale, ref.offset};
    }
  }
  throw Error(ErrorCode::kInternal,
              "predicate reference " + ref.to_string() + " not covered");
}

PredicateDNF rewrite_dnf(const JoinQuery& q, const EqualitySkeleton& s,
                         const PredicateDNF& dnf, std::size_t parent,
                         std::size_t child) {
  PredicateDNF out = dnf;
  for (auto& c : out.disjuncts) {
    for (auto& a : c) {
      a.left = rewrite_ref(q, s, a.left, parent, child);
      a.right = rewrite_ref(q, s, a.right, parent, child);
    }
  }
  return out;
}

bool edge_covers(const JoinQuery& q, const EqualitySkeleton& s,
                 const PredicateDNF& dnf, std::size_t a, std::size_t b) {
  const auto uses = column_uses(q, s, dnf);
  return std::all_of(uses.begin(), uses.end(), [&](const ColumnUse& u) {
    return covers(s, a, u) || covers(s, b, u);
  });
}

ThetaJoinTree attach_conditions(const JoinQuery& q, const EqualitySkeleton& s,
                                const JoinTree& tree,
                                const std::vector<std::size_t>& thetas) {
  ThetaJoinTree out = root_tree(tree);
  for (const auto i : thetas) {
    const auto& dnf = q.predicates()[i];
    std::optional<std::size_t> best;
    for (std::size_t e = 0; e < out.edges.size(); ++e) {
      const auto& edge = out.edges[e];
      if (!edge_covers(q, s, dnf, edge.parent, edge.child)) continue;
      if (!best || out.depth[edge.child] < out.depth[out.edges[*best].child] ||
          (out.depth[edge.child] == out.depth[out.edges[*best].child] &&
           edge.child < out.edges[*best].child)) {
        best = e;
      }
    }
    if (!best) {
      throw Error(ErrorCode::kInternal,
                  "no covering edge for " + dnf.to_string());
    }
    auto& edge = out.edges[*best];
    edge.assigned.push_back(i);
    edge.condition = edge.condition.conjoined(
        rewrite_dnf(q, s, dnf, edge.parent, edge.child));
  }
  for (auto& edge : out.edges) {
    std::vector<std::size_t> common;
    std::set_intersection(s.shared[edge.parent].begin(),
                          s.shared[edge.parent].end(),
                          s.shared[edge.child].begin(),
                          s.shared[edge.child].end(),
                          std::back_inserter(common));
    for (const auto var : common) {
      const auto& p = q.atom(edge.parent);
      const auto& c = q.atom(edge.child);
      const auto pc = *s.column_of(edge.parent, var);
      const auto cc = *s.column_of(edge.child, var);
      edge.condition = edge.condition.conjoined(PredicateDNF::atom(
          AtomicPredicate{PredicateKind::kEq, {p.name(), p.attributes()[pc]},
                          {c.name(), c.attributes()[cc]}, std::nullopt}));
    }
  }
  return out;
}

}  // namespace

bool EqualitySkeleton::contains(std::size_t atom, std::size_t var) const {
  return std::binary_search(shared[atom].begin(), shared[atom].end(), var);
}

std::optional<std::size_t> EqualitySkeleton::column_of(std::size_t atom,
                                                       std::size_t var) const {
  for (std::size_t c = 0; c < variable[atom].size(); ++c) {
    if (variable[atom][c] == var) return c;
  }
  return std::nullopt;
}

EqualitySkeleton build_skeleton(const JoinQuery& q,
                                const std::vector<bool>& keep) {
  const auto n = q.atom_count();
  std::vector<std::size_t> offset(n + 1, 0);
  for (std::size_t a = 0; a < n; ++a) offset[a + 1] = offset[a] + q.atom(a).arity();
  DisjointSets ds(offset[n]);
  for (std::size_t i = 0; i < q.predicates().size(); ++i) {
    const auto& dnf = q.predicates()[i];
    if (!kept(keep, i) || !dnf.is_pure_equality()) continue;
    for (const auto& a : dnf.disjuncts.front()) {
      const auto l = q.resolve(a.left);
      const auto r = q.resolve(a.right);
      ds.unite(offset[l.atom] + l.column, offset[r.atom] + r.column);
    }
  }
  EqualitySkeleton s;
  s.variable.resize(n);
  s.shared.resize(n);
  std::map<std::size_t, std::set<std::size_t>> atoms_of;
  for (std::size_t a = 0; a < n; ++a) {
    s.variable[a].resize(q.atom(a).arity());
    for (std::size_t c = 0; c < q.atom(a).arity(); ++c) {
      const auto v = ds.find(offset[a] + c);
      s.variable[a][c] = v;
      atoms_of[v].insert(a);
    }
  }
  for (const auto& [v, atoms] : atoms_of) {
    if (atoms.size() < 2) continue;
    for (const auto a : atoms) s.shared[a].push_back(v);
  }
  for (auto& vars : s.shared) std::sort(vars.begin(), vars.end());
  return s;
}

std::optional<JoinTree> gyo_join_tree(const EqualitySkeleton& s) {
  const auto n = s.shared.size();
  JoinTree tree{n, {}};
  if (n == 0) return tree;
  std::vector<std::set<std::size_t>> vars(n);
  for (std::size_t a = 0; a < n; ++a) {
    vars[a] = {s.shared[a].begin(), s.shared[a].end()};
  }
  std::vector<bool> alive(n, true);
  std::size_t remaining = n;
  while (remaining > 1) {
    std::map<std::size_t, std::size_t> occurrences;
    for (std::size_t a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      for (const auto v : vars[a]) ++occurrences[v];
    }
    for (std::size_t a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      std::erase_if(vars[a], [&](std::size_t v) { return occurrences[v] == 1; });
    }
    std::optional<std::pair<std::size_t, std::size_t>> ear;
    for (std::size_t e = 0; e < n && !ear; ++e) {
      if (!alive[e]) continue;
      for (std::size_t f = 0; f < n; ++f) {
        if (f == e || !alive[f]) continue;
        if (std::includes(vars[f].begin(), vars[f].end(), vars[e].begin(),
                          vars[e].end())) {
          ear.emplace(e, f);
          break;
        }
      }
    }
    if (!ear) return std::nullopt;
    alive[ear->first] = false;
    --remaining;
    tree.edges.emplace_back(std::min(ear->first, ear->second),
                            std::max(ear->first, ear->second));
  }
  std::sort(tree.edges.begin(), tree.edges.end());
  return tree;
}

std::optional<JoinTree> gyo_join_tree(const JoinQuery& q,
                                      const std::vector<bool>& keep) {
  return gyo_join_tree(build_skeleton(q, keep));
}

bool has_connected_subtrees(const EqualitySkeleton& s, const JoinTree& tree) {
  const auto n = s.shared.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : tree.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::set<std::size_t> all_vars;
  for (const auto& vs : s.shared) all_vars.insert(vs.begin(), vs.end());
  for (const auto v : all_vars) {
    std::vector<std::size_t> holders;
    for (std::size_t a = 0; a < n; ++a) {
      if (s.contains(a, v)) holders.push_back(a);
    }
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{holders.front()};
    seen[holders.front()] = true;
    std::size_t reached = 0;
    while (!stack.empty()) {
      const auto a = stack.back();
      stack.pop_back();
      ++reached;
      for (const auto b : adj[a]) {
        if (!seen[b] && s.contains(b, v)) {
          seen[b] = true;
          stack.push_back(b);
        }
      }
    }
    if (reached != holders.size()) return false;
  }
  return true;
}

std::optional<std::size_t> ThetaJoinTree::edge_into(std::size_t atom) const {
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].child == atom) return e;
  }
  return std::nullopt;
}

const char* to_string(PlanOutcome outcome) noexcept {
  switch (outcome) {
    case PlanOutcome::kAcyclic: return "ACYCLIC";
    case PlanOutcome::kCyclic: return "CYCLIC";
    case PlanOutcome::kNoTree: return "NO_TREE";
  }
  return "?";
}

ThetaJoinTree root_tree(const JoinTree& tree) {
  const auto n = tree.atom_count;
  ThetaJoinTree out;
  out.parent.assign(n, std::nullopt);
  out.children.assign(n, {});
  out.depth.assign(n, 0);
  if (n == 0) return out;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : tree.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& v : adj) std::sort(v.begin(), v.end());
  std::vector<bool> seen(n, false);
  std::function<void(std::size_t)> visit = [&](std::size_t a) {
    seen[a] = true;
    out.preorder.push_back(a);
    for (const auto b : adj[a]) {
      if (seen[b]) continue;
      out.parent[b] = a;
      out.depth[b] = out.depth[a] + 1;
      out.children[a].push_back(b);
      out.edges.push_back(TreeEdge{a, b, PredicateDNF::always_true(), {}});
      visit(b);
    }
  };
  out.root = 0;
  visit(0);
  if (out.preorder.size() != n) {
    throw Error(ErrorCode::kInternal, "join tree is not connected");
  }
  return out;
}

PlanResult assign_predicates(const JoinQuery& q) {
  const auto n = q.atom_count();
  const auto m = q.predicates().size();
  std::size_t budget = kSearchBudget;
  for (std::size_t k = 0; k <= m; ++k) {
    for (const auto& dropped : drop_sets(m, k)) {
      if (budget == 0) return PlanResult{};
      std::vector<bool> keep(m, true);
      for (const auto i : dropped) keep[i] = false;
      const auto skeleton = build_skeleton(q, keep);
      if (!gyo_join_tree(skeleton)) continue;
      std::vector<std::size_t> thetas;
      std::vector<std::vector<std::pair<std::size_t, std::size_t>>> candidates;
      for (std::size_t i = 0; i < m; ++i) {
        if (!keep[i] || q.predicates()[i].is_pure_equality()) continue;
        thetas.push_back(i);
        candidates.push_back(candidate_edges(q, skeleton, q.predicates()[i]));
      }
      auto tree = find_theta_tree(skeleton, n, candidates, budget);
      if (!tree) continue;
      PlanResult result;
      result.outcome = k == 0 ? PlanOutcome::kAcyclic : PlanOutcome::kCyclic;
      result.tree = attach_conditions(q, skeleton, *tree, thetas);
      result.residual.assign(dropped.rbegin(), dropped.rend());
      for (const auto i : result.residual) {
        result.residual_predicates.push_back(q.predicates()[i]);
      }
      return result;
    }
  }
  return PlanResult{};
}

PlanResult plan_query(const JoinQuery& q) {
  q.validate();
  return assign_predicates(q);
}

std::string describe(const JoinQuery& q, const PlanResult& plan) {
  std::ostringstream out;
  out << "plan: " << to_string(plan.outcome) << "\n";
  if (plan.tree) {
    const auto& t = *plan.tree;
    out << "root: " << q.atom(t.root).name() << "\n";
    for (const auto& e : t.edges) {
      out << "edge " << q.atom(e.parent).name() << " -> "
          << q.atom(e.child).name() << ": " << e.condition.to_string();
      if (!e.assigned.empty()) {
        out << "  [predicates";
        for (const auto i : e.assigned) out << " " << i;
        out << "]";
      }
      out << "\n";
    }
  }
  if (!plan.residual.empty()) {
    out << "residual:";
    for (std::size_t i = 0; i < plan.residual.size(); ++i) {
      out << (i ? "; " : " ") << "[" << plan.residual[i] << "] "
          << plan.residual_predicates[i].to_string();
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace thetarank
