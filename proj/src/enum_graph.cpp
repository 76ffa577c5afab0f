#include "thetarank/enum_graph.hpp"

#include <algorithm>
#include <sstream>

#include "thetarank/error.hpp"

namespace thetarank {

std::size_t EnumerationGraph::size() const noexcept {
  return (node_count() - 1) + (edge_count() - (group_edges_[1] - group_edges_[0]));
}

std::span<const EnumerationGraph::NodeId> EnumerationGraph::heads(
    std::size_t group) const {
  return std::span<const NodeId>(heads_.data() + group_edges_.at(group),
                                 heads_.data() + group_edges_.at(group + 1));
}

std::size_t EnumerationGraph::relation_nodes(std::size_t atom) const {
  std::size_t n = 0;
  for (std::size_t v = 0; v < node_count(); ++v) {
    if (kind_[v] == EnumNodeKind::kRelation && atom_[v] == atom) ++n;
  }
  return n;
}

class GraphBuilder {
 public:
  explicit GraphBuilder(EnumerationGraph& g) : g_(g) {
    g_.node_groups_.assign(1, 0);
    g_.group_edges_.assign(1, 0);
  }

  EnumerationGraph::NodeId add_node(EnumNodeKind kind, std::size_t atom,
                                    Tid tid, double weight,
                                    std::uint32_t layer) {
    g_.kind_.push_back(kind);
    g_.atom_.push_back(atom);
    g_.tid_.push_back(tid);
    g_.weight_.push_back(weight);
    g_.layer_.push_back(layer);
    return static_cast<EnumerationGraph::NodeId>(g_.kind_.size() - 1);
  }

  // Groups must be added node by node, in id order.
  void add_group(std::vector<EnumerationGraph::NodeId> heads) {
    std::sort(heads.begin(), heads.end());
    g_.heads_.insert(g_.heads_.end(), heads.begin(), heads.end());
    g_.group_edges_.push_back(g_.heads_.size());
  }
  void close_node() { g_.node_groups_.push_back(g_.group_edges_.size() - 1); }

  void finish(std::size_t layers, ThetaJoinTree tree,
              std::vector<EdgeRegion> regions,
              std::vector<std::shared_ptr<const Relation>> atoms,
              Direction direction, std::size_t duplication) {
    g_.layer_count_ = layers;
    g_.tree_ = std::move(tree);
    g_.regions_ = std::move(regions);
    g_.atoms_ = std::move(atoms);
    g_.direction_ = direction;
    g_.duplication_ = duplication;
  }

 private:
  EnumerationGraph& g_;
};

namespace {

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    return std::numeric_limits<std::size_t>::max();
  }
  return a * b;
}

}  // namespace

EnumerationGraph assemble(const JoinQuery& q, const ThetaJoinTree& tree,
                          const AssembleOptions& options) {
  const std::size_t l = q.atom_count();
  if (tree.atom_count() != l || tree.preorder.size() != l) {
    throw InvalidArgument("join tree does not match the query's atoms");
  }
  const double sign = q.direction() == Direction::kMax ? -1.0 : 1.0;

  // TLFG per non-root atom, keyed by that (child) atom.
  std::vector<Tlfg> tlfg(l);
  std::vector<EdgeRegion> regions;
  for (std::size_t a : tree.preorder) {
    const auto e = tree.edge_into(a);
    if (!e) continue;
    const auto& edge = tree.edges[*e];
    tlfg[a] = build_dnf(q.atom(edge.parent), q.atom(edge.child), edge.condition,
                        {options.method, options.edge_limit});
    EdgeRegion r;
    r.parent = edge.parent;
    r.child = edge.child;
    r.stats = stats(tlfg[a], options.stats_budget);
    regions.push_back(r);
  }

  // Node ids: root, then per atom in preorder the intermediates of the TLFG
  // into it followed by its relation nodes.
  std::vector<std::size_t> rel_base(l, 0), inter_base(l, 0);
  // Local intermediate id -> position among that TLFG's intermediates in
  // topological order.
  std::vector<std::vector<std::uint32_t>> inter_pos(l);
  std::vector<std::uint32_t> rel_layer(l, 0), first_layer(l, 0);
  std::size_t next = 1;
  std::uint32_t L = 0;
  for (std::size_t a : tree.preorder) {
    if (a != tree.root) {
      const auto& g = tlfg[a];
      inter_base[a] = next;
      inter_pos[a].assign(g.node_count(), 0);
      std::uint32_t k = 0;
      for (auto v : g.topological_order()) {
        if (g.kind(v) == TlfgNodeKind::kIntermediate) inter_pos[a][v] = k++;
      }
      next += g.intermediate_count();
      first_layer[a] = L + 1;
      L += g.target_layer();
    }
    rel_layer[a] = L;
    rel_base[a] = next;
    next += q.atom(a).size();
  }
  if (next > std::numeric_limits<EnumerationGraph::NodeId>::max()) {
    throw GuardExceeded("enumeration graph too large");
  }

  EnumerationGraph out;
  GraphBuilder b(out);
  auto global = [&](std::size_t child, Tlfg::NodeId v) {
    const auto& g = tlfg[child];
    if (g.kind(v) == TlfgNodeKind::kTarget) {
      return static_cast<EnumerationGraph::NodeId>(rel_base[child] + v -
                                                   g.source_count());
    }
    return static_cast<EnumerationGraph::NodeId>(inter_base[child] +
                                                 inter_pos[child][v]);
  };
  auto mapped = [&](std::size_t child, Tlfg::NodeId v) {
    std::vector<EnumerationGraph::NodeId> heads;
    for (auto h : tlfg[child].successors(v)) heads.push_back(global(child, h));
    return heads;
  };

  b.add_node(EnumNodeKind::kRoot, EnumerationGraph::kNoAtom, 0, 0.0, 0);
  {
    std::vector<EnumerationGraph::NodeId> heads(q.atom(tree.root).size());
    for (std::size_t t = 0; t < heads.size(); ++t) {
      heads[t] = static_cast<EnumerationGraph::NodeId>(rel_base[tree.root] + t);
    }
    b.add_group(std::move(heads));
    b.close_node();
  }
  for (std::size_t a : tree.preorder) {
    if (a != tree.root) {
      const auto& g = tlfg[a];
      std::vector<Tlfg::NodeId> order(g.intermediate_count());
      for (auto v : g.topological_order()) {
        if (g.kind(v) == TlfgNodeKind::kIntermediate) order[inter_pos[a][v]] = v;
      }
      for (auto v : order) {
        b.add_node(EnumNodeKind::kIntermediate, a, 0, 0.0,
                   first_layer[a] - 1 + g.layer(v));
        b.add_group(mapped(a, v));
        b.close_node();
      }
    }
    const auto& rel = q.atom(a);
    for (Tid t = 0; t < rel.size(); ++t) {
      b.add_node(EnumNodeKind::kRelation, a, t, sign * rel.tuple(t).weight,
                 rel_layer[a]);
      for (std::size_t c : tree.children[a]) {
        b.add_group(mapped(c, tlfg[c].source(t)));
      }
      b.close_node();
    }
  }

  std::size_t duplication = 1;
  for (auto& r : regions) {
    r.first_layer = first_layer[r.child];
    duplication = saturating_mul(duplication, r.stats.duplication);
  }
  b.finish(static_cast<std::size_t>(L) + 1, tree, std::move(regions),
           q.atoms(), q.direction(), duplication);
  return options.prune ? prune_unreachable(out) : out;
}

EnumerationGraph prune_unreachable(const EnumerationGraph& g) {
  using NodeId = EnumerationGraph::NodeId;
  const std::size_t n = g.node_count();
  std::vector<bool> alive(n, false);
  for (std::size_t i = n; i-- > 0;) {
    const auto v = static_cast<NodeId>(i);
    bool ok = true;
    for (std::size_t grp = g.group_begin(v); ok && grp < g.group_end(v); ++grp) {
      const auto hs = g.heads(grp);
      ok = std::any_of(hs.begin(), hs.end(), [&](NodeId h) { return alive[h]; });
    }
    alive[v] = ok;
  }
  std::vector<bool> keep(n, false);
  keep[EnumerationGraph::kRootNode] = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<NodeId>(i);
    if (!keep[v] || !alive[v]) continue;
    for (std::size_t grp = g.group_begin(v); grp < g.group_end(v); ++grp) {
      for (NodeId h : g.heads(grp)) {
        if (alive[h]) keep[h] = true;
      }
    }
  }
  if (!alive[EnumerationGraph::kRootNode]) {
    std::fill(keep.begin() + 1, keep.end(), false);
  }

  std::vector<NodeId> remap(n, 0);
  NodeId next = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (keep[v]) remap[v] = next++;
  }
  EnumerationGraph out;
  GraphBuilder b(out);
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    const auto v = static_cast<NodeId>(i);
    b.add_node(g.kind(v), g.atom(v), g.tid(v), g.weight(v), g.layer(v));
    for (std::size_t grp = g.group_begin(v); grp < g.group_end(v); ++grp) {
      std::vector<NodeId> heads;
      for (NodeId h : g.heads(grp)) {
        if (keep[h]) heads.push_back(remap[h]);
      }
      b.add_group(std::move(heads));
    }
    b.close_node();
  }
  b.finish(g.layer_count(), g.tree(), g.regions(), g.atoms(), g.direction(),
           g.duplication_bound());
  return out;
}

std::string explain(const EnumerationGraph& g) {
  std::ostringstream out;
  for (const auto& r : g.regions()) {
    out << "tlfg " << g.atoms()[r.parent]->name() << " -> "
        << g.atoms()[r.child]->name() << ": size " << r.stats.size
        << ", depth " << r.stats.depth << ", duplication "
        << r.stats.duplication << (r.stats.duplication_exact ? "" : " (bound)")
        << ", distinct values " << r.stats.distinct_values << '\n';
  }
  std::size_t relation = 0, intermediate = 0;
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const auto k = g.kind(static_cast<EnumerationGraph::NodeId>(v));
    if (k == EnumNodeKind::kRelation) ++relation;
    if (k == EnumNodeKind::kIntermediate) ++intermediate;
  }
  out << "layers: " << g.layer_count() << '\n';
  out << "nodes: " << relation + intermediate << " (" << relation
      << " relation, " << intermediate << " intermediate)\n";
  out << "edges: " << g.edge_count() - g.heads(0).size() << '\n';
  return out.str();
}

}  // namespace thetarank
