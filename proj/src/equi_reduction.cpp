#include "thetarank/equi_reduction.hpp"

#include <filesystem>
#include <set>

#include "thetarank/error.hpp"
#include "thetarank/io.hpp"

namespace thetarank {

namespace {

std::vector<std::string> prefixed(const std::string& prefix,
                                  const std::vector<std::string>& attrs) {
  std::vector<std::string> out;
  for (const auto& a : attrs) out.push_back(prefix + a);
  return out;
}

}  // namespace

AuxRelationChain materialize_chain(const Relation& S, const Relation& T,
                                   const Tlfg& g, const std::string& prefix) {
  if (g.source_count() != S.size() || g.target_count() != T.size()) {
    throw InvalidArgument("TLFG does not match the relations");
  }
  if (!g.adjacent_layers()) {
    throw UnsupportedError(
        "TLFG has edges that skip layers; it has no equi-join reduction");
  }
  const std::size_t d = g.target_layer();
  const auto first_inter = static_cast<Tlfg::NodeId>(g.source_count() + g.target_count());

  AuxRelationChain chain;
  for (std::size_t i = 1; i <= d; ++i) {
    auto cols = i == 1 ? prefixed("s_", S.attributes())
                       : std::vector<std::string>{"v" + std::to_string(i - 1)};
    const auto heads = i == d ? prefixed("t_", T.attributes())
                              : std::vector<std::string>{"v" + std::to_string(i)};
    cols.insert(cols.end(), heads.begin(), heads.end());
    chain.relations.emplace_back(prefix + std::to_string(i), std::move(cols));
  }

  auto key = [&](Tlfg::NodeId v, std::vector<double>& row) {
    switch (g.kind(v)) {
      case TlfgNodeKind::kSource: {
        const auto& vals = S.tuple(v).values;
        row.insert(row.end(), vals.begin(), vals.end());
        break;
      }
      case TlfgNodeKind::kTarget: {
        const auto& vals = T.tuple(static_cast<Tid>(v - g.source_count())).values;
        row.insert(row.end(), vals.begin(), vals.end());
        break;
      }
      case TlfgNodeKind::kIntermediate:
        row.push_back(static_cast<double>(v - first_inter));
        break;
    }
  };

  std::vector<std::set<std::vector<double>>> rows(d);
  for (const auto& [u, v] : g.edges()) {
    std::vector<double> row;
    key(u, row);
    key(v, row);
    rows[g.layer(v) - 1].insert(std::move(row));
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (const auto& row : rows[i]) chain.relations[i].add(row, 0.0);
  }
  return chain;
}

QuadEquiPlan quad_equi_plan(const JoinQuery& q, const ThetaJoinTree& tree,
                            std::size_t edge_limit) {
  const std::size_t l = q.atom_count();
  if (tree.atom_count() != l) {
    throw InvalidArgument("join tree does not match the query's atoms");
  }
  auto atoms = q.atoms();
  JoinTree spliced{l + tree.edges.size(), {}};
  // Per new atom: the EQ conditions on the edge from its parent.
  std::vector<PredicateDNF> into(l + tree.edges.size());

  // a.<a_prefix><attr> = b.<b_prefix><attr> for each attribute of `base`.
  auto equalities = [](const Relation& base, const Relation& a,
                       const std::string& a_prefix, const Relation& b,
                       const std::string& b_prefix) {
    Conjunction c;
    for (const auto& attr : base.attributes()) {
      c.push_back(AtomicPredicate::make(PredicateKind::kEq,
                                        {a.name(), a_prefix + attr},
                                        {b.name(), b_prefix + attr}));
    }
    return c.empty() ? PredicateDNF::always_true() : PredicateDNF::conjunction(c);
  };

  for (std::size_t k = 0; k < tree.edges.size(); ++k) {
    const auto& edge = tree.edges[k];
    const auto& P = q.atom(edge.parent);
    const auto& C = q.atom(edge.child);
    const Tlfg direct = build_direct(P, C, edge.condition, edge_limit);

    auto cols = prefixed("p_", P.attributes());
    const auto c_cols = prefixed("c_", C.attributes());
    cols.insert(cols.end(), c_cols.begin(), c_cols.end());
    Relation E("E_" + P.name() + "_" + C.name(), cols);
    std::set<std::vector<double>> rows;
    for (const auto& [u, v] : direct.edges()) {
      auto row = P.tuple(u).values;
      const auto& cv = C.tuple(static_cast<Tid>(v - direct.source_count())).values;
      row.insert(row.end(), cv.begin(), cv.end());
      rows.insert(std::move(row));
    }
    for (const auto& row : rows) E.add(row, 0.0);

    const std::size_t e = l + k;
    into[e] = equalities(P, P, "", E, "p_");
    into[edge.child] = equalities(C, E, "c_", C, "");
    atoms.push_back(std::make_shared<const Relation>(std::move(E)));
    const auto link = [&](std::size_t a, std::size_t b) {
      spliced.edges.emplace_back(std::min(a, b), std::max(a, b));
    };
    link(edge.parent, e);
    link(e, edge.child);
  }

  QuadEquiPlan plan;
  plan.original_atoms = l;
  plan.tree = root_tree(spliced);
  if (plan.tree.root != tree.root) {
    throw Error(ErrorCode::kInternal, "join tree is not rooted at atom 0");
  }
  for (auto& edge : plan.tree.edges) edge.condition = into[edge.child];
  plan.query = JoinQuery(std::move(atoms), {}, q.direction());
  return plan;
}

std::optional<Answer> ProjectedStream::next() {
  auto a = inner_->next();
  if (a) a->choice.resize(atoms_);
  return a;
}

void export_chain(const AuxRelationChain& chain, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  for (const auto& r : chain.relations) {
    write_csv(r, (std::filesystem::path(dir) / (r.name() + ".csv")).string(), "");
  }
}

}  // namespace thetarank
