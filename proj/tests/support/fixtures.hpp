#pragma once

// Helpers shared by the unit and acceptance tests: small relation builders,
// seeded random instances and an edge-list path counter that does not use
// the graph's own indexes.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "thetarank/anyk.hpp"
#include "thetarank/model.hpp"
#include "thetarank/tlfg.hpp"

namespace fixtures {

using thetarank::AtomicPredicate;
using thetarank::AttrRef;
using thetarank::PredicateKind;
using thetarank::Relation;
using thetarank::Tid;

inline Relation relation(const std::string& name,
                         std::vector<std::string> attrs,
                         const std::vector<std::vector<double>>& rows,
                         std::vector<double> weights = {}) {
  Relation r(name, std::move(attrs));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    r.add(rows[i], i < weights.size() ? weights[i] : 0.0);
  }
  return r;
}

// n tuples with integer values in [0, domain) and integer weights in
// [0, max_weight].
inline Relation random_relation(std::mt19937_64& rng, const std::string& name,
                                std::vector<std::string> attrs, std::size_t n,
                                int domain, int max_weight = 100) {
  std::uniform_int_distribution<int> value(0, domain - 1);
  std::uniform_int_distribution<int> weight(0, max_weight);
  Relation r(name, attrs);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v;
    for (std::size_t c = 0; c < attrs.size(); ++c) v.push_back(value(rng));
    r.add(std::move(v), weight(rng));
  }
  return r;
}

inline AtomicPredicate pred(PredicateKind k, const std::string& l,
                            const std::string& r,
                            std::optional<double> eps = std::nullopt) {
  auto split = [](const std::string& s) {
    const auto dot = s.find('.');
    return AttrRef{s.substr(0, dot), s.substr(dot + 1)};
  };
  return AtomicPredicate::make(k, split(l), split(r), eps);
}

// Number of source-to-target paths for every (source tid, target tid) pair,
// computed from the raw edge list by memoized DFS.
inline std::vector<std::vector<std::uint64_t>> path_counts(
    const thetarank::Tlfg& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (const auto& [t, h] : g.edges()) adj[t].push_back(h);
  const std::size_t ns = g.source_count(), nt = g.target_count();
  // to_target[v][t]: paths from v to target t.
  std::vector<std::vector<std::uint64_t>> memo(n);
  std::vector<bool> done(n, false);
  auto solve = [&](auto&& self, std::uint32_t v) -> const std::vector<std::uint64_t>& {
    if (done[v]) return memo[v];
    std::vector<std::uint64_t> acc(nt, 0);
    if (v >= ns && v < ns + nt) acc[v - ns] = 1;
    for (auto h : adj[v]) {
      const auto& sub = self(self, h);
      for (std::size_t t = 0; t < nt; ++t) acc[t] += sub[t];
    }
    memo[v] = std::move(acc);
    done[v] = true;
    return memo[v];
  };
  std::vector<std::vector<std::uint64_t>> out(ns);
  for (std::uint32_t s = 0; s < ns; ++s) out[s] = solve(solve, s);
  return out;
}

// All answers of q by nested loops, sorted by (ranking weight, choice).
inline std::vector<thetarank::Answer> brute_join(const thetarank::JoinQuery& q) {
  std::vector<thetarank::Answer> out;
  const std::size_t l = q.atom_count();
  for (std::size_t i = 0; i < l; ++i) {
    if (q.atom(i).size() == 0) return out;
  }
  std::vector<Tid> choice(l, 0);
  while (true) {
    bool ok = true;
    for (const auto& p : q.predicates()) {
      if (!q.holds(p, choice)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      double w = 0.0;
      for (std::size_t i = 0; i < l; ++i) w += q.atom(i).tuple(choice[i]).weight;
      out.push_back({choice, w});
    }
    std::size_t i = l;
    while (i > 0 && choice[i - 1] + 1 == q.atom(i - 1).size()) choice[--i] = 0;
    if (i == 0) break;
    ++choice[i - 1];
  }
  const double sign = q.direction() == thetarank::Direction::kMax ? -1.0 : 1.0;
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    if (a.weight != b.weight) return sign * a.weight < sign * b.weight;
    return a.choice < b.choice;
  });
  return out;
}

inline std::vector<thetarank::Answer> drain(thetarank::AnswerStream& s,
                                            std::size_t limit = SIZE_MAX) {
  std::vector<thetarank::Answer> out;
  while (out.size() < limit) {
    auto a = s.next();
    if (!a) break;
    out.push_back(std::move(*a));
  }
  return out;
}

// Groups answers into weight tiers of sorted choices, for comparing ranked
// streams whose tie order may differ.
inline std::vector<std::pair<double, std::vector<std::vector<Tid>>>> tiers(
    const std::vector<thetarank::Answer>& answers) {
  std::vector<std::pair<double, std::vector<std::vector<Tid>>>> out;
  for (const auto& a : answers) {
    if (out.empty() || out.back().first != a.weight) out.push_back({a.weight, {}});
    out.back().second.push_back(a.choice);
  }
  for (auto& t : out) std::sort(t.second.begin(), t.second.end());
  return out;
}

using ValuePair = std::pair<std::vector<double>, std::vector<double>>;

// Joining (s values, t values) pairs by nested loops.
inline std::set<ValuePair> theta_pairs(const Relation& S, const Relation& T,
                                       const thetarank::PredicateDNF& dnf) {
  std::set<ValuePair> out;
  for (const auto& s : S.tuples()) {
    for (const auto& t : T.tuples()) {
      if (thetarank::eval_dnf(dnf, S, s, T, t)) out.insert({s.values, t.values});
    }
  }
  return out;
}

// pi_X(S join E_1 join ... join E_d join T) by nested-loop natural joins on
// column names; S and T columns are renamed s_<attr> and t_<attr>.
inline std::set<ValuePair> equi_chain_pairs(const Relation& S, const Relation& T,
                                            const std::vector<Relation>& chain) {
  using Row = std::map<std::string, double>;
  auto rows_of = [](const Relation& r, const std::string& prefix) {
    std::vector<Row> out;
    for (const auto& t : r.tuples()) {
      Row row;
      for (std::size_t c = 0; c < r.arity(); ++c) row[prefix + r.attributes()[c]] = t.values[c];
      out.push_back(std::move(row));
    }
    return out;
  };
  auto join = [](const std::vector<Row>& left, const std::vector<Row>& right) {
    std::vector<Row> out;
    for (const auto& a : left) {
      for (const auto& b : right) {
        bool ok = true;
        for (const auto& [k, v] : b) {
          const auto it = a.find(k);
          if (it != a.end() && it->second != v) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        Row merged = a;
        merged.insert(b.begin(), b.end());
        out.push_back(std::move(merged));
      }
    }
    return out;
  };
  auto acc = rows_of(S, "s_");
  for (const auto& e : chain) acc = join(acc, rows_of(e, ""));
  acc = join(acc, rows_of(T, "t_"));
  std::set<ValuePair> out;
  for (const auto& row : acc) {
    ValuePair p;
    for (const auto& a : S.attributes()) p.first.push_back(row.at("s_" + a));
    for (const auto& a : T.attributes()) p.second.push_back(row.at("t_" + a));
    out.insert(std::move(p));
  }
  return out;
}

}  // namespace fixtures
