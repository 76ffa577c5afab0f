#include <doctest.h>

#include <cmath>
#include <set>

#include "../support/fixtures.hpp"
#include "thetarank/error.hpp"
#include "thetarank/tlfg.hpp"

using namespace thetarank;
using fixtures::pred;
using fixtures::relation;

namespace {

// Checks path-iff-predicate against a nested loop and returns the maximum
// per-pair path count.
std::uint64_t check_paths(const Tlfg& g, const Relation& S, const Relation& T,
                          const PredicateDNF& dnf) {
  const auto counts = fixtures::path_counts(g);
  std::uint64_t worst = 0;
  for (Tid s = 0; s < S.size(); ++s) {
    for (Tid t = 0; t < T.size(); ++t) {
      const bool joins = eval_dnf(dnf, S, S.tuple(s), T, T.tuple(t));
      REQUIRE_MESSAGE((counts[s][t] > 0) == joins,
                      "pair (" << s << "," << t << ") " << dnf.to_string());
      worst = std::max(worst, counts[s][t]);
    }
  }
  return worst;
}

void check_layers(const Tlfg& g) {
  for (const auto& [t, h] : g.edges()) CHECK(g.layer(t) < g.layer(h));
  for (std::size_t s = 0; s < g.source_count(); ++s) {
    CHECK(g.layer(g.source(static_cast<Tid>(s))) == 0);
  }
}

// Every intermediate node lies on some source-to-target path.
void check_no_dead_ends(const Tlfg& g) {
  std::vector<int> in(g.node_count(), 0), out(g.node_count(), 0);
  for (const auto& [t, h] : g.edges()) {
    ++out[t];
    ++in[h];
  }
  for (std::size_t v = g.source_count() + g.target_count(); v < g.node_count();
       ++v) {
    CHECK(in[v] > 0);
    CHECK(out[v] > 0);
  }
}

struct Instance {
  Relation S;
  Relation T;
};

Instance random_instance(std::uint64_t seed, std::size_t n, int domain) {
  std::mt19937_64 rng(seed);
  return {fixtures::random_relation(rng, "S", {"A", "B"}, n, domain),
          fixtures::random_relation(rng, "T", {"C", "D"}, n, domain)};
}

std::size_t ceil_log2(std::size_t x) {
  std::size_t r = 0;
  while ((std::size_t{1} << r) < x) ++r;
  return r;
}

}  // namespace

TEST_CASE("direct builder") {
  auto S = relation("S", {"A"}, {{1}, {2}});
  auto T = relation("T", {"B"}, {{5}, {6}, {7}});
  SUBCASE("all pairs join") {
    auto g = build_direct(S, T, PredicateDNF::atom(pred(PredicateKind::kLt, "S.A", "T.B")));
    CHECK(g.edge_count() == 6);
    CHECK(g.depth() == 1);
  }
  SUBCASE("no pairs join") {
    auto g = build_direct(S, T, PredicateDNF::atom(pred(PredicateKind::kGt, "S.A", "T.B")));
    CHECK(g.edge_count() == 0);
    CHECK(g.depth() == 0);
    CHECK(stats(g).size == 5);
    CHECK(stats(g).duplication == 1);
  }
  SUBCASE("edge guard") {
    CHECK_THROWS_AS(build_direct(S, T, PredicateDNF::atom(pred(PredicateKind::kLt, "S.A", "T.B")), 5),
                    GuardExceeded);
  }
  SUBCASE("random instance matches nested loop") {
    auto [R1, R2] = random_instance(7, 32, 20);
    auto dnf = PredicateDNF::atom(pred(PredicateKind::kLe, "S.A", "T.C"));
    auto g = build_direct(R1, R2, dnf);
    CHECK(check_paths(g, R1, R2, dnf) == 1);
  }
}

TEST_CASE("equality grouping") {
  SUBCASE("one shared value") {
    auto S = relation("S", {"A"}, {{3}, {3}, {3}});
    auto T = relation("T", {"B"}, {{3}, {3}});
    auto g = build_equality(S, T, {pred(PredicateKind::kEq, "S.A", "T.B")});
    CHECK(g.intermediate_count() == 1);
    CHECK(g.edge_count() == 5);
    CHECK(g.depth() == 2);
  }
  SUBCASE("disjoint values") {
    auto S = relation("S", {"A"}, {{1}, {2}});
    auto T = relation("T", {"B"}, {{3}, {4}});
    auto g = build_equality(S, T, {pred(PredicateKind::kEq, "S.A", "T.B")});
    CHECK(g.edge_count() == 0);
    CHECK(g.intermediate_count() == 0);
  }
  SUBCASE("random instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto [S, T] = random_instance(seed, 32, 6);
      Conjunction c{pred(PredicateKind::kEq, "S.A", "T.C"),
                    pred(PredicateKind::kEq, "T.D", "S.B")};
      auto g = build_equality(S, T, c);
      CHECK(check_paths(g, S, T, PredicateDNF::conjunction(c)) == 1);
      if (g.edge_count() > 0) CHECK(g.depth() == 2);
      CHECK(g.size() <= 2 * 32 + 2 * 32 + g.distinct_values);
    }
  }
  SUBCASE("rejects non-equalities") {
    auto S = relation("S", {"A"}, {{1}});
    auto T = relation("T", {"B"}, {{1}});
    CHECK_THROWS_AS(build_equality(S, T, {pred(PredicateKind::kLt, "S.A", "T.B")}),
                    InvalidArgument);
    CHECK_THROWS_AS(build_equality(S, T, {}), InvalidArgument);
  }
}

TEST_CASE("binary partitioning follows the distinct-value pivots") {
  std::vector<std::vector<double>> rows{{1}, {2}, {3}, {4}, {5}, {6}};
  auto S = relation("S", {"A"}, rows);
  auto T = relation("T", {"B"}, rows);
  auto g = build_binary_partition(S, T, pred(PredicateKind::kLt, "S.A", "T.B"));
  const auto first = static_cast<Tlfg::NodeId>(S.size() + T.size());
  std::set<Tid> in, out;
  for (const auto& [t, h] : g.edges()) {
    if (h == first) in.insert(t);
    if (t == first) out.insert(static_cast<Tid>(h - S.size()));
  }
  // Tids are value - 1.
  CHECK(in == std::set<Tid>{0, 1, 2});
  CHECK(out == std::set<Tid>{3, 4, 5});
  in.clear();
  out.clear();
  for (const auto& [t, h] : g.edges()) {
    if (h == first + 1) in.insert(t);
    if (t == first + 1) out.insert(static_cast<Tid>(h - S.size()));
  }
  CHECK(in == std::set<Tid>{0});
  CHECK(out == std::set<Tid>{1, 2});
  CHECK(g.depth() == 2);
}

TEST_CASE("binary partitioning edge cases") {
  auto S = relation("S", {"A"}, {{5}});
  auto T = relation("T", {"B"}, {{3}});
  CHECK(build_binary_partition(S, T, pred(PredicateKind::kLt, "S.A", "T.B")).edge_count() == 0);
  auto U = relation("U", {"B"}, {{5}});
  CHECK(build_binary_partition(S, U, pred(PredicateKind::kLt, "S.A", "U.B")).edge_count() == 0);
  CHECK(build_binary_partition(S, U, pred(PredicateKind::kLe, "S.A", "U.B")).edge_count() == 2);
  CHECK_THROWS_AS(build_binary_partition(S, U, pred(PredicateKind::kNeq, "S.A", "U.B")),
                  InvalidArgument);
}

TEST_CASE("multiway partitioning cross edges") {
  std::vector<std::vector<double>> rows;
  for (int v = 1; v <= 9; ++v) rows.push_back({double(v)});
  auto S = relation("S", {"A"}, rows);
  auto T = relation("T", {"B"}, rows);
  auto g = build_multiway_partition(S, T, pred(PredicateKind::kLt, "S.A", "T.B"));
  // Top level creates x1, x2, y2, y3 in that order.
  const auto base = static_cast<Tlfg::NodeId>(18);
  const auto x1 = base, x2 = base + 1, y2 = base + 2, y3 = base + 3;
  std::set<std::pair<Tlfg::NodeId, Tlfg::NodeId>> cross;
  for (const auto& [t, h] : g.edges()) {
    if (t >= base && t <= y3 && h >= base && h <= y3) cross.emplace(t, h);
  }
  CHECK(cross == std::set<std::pair<Tlfg::NodeId, Tlfg::NodeId>>{
                     {x1, y2}, {x1, y3}, {x2, y3}});
  CHECK(g.depth() == 3);
  CHECK(check_paths(g, S, T, PredicateDNF::atom(pred(PredicateKind::kLt, "S.A", "T.B"))) == 1);

  auto one = relation("U", {"B"}, {{4}});
  auto single = relation("V", {"A"}, {{4}});
  CHECK(build_multiway_partition(single, one, pred(PredicateKind::kLt, "V.A", "U.B")).edge_count() == 0);
  auto le = build_multiway_partition(single, one, pred(PredicateKind::kLe, "V.A", "U.B"));
  CHECK(le.depth() == 3);
}

TEST_CASE("shared ranges chain") {
  auto S = relation("S", {"A"}, {{1}});
  auto T = relation("T", {"B"}, {{2}, {3}});
  auto g = build_shared_ranges(S, T, pred(PredicateKind::kLt, "S.A", "T.B"));
  CHECK(g.intermediate_count() == 2);
  CHECK(fixtures::path_counts(g)[0] == std::vector<std::uint64_t>{1, 1});
  CHECK(g.depth() == 3);

  auto high = relation("H", {"A"}, {{7}, {9}});
  auto none = build_shared_ranges(high, T, pred(PredicateKind::kLt, "H.A", "T.B"));
  CHECK(none.edge_count() == 0);
}

TEST_CASE("non-equality") {
  auto S = relation("S", {"A"}, {{5}});
  auto T = relation("T", {"B"}, {{5}});
  CHECK(build_nonequality(S, T, pred(PredicateKind::kNeq, "S.A", "T.B")).edge_count() == 0);
  auto S1 = relation("S", {"A"}, {{1}});
  auto T2 = relation("T", {"B"}, {{2}});
  auto g = build_nonequality(S1, T2, pred(PredicateKind::kNeq, "S.A", "T.B"));
  CHECK(fixtures::path_counts(g)[0][0] == 1);
}

TEST_CASE("band groups") {
  auto S = relation("S", {"A"}, {{11}});
  auto T = relation("T", {"B"}, {{0}, {2}, {5}, {8}, {13}});
  auto groups = band_groups(S, T, pred(PredicateKind::kBand, "S.A", "T.B", 4.0));
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].start == 0);
  CHECK(groups[0].end == 2);
  CHECK(groups[1].start == 5);
  CHECK(groups[1].end == 8);
  CHECK(groups[1].source_tids == std::vector<Tid>{0});
  CHECK(groups[0].source_tids.empty());
  for (const auto& grp : groups) CHECK(grp.end - grp.start <= grp.epsilon);

  CHECK(eval_atomic(pred(PredicateKind::kBand, "S.A", "T.B", 4.0), S, S.tuple(0), T,
                    T.tuple(3)));
  CHECK_THROWS_AS(build_band(S, T, pred(PredicateKind::kBand, "S.A", "T.B", -1.0)),
                  SchemaError);
}

TEST_CASE("huge band equals direct") {
  auto [S, T] = random_instance(3, 20, 50);
  auto p = pred(PredicateKind::kBand, "S.A", "T.C", 1000.0);
  auto g = build_band(S, T, p);
  auto counts = fixtures::path_counts(g);
  for (const auto& row : counts) {
    for (auto c : row) CHECK(c == 1);
  }
}

TEST_CASE("single-atom builders on random instances") {
  struct Case {
    const char* name;
    PredicateKind kind;
    std::optional<double> eps;
  };
  const Case cases[] = {{"lt", PredicateKind::kLt, {}},
                        {"gt", PredicateKind::kGt, {}},
                        {"le", PredicateKind::kLe, {}},
                        {"ge", PredicateKind::kGe, {}}};
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t n = 16 + seed * 2;
    auto [S, T] = random_instance(seed, n, seed % 2 ? 10 : 1000);
    for (const auto& c : cases) {
      CAPTURE(c.name);
      CAPTURE(seed);
      auto p = pred(c.kind, "S.A", "T.C");
      auto dnf = PredicateDNF::atom(p);
      auto b = build_binary_partition(S, T, p);
      CHECK(check_paths(b, S, T, dnf) == 1);
      check_layers(b);
      check_no_dead_ends(b);
      if (b.edge_count()) CHECK(b.depth() == 2);
      CHECK(b.size() <= 3 * n * (ceil_log2(b.distinct_values) + 2));
      CHECK(b.adjacent_layers());

      auto m = build_multiway_partition(S, T, p);
      CHECK(check_paths(m, S, T, dnf) == 1);
      check_layers(m);
      check_no_dead_ends(m);
      if (m.edge_count()) CHECK(m.depth() == 3);
      CHECK(m.adjacent_layers());

      auto sh = build_shared_ranges(S, T, p);
      CHECK(check_paths(sh, S, T, dnf) == 1);
      check_layers(sh);
      check_no_dead_ends(sh);
      std::set<double> tvals;
      for (const auto& t : T.tuples()) tvals.insert(t.values[0]);
      CHECK(sh.depth() <= tvals.size() + 1);
      CHECK(sh.size() <= 2 * 2 * n + 2 * tvals.size());
      CHECK(sh.edge_count() <= 2 * n + tvals.size());
    }
    auto neq = pred(PredicateKind::kNeq, "S.A", "T.C");
    auto ng = build_nonequality(S, T, neq);
    CHECK(check_paths(ng, S, T, PredicateDNF::atom(neq)) == 1);
    check_no_dead_ends(ng);
    if (ng.edge_count()) CHECK(ng.depth() == 3);

    std::uniform_real_distribution<double> eps_dist(0.5, seed % 2 ? 8.0 : 600.0);
    std::mt19937_64 rng(seed);
    // Half-integer epsilons keep integer data off the band boundary.
    const double eps = std::floor(eps_dist(rng)) + 0.5;
    auto band = pred(PredicateKind::kBand, "S.A", "T.C", eps);
    auto bg = build_band(S, T, band);
    CHECK(check_paths(bg, S, T, PredicateDNF::atom(band)) == 1);
    check_no_dead_ends(bg);
    if (bg.edge_count()) CHECK(bg.depth() == 3);
    // Equals the two-inequality conjunction's pair set.
    auto conj = build_conjunction(
        S, T,
        {AtomicPredicate::make(PredicateKind::kLt, {"S", "A"}, {"T", "C", 1.0, eps}),
         AtomicPredicate::make(PredicateKind::kGt, {"S", "A"}, {"T", "C", 1.0, -eps})});
    const auto pc = fixtures::path_counts(conj);
    const auto pb = fixtures::path_counts(bg);
    for (Tid s = 0; s < S.size(); ++s) {
      for (Tid t = 0; t < T.size(); ++t) CHECK((pc[s][t] > 0) == (pb[s][t] > 0));
    }
  }
}

TEST_CASE("conjunctions") {
  SUBCASE("single atom equals binary partitioning") {
    auto [S, T] = random_instance(11, 40, 30);
    auto p = pred(PredicateKind::kLt, "S.A", "T.C");
    CHECK(build_conjunction(S, T, {p}).dump() == build_binary_partition(S, T, p).dump());
  }
  SUBCASE("random two inequalities plus an equality") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto [S, T] = random_instance(100 + seed, 48, 12);
      Conjunction c{pred(PredicateKind::kLt, "S.A", "T.C"),
                    pred(PredicateKind::kGt, "S.B", "T.D")};
      auto g2 = build_conjunction(S, T, c);
      CHECK(check_paths(g2, S, T, PredicateDNF::conjunction(c)) == 1);
      if (g2.edge_count()) CHECK(g2.depth() == 2);
      check_no_dead_ends(g2);

      Conjunction ce{pred(PredicateKind::kLe, "S.A", "T.C"),
                     pred(PredicateKind::kEq, "S.B", "T.D"),
                     pred(PredicateKind::kGe, "S.B", "T.C")};
      auto g3 = build_conjunction(S, T, ce, InequalityBase::kMultiway);
      CHECK(check_paths(g3, S, T, PredicateDNF::conjunction(ce)) == 1);
      if (g3.edge_count()) CHECK(g3.depth() == 3);
    }
  }
  SUBCASE("non-equality and band inside a conjunction") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      auto [S, T] = random_instance(200 + seed, 40, 15);
      Conjunction c{pred(PredicateKind::kNeq, "S.A", "T.C"),
                    pred(PredicateKind::kBand, "S.B", "T.D", 3.5),
                    pred(PredicateKind::kNeq, "T.D", "S.A")};
      auto g = build_conjunction(S, T, c);
      CHECK(check_paths(g, S, T, PredicateDNF::conjunction(c)) == 1);
    }
  }
  SUBCASE("empty conjunction rejected") {
    auto [S, T] = random_instance(1, 4, 4);
    CHECK_THROWS_AS(build_conjunction(S, T, {}), InvalidArgument);
  }
}

TEST_CASE("DNF union") {
  SUBCASE("both disjuncts satisfied gives two paths") {
    auto S = relation("S", {"A"}, {{1}});
    auto T = relation("T", {"B", "C"}, {{2, 3}});
    PredicateDNF dnf({{pred(PredicateKind::kLt, "S.A", "T.B")},
                      {pred(PredicateKind::kLt, "S.A", "T.C")}});
    auto g = build_dnf(S, T, dnf);
    CHECK(fixtures::path_counts(g)[0][0] == 2);
    CHECK(stats(g).duplication == 2);
    CHECK(g.duplication_bound == 2);
  }
  SUBCASE("one disjunct equals the conjunction builder") {
    auto [S, T] = random_instance(5, 30, 20);
    Conjunction c{pred(PredicateKind::kLt, "S.A", "T.C"),
                  pred(PredicateKind::kLt, "S.B", "T.D")};
    BuildOptions opt{Method::kBinary};
    CHECK(build_dnf(S, T, PredicateDNF::conjunction(c), opt).dump() ==
          build_conjunction(S, T, c).dump());
  }
  SUBCASE("random 2x2 DNF under every method") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto [S, T] = random_instance(300 + seed, 48, 16);
      PredicateDNF dnf({{pred(PredicateKind::kLt, "S.A", "T.C"),
                         pred(PredicateKind::kGe, "S.B", "T.D")},
                        {pred(PredicateKind::kNeq, "S.A", "T.D"),
                         pred(PredicateKind::kEq, "S.B", "T.C")}});
      for (auto m : {Method::kAuto, Method::kBinary, Method::kDirect}) {
        auto g = build_dnf(S, T, dnf, {m});
        CHECK(check_paths(g, S, T, dnf) <= 2);
      }
    }
  }
  SUBCASE("method restrictions") {
    auto [S, T] = random_instance(9, 8, 8);
    PredicateDNF two = PredicateDNF::conjunction(
        {pred(PredicateKind::kLt, "S.A", "T.C"), pred(PredicateKind::kLt, "S.B", "T.D")});
    CHECK_THROWS_AS(build_dnf(S, T, two, {Method::kMultiway}), UnsupportedError);
    CHECK_THROWS_AS(build_dnf(S, T, two, {Method::kShared}), UnsupportedError);
    PredicateDNF with_eq = PredicateDNF::conjunction(
        {pred(PredicateKind::kLt, "S.A", "T.C"), pred(PredicateKind::kEq, "S.B", "T.D")});
    auto g = build_dnf(S, T, with_eq, {Method::kShared});
    CHECK(check_paths(g, S, T, with_eq) == 1);
  }
  SUBCASE("always true connects everything") {
    auto [S, T] = random_instance(2, 5, 5);
    auto g = build_dnf(S, T, PredicateDNF::always_true());
    CHECK(g.edge_count() == 10);
    CHECK(g.depth() == 2);
  }
  SUBCASE("predicate on another relation") {
    auto [S, T] = random_instance(2, 5, 5);
    CHECK_THROWS_AS(build_dnf(S, T, PredicateDNF::atom(pred(PredicateKind::kLt, "S.A", "X.C"))),
                    SchemaError);
  }
}

TEST_CASE("stats and dump") {
  auto S = relation("S", {"A"}, {{1}, {2}});
  auto T = relation("T", {"B"}, {{2}});
  auto g = build_binary_partition(S, T, pred(PredicateKind::kLt, "S.A", "T.B"));
  CHECK(g.dump() ==
        "node 0 source 0\n"
        "node 1 source 0\n"
        "node 2 target 2\n"
        "node 3 intermediate 1\n"
        "edge 0 3\n"
        "edge 3 2\n");
  auto st = stats(g);
  CHECK(st.size == 6);
  CHECK(st.depth == 2);
  CHECK(st.duplication == 1);
  CHECK(st.duplication_exact);
  CHECK(st.distinct_values == 2);
  CHECK_FALSE(stats(g, 1).duplication_exact);
}

TEST_CASE("method names") {
  CHECK(parse_method("Multiway") == Method::kMultiway);
  CHECK(parse_method("auto") == Method::kAuto);
  CHECK_FALSE(parse_method("quad").has_value());
  CHECK(std::string(to_string(Method::kShared)) == "shared");
}
