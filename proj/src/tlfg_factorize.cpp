#include <algorithm>
#include <cmath>

#include "thetarank/error.hpp"
#include "tlfg_internal.hpp"

namespace thetarank::detail {

namespace {

std::vector<double> column_values(const Relation& R, const AttrRef& ref) {
  const std::size_t c = R.column(ref.attribute);
  std::vector<double> out;
  out.reserve(R.size());
  for (const auto& t : R.tuples()) out.push_back(ref.apply(t.values[c]));
  return out;
}

void sort_by_key(std::vector<Tid>& tids, const std::vector<double>& key) {
  std::sort(tids.begin(), tids.end(), [&](Tid a, Tid b) {
    if (key[a] != key[b]) return key[a] < key[b];
    return a < b;
  });
}

std::vector<double> negated(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return -x; });
  return out;
}

}  // namespace

OrientedAtom orient(const Relation& S, const Relation& T,
                    const AtomicPredicate& p) {
  OrientedAtom out;
  out.epsilon = p.epsilon.value_or(0.0);
  if (p.left.relation == S.name() && p.right.relation == T.name()) {
    out.kind = p.kind;
    out.source_values = column_values(S, p.left);
    out.target_values = column_values(T, p.right);
  } else if (p.right.relation == S.name() && p.left.relation == T.name()) {
    out.kind = flipped(p.kind);
    out.source_values = column_values(S, p.right);
    out.target_values = column_values(T, p.left);
  } else {
    throw SchemaError("predicate " + p.to_string() + " does not relate '" +
                      S.name() + "' and '" + T.name() + "'");
  }
  return out;
}

KeyedAtom less_than(const std::vector<double>& s,
                    const std::vector<double>& t) {
  return KeyedAtom{KeyOp::kLess, s, t};
}

KeyedAtom greater_than(const std::vector<double>& s,
                       const std::vector<double>& t) {
  return KeyedAtom{KeyOp::kLess, negated(s), negated(t)};
}

KeyedAtom as_keyed(const OrientedAtom& a) {
  switch (a.kind) {
    case PredicateKind::kLt: return less_than(a.source_values, a.target_values);
    case PredicateKind::kGt:
      return greater_than(a.source_values, a.target_values);
    case PredicateKind::kLe:
      return KeyedAtom{KeyOp::kLessEq, a.source_values, a.target_values};
    case PredicateKind::kGe:
      return KeyedAtom{KeyOp::kLessEq, negated(a.source_values),
                       negated(a.target_values)};
    default:
      throw InvalidArgument(std::string("not an inequality: ") +
                            to_symbol(a.kind));
  }
}

BandAtoms band_atoms(const OrientedAtom& a) {
  BandAtoms out;
  out.upper.op = KeyOp::kLess;
  out.upper.source_key = a.source_values;
  out.upper.target_key.reserve(a.target_values.size());
  for (double b : a.target_values) out.upper.target_key.push_back(b + a.epsilon);
  out.lower.op = KeyOp::kLess;
  out.lower.source_key = negated(a.source_values);
  out.lower.target_key.reserve(a.target_values.size());
  for (double b : a.target_values) out.lower.target_key.push_back(a.epsilon - b);
  return out;
}

std::vector<Tid> all_tids(std::size_t n) {
  std::vector<Tid> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<Tid>(i);
  return out;
}

std::vector<double> merged_distinct(std::span<const Tid> S,
                                    std::span<const Tid> T,
                                    const std::vector<double>& s,
                                    const std::vector<double>& t) {
  std::vector<double> out;
  out.reserve(S.size() + T.size());
  std::size_t i = 0, j = 0;
  while (i < S.size() || j < T.size()) {
    double v;
    if (j == T.size() || (i < S.size() && s[S[i]] <= t[T[j]])) {
      v = s[S[i++]];
    } else {
      v = t[T[j++]];
    }
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  return out;
}

std::size_t count_distinct(std::span<const Tid> S, std::span<const Tid> T,
                           const std::vector<double>& s,
                           const std::vector<double>& t) {
  std::vector<double> v;
  v.reserve(S.size() + T.size());
  for (Tid x : S) v.push_back(s[x]);
  for (Tid x : T) v.push_back(t[x]);
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

void Factorizer::connect_all(const std::vector<Tid>& S,
                             const std::vector<Tid>& T) {
  if (S.empty() || T.empty()) return;
  const auto v = fresh();
  for (Tid s : S) g_.add_edge(g_.source(s), v);
  for (Tid t : T) g_.add_edge(v, g_.target(t));
}

void Factorizer::inequality(std::vector<Tid> S, std::vector<Tid> T,
                            const KeyedAtom& a, InequalityBase base) {
  conjunction(std::move(S), std::move(T), {&a}, base);
}

void Factorizer::conjunction(std::vector<Tid> S, std::vector<Tid> T,
                             std::vector<const KeyedAtom*> atoms,
                             InequalityBase base) {
  if (S.empty() || T.empty()) return;
  if (atoms.empty()) {
    connect_all(S, T);
    return;
  }
  atoms_ = std::move(atoms);
  base_ = base;
  next_predicate(std::move(S), std::move(T), 0);
}

void Factorizer::nonequality(const std::vector<Tid>& S,
                             const std::vector<Tid>& T, const KeyedAtom& lt,
                             const KeyedAtom& gt, InequalityBase base) {
  inequality(S, T, lt, base);
  inequality(S, T, gt, base);
}

void Factorizer::band(std::vector<Tid> S, std::vector<Tid> T,
                      const OrientedAtom& raw, const BandAtoms& atoms,
                      InequalityBase base) {
  if (S.empty() || T.empty()) return;
  sort_by_key(S, raw.source_values);
  sort_by_key(T, raw.target_values);
  for (auto& group : make_band_groups(S, T, raw.source_values,
                                      raw.target_values, raw.epsilon)) {
    // Sources below start + eps already satisfy a < b + eps for every b in
    // the group; the rest already satisfy a > b - eps.
    std::vector<Tid> low, high;
    for (Tid s : group.source_tids) {
      (raw.source_values[s] < group.start + raw.epsilon ? low : high)
          .push_back(s);
    }
    inequality(std::move(low), group.target_tids, atoms.lower, base);
    inequality(std::move(high), std::move(group.target_tids), atoms.upper,
               base);
  }
}

void Factorizer::next_predicate(std::vector<Tid> S, std::vector<Tid> T,
                                std::size_t i) {
  const KeyedAtom& a = *atoms_[i];
  sort_by_key(S, a.source_key);
  sort_by_key(T, a.target_key);
  const bool last = i + 1 == atoms_.size();
  if (last && base_ == InequalityBase::kMultiway) {
    multiway(S, T, a);
  } else if (last && base_ == InequalityBase::kShared) {
    shared(S, T, a);
  } else {
    binary(S, T, i);
  }
}

void Factorizer::connect_or_next(std::span<const Tid> S,
                                 std::span<const Tid> T, std::size_t i) {
  if (S.empty() || T.empty()) return;
  if (i + 1 == atoms_.size()) {
    const auto v = fresh();
    for (Tid s : S) g_.add_edge(g_.source(s), v);
    for (Tid t : T) g_.add_edge(v, g_.target(t));
    return;
  }
  next_predicate(std::vector<Tid>(S.begin(), S.end()),
                 std::vector<Tid>(T.begin(), T.end()), i + 1);
}

void Factorizer::binary(std::span<const Tid> S, std::span<const Tid> T,
                        std::size_t i) {
  if (S.empty() || T.empty()) return;
  const KeyedAtom& a = *atoms_[i];
  const auto distinct = merged_distinct(S, T, a.source_key, a.target_key);
  if (distinct.size() == 1) {
    if (a.op == KeyOp::kLessEq) connect_or_next(S, T, i);
    return;
  }
  const double pivot = distinct[distinct.size() / 2];
  const auto split_s = std::partition_point(
      S.begin(), S.end(), [&](Tid x) { return a.source_key[x] < pivot; });
  const auto split_t = std::partition_point(
      T.begin(), T.end(), [&](Tid x) { return a.target_key[x] < pivot; });
  const std::span<const Tid> S1(S.begin(), split_s), S2(split_s, S.end());
  const std::span<const Tid> T1(T.begin(), split_t), T2(split_t, T.end());
  connect_or_next(S1, T2, i);
  binary(S1, T1, i);
  binary(S2, T2, i);
}

void Factorizer::multiway(std::span<const Tid> S, std::span<const Tid> T,
                          const KeyedAtom& a) {
  if (S.empty() || T.empty()) return;
  const auto distinct = merged_distinct(S, T, a.source_key, a.target_key);
  const std::size_t delta = distinct.size();
  if (delta == 1) {
    if (a.op == KeyOp::kLessEq) {
      const auto x = fresh();
      const auto y = fresh();
      for (Tid s : S) g_.add_edge(g_.source(s), x);
      g_.add_edge(x, y);
      for (Tid t : T) g_.add_edge(y, g_.target(t));
    }
    return;
  }
  const auto rho = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(delta))));
  std::vector<std::span<const Tid>> Sp(rho), Tp(rho);
  auto s_it = S.begin();
  auto t_it = T.begin();
  for (std::size_t p = 0; p < rho; ++p) {
    const std::size_t hi = (p + 1) * delta / rho;
    auto s_end = S.end();
    auto t_end = T.end();
    if (hi < delta) {
      const double bound = distinct[hi];
      s_end = std::partition_point(
          s_it, S.end(), [&](Tid x) { return a.source_key[x] < bound; });
      t_end = std::partition_point(
          t_it, T.end(), [&](Tid x) { return a.target_key[x] < bound; });
    }
    Sp[p] = std::span<const Tid>(s_it, s_end);
    Tp[p] = std::span<const Tid>(t_it, t_end);
    s_it = s_end;
    t_it = t_end;
  }

  // x_p exists iff S_p can reach a later nonempty T; y_p iff T_p is reached
  // from an earlier nonempty S.
  std::vector<bool> later_t(rho, false), earlier_s(rho, false);
  for (std::size_t p = rho - 1; p > 0; --p) {
    later_t[p - 1] = later_t[p] || !Tp[p].empty();
  }
  for (std::size_t p = 1; p < rho; ++p) {
    earlier_s[p] = earlier_s[p - 1] || !Sp[p - 1].empty();
  }
  constexpr auto kNone = static_cast<Tlfg::NodeId>(-1);
  std::vector<Tlfg::NodeId> x(rho, kNone), y(rho, kNone);
  for (std::size_t p = 0; p < rho; ++p) {
    if (!Sp[p].empty() && later_t[p]) {
      x[p] = fresh();
      for (Tid s : Sp[p]) g_.add_edge(g_.source(s), x[p]);
    }
    if (!Tp[p].empty() && earlier_s[p]) {
      y[p] = fresh();
      for (Tid t : Tp[p]) g_.add_edge(y[p], g_.target(t));
    }
  }
  for (std::size_t j = 0; j < rho; ++j) {
    if (x[j] == kNone) continue;
    for (std::size_t i = j + 1; i < rho; ++i) {
      if (y[i] != kNone) g_.add_edge(x[j], y[i]);
    }
  }
  for (std::size_t p = 0; p < rho; ++p) multiway(Sp[p], Tp[p], a);
}

void Factorizer::shared(std::span<const Tid> S, std::span<const Tid> T,
                        const KeyedAtom& a) {
  if (S.empty() || T.empty()) return;
  std::vector<double> values;
  for (Tid t : T) {
    if (values.empty() || values.back() != a.target_key[t]) {
      values.push_back(a.target_key[t]);
    }
  }
  // Chain position each source attaches to: the first target value it
  // precedes.
  std::vector<std::size_t> attach(S.size());
  std::size_t first = values.size();
  for (std::size_t k = 0; k < S.size(); ++k) {
    const double v = a.source_key[S[k]];
    const auto it = a.op == KeyOp::kLess
                        ? std::upper_bound(values.begin(), values.end(), v)
                        : std::lower_bound(values.begin(), values.end(), v);
    attach[k] = static_cast<std::size_t>(it - values.begin());
    first = std::min(first, attach[k]);
  }
  if (first == values.size()) return;
  std::vector<Tlfg::NodeId> chain(values.size() - first);
  for (auto& u : chain) u = fresh();
  for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
    g_.add_edge(chain[k], chain[k + 1]);
  }
  for (std::size_t k = 0; k < S.size(); ++k) {
    if (attach[k] < values.size()) {
      g_.add_edge(g_.source(S[k]), chain[attach[k] - first]);
    }
  }
  std::size_t pos = 0;
  for (Tid t : T) {
    while (values[pos] != a.target_key[t]) ++pos;
    if (pos >= first) g_.add_edge(chain[pos - first], g_.target(t));
  }
}

std::vector<BandGroup> make_band_groups(std::span<const Tid> S,
                                        std::span<const Tid> T,
                                        const std::vector<double>& s,
                                        const std::vector<double>& t,
                                        double epsilon) {
  std::vector<BandGroup> groups;
  for (std::size_t k = 0; k < T.size();) {
    BandGroup g;
    g.epsilon = epsilon;
    g.start = t[T[k]];
    while (k < T.size() && t[T[k]] <= g.start + epsilon) {
      g.end = t[T[k]];
      g.target_tids.push_back(T[k]);
      ++k;
    }
    groups.push_back(std::move(g));
  }
  for (Tid x : S) {
    const double v = s[x];
    auto it = std::lower_bound(
        groups.begin(), groups.end(), v,
        [&](const BandGroup& g, double val) { return g.end + epsilon < val; });
    for (; it != groups.end() && it->start - epsilon <= v; ++it) {
      it->source_tids.push_back(x);
    }
  }
  return groups;
}

}  // namespace thetarank::detail
