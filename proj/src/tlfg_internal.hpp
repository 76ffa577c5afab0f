#pragma once

// Key-level machinery behind the public TLFG builders. All builders work on
// tid lists plus per-tid key arrays, with every inequality rewritten to
// `source_key < target_key` or `source_key <= target_key`.

#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "thetarank/model.hpp"
#include "thetarank/tlfg.hpp"

namespace thetarank::detail {

enum class KeyOp { kLess, kLessEq };

struct KeyedAtom {
  KeyOp op = KeyOp::kLess;
  std::vector<double> source_key;  // indexed by source tid
  std::vector<double> target_key;  // indexed by target tid
};

// An atomic predicate with its references resolved onto (S, T) and its
// values extracted.
struct OrientedAtom {
  PredicateKind kind = PredicateKind::kEq;
  std::vector<double> source_values;
  std::vector<double> target_values;
  double epsilon = 0.0;
};

// Throws SchemaError if the predicate does not reference exactly S and T.
OrientedAtom orient(const Relation& S, const Relation& T,
                    const AtomicPredicate& p);

// <, >, <=, >= as a keyed atom (negating keys for > and >=).
KeyedAtom as_keyed(const OrientedAtom& a);
KeyedAtom less_than(const std::vector<double>& s, const std::vector<double>& t);
KeyedAtom greater_than(const std::vector<double>& s,
                       const std::vector<double>& t);

// |s - t| < eps as s < t + eps (upper) and s > t - eps (lower).
struct BandAtoms {
  KeyedAtom upper;
  KeyedAtom lower;
};
BandAtoms band_atoms(const OrientedAtom& a);

std::vector<Tid> all_tids(std::size_t n);

// Sorted distinct values of s over S and t over T; S and T must be sorted
// by their keys.
std::vector<double> merged_distinct(std::span<const Tid> S,
                                    std::span<const Tid> T,
                                    const std::vector<double>& s,
                                    const std::vector<double>& t);

// Same for unsorted inputs.
std::size_t count_distinct(std::span<const Tid> S, std::span<const Tid> T,
                           const std::vector<double>& s,
                           const std::vector<double>& t);

// Builds into a shared graph. Intermediate nodes are always fresh, so
// repeated calls union their path sets.
class Factorizer {
 public:
  explicit Factorizer(Tlfg& g) : g_(g) {}

  void inequality(std::vector<Tid> S, std::vector<Tid> T, const KeyedAtom& a,
                  InequalityBase base);

  // Nested binary partitioning over the atoms in order; `base` handles the
  // last one.
  void conjunction(std::vector<Tid> S, std::vector<Tid> T,
                   std::vector<const KeyedAtom*> atoms, InequalityBase base);

  void nonequality(const std::vector<Tid>& S, const std::vector<Tid>& T,
                   const KeyedAtom& lt, const KeyedAtom& gt,
                   InequalityBase base);

  void band(std::vector<Tid> S, std::vector<Tid> T, const OrientedAtom& raw,
            const BandAtoms& atoms, InequalityBase base);

  // Connects every pair of S x T through one intermediate node.
  void connect_all(const std::vector<Tid>& S, const std::vector<Tid>& T);

  // Number of intermediate nodes this factorizer has created.
  std::size_t created() const noexcept { return created_; }

 private:
  Tlfg::NodeId fresh() {
    ++created_;
    return g_.add_intermediate();
  }

  void next_predicate(std::vector<Tid> S, std::vector<Tid> T, std::size_t i);
  void binary(std::span<const Tid> S, std::span<const Tid> T, std::size_t i);
  void connect_or_next(std::span<const Tid> S, std::span<const Tid> T,
                       std::size_t i);
  void multiway(std::span<const Tid> S, std::span<const Tid> T,
                const KeyedAtom& a);
  void shared(std::span<const Tid> S, std::span<const Tid> T,
              const KeyedAtom& a);

  Tlfg& g_;
  std::vector<const KeyedAtom*> atoms_;
  InequalityBase base_ = InequalityBase::kBinary;
  std::size_t created_ = 0;
};

// Groups S and T by joint equality key and calls `f(S_group, T_group)` for
// every key present on both sides, in ascending key order.
template <class F>
void for_each_equality_group(const std::vector<const OrientedAtom*>& eqs,
                             std::size_t ns, std::size_t nt, F&& f) {
  std::map<std::vector<double>, std::pair<std::vector<Tid>, std::vector<Tid>>>
      groups;
  std::vector<double> key(eqs.size());
  for (Tid s = 0; s < ns; ++s) {
    for (std::size_t i = 0; i < eqs.size(); ++i) key[i] = eqs[i]->source_values[s];
    groups[key].first.push_back(s);
  }
  for (Tid t = 0; t < nt; ++t) {
    for (std::size_t i = 0; i < eqs.size(); ++i) key[i] = eqs[i]->target_values[t];
    auto it = groups.find(key);
    if (it != groups.end()) it->second.second.push_back(t);
  }
  for (auto& [k, g] : groups) {
    if (!g.first.empty() && !g.second.empty()) {
      f(std::move(g.first), std::move(g.second));
    }
  }
}

// S sorted by s, T sorted by t.
std::vector<BandGroup> make_band_groups(std::span<const Tid> S,
                                        std::span<const Tid> T,
                                        const std::vector<double>& s,
                                        const std::vector<double>& t,
                                        double epsilon);

}  // namespace thetarank::detail
