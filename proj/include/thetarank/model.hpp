#pragma once

// Relations, predicates and join queries: the vocabulary shared by the
// planner, the TLFG builders and the enumerators.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace thetarank {

using Tid = std::uint32_t;

struct Tuple {
  std::vector<double> values;
  double weight = 0.0;
  Tid tid = 0;
};

class Relation {
 public:
  Relation() = default;
  Relation(std::string name, std::vector<std::string> attributes);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& attributes() const noexcept {
    return attributes_;
  }
  std::size_t arity() const noexcept { return attributes_.size(); }
  std::size_t size() const noexcept { return tuples_.size(); }
  bool empty() const noexcept { return tuples_.empty(); }

  const std::vector<Tuple>& tuples() const noexcept { return tuples_; }
  const Tuple& tuple(Tid tid) const { return tuples_.at(tid); }

  // Appends a tuple; the tid is assigned densely. Throws SchemaError on an
  // arity mismatch.
  Tid add(std::vector<double> values, double weight);

  std::optional<std::size_t> find_attribute(std::string_view name) const;
  std::size_t column(std::string_view name) const;  // throws SchemaError

  // Same tuples under another name (self-joins are expanded into copies).
  Relation renamed(std::string name) const;

 private:
  std::string name_;
  std::vector<std::string> attributes_;
  std::vector<Tuple> tuples_;
};

// R.A, optionally through an affine map scale * R.A + offset.
struct AttrRef {
  std::string relation;
  std::string attribute;
  double scale = 1.0;
  double offset = 0.0;

  bool is_plain() const noexcept { return scale == 1.0 && offset == 0.0; }
  double apply(double v) const noexcept { return scale * v + offset; }
  std::string to_string() const;
};

enum class PredicateKind { kEq, kLt, kGt, kLe, kGe, kNeq, kBand };

const char* to_symbol(PredicateKind kind) noexcept;
std::optional<PredicateKind> parse_predicate_kind(std::string_view text);

// Swapping the operands of `a op b` gives `b flipped(op) a`.
PredicateKind flipped(PredicateKind kind) noexcept;

struct AtomicPredicate {
  PredicateKind kind = PredicateKind::kEq;
  AttrRef left;
  AttrRef right;
  std::optional<double> epsilon;  // BAND only

  static AtomicPredicate make(PredicateKind kind, AttrRef left, AttrRef right,
                              std::optional<double> epsilon = std::nullopt);

  // Throws SchemaError when the epsilon/kind pairing is invalid.
  void check() const;

  // The same predicate with left and right exchanged.
  AtomicPredicate mirrored() const;
  std::string to_string() const;
};

// Truth of `a kind b` on already-extracted (and transformed) values.
bool compare_values(PredicateKind kind, double a, double b,
                    double epsilon) noexcept;

using Conjunction = std::vector<AtomicPredicate>;

struct PredicateDNF {
  std::vector<Conjunction> disjuncts;

  PredicateDNF() = default;
  explicit PredicateDNF(std::vector<Conjunction> d) : disjuncts(std::move(d)) {}
  static PredicateDNF atom(AtomicPredicate p);
  static PredicateDNF conjunction(Conjunction c);

  // The condition "true": one empty conjunction. Only used internally for
  // join-tree edges that carry no predicate (cross products).
  static PredicateDNF always_true();
  bool is_always_true() const noexcept;

  // Maximum number of non-equality atoms over all conjunctions.
  std::size_t max_non_equality() const noexcept;
  std::size_t atom_count() const noexcept;
  // True for a single conjunction of plain-reference equalities.
  bool is_pure_equality() const noexcept;

  // Names of the relations referenced by any atom, sorted and deduplicated.
  std::vector<std::string> relations() const;

  // Conjunction of two DNFs, distributed back into DNF.
  PredicateDNF conjoined(const PredicateDNF& other) const;

  void check() const;
  std::string to_string() const;
};

enum class Direction { kMin, kMax };

// A resolved attribute reference: column `column` of query atom `atom`.
struct ColumnRef {
  std::size_t atom = 0;
  std::size_t column = 0;
  double scale = 1.0;
  double offset = 0.0;

  double apply(double v) const noexcept { return scale * v + offset; }
};

struct Answer {
  std::vector<Tid> choice;  // one tid per atom, in query order
  double weight = 0.0;
};

class JoinQuery {
 public:
  JoinQuery() = default;
  JoinQuery(std::vector<std::shared_ptr<const Relation>> atoms,
            std::vector<PredicateDNF> predicates,
            Direction direction = Direction::kMin);

  const std::vector<std::shared_ptr<const Relation>>& atoms() const noexcept {
    return atoms_;
  }
  const Relation& atom(std::size_t i) const { return *atoms_.at(i); }
  std::size_t atom_count() const noexcept { return atoms_.size(); }
  const std::vector<PredicateDNF>& predicates() const noexcept {
    return predicates_;
  }
  Direction direction() const noexcept { return direction_; }

  std::size_t atom_index(std::string_view name) const;  // throws SchemaError
  ColumnRef resolve(const AttrRef& ref) const;           // throws SchemaError

  // The two atoms a predicate references, ascending. Throws SchemaError if
  // it spans more than two atoms or a single one.
  std::pair<std::size_t, std::size_t> predicate_atoms(
      const PredicateDNF& dnf) const;

  // Evaluates a predicate on a (possibly partial) choice vector; the atoms it
  // references must be bound.
  bool holds(const AtomicPredicate& p, std::span<const Tid> choice) const;
  bool holds(const PredicateDNF& dnf, std::span<const Tid> choice) const;

  // Checks attribute resolution, predicate arity and BAND epsilons.
  void validate() const;

  // Product of atom cardinalities (saturating).
  double cross_product_size() const noexcept;

 private:
  std::vector<std::shared_ptr<const Relation>> atoms_;
  std::vector<PredicateDNF> predicates_;
  Direction direction_ = Direction::kMin;
};

// Evaluates `pred` on s (from relation S) and t (from relation T). The
// predicate's references are resolved by relation name against S and T.
bool eval_atomic(const AtomicPredicate& pred, const Relation& S,
                 const Tuple& s, const Relation& T, const Tuple& t);
bool eval_dnf(const PredicateDNF& dnf, const Relation& S, const Tuple& s,
              const Relation& T, const Tuple& t);

// Sum of the chosen tuples' weights, summed in atom order. Throws
// InvalidArgument for a bad tid or choice length.
double answer_weight(const JoinQuery& q, std::span<const Tid> choice);

}  // namespace thetarank
