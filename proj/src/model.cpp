#include "thetarank/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

#include "thetarank/error.hpp"

namespace thetarank {

Relation::Relation(std::string name, std::vector<std::string> attributes)
    : name_(std::move(name)), attributes_(std::move(attributes)) {
  std::unordered_set<std::string> seen;
  for (const auto& a : attributes_) {
    if (!seen.insert(a).second) {
      throw SchemaError("duplicate attribute '" + a + "' in relation '" +
                        name_ + "'");
    }
  }
}

Tid Relation::add(std::vector<double> values, double weight) {
  if (values.size() != attributes_.size()) {
    throw SchemaError("tuple arity " + std::to_string(values.size()) +
                      " does not match relation '" + name_ + "' arity " +
                      std::to_string(attributes_.size()));
  }
  if (tuples_.size() >= std::numeric_limits<Tid>::max()) {
    throw InvalidArgument("relation '" + name_ + "' is too large");
  }
  const auto tid = static_cast<Tid>(tuples_.size());
  tuples_.push_back(Tuple{std::move(values), weight, tid});
  return tid;
}

std::optional<std::size_t> Relation::find_attribute(
    std::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Relation::column(std::string_view name) const {
  if (auto c = find_attribute(name)) return *c;
  throw SchemaError("relation '" + name_ + "' has no attribute '" +
                    std::string(name) + "'");
}

Relation Relation::renamed(std::string name) const {
  Relation copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

std::string AttrRef::to_string() const {
  std::string base = relation + "." + attribute;
  if (is_plain()) return base;
  std::ostringstream out;
  out << scale << "*" << base;
  if (offset != 0.0) out << (offset > 0 ? "+" : "") << offset;
  return out.str();
}

const char* to_symbol(PredicateKind kind) noexcept {
  switch (kind) {
    case PredicateKind::kEq: return "=";
    case PredicateKind::kLt: return "<";
    case PredicateKind::kGt: return ">";
    case PredicateKind::kLe: return "<=";
    case PredicateKind::kGe: return ">=";
    case PredicateKind::kNeq: return "!=";
    case PredicateKind::kBand: return "~";
  }
  return "?";
}

std::optional<PredicateKind> parse_predicate_kind(std::string_view text) {
  static constexpr std::pair<std::string_view, PredicateKind> kNames[] = {
      {"EQ", PredicateKind::kEq},     {"=", PredicateKind::kEq},
      {"==", PredicateKind::kEq},     {"LT", PredicateKind::kLt},
      {"<", PredicateKind::kLt},      {"GT", PredicateKind::kGt},
      {">", PredicateKind::kGt},      {"LE", PredicateKind::kLe},
      {"<=", PredicateKind::kLe},     {"GE", PredicateKind::kGe},
      {">=", PredicateKind::kGe},     {"NEQ", PredicateKind::kNeq},
      {"!=", PredicateKind::kNeq},    {"<>", PredicateKind::kNeq},
      {"BAND", PredicateKind::kBand},
  };
  std::string upper(text);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& [name, kind] : kNames) {
    if (name == upper) return kind;
  }
  return std::nullopt;
}

PredicateKind flipped(PredicateKind kind) noexcept {
  switch (kind) {
    case PredicateKind::kLt: return PredicateKind::kGt;
    case PredicateKind::kGt: return PredicateKind::kLt;
    case PredicateKind::kLe: return PredicateKind::kGe;
    case PredicateKind::kGe: return PredicateKind::kLe;
    default: return kind;
  }
}

AtomicPredicate AtomicPredicate::make(PredicateKind kind, AttrRef left,
                                      AttrRef right,
                                      std::optional<double> epsilon) {
  AtomicPredicate p{kind, std::move(left), std::move(right), epsilon};
  p.check();
  return p;
}

void AtomicPredicate::check() const {
  if (kind == PredicateKind::kBand) {
    if (!epsilon || !(*epsilon > 0.0) || !std::isfinite(*epsilon)) {
      throw SchemaError("band predicate " + left.to_string() + " ~ " +
                        right.to_string() + " needs a positive epsilon");
    }
  } else if (epsilon) {
    throw SchemaError("epsilon given for non-band predicate " + to_string());
  }
  if (left.relation == right.relation) {
    throw SchemaError("predicate " + to_string() +
                      " must reference two distinct atoms");
  }
}

AtomicPredicate AtomicPredicate::mirrored() const {
  return AtomicPredicate{flipped(kind), right, left, epsilon};
}

std::string AtomicPredicate::to_string() const {
  if (kind == PredicateKind::kBand) {
    std::ostringstream out;
    out << "|" << left.to_string() << " - " << right.to_string() << "| < "
        << epsilon.value_or(0.0);
    return out.str();
  }
  return left.to_string() + " " + to_symbol(kind) + " " + right.to_string();
}

bool compare_values(PredicateKind kind, double a, double b,
                    double epsilon) noexcept {
  switch (kind) {
    case PredicateKind::kEq: return a == b;
    case PredicateKind::kLt: return a < b;
    case PredicateKind::kGt: return a > b;
    case PredicateKind::kLe: return a <= b;
    case PredicateKind::kGe: return a >= b;
    case PredicateKind::kNeq: return a != b;
    case PredicateKind::kBand: return std::fabs(a - b) < epsilon;
  }
  return false;
}

PredicateDNF PredicateDNF::atom(AtomicPredicate p) {
  return PredicateDNF({Conjunction{std::move(p)}});
}

PredicateDNF PredicateDNF::conjunction(Conjunction c) {
  return PredicateDNF({std::move(c)});
}

PredicateDNF PredicateDNF::always_true() { return PredicateDNF({Conjunction{}}); }

bool PredicateDNF::is_always_true() const noexcept {
  return std::any_of(disjuncts.begin(), disjuncts.end(),
                     [](const Conjunction& c) { return c.empty(); });
}

std::size_t PredicateDNF::max_non_equality() const noexcept {
  std::size_t p = 0;
  for (const auto& c : disjuncts) {
    const auto n = static_cast<std::size_t>(
        std::count_if(c.begin(), c.end(), [](const AtomicPredicate& a) {
          return a.kind != PredicateKind::kEq;
        }));
    p = std::max(p, n);
  }
  return p;
}

std::size_t PredicateDNF::atom_count() const noexcept {
  std::size_t n = 0;
  for (const auto& c : disjuncts) n += c.size();
  return n;
}

bool PredicateDNF::is_pure_equality() const noexcept {
  if (disjuncts.size() != 1 || disjuncts.front().empty()) return false;
  return std::all_of(disjuncts.front().begin(), disjuncts.front().end(),
                     [](const AtomicPredicate& a) {
                       return a.kind == PredicateKind::kEq &&
                              a.left.is_plain() && a.right.is_plain();
                     });
}

std::vector<std::string> PredicateDNF::relations() const {
  std::set<std::string> names;
  for (const auto& c : disjuncts) {
    for (const auto& a : c) {
      names.insert(a.left.relation);
      names.insert(a.right.relation);
    }
  }
  return {names.begin(), names.end()};
}

PredicateDNF PredicateDNF::conjoined(const PredicateDNF& other) const {
  std::vector<Conjunction> out;
  out.reserve(disjuncts.size() * other.disjuncts.size());
  for (const auto& a : disjuncts) {
    for (const auto& b : other.disjuncts) {
      Conjunction c = a;
      c.insert(c.end(), b.begin(), b.end());
      out.push_back(std::move(c));
    }
  }
  return PredicateDNF(std::move(out));
}

void PredicateDNF::check() const {
  if (disjuncts.empty()) throw SchemaError("predicate has no disjuncts");
  for (const auto& c : disjuncts) {
    if (c.empty()) throw SchemaError("predicate has an empty conjunction");
    for (const auto& a : c) a.check();
  }
}

std::string PredicateDNF::to_string() const {
  if (is_always_true()) return "TRUE";
  std::string out;
  for (std::size_t i = 0; i < disjuncts.size(); ++i) {
    if (i) out += " OR ";
    const bool paren = disjuncts.size() > 1 && disjuncts[i].size() > 1;
    if (paren) out += "(";
    for (std::size_t j = 0; j < disjuncts[i].size(); ++j) {
      if (j) out += " AND ";
      out += disjuncts[i][j].to_string();
    }
    if (paren) out += ")";
  }
  return out;
}

JoinQuery::JoinQuery(std::vector<std::shared_ptr<const Relation>> atoms,
                     std::vector<PredicateDNF> predicates, Direction direction)
    : atoms_(std::move(atoms)),
      predicates_(std::move(predicates)),
      direction_(direction) {}

std::size_t JoinQuery::atom_index(std::string_view name) const {
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i]->name() == name) return i;
  }
  throw SchemaError("unknown relation '" + std::string(name) + "'");
}

ColumnRef JoinQuery::resolve(const AttrRef& ref) const {
  const auto a = atom_index(ref.relation);
  return ColumnRef{a, atoms_[a]->column(ref.attribute), ref.scale, ref.offset};
}

std::pair<std::size_t, std::size_t> JoinQuery::predicate_atoms(
    const PredicateDNF& dnf) const {
  std::set<std::size_t> atoms;
  for (const auto& name : dnf.relations()) atoms.insert(atom_index(name));
  if (atoms.size() != 2) {
    throw SchemaError("predicate '" + dnf.to_string() + "' spans " +
                      std::to_string(atoms.size()) +
                      " relations; exactly two are supported");
  }
  return {*atoms.begin(), *atoms.rbegin()};
}

bool JoinQuery::holds(const AtomicPredicate& p,
                      std::span<const Tid> choice) const {
  const auto l = resolve(p.left);
  const auto r = resolve(p.right);
  const double a = l.apply(atoms_[l.atom]->tuple(choice[l.atom]).values[l.column]);
  const double b = r.apply(atoms_[r.atom]->tuple(choice[r.atom]).values[r.column]);
  return compare_values(p.kind, a, b, p.epsilon.value_or(0.0));
}

bool JoinQuery::holds(const PredicateDNF& dnf,
                      std::span<const Tid> choice) const {
  for (const auto& c : dnf.disjuncts) {
    if (std::all_of(c.begin(), c.end(), [&](const AtomicPredicate& a) {
          return holds(a, choice);
        })) {
      return true;
    }
  }
  return false;
}

void JoinQuery::validate() const {
  if (atoms_.empty()) throw SchemaError("query has no atoms");
  std::unordered_set<std::string> names;
  for (const auto& a : atoms_) {
    if (!names.insert(a->name()).second) {
      throw SchemaError("relation '" + a->name() +
                        "' appears twice; self-joins need distinct copies");
    }
  }
  for (const auto& dnf : predicates_) {
    dnf.check();
    for (const auto& c : dnf.disjuncts) {
      for (const auto& a : c) {
        resolve(a.left);
        resolve(a.right);
      }
    }
    predicate_atoms(dnf);
  }
}

double JoinQuery::cross_product_size() const noexcept {
  double p = 1.0;
  for (const auto& a : atoms_) p *= static_cast<double>(a->size());
  return p;
}

namespace {

double value_of(const AttrRef& ref, const Relation& S, const Tuple& s,
                const Relation& T, const Tuple& t) {
  if (ref.relation == S.name()) {
    return ref.apply(s.values.at(S.column(ref.attribute)));
  }
  if (ref.relation == T.name()) {
    return ref.apply(t.values.at(T.column(ref.attribute)));
  }
  throw SchemaError("attribute " + ref.to_string() + " belongs to neither '" +
                    S.name() + "' nor '" + T.name() + "'");
}

}  // namespace

bool eval_atomic(const AtomicPredicate& pred, const Relation& S,
                 const Tuple& s, const Relation& T, const Tuple& t) {
  const double a = value_of(pred.left, S, s, T, t);
  const double b = value_of(pred.right, S, s, T, t);
  return compare_values(pred.kind, a, b, pred.epsilon.value_or(0.0));
}

bool eval_dnf(const PredicateDNF& dnf, const Relation& S, const Tuple& s,
              const Relation& T, const Tuple& t) {
  for (const auto& c : dnf.disjuncts) {
    bool all = true;
    for (const auto& a : c) {
      if (!eval_atomic(a, S, s, T, t)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

double answer_weight(const JoinQuery& q, std::span<const Tid> choice) {
  if (choice.size() != q.atom_count()) {
    throw InvalidArgument("choice has " + std::to_string(choice.size()) +
                          " entries for a query with " +
                          std::to_string(q.atom_count()) + " atoms");
  }
  double w = 0.0;
  for (std::size_t i = 0; i < choice.size(); ++i) {
    const auto& rel = q.atom(i);
    if (choice[i] >= rel.size()) {
      throw InvalidArgument("tid " + std::to_string(choice[i]) +
                            " out of range for relation '" + rel.name() + "'");
    }
    w += rel.tuple(choice[i]).weight;
  }
  return w;
}

}  // namespace thetarank
