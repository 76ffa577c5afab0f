#include "thetarank/workbench.hpp"

#include <malloc.h>

#include <algorithm>
#include <cmath>
#include <cctype>
#include <random>
#include <set>

#include "thetarank/enum_graph.hpp"
#include "thetarank/error.hpp"

namespace thetarank {

std::vector<Answer> oracle_join(const JoinQuery& q, double guard) {
  if (q.cross_product_size() > guard) {
    throw GuardExceeded("oracle: cross product exceeds the guard");
  }
  const std::size_t l = q.atom_count();
  // Predicates checked as soon as their last atom is bound.
  std::vector<std::vector<const PredicateDNF*>> ready(l);
  for (const auto& p : q.predicates()) {
    ready[q.predicate_atoms(p).second].push_back(&p);
  }
  std::vector<Answer> out;
  std::vector<Tid> choice(l, 0);
  auto visit = [&](auto&& self, std::size_t i) -> void {
    if (i == l) {
      out.push_back({choice, answer_weight(q, choice)});
      return;
    }
    for (Tid t = 0; t < q.atom(i).size(); ++t) {
      choice[i] = t;
      const bool ok = std::all_of(ready[i].begin(), ready[i].end(),
                                  [&](const PredicateDNF* p) {
                                    return q.holds(*p, choice);
                                  });
      if (ok) self(self, i + 1);
    }
  };
  if (l > 0) visit(visit, 0);
  const double sign = q.direction() == Direction::kMax ? -1.0 : 1.0;
  std::stable_sort(out.begin(), out.end(), [&](const Answer& a, const Answer& b) {
    if (a.weight != b.weight) return sign * a.weight < sign * b.weight;
    return a.choice < b.choice;
  });
  return out;
}

namespace {

// Answers stored flat; a binary heap over their indexes yields them in
// ranking order.
class HeapStream : public AnswerStream {
 public:
  HeapStream(std::size_t atoms, std::vector<Tid> tids,
             std::vector<double> weights, Direction direction)
      : atoms_(atoms),
        tids_(std::move(tids)),
        weights_(std::move(weights)),
        sign_(direction == Direction::kMax ? -1.0 : 1.0) {
    heap_.resize(weights_.size());
    for (std::uint32_t i = 0; i < heap_.size(); ++i) heap_[i] = i;
    std::make_heap(heap_.begin(), heap_.end(), later());
  }

  std::optional<Answer> next() override {
    if (heap_.empty()) return std::nullopt;
    std::pop_heap(heap_.begin(), heap_.end(), later());
    const auto i = heap_.back();
    heap_.pop_back();
    const auto* c = tids_.data() + i * atoms_;
    return Answer{std::vector<Tid>(c, c + atoms_), weights_[i]};
  }

 private:
  struct Later {
    const HeapStream* s;
    bool operator()(std::uint32_t a, std::uint32_t b) const {
      const double wa = s->sign_ * s->weights_[a], wb = s->sign_ * s->weights_[b];
      if (wa != wb) return wa > wb;
      const auto ta = s->tids_.begin() + a * s->atoms_;
      const auto tb = s->tids_.begin() + b * s->atoms_;
      return std::lexicographical_compare(tb, tb + s->atoms_, ta, ta + s->atoms_);
    }
  };
  Later later() const { return Later{this}; }

  std::size_t atoms_;
  std::vector<Tid> tids_;
  std::vector<double> weights_;
  double sign_;
  std::vector<std::uint32_t> heap_;
};

std::size_t solution_count(const EnumerationGraph& g) {
  std::vector<double> count(g.node_count(), 0.0);
  for (std::size_t i = g.node_count(); i-- > 0;) {
    const auto v = static_cast<EnumerationGraph::NodeId>(i);
    double c = 1.0;
    for (std::size_t grp = g.group_begin(v); grp < g.group_end(v); ++grp) {
      double sum = 0.0;
      for (auto h : g.heads(grp)) sum += count[h];
      c *= sum;
    }
    count[v] = c;
  }
  const double total = g.empty() ? 0.0 : count[EnumerationGraph::kRootNode];
  return total >= 1.8e19 ? std::numeric_limits<std::size_t>::max()
                         : static_cast<std::size_t>(total);
}

}  // namespace

std::size_t count_answers(const JoinQuery& q, const ThetaJoinTree& tree) {
  AssembleOptions opts;
  opts.stats_budget = 0;
  const auto g = assemble(q, tree, opts);
  if (g.duplication_bound() > 1) {
    // Duplicate paths would be counted more than once.
    opts.method = Method::kBinary;
    return solution_count(assemble(q, tree, opts));
  }
  return solution_count(g);
}

std::unique_ptr<AnswerStream> batch_baseline(const JoinQuery& q,
                                             const ThetaJoinTree& tree,
                                             const BatchOptions& options,
                                             BatchAbort* abort) {
  const auto start = std::chrono::steady_clock::now();
  auto fail = [&](const std::string& reason, std::size_t produced) {
    if (abort) {
      abort->reason = reason;
      abort->seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      abort->produced = produced;
      abort->required = count_answers(q, tree);
    }
    throw GuardExceeded("batch: " + reason);
  };

  AssembleOptions opts;
  opts.method = Method::kDirect;
  opts.edge_limit = options.edge_limit;
  opts.stats_budget = 0;
  std::shared_ptr<const EnumerationGraph> g;
  try {
    g = std::make_shared<const EnumerationGraph>(assemble(q, tree, opts));
  } catch (const GuardExceeded&) {
    fail("direct TLFG edge limit reached", options.edge_limit);
  }

  const std::size_t l = q.atom_count();
  std::vector<Tid> tids;
  std::vector<double> weights;
  UnrankedEnumerator all(g);
  while (auto a = all.next()) {
    if (weights.size() == options.answer_limit ||
        weights.size() >= std::numeric_limits<std::uint32_t>::max()) {
      fail("answer limit reached", weights.size());
    }
    if (options.deadline && (weights.size() & 4095) == 0 &&
        std::chrono::steady_clock::now() > *options.deadline) {
      fail("deadline passed", weights.size());
    }
    tids.insert(tids.end(), a->choice.begin(), a->choice.end());
    weights.push_back(a->weight);
  }
  return std::make_unique<HeapStream>(l, std::move(tids), std::move(weights),
                                      q.direction());
}

std::vector<Relation> gen_synthetic(std::size_t n, std::size_t l,
                                    std::uint64_t seed) {
  if (n == 0 || l == 0) throw InvalidArgument("generator needs n >= 1 and l >= 1");
  if (n > 100'000'000) throw InvalidArgument("n exceeds the number of distinct pairs");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> value(0, 9999);
  std::uniform_real_distribution<double> weight(0.0, 1e4);
  std::vector<Relation> out;
  for (std::size_t i = 1; i <= l; ++i) {
    Relation r("S" + std::to_string(i), {"A" + std::to_string(2 * i - 1),
                                         "A" + std::to_string(2 * i)});
    std::set<std::pair<int, int>> seen;
    while (r.size() < n) {
      const int a = value(rng), b = value(rng);
      const double w = weight(rng);
      if (!seen.insert({a, b}).second) continue;
      r.add({static_cast<double>(a), static_cast<double>(b)}, w);
    }
    out.push_back(std::move(r));
  }
  return out;
}

Relation gen_items(std::size_t n, std::uint64_t seed, const std::string& name) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> sk(0, static_cast<int>(std::max<std::size_t>(1, n / 16)) - 1);
  std::uniform_int_distribution<int> small(1, 50);
  std::uniform_real_distribution<double> price(0.0, 1e4);
  Relation r(name, {"SK", "Q", "S", "C", "R"});
  for (std::size_t i = 0; i < n; ++i) {
    const double key = sk(rng), q = small(rng), s = small(rng), c = small(rng),
                 d = small(rng);
    r.add({key, q, s, c, d}, price(rng));
  }
  return r;
}

Relation gen_birds(std::size_t n, std::uint64_t seed, const std::string& name) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat(0.0, 1000.0), lon(0.0, 1000.0);
  std::uniform_int_distribution<int> count(1, 100);
  Relation r(name, {"Lat", "Lon"});
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::round(lat(rng)), b = std::round(lon(rng));
    r.add({a, b}, count(rng));
  }
  return r;
}

const char* to_string(QueryTemplate t) noexcept {
  switch (t) {
    case QueryTemplate::kQS1: return "QS1";
    case QueryTemplate::kQS2: return "QS2";
    case QueryTemplate::kQT: return "QT";
    case QueryTemplate::kQTD: return "QTD";
    case QueryTemplate::kQB: return "QB";
  }
  return "?";
}

std::optional<QueryTemplate> parse_template(std::string_view text) {
  std::string s(text);
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s.rfind("Q_", 0) == 0) s.erase(1, 1);
  for (auto t : {QueryTemplate::kQS1, QueryTemplate::kQS2, QueryTemplate::kQT,
                 QueryTemplate::kQTD, QueryTemplate::kQB}) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

JoinQuery make_query(QueryTemplate t, std::size_t n, std::size_t l,
                     std::uint64_t seed, double band_epsilon) {
  if (l == 0) throw InvalidArgument("query length must be at least 1");
  std::vector<std::shared_ptr<const Relation>> atoms;
  std::vector<PredicateDNF> preds;
  auto ref = [](const Relation& r, const std::string& a) {
    return AttrRef{r.name(), a};
  };
  auto atom = [](PredicateKind k, AttrRef a, AttrRef b,
                 std::optional<double> eps = std::nullopt) {
    return AtomicPredicate::make(k, std::move(a), std::move(b), eps);
  };
  Direction dir = Direction::kMin;
  switch (t) {
    case QueryTemplate::kQS1:
    case QueryTemplate::kQS2: {
      for (auto& r : gen_synthetic(n, l, seed)) {
        atoms.push_back(std::make_shared<const Relation>(std::move(r)));
      }
      for (std::size_t i = 0; i + 1 < l; ++i) {
        const auto& a = *atoms[i];
        const auto& b = *atoms[i + 1];
        if (t == QueryTemplate::kQS1) {
          preds.push_back(PredicateDNF::atom(
              atom(PredicateKind::kLt, ref(a, a.attributes()[1]),
                   ref(b, b.attributes()[0]))));
        } else {
          preds.push_back(PredicateDNF::conjunction(
              {atom(PredicateKind::kBand, ref(a, a.attributes()[1]),
                    ref(b, b.attributes()[0]), band_epsilon),
               atom(PredicateKind::kNeq, ref(a, a.attributes()[0]),
                    ref(b, b.attributes()[1]))}));
        }
      }
      break;
    }
    case QueryTemplate::kQT:
    case QueryTemplate::kQTD: {
      const Relation base = gen_items(n, seed);
      for (std::size_t i = 1; i <= l; ++i) {
        atoms.push_back(std::make_shared<const Relation>(
            base.renamed("Item" + std::to_string(i))));
      }
      for (std::size_t i = 0; i + 1 < l; ++i) {
        const auto& a = *atoms[i];
        const auto& b = *atoms[i + 1];
        preds.push_back(PredicateDNF::atom(
            atom(PredicateKind::kEq, ref(a, "SK"), ref(b, "SK"))));
        preds.push_back(PredicateDNF::atom(
            atom(PredicateKind::kLt, ref(a, "Q"), ref(b, "Q"))));
        if (t == QueryTemplate::kQT) {
          preds.push_back(PredicateDNF::atom(
              atom(PredicateKind::kLt, ref(a, "S"), ref(b, "S"))));
        } else {
          PredicateDNF d;
          for (const char* c : {"S", "C", "R"}) {
            d.disjuncts.push_back({atom(PredicateKind::kLt, ref(a, c), ref(b, c))});
          }
          preds.push_back(std::move(d));
        }
      }
      break;
    }
    case QueryTemplate::kQB: {
      const Relation base = gen_birds(n, seed);
      for (std::size_t i = 1; i <= l; ++i) {
        atoms.push_back(std::make_shared<const Relation>(
            base.renamed("B" + std::to_string(i))));
      }
      for (std::size_t i = 0; i + 1 < l; ++i) {
        const auto& a = *atoms[i];
        const auto& b = *atoms[i + 1];
        preds.push_back(PredicateDNF::conjunction(
            {atom(PredicateKind::kBand, ref(a, "Lat"), ref(b, "Lat"), band_epsilon),
             atom(PredicateKind::kBand, ref(a, "Lon"), ref(b, "Lon"), band_epsilon)}));
      }
      dir = Direction::kMax;
      break;
    }
  }
  return JoinQuery(std::move(atoms), std::move(preds), dir);
}

std::size_t allocated_bytes() {
  const auto info = mallinfo2();
  return info.uordblks + info.hblkhd;
}

MetricsReport measure(const std::function<Opened()>& open,
                      const std::vector<std::size_t>& checkpoints,
                      std::size_t window) {
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw InvalidArgument("checkpoints must be ascending");
  }
  if (window == 0) window = 1;
  MetricsReport report;
  const std::size_t base_mem = allocated_bytes();
  auto above = [&] {
    const auto now = allocated_bytes();
    return now > base_mem ? now - base_mem : 0;
  };
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  Opened o = open();
  report.graph_size = o.graph_size;
  report.mem.emplace_back(0, above());
  report.mem_peak = report.mem.back().second;

  const std::size_t last = checkpoints.empty() ? 0 : checkpoints.back();
  std::size_t next_cp = 0;
  double window_start = elapsed();
  double previous = window_start;
  double gap_sum = 0.0;
  while (report.answers < last) {
    if (!o.stream->next()) {
      report.exhausted = true;
      break;
    }
    ++report.answers;
    const double now = elapsed();
    gap_sum += now - previous;
    previous = now;
    if (report.answers % window == 0) {
      report.delay_windows.push_back((now - window_start) / window);
      window_start = now;
    }
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == report.answers) {
      report.tt_k.emplace_back(report.answers, now);
      report.mem.emplace_back(report.answers, above());
      report.mem_peak = std::max(report.mem_peak, report.mem.back().second);
      ++next_cp;
    }
  }
  if (report.answers > 0) report.delay_mean = gap_sum / report.answers;
  for (double d : report.delay_windows) {
    report.delay_max_window = std::max(report.delay_max_window, d);
  }
  return report;
}

}  // namespace thetarank
