#include "thetarank/bench.hpp"

#include <ostream>

#include "thetarank/engine.hpp"
#include "thetarank/error.hpp"
#include "thetarank/io.hpp"
#include "thetarank/workbench.hpp"

namespace thetarank {

namespace {

struct Case {
  QueryTemplate query;
  std::size_t l;
  std::size_t n;
  std::vector<EngineMethod> methods;
};

std::vector<Case> suite_cases(const std::string& suite) {
  using M = EngineMethod;
  std::vector<Case> out;
  if (suite == "smoke") {
    out.push_back({QueryTemplate::kQS1, 2, 256, {M::kAuto, M::kBinary, M::kDirect, M::kBatch}});
    out.push_back({QueryTemplate::kQS2, 2, 256, {M::kAuto, M::kQuadEqui}});
    out.push_back({QueryTemplate::kQT, 3, 256, {M::kAuto}});
    out.push_back({QueryTemplate::kQTD, 2, 256, {M::kAuto}});
    out.push_back({QueryTemplate::kQB, 2, 256, {M::kAuto}});
  } else if (suite == "scaling") {
    for (std::size_t n = 1 << 10; n <= 1 << 16; n <<= 1) {
      out.push_back({QueryTemplate::kQS1, 2, n, {M::kAuto, M::kBatch}});
    }
  } else if (suite == "methods") {
    for (std::size_t n = 1 << 10; n <= 1 << 16; n <<= 2) {
      out.push_back({QueryTemplate::kQS1, 2, n, {M::kBinary, M::kMultiway, M::kShared}});
    }
  } else {
    throw InvalidArgument("unknown bench suite '" + suite + "'");
  }
  return out;
}

}  // namespace

std::vector<std::string> bench_suites() { return {"smoke", "scaling", "methods"}; }

void run_bench(const std::string& suite, std::uint64_t seed, std::ostream& out) {
  const std::vector<std::size_t> checkpoints = {1, 10, 100, 1000};
  out << "query,method,l,n,k,tt_k,delay_mean,delay_max_window,mem_peak,graph_size,status\n";
  for (const auto& c : suite_cases(suite)) {
    const JoinQuery q = make_query(c.query, c.n, c.l, seed);
    for (const auto m : c.methods) {
      EngineOptions opts;
      opts.method = m;
      opts.edge_limit = std::size_t{1} << 25;
      opts.batch.edge_limit = std::size_t{1} << 25;
      opts.batch.answer_limit = std::size_t{1} << 25;
      opts.batch.deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
      const std::string prefix = std::string(to_string(c.query)) + "," +
                                 to_string(m) + "," + std::to_string(c.l) + "," +
                                 std::to_string(c.n) + ",";
      try {
        const Engine engine(q, opts);
        const auto report = measure(
            [&] {
              OpenStats st;
              auto s = engine.open(&st);
              return Opened{std::move(s), st.graph_size};
            },
            checkpoints);
        for (const auto& [k, t] : report.tt_k) {
          out << prefix << k << ',' << format_number(t) << ','
              << format_number(report.delay_mean) << ','
              << format_number(report.delay_max_window) << ',' << report.mem_peak
              << ',' << report.graph_size << ",ok\n";
        }
        if (report.exhausted) {
          out << prefix << report.answers << ",,,,"
              << report.mem_peak << ',' << report.graph_size << ",exhausted\n";
        }
      } catch (const GuardExceeded&) {
        out << prefix << ",,,,,,aborted\n";
      }
      out.flush();
    }
  }
}

}  // namespace thetarank
