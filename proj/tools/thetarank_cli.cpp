// Command-line front end over the C API.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thetarank/thetarank.h"

namespace {

constexpr int kUsage = TR_ERR_INVALID_ARGUMENT;
constexpr std::size_t kFlushEvery = 1024;

int report(tr_status s) {
  std::cerr << "thetarank: " << tr_status_name(s) << ": " << tr_last_error() << '\n';
  return static_cast<int>(s);
}

struct QueryDeleter {
  void operator()(tr_query* q) const { tr_query_free(q); }
};
struct EngineDeleter {
  void operator()(tr_engine* e) const { tr_engine_free(e); }
};
struct CursorDeleter {
  void operator()(tr_cursor* c) const { tr_cursor_free(c); }
};
using QueryPtr = std::unique_ptr<tr_query, QueryDeleter>;
using EnginePtr = std::unique_ptr<tr_engine, EngineDeleter>;
using CursorPtr = std::unique_ptr<tr_cursor, CursorDeleter>;

void put_number(std::string& line, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, ec == std::errc() ? ptr : buf);
}

struct Options {
  std::string query;
  std::optional<long long> k;
  std::optional<std::string> method;
  bool unranked = false;
  std::string out;
  std::string stats;
  std::uint64_t seed = 1;
  std::size_t n = 100;
  std::size_t l = 2;
  std::string suite = "smoke";
};

int open_engine(const Options& o, QueryPtr& q, EnginePtr& e) {
  tr_query* raw_q = nullptr;
  if (auto s = tr_query_load(o.query.c_str(), &raw_q); s != TR_OK) return report(s);
  q.reset(raw_q);
  tr_engine* raw_e = nullptr;
  const char* method = o.method ? o.method->c_str() : nullptr;
  if (auto s = tr_engine_create(q.get(), method, o.unranked ? 1 : 0, &raw_e);
      s != TR_OK) {
    return report(s);
  }
  e.reset(raw_e);
  return 0;
}

int cmd_run(const Options& o) {
  QueryPtr q;
  EnginePtr e;
  if (int rc = open_engine(o, q, e)) return rc;

  long long limit = o.k ? *o.k : tr_query_limit(q.get());
  if (o.k && *o.k < 0) limit = -1;

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!o.out.empty() && o.out != "-") {
    file.open(o.out);
    if (!file) {
      std::cerr << "thetarank: cannot write '" << o.out << "'\n";
      return TR_ERR_IO;
    }
    out = &file;
  }

  const std::size_t columns = tr_engine_column_count(e.get());
  std::string line;
  for (std::size_t i = 0; i < columns; ++i) {
    if (i) line += ',';
    line += tr_engine_column_name(e.get(), i);
  }
  line += '\n';
  *out << line;

  tr_cursor* raw_c = nullptr;
  if (limit != 0) {
    if (auto s = tr_cursor_open(e.get(), &raw_c); s != TR_OK) return report(s);
  }
  CursorPtr c(raw_c);
  std::vector<double> values(columns > 0 ? columns - 1 : 0);
  long long emitted = 0;
  std::string batch;
  while (c && (limit < 0 || emitted < limit)) {
    double weight = 0.0;
    int has_row = 0;
    if (auto s = tr_cursor_next(c.get(), values.data(), values.size(), &weight, &has_row);
        s != TR_OK) {
      *out << batch;
      return report(s);
    }
    if (!has_row) break;
    for (double v : values) {
      put_number(batch, v);
      batch += ',';
    }
    put_number(batch, weight);
    batch += '\n';
    if (++emitted % kFlushEvery == 0) {
      *out << batch;
      out->flush();
      batch.clear();
    }
  }
  *out << batch;
  out->flush();
  if (!*out) {
    std::cerr << "thetarank: write failed\n";
    return TR_ERR_IO;
  }

  if (!o.stats.empty()) {
    std::string json = "{}";
    if (c) {
      char* text = nullptr;
      if (auto s = tr_cursor_stats_json(c.get(), &text); s != TR_OK) return report(s);
      json = text;
      tr_string_free(text);
    }
    std::ofstream st(o.stats);
    st << json << '\n';
    if (!st) {
      std::cerr << "thetarank: cannot write '" << o.stats << "'\n";
      return TR_ERR_IO;
    }
  }
  return 0;
}

int cmd_explain(const Options& o) {
  QueryPtr q;
  EnginePtr e;
  if (int rc = open_engine(o, q, e)) return rc;
  char* text = nullptr;
  if (auto s = tr_engine_explain(e.get(), &text); s != TR_OK) return report(s);
  std::cout << text;
  tr_string_free(text);
  return 0;
}

int cmd_generate(const Options& o) {
  const std::string dir = o.out.empty() ? "." : o.out;
  if (auto s = tr_generate(o.n, o.l, o.seed, dir.c_str()); s != TR_OK) return report(s);
  return 0;
}

int cmd_bench(const Options& o) {
  const std::string path = o.out.empty() ? "bench.csv" : o.out;
  if (auto s = tr_bench(o.suite.c_str(), o.seed, path.c_str()); s != TR_OK) {
    return report(s);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ranked enumeration for theta-join queries"};
  app.require_subcommand(1);
  Options o;

  const std::string method_list = "auto, binary, multiway, shared, direct, quadequi, batch";
  auto* run = app.add_subcommand("run", "Stream ranked answers as CSV");
  run->add_option("--query", o.query, "Query specification (JSON)")->required();
  run->add_option("--k", o.k, "Number of answers (default: spec limit, else all)");
  run->add_option("--method", o.method, "Evaluation method: " + method_list);
  run->add_flag("--unranked", o.unranked, "Enumerate in arbitrary order");
  run->add_option("--out", o.out, "Output CSV (default: stdout)");
  run->add_option("--stats", o.stats, "Write run statistics as JSON");

  auto* explain = app.add_subcommand("explain", "Print the plan and graph statistics");
  explain->add_option("--query", o.query, "Query specification (JSON)")->required();
  explain->add_option("--method", o.method, "Evaluation method: " + method_list);

  auto* generate = app.add_subcommand("generate", "Write synthetic relations S1..Sl");
  generate->add_option("--n", o.n, "Tuples per relation")->check(CLI::PositiveNumber);
  generate->add_option("--l", o.l, "Number of relations")->check(CLI::PositiveNumber);
  generate->add_option("--seed", o.seed, "Random seed");
  generate->add_option("--out", o.out, "Output directory");

  auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->add_option("--suite", o.suite, "smoke, scaling or methods")
      ->check(CLI::IsMember({"smoke", "scaling", "methods"}));
  bench->add_option("--seed", o.seed, "Random seed");
  bench->add_option("--out", o.out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (run->parsed()) return cmd_run(o);
  if (explain->parsed()) return cmd_explain(o);
  if (generate->parsed()) return cmd_generate(o);
  return cmd_bench(o);
}
