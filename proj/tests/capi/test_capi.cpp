// C API and command-line tests; links only the shared library.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "thetarank/thetarank.h"

namespace {

const std::string kData = THETARANK_DATA;
const std::string kCli = THETARANK_CLI;

struct Result {
  int status = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  const std::string cmd = kCli + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

double last_field(const std::string& line) {
  return std::stod(line.substr(line.rfind(',') + 1));
}

}  // namespace

TEST_CASE("C API round trip") {
  tr_query* q = nullptr;
  REQUIRE(tr_query_load((kData + "/example/query.json").c_str(), &q) == TR_OK);
  CHECK(tr_query_limit(q) == 10);
  CHECK(tr_query_method(q) == nullptr);

  tr_engine* e = nullptr;
  REQUIRE(tr_engine_create(q, "binary", 0, &e) == TR_OK);
  REQUIRE(tr_engine_column_count(e) == 9);
  CHECK(std::string(tr_engine_column_name(e, 0)) == "S.A");
  CHECK(std::string(tr_engine_column_name(e, 8)) == "weight");
  CHECK(tr_engine_column_name(e, 9) == nullptr);

  char* text = nullptr;
  REQUIRE(tr_engine_explain(e, &text) == TR_OK);
  CHECK(std::string(text).find("edge S -> T: S.A < T.B") != std::string::npos);
  tr_string_free(text);

  tr_cursor* c = nullptr;
  REQUIRE(tr_cursor_open(e, &c) == TR_OK);
  tr_engine_free(e);  // the cursor keeps the engine alive
  double values[8];
  double weight = 0, previous = -1;
  int has_row = 0;
  std::size_t rows = 0;
  while (true) {
    REQUIRE(tr_cursor_next(c, values, 8, &weight, &has_row) == TR_OK);
    if (!has_row) break;
    CHECK(weight >= previous);
    CHECK(values[0] < values[2]);  // S.A < T.B
    previous = weight;
    ++rows;
    std::uint32_t tids[4];
    std::size_t atoms = 0;
    CHECK(tr_cursor_choice(c, tids, 4, &atoms) == TR_OK);
    CHECK(atoms == 4);
  }
  CHECK(rows > 0);
  REQUIRE(tr_cursor_stats_json(c, &text) == TR_OK);
  CHECK(std::string(text).find("\"answers\": " + std::to_string(rows)) != std::string::npos);
  tr_string_free(text);
  tr_cursor_free(c);
  tr_query_free(q);
}

TEST_CASE("C API errors") {
  tr_query* q = nullptr;
  CHECK(tr_query_load("/nonexistent.json", &q) == TR_ERR_IO);
  CHECK(std::string(tr_last_error()).find("nonexistent") != std::string::npos);
  CHECK(tr_query_parse("{", ".", &q) == TR_ERR_PARSE);
  CHECK(tr_query_parse("{\"relations\": 3}", ".", &q) == TR_ERR_SCHEMA);
  CHECK(tr_query_load(nullptr, &q) == TR_ERR_INVALID_ARGUMENT);
  REQUIRE(tr_query_load((kData + "/qs1/query.json").c_str(), &q) == TR_OK);
  tr_engine* e = nullptr;
  CHECK(tr_engine_create(q, "fastest", 0, &e) == TR_ERR_UNSUPPORTED);
  REQUIRE(tr_engine_create(q, nullptr, 0, &e) == TR_OK);
  tr_cursor* c = nullptr;
  REQUIRE(tr_cursor_open(e, &c) == TR_OK);
  double small[1];
  int has_row = 0;
  CHECK(tr_cursor_next(c, small, 1, nullptr, &has_row) == TR_ERR_INVALID_ARGUMENT);
  tr_cursor_free(c);
  tr_engine_free(e);
  tr_query_free(q);
  CHECK(std::string(tr_status_name(TR_ERR_GUARD)) == "guard exceeded");
}

TEST_CASE("cli run") {
  const auto spec = kData + "/qs1/query.json";
  SUBCASE("k answers with nondecreasing weights") {
    const auto r = run("run --query " + spec + " --k 3");
    CHECK(r.status == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() == 4);
    CHECK(ls[0] == "S1.A1,S1.A2,S2.A3,S2.A4,weight");
    CHECK(last_field(ls[1]) <= last_field(ls[2]));
    CHECK(last_field(ls[2]) <= last_field(ls[3]));
  }
  SUBCASE("k = 0 prints the header only") {
    const auto r = run("run --query " + spec + " --k 0");
    CHECK(r.status == 0);
    CHECK(lines(r.out).size() == 1);
  }
  SUBCASE("spec limit applies without --k") {
    CHECK(lines(run("run --query " + spec).out).size() == 6);
  }
  SUBCASE("direct and binary give the same stream") {
    const auto a = run("run --query " + spec + " --k 500 --method direct");
    const auto b = run("run --query " + spec + " --k 500 --method binary");
    CHECK(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == run("run --query " + spec + " --k 500 --method batch").out);
    CHECK(a.out == run("run --query " + spec + " --k 500 --method quadequi").out);
  }
  SUBCASE("unranked output, stats and file output") {
    const auto dir = std::filesystem::temp_directory_path() / "thetarank_cli_run";
    std::filesystem::create_directories(dir);
    const auto out = dir / "out.csv";
    const auto stats = dir / "stats.json";
    const auto r = run("run --query " + spec + " --k 40 --unranked --out " +
                       out.string() + " --stats " + stats.string());
    CHECK(r.status == 0);
    CHECK(lines(slurp(out)).size() == 41);
    CHECK(slurp(stats).find("\"ranked\": false") != std::string::npos);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("exit statuses") {
    CHECK(run("run --query /nonexistent.json").status == 1);
    const auto dir = std::filesystem::temp_directory_path() / "thetarank_cli_bad";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{\"relations\": [";
    CHECK(run("run --query " + (dir / "bad.json").string()).status == 2);
    std::ofstream(dir / "schema.json") << "{\"relations\": [{\"name\": \"R\"}]}";
    CHECK(run("run --query " + (dir / "schema.json").string()).status == 3);
    CHECK(run("run --query " + spec + " --method nope").status == 4);
    CHECK(run("run").status == 6);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("cli explain") {
  const auto ex = run("explain --query " + kData + "/example/query.json");
  CHECK(ex.status == 0);
  CHECK(ex.out.find("edge S -> T: S.A < T.B  [predicates 2]") != std::string::npos);
  CHECK(ex.out.find("edge S -> R: S.A > R.E AND S.D = R.D") != std::string::npos);
  CHECK(ex.out.find("edge R -> U: R.E < U.F AND R.D = U.D") != std::string::npos);
  const auto tri = run("explain --query " + kData + "/triangle/query.json");
  CHECK(tri.out.find("plan: CYCLIC") != std::string::npos);
  CHECK(tri.out.find("residual: [2] T.F < R.A") != std::string::npos);
}

TEST_CASE("cli generate and bench") {
  const auto dir = std::filesystem::temp_directory_path() / "thetarank_cli_gen";
  std::filesystem::remove_all(dir);
  REQUIRE(run("generate --n 100 --l 2 --seed 5 --out " + (dir / "a").string()).status == 0);
  REQUIRE(run("generate --n 100 --l 2 --seed 5 --out " + (dir / "b").string()).status == 0);
  for (const char* f : {"S1.csv", "S2.csv"}) {
    const auto a = slurp(dir / "a" / f);
    CHECK(lines(a).size() == 101);
    CHECK(a == slurp(dir / "b" / f));
  }
  const auto bench = dir / "bench.csv";
  REQUIRE(run("bench --suite smoke --out " + bench.string()).status == 0);
  const auto rows = lines(slurp(bench));
  REQUIRE(rows.size() > 1);
  CHECK(rows[0].rfind("query,method,l,n,k,tt_k", 0) == 0);
  std::filesystem::remove_all(dir);
}
