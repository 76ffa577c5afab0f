#include "thetarank/thetarank.h"

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "thetarank/bench.hpp"
#include "thetarank/engine.hpp"
#include "thetarank/error.hpp"
#include "thetarank/io.hpp"
#include "thetarank/workbench.hpp"

using namespace thetarank;

struct tr_query {
  QuerySpec spec;
};

struct tr_engine {
  std::shared_ptr<const Engine> engine;
  std::vector<std::string> columns;
};

struct tr_cursor {
  std::shared_ptr<const Engine> engine;
  std::unique_ptr<AnswerStream> stream;
  OpenStats stats;
  std::chrono::steady_clock::time_point started;
  std::size_t answers = 0;
  std::vector<Tid> last;
};

namespace {

thread_local std::string last_error;

tr_status fail(tr_status s, const std::string& message) {
  last_error = message;
  return s;
}

template <typename F>
tr_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return TR_OK;
  } catch (const Error& e) {
    return fail(static_cast<tr_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TR_ERR_GUARD, "out of memory");
  } catch (const std::exception& e) {
    return fail(TR_ERR_INTERNAL, e.what());
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* tr_last_error(void) { return last_error.c_str(); }

const char* tr_status_name(tr_status status) {
  switch (status) {
    case TR_OK: return "ok";
    case TR_ERR_IO: return "io error";
    case TR_ERR_PARSE: return "parse error";
    case TR_ERR_SCHEMA: return "schema error";
    case TR_ERR_UNSUPPORTED: return "unsupported";
    case TR_ERR_GUARD: return "guard exceeded";
    case TR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void tr_string_free(char* s) { std::free(s); }

tr_status tr_query_load(const char* path, tr_query** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new tr_query{load_query_spec(path)};
  });
}

tr_status tr_query_parse(const char* json, const char* base_dir, tr_query** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new tr_query{parse_query_spec(json, base_dir ? base_dir : ".")};
  });
}

void tr_query_free(tr_query* q) { delete q; }

int64_t tr_query_limit(const tr_query* q) {
  if (!q || !q->spec.limit) return -1;
  return static_cast<int64_t>(*q->spec.limit);
}

const char* tr_query_method(const tr_query* q) {
  if (!q || !q->spec.method) return nullptr;
  return q->spec.method->c_str();
}

tr_status tr_engine_create(const tr_query* q, const char* method, int unranked,
                           tr_engine** out) {
  return guarded([&] {
    require(q, "query");
    require(out, "out");
    EngineOptions opts;
    const std::string name = method ? method : q->spec.method.value_or("auto");
    const auto m = parse_engine_method(name);
    if (!m) throw UnsupportedError("unknown method '" + name + "'");
    opts.method = *m;
    opts.unranked = unranked != 0;
    auto engine = std::make_shared<const Engine>(q->spec.query, opts);
    auto columns = engine->column_names();
    *out = new tr_engine{std::move(engine), std::move(columns)};
  });
}

void tr_engine_free(tr_engine* e) { delete e; }

tr_status tr_engine_explain(const tr_engine* e, char** out) {
  return guarded([&] {
    require(e, "engine");
    require(out, "out");
    *out = duplicate(e->engine->explain());
  });
}

size_t tr_engine_column_count(const tr_engine* e) {
  return e ? e->columns.size() : 0;
}

const char* tr_engine_column_name(const tr_engine* e, size_t i) {
  if (!e || i >= e->columns.size()) return nullptr;
  return e->columns[i].c_str();
}

tr_status tr_cursor_open(const tr_engine* e, tr_cursor** out) {
  return guarded([&] {
    require(e, "engine");
    require(out, "out");
    auto c = std::make_unique<tr_cursor>();
    c->engine = e->engine;
    c->started = std::chrono::steady_clock::now();
    c->stream = c->engine->open(&c->stats);
    *out = c.release();
  });
}

tr_status tr_cursor_next(tr_cursor* c, double* values, size_t capacity,
                         double* weight, int* has_row) {
  return guarded([&] {
    require(c, "cursor");
    require(has_row, "has_row");
    *has_row = 0;
    auto a = c->stream->next();
    if (!a) return;
    const auto& q = c->engine->query();
    std::size_t need = 0;
    for (const auto& r : q.atoms()) need += r->arity();
    if (need > 0) require(values, "values");
    if (capacity < need) throw InvalidArgument("values buffer too small");
    std::size_t k = 0;
    for (std::size_t i = 0; i < q.atom_count(); ++i) {
      for (double v : q.atom(i).tuple(a->choice[i]).values) values[k++] = v;
    }
    if (weight) *weight = a->weight;
    c->last = std::move(a->choice);
    ++c->answers;
    *has_row = 1;
  });
}

tr_status tr_cursor_choice(const tr_cursor* c, uint32_t* tids, size_t capacity,
                           size_t* atoms) {
  return guarded([&] {
    require(c, "cursor");
    if (atoms) *atoms = c->last.size();
    if (capacity < c->last.size()) throw InvalidArgument("tids buffer too small");
    if (!c->last.empty()) require(tids, "tids");
    std::copy(c->last.begin(), c->last.end(), tids);
  });
}

tr_status tr_cursor_stats_json(const tr_cursor* c, char** out) {
  return guarded([&] {
    require(c, "cursor");
    require(out, "out");
    const double total = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - c->started)
                             .count();
    *out = duplicate(stats_json(*c->engine, c->stats, c->answers, total));
  });
}

void tr_cursor_free(tr_cursor* c) { delete c; }

tr_status tr_generate(size_t n, size_t l, uint64_t seed, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError(std::string("cannot create '") + out_dir + "': " + ec.message());
    for (const auto& r : gen_synthetic(n, l, seed)) {
      write_csv(r, (std::filesystem::path(out_dir) / (r.name() + ".csv")).string());
    }
  });
}

tr_status tr_bench(const char* suite, uint64_t seed, const char* out_csv) {
  return guarded([&] {
    require(suite, "suite");
    require(out_csv, "out_csv");
    std::ofstream out(out_csv);
    if (!out) throw IoError(std::string("cannot write '") + out_csv + "'");
    run_bench(suite, seed, out);
    if (!out) throw IoError(std::string("write to '") + out_csv + "' failed");
  });
}

}  // extern "C"
