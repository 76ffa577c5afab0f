#include "thetarank/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "thetarank/error.hpp"

namespace thetarank {

namespace {

using json = nlohmann::json;

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_number(std::string_view text, const std::string& where) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(where + ": not a number: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

Relation parse_csv(std::istream& in, const std::string& name,
                   const WeightSpec& weight, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": missing header");
  std::vector<std::string> header;
  for (auto cell : split_row(line)) header.emplace_back(trim(cell));
  std::optional<std::size_t> weight_col;
  std::vector<std::string> attrs;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) throw ParseError(source + ": empty column name");
    if (weight.column && header[c] == *weight.column) {
      weight_col = c;
    } else {
      attrs.push_back(header[c]);
    }
  }
  if (weight.column && !weight_col) {
    throw SchemaError(source + ": no weight column '" + *weight.column + "'");
  }
  Relation r(name, attrs);
  std::size_t row = 1;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    const std::string where = source + ":" + std::to_string(row);
    if (cells.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(cells.size()));
    }
    values.clear();
    double w = weight.constant;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_number(cells[c], where);
      if (weight_col && c == *weight_col) {
        w = v;
      } else {
        values.push_back(v);
      }
    }
    r.add(values, w);
  }
  return r;
}

Relation read_csv(const std::string& path, const std::string& name,
                  const WeightSpec& weight) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_csv(in, name, weight, path);
}

void write_csv(const Relation& r, std::ostream& out,
               const std::string& weight_column) {
  for (std::size_t c = 0; c < r.arity(); ++c) {
    out << (c ? "," : "") << r.attributes()[c];
  }
  if (!weight_column.empty()) out << (r.arity() ? "," : "") << weight_column;
  out << '\n';
  for (const auto& t : r.tuples()) {
    for (std::size_t c = 0; c < t.values.size(); ++c) {
      out << (c ? "," : "") << format_number(t.values[c]);
    }
    if (!weight_column.empty()) {
      out << (r.arity() ? "," : "") << format_number(t.weight);
    }
    out << '\n';
  }
}

void write_csv(const Relation& r, const std::string& path,
               const std::string& weight_column) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_csv(r, out, weight_column);
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

AttrRef parse_ref(const json& j) {
  auto split = [](const std::string& s) {
    const auto dot = s.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == s.size()) {
      throw SchemaError("attribute reference '" + s + "' is not Relation.Attribute");
    }
    return AttrRef{s.substr(0, dot), s.substr(dot + 1)};
  };
  if (j.is_string()) return split(j.get<std::string>());
  if (j.is_object() && j.contains("ref") && j["ref"].is_string()) {
    AttrRef r = split(j["ref"].get<std::string>());
    if (j.contains("scale")) r.scale = j["scale"].get<double>();
    if (j.contains("offset")) r.offset = j["offset"].get<double>();
    return r;
  }
  throw SchemaError("bad attribute reference: " + j.dump());
}

AtomicPredicate parse_atom(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("left") ||
      !j.contains("right")) {
    throw SchemaError("predicate needs kind, left and right: " + j.dump());
  }
  const auto kind_text = j["kind"].get<std::string>();
  const auto kind = parse_predicate_kind(kind_text);
  if (!kind) throw SchemaError("unknown predicate kind '" + kind_text + "'");
  std::optional<double> eps;
  if (j.contains("epsilon") && !j["epsilon"].is_null()) {
    eps = j["epsilon"].get<double>();
  }
  auto p = AtomicPredicate::make(*kind, parse_ref(j["left"]), parse_ref(j["right"]), eps);
  p.check();
  return p;
}

Conjunction parse_conjunction(const json& j) {
  if (j.is_object()) return {parse_atom(j)};
  if (!j.is_array() || j.empty()) throw SchemaError("empty conjunction: " + j.dump());
  Conjunction c;
  for (const auto& a : j) c.push_back(parse_atom(a));
  return c;
}

PredicateDNF parse_predicate(const json& j) {
  if (j.is_object()) return PredicateDNF::atom(parse_atom(j));
  if (!j.is_array() || j.empty()) throw SchemaError("empty predicate: " + j.dump());
  if (j.front().is_object()) return PredicateDNF::conjunction(parse_conjunction(j));
  PredicateDNF dnf;
  for (const auto& c : j) dnf.disjuncts.push_back(parse_conjunction(c));
  return dnf;
}

QuerySpec build_spec(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw SchemaError("query spec must be a JSON object");
  if (!doc.contains("relations") || !doc["relations"].is_array()) {
    throw SchemaError("query spec needs a 'relations' list");
  }
  std::map<std::string, std::shared_ptr<const Relation>> loaded;
  for (const auto& r : doc["relations"]) {
    if (!r.contains("name") || !r.contains("csv")) {
      throw SchemaError("relation needs name and csv: " + r.dump());
    }
    const auto name = r["name"].get<std::string>();
    WeightSpec w;
    if (r.contains("weight")) {
      if (r["weight"].is_string()) {
        w.column = r["weight"].get<std::string>();
      } else if (r["weight"].is_number()) {
        w.constant = r["weight"].get<double>();
      } else {
        throw SchemaError("weight must be a column name or a number");
      }
    }
    std::filesystem::path csv = r["csv"].get<std::string>();
    if (csv.is_relative()) csv = std::filesystem::path(base_dir) / csv;
    if (loaded.count(name)) throw SchemaError("relation '" + name + "' listed twice");
    loaded[name] = std::make_shared<const Relation>(read_csv(csv.string(), name, w));
  }

  std::vector<std::shared_ptr<const Relation>> atoms;
  if (doc.contains("atoms")) {
    for (const auto& a : doc["atoms"]) {
      std::string rel, alias;
      if (a.is_string()) {
        rel = alias = a.get<std::string>();
      } else if (a.is_object() && a.contains("relation")) {
        rel = a["relation"].get<std::string>();
        alias = a.value("alias", rel);
      } else {
        throw SchemaError("bad atom: " + a.dump());
      }
      const auto it = loaded.find(rel);
      if (it == loaded.end()) throw SchemaError("unknown relation '" + rel + "'");
      atoms.push_back(alias == rel ? it->second
                                   : std::make_shared<const Relation>(
                                         it->second->renamed(alias)));
    }
  } else {
    for (const auto& r : doc["relations"]) {
      atoms.push_back(loaded[r["name"].get<std::string>()]);
    }
  }

  std::vector<PredicateDNF> preds;
  if (doc.contains("predicates")) {
    for (const auto& p : doc["predicates"]) preds.push_back(parse_predicate(p));
  }
  Direction dir = Direction::kMin;
  if (doc.contains("ranking")) {
    const auto r = doc["ranking"].get<std::string>();
    if (r == "max" || r == "MAX") {
      dir = Direction::kMax;
    } else if (r != "min" && r != "MIN") {
      throw SchemaError("ranking must be min or max");
    }
  }
  QuerySpec spec{JoinQuery(std::move(atoms), std::move(preds), dir), {}, {}};
  if (doc.contains("limit") && !doc["limit"].is_null()) {
    spec.limit = doc["limit"].get<std::size_t>();
  }
  if (doc.contains("method")) spec.method = doc["method"].get<std::string>();
  spec.query.validate();
  return spec;
}

}  // namespace

QuerySpec parse_query_spec(std::string_view text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("query spec: ") + e.what());
  }
  try {
    return build_spec(doc, base_dir);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("query spec: ") + e.what());
  }
}

QuerySpec load_query_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_query_spec(buf.str(), dir.empty() ? "." : dir);
}

}  // namespace thetarank
