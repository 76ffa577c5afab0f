#pragma once

// CSV relations and JSON query specifications.
//
// CSV: a header row of column names, then comma-separated decimal numbers.
// One column may hold the tuple weights.
//
// Query spec (JSON):
//   {
//     "relations": [{"name": "R", "csv": "r.csv", "weight": "W"}, ...],
//     "atoms": ["R", {"relation": "R", "alias": "R2"}, ...],
//     "predicates": [<atom> | [<atom>, ...] | [[<atom>, ...], ...], ...],
//     "ranking": "min" | "max",
//     "limit": 10,
//     "method": "auto"
//   }
// An atom is {"kind": "<", "left": "R.A", "right": "S.B", "epsilon": 2}; a
// side may also be {"ref": "R.A", "scale": 2, "offset": 1}. A list of atoms
// is a conjunction and a list of lists a disjunction of conjunctions.
// "weight" is a column name or a number (constant weight; default 0). CSV
// paths are relative to the spec file.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "thetarank/model.hpp"

namespace thetarank {

struct WeightSpec {
  std::optional<std::string> column;
  double constant = 0.0;
};

Relation read_csv(const std::string& path, const std::string& name,
                  const WeightSpec& weight = {});
Relation parse_csv(std::istream& in, const std::string& name,
                   const WeightSpec& weight = {},
                   const std::string& source = "<stream>");

// Attributes followed by the weight column (omitted when empty).
void write_csv(const Relation& r, std::ostream& out,
               const std::string& weight_column = "W");
void write_csv(const Relation& r, const std::string& path,
               const std::string& weight_column = "W");

// Shortest decimal text that reads back as the same double.
std::string format_number(double v);

struct QuerySpec {
  JoinQuery query;
  std::optional<std::size_t> limit;
  std::optional<std::string> method;
};

QuerySpec load_query_spec(const std::string& path);
QuerySpec parse_query_spec(std::string_view text, const std::string& base_dir);

}  // namespace thetarank
