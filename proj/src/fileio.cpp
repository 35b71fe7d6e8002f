#include "fileio.hpp"

#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "json.hpp"

namespace summax {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  require(!j.is_discarded(), ErrorKind::parse, std::string(what) + ": invalid JSON");
  return j;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const char* what) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) known = true;
    require(known, ErrorKind::parse, std::string(what) + ": unknown key '" + it.key() + "'");
  }
}

double as_number(const json& j, const char* what) {
  require(j.is_number(), ErrorKind::parse, std::string(what) + ": expected a number");
  return j.get<double>();
}

int as_int(const json& j, const char* what) {
  require(j.is_number_integer(), ErrorKind::parse, std::string(what) + ": expected an integer");
  return j.get<int>();
}

LoadedFunction from_json(const json& j) {
  require(j.is_object(), ErrorKind::parse, "set function: expected an object");
  require(j.contains("type") && j["type"].is_string(), ErrorKind::parse,
          "set function: missing 'type'");
  const std::string type = j["type"].get<std::string>();
  if (type == "summax") {
    reject_unknown_keys(j, {"type", "L", "N", "V", "empty"}, "set function");
    require(j.contains("L") && j.contains("N") && j.contains("V") && j.contains("empty"),
            ErrorKind::parse, "set function: summax needs L, N, V, empty");
    const int arms = as_int(j["L"], "L");
    const int rows = as_int(j["N"], "N");
    require(j["V"].is_array() && static_cast<int>(j["V"].size()) == rows, ErrorKind::parse,
            "set function: V must be an N-row array");
    std::vector<double> values;
    values.reserve(static_cast<size_t>(rows) * std::max(arms, 0));
    for (const auto& row : j["V"]) {
      require(row.is_array() && static_cast<int>(row.size()) == arms, ErrorKind::parse,
              "set function: V rows must have L entries");
      for (const auto& v : row) values.push_back(as_number(v, "V entry"));
    }
    return SumMaxFunction::make(rows, arms, std::move(values), as_number(j["empty"], "empty"));
  }
  if (type == "table") {
    reject_unknown_keys(j, {"type", "L", "values"}, "set function");
    require(j.contains("L") && j.contains("values"), ErrorKind::parse,
            "set function: table needs L and values");
    const int arms = as_int(j["L"], "L");
    require(j["values"].is_array(), ErrorKind::parse, "set function: values must be an array");
    std::vector<double> table;
    table.reserve(j["values"].size());
    for (const auto& v : j["values"]) table.push_back(as_number(v, "table value"));
    return TabulatedSetFunction::make(arms, std::move(table));
  }
  fail(ErrorKind::parse, "set function: unknown type '" + type + "'");
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot open '" + path + "' for writing");
  out << text;
  require(out.good(), ErrorKind::io, "write to '" + path + "' failed");
}

LoadedFunction parse_set_function(const std::string& json_text) {
  return from_json(parse_json(json_text, "set function"));
}

LoadedFunction load_set_function(const std::string& path) {
  return parse_set_function(read_text_file(path));
}

std::string set_function_to_json(const LoadedFunction& fn) {
  json j;
  if (const auto* f = std::get_if<SumMaxFunction>(&fn)) {
    j["type"] = "summax";
    j["L"] = f->num_arms;
    j["N"] = f->num_rows;
    json rows = json::array();
    for (int k = 0; k < f->num_rows; ++k) {
      json row = json::array();
      for (int i = 0; i < f->num_arms; ++i) row.push_back(f->value_at(k, i));
      rows.push_back(std::move(row));
    }
    j["V"] = std::move(rows);
    j["empty"] = f->empty_value;
  } else {
    const auto& g = std::get<TabulatedSetFunction>(fn);
    j["type"] = "table";
    j["L"] = g.num_arms;
    j["values"] = g.table;
  }
  return j.dump();
}

void save_set_function(const LoadedFunction& fn, const std::string& path) {
  write_text_file(path, set_function_to_json(fn));
}

TabulatedSetFunction as_table(const LoadedFunction& fn, int limit) {
  if (const auto* g = std::get_if<TabulatedSetFunction>(&fn)) return *g;
  return tabulate(std::get<SumMaxFunction>(fn), limit);
}

int loaded_num_arms(const LoadedFunction& fn) {
  return std::visit([](const auto& f) { return f.num_arms; }, fn);
}

Script parse_script(const std::string& json_text) {
  const json j = parse_json(json_text, "script");
  require(j.is_object(), ErrorKind::parse, "script: expected an object");
  reject_unknown_keys(j, {"functions", "rounds", "cost_cap"}, "script");
  require(j.contains("functions") && j["functions"].is_object(), ErrorKind::parse,
          "script: missing 'functions' object");
  require(j.contains("rounds") && j["rounds"].is_array() && !j["rounds"].empty(),
          ErrorKind::parse, "script: missing nonempty 'rounds' array");

  Script script;
  std::vector<std::string> ids;
  for (auto it = j["functions"].begin(); it != j["functions"].end(); ++it) {
    script.functions.push_back(from_json(it.value()));
    ids.push_back(it.key());
  }
  require(!script.functions.empty(), ErrorKind::parse, "script: no functions defined");
  script.num_arms = loaded_num_arms(script.functions.front());

  double max_cost = 0.0;
  for (const auto& r : j["rounds"]) {
    require(r.is_object(), ErrorKind::parse, "script: round must be an object");
    reject_unknown_keys(r, {"fn", "costs"}, "script round");
    require(r.contains("fn") && r["fn"].is_string(), ErrorKind::parse,
            "script: round missing 'fn' id");
    const std::string id = r["fn"].get<std::string>();
    int index = -1;
    for (size_t k = 0; k < ids.size(); ++k)
      if (ids[k] == id) index = static_cast<int>(k);
    require(index >= 0, ErrorKind::parse, "script: round references unknown function '" + id + "'");
    ScriptRound round;
    round.fn_index = index;
    if (r.contains("costs")) {
      require(r["costs"].is_array(), ErrorKind::parse, "script: costs must be an array");
      for (const auto& c : r["costs"]) round.costs.push_back(as_number(c, "cost"));
    } else {
      round.costs.assign(static_cast<size_t>(script.num_arms), 0.0);
    }
    for (double c : round.costs) max_cost = std::max(max_cost, c);
    script.rounds.push_back(std::move(round));
  }
  script.cost_cap = j.contains("cost_cap") ? as_number(j["cost_cap"], "cost_cap") : max_cost;
  return script;
}

Script load_script(const std::string& path) { return parse_script(read_text_file(path)); }

}  // namespace summax
