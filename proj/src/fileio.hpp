#pragma once
// JSON file formats: set functions ({"type":"summax",...} / {"type":"table",...})
// and adversary scripts ({"functions":{...},"rounds":[...]}). Bitmask order is
// index = sum_{i in S} 2^(i-1).

#include <string>
#include <variant>

#include "envs.hpp"
#include "setfn.hpp"

namespace summax {

using LoadedFunction = std::variant<SumMaxFunction, TabulatedSetFunction>;

LoadedFunction parse_set_function(const std::string& json_text);
LoadedFunction load_set_function(const std::string& path);
std::string set_function_to_json(const LoadedFunction& fn);
void save_set_function(const LoadedFunction& fn, const std::string& path);

// Tabulates a loaded function if needed (tables pass through).
TabulatedSetFunction as_table(const LoadedFunction& fn, int limit = 0);
int loaded_num_arms(const LoadedFunction& fn);

Script parse_script(const std::string& json_text);
Script load_script(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace summax
