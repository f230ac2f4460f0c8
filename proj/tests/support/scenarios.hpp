#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "mapek/scenario.hpp"

namespace mapek::testing {

inline std::string scenario_path(const std::string& name) { return std::string(MAPEK_SCENARIO_DIR) + "/" + name; }

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

inline Scenario load_scenario(const std::string& name) { return parse_scenario(read_file(scenario_path(name))); }

}  // namespace mapek::testing
