#include "cellsched/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "cellsched/csv.hpp"
#include "cellsched/errors.hpp"

namespace cellsched {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

[[noreturn]] void bad(const std::string& what) {
    throw ConfigError(what);
}

double to_double(const std::string& section, const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE) {
        bad("key '" + key + "' in section [" + section + "] is not a number: '" + value + "'");
    }
    return v;
}

long long to_int(const std::string& section, const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE) {
        bad("key '" + key + "' in section [" + section + "] is not an integer: '" + value + "'");
    }
    return v;
}

std::uint64_t to_u64(const std::string& section, const std::string& key,
                     const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE || value.find('-') == 0) {
        bad("key '" + key + "' in section [" + section +
            "] is not an unsigned integer: '" + value + "'");
    }
    return v;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& value) {
    if (value == "true") {
        return true;
    }
    if (value == "false") {
        return false;
    }
    bad("key '" + key + "' in section [" + section + "] must be true or false");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : value) {
        if (c == ',') {
            parts.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(trim(current));
    return parts;
}

std::vector<double> to_double_list(const std::string& section, const std::string& key,
                                   const std::string& value) {
    std::vector<double> out;
    for (const std::string& part : split_list(value)) {
        out.push_back(to_double(section, key, part));
    }
    return out;
}

std::vector<int> to_int_list(const std::string& section, const std::string& key,
                             const std::string& value) {
    std::vector<int> out;
    for (const std::string& part : split_list(value)) {
        out.push_back(static_cast<int>(to_int(section, key, part)));
    }
    return out;
}

void check_choice(const std::string& section, const std::string& key, const std::string& value,
                  const std::set<std::string>& allowed) {
    if (allowed.count(value) == 0) {
        bad("key '" + key + "' in section [" + section + "] has unsupported value '" + value +
            "'");
    }
}

} // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::set<std::string> seen;
    int line_no = 0;

    const std::set<std::string> sections = {"run",     "chain",   "cells", "init", "sim",
                                            "dp",      "whittle", "condition"};
    const std::set<std::string> policies = {"greedy", "pattern", "random", "index", "dp-optimal"};

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') {
            continue;
        }
        if (t.front() == '[') {
            if (t.back() != ']') {
                bad("malformed section header at line " + std::to_string(line_no));
            }
            section = trim(t.substr(1, t.size() - 2));
            if (sections.count(section) == 0) {
                bad("unknown section [" + section + "]");
            }
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            bad("expected key=value at line " + std::to_string(line_no));
        }
        if (section.empty()) {
            bad("key outside any section at line " + std::to_string(line_no));
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!seen.insert(section + "." + key).second) {
            bad("duplicate key '" + key + "' in section [" + section + "]");
        }

        if (section == "run") {
            if (key == "seed") {
                cfg.seed = to_u64(section, key, value);
                cfg.seed_set = true;
            } else if (key == "workers") {
                cfg.workers = static_cast<int>(to_int(section, key, value));
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else {
                bad("unknown key '" + key + "' in section [run]");
            }
        } else if (section == "chain") {
            if (key == "p") {
                cfg.p = to_double(section, key, value);
            } else if (key == "r") {
                cfg.r = to_double(section, key, value);
            } else {
                bad("unknown key '" + key + "' in section [chain]");
            }
        } else if (section == "cells") {
            if (key == "near") {
                cfg.near = static_cast<int>(to_int(section, key, value));
            } else if (key == "far") {
                cfg.far = static_cast<int>(to_int(section, key, value));
            } else {
                bad("unknown key '" + key + "' in section [cells]");
            }
        } else if (section == "init") {
            if (key == "near1") {
                cfg.init_near1 = to_double_list(section, key, value);
            } else if (key == "far1") {
                cfg.init_far1 = to_double_list(section, key, value);
            } else if (key == "near2") {
                cfg.init_near2 = to_double_list(section, key, value);
            } else if (key == "far2") {
                cfg.init_far2 = to_double_list(section, key, value);
            } else {
                bad("unknown key '" + key + "' in section [init]");
            }
        } else if (section == "sim") {
            if (key == "scenario") {
                check_choice(section, key, value, {"asymmetric", "fixed-pattern", "rmab-v"});
                cfg.scenario = value;
            } else if (key == "policy") {
                check_choice(section, key, value, policies);
                cfg.policy = value;
            } else if (key == "baseline") {
                check_choice(section, key, value, policies);
                cfg.baseline = value;
            } else if (key == "episodes") {
                cfg.episodes = static_cast<int>(to_int(section, key, value));
            } else if (key == "horizon") {
                cfg.sim_horizon = static_cast<int>(to_int(section, key, value));
            } else if (key == "traces") {
                cfg.traces = to_bool(section, key, value);
            } else if (key == "index_horizon") {
                cfg.index_horizon = static_cast<int>(to_int(section, key, value));
            } else if (key == "pattern") {
                cfg.pattern = value;
            } else {
                bad("unknown key '" + key + "' in section [sim]");
            }
        } else if (section == "dp") {
            if (key == "mode") {
                check_choice(section, key, value, {"two-cell", "pattern", "single-group"});
                cfg.dp_mode = value;
            } else if (key == "horizon") {
                cfg.dp_horizon = static_cast<int>(to_int(section, key, value));
            } else if (key == "users") {
                cfg.dp_users = static_cast<int>(to_int(section, key, value));
            } else if (key == "gaps") {
                cfg.dp_gaps = to_int_list(section, key, value);
            } else if (key == "init") {
                cfg.dp_init = to_double_list(section, key, value);
            } else if (key == "feedback") {
                check_choice(section, key, value, {"reset-only", "reset-and-decay"});
                cfg.dp_feedback = value;
            } else if (key == "node_budget") {
                cfg.node_budget = to_u64(section, key, value);
            } else if (key == "check_greedy") {
                cfg.check_greedy = to_bool(section, key, value);
            } else {
                bad("unknown key '" + key + "' in section [dp]");
            }
        } else if (section == "whittle") {
            if (key == "horizon") {
                cfg.whittle_horizon = static_cast<int>(to_int(section, key, value));
            } else if (key == "grid_n") {
                cfg.grid_n = static_cast<int>(to_int(section, key, value));
            } else if (key == "grid_step") {
                cfg.grid_step = to_double(section, key, value);
            } else if (key == "tolerance") {
                cfg.tolerance = to_double(section, key, value);
            } else if (key == "widened") {
                cfg.widened = to_bool(section, key, value);
            } else {
                bad("unknown key '" + key + "' in section [whittle]");
            }
        } else if (section == "condition") {
            if (key == "users") {
                cfg.cond_users = static_cast<int>(to_int(section, key, value));
            } else if (key == "horizon") {
                cfg.cond_horizon = static_cast<int>(to_int(section, key, value));
            } else if (key == "gaps") {
                cfg.cond_gaps = to_int_list(section, key, value);
            } else {
                bad("unknown key '" + key + "' in section [condition]");
            }
        }
    }

    if (!cfg.seed_set) {
        bad("missing required key 'seed' in section [run]");
    }
    // Both chain probabilities or neither; a half-specified chain is a typo.
    const bool has_p = seen.count("chain.p") > 0;
    const bool has_r = seen.count("chain.r") > 0;
    if (has_p != has_r) {
        bad("section [chain] needs both p and r");
    }
    cfg.chain_set = has_p && has_r;
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

namespace {

std::string join_doubles(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += csv_double(xs[i]);
    }
    return out;
}

std::string join_ints(const std::vector<int>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += std::to_string(xs[i]);
    }
    return out;
}

} // namespace

void serialize_config(const RunConfig& c, std::ostream& out) {
    out << "[run]\n";
    out << "seed = " << c.seed << "\n";
    out << "workers = " << c.workers << "\n";
    out << "out_dir = " << c.out_dir << "\n";
    if (c.chain_set) {
        out << "[chain]\n";
        out << "p = " << csv_double(c.p) << "\n";
        out << "r = " << csv_double(c.r) << "\n";
    }
    out << "[cells]\n";
    out << "near = " << c.near << "\n";
    out << "far = " << c.far << "\n";
    if (!c.init_near1.empty() || !c.init_far1.empty() || !c.init_near2.empty() ||
        !c.init_far2.empty()) {
        out << "[init]\n";
        if (!c.init_near1.empty()) out << "near1 = " << join_doubles(c.init_near1) << "\n";
        if (!c.init_far1.empty()) out << "far1 = " << join_doubles(c.init_far1) << "\n";
        if (!c.init_near2.empty()) out << "near2 = " << join_doubles(c.init_near2) << "\n";
        if (!c.init_far2.empty()) out << "far2 = " << join_doubles(c.init_far2) << "\n";
    }
    out << "[sim]\n";
    out << "scenario = " << c.scenario << "\n";
    if (!c.policy.empty()) out << "policy = " << c.policy << "\n";
    if (!c.baseline.empty()) out << "baseline = " << c.baseline << "\n";
    out << "episodes = " << c.episodes << "\n";
    out << "horizon = " << c.sim_horizon << "\n";
    out << "traces = " << (c.traces ? "true" : "false") << "\n";
    out << "index_horizon = " << c.index_horizon << "\n";
    if (!c.pattern.empty()) out << "pattern = " << c.pattern << "\n";
    out << "[dp]\n";
    out << "mode = " << c.dp_mode << "\n";
    out << "horizon = " << c.dp_horizon << "\n";
    out << "users = " << c.dp_users << "\n";
    if (!c.dp_gaps.empty()) out << "gaps = " << join_ints(c.dp_gaps) << "\n";
    if (!c.dp_init.empty()) out << "init = " << join_doubles(c.dp_init) << "\n";
    out << "feedback = " << c.dp_feedback << "\n";
    out << "node_budget = " << c.node_budget << "\n";
    out << "check_greedy = " << (c.check_greedy ? "true" : "false") << "\n";
    out << "[whittle]\n";
    out << "horizon = " << c.whittle_horizon << "\n";
    out << "grid_n = " << c.grid_n << "\n";
    out << "grid_step = " << csv_double(c.grid_step) << "\n";
    out << "tolerance = " << csv_double(c.tolerance) << "\n";
    out << "widened = " << (c.widened ? "true" : "false") << "\n";
    out << "[condition]\n";
    out << "users = " << c.cond_users << "\n";
    out << "horizon = " << c.cond_horizon << "\n";
    if (!c.cond_gaps.empty()) out << "gaps = " << join_ints(c.cond_gaps) << "\n";
}

} // namespace cellsched
