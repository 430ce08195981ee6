#pragma once

// Experiment configuration: flat key/value text with typed sections.
// Every key is validated; unknown sections or keys are rejected with
// the offending name in the message. Serialization is canonical, so
// parse -> serialize -> parse is the identity.

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "table.hpp"
#include "params.hpp"

namespace sixv {

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds = {
        "simulate",      "kernel-table",  "duality",        "quadvar",         "stationarity",
        "self-averaging", "scaling-sweep", "gibbs-sample",   "empirical-field",
    };
    return kinds;
}

struct ExperimentConfig {
    std::string kind;

    // model block: either (b1, b2) or weak asymmetry (b1, eps)
    double b1 = 0.0;
    std::optional<double> b2;
    std::optional<double> eps;
    double rho = 0.5;

    // initial condition block
    std::string ic_kind = "bernoulli";  // step | bernoulli | explicit
    double ic_v = 0.5;
    int64_t ic_left = 0;
    std::string ic_occupancy;  // e.g. "101100"

    // grids
    std::vector<double> eps_grid;
    std::vector<int64_t> t_grid;
    std::vector<int64_t> site_grid;

    // run block
    std::size_t replicas = 0;
    uint64_t seed = 1;
    std::string out_dir;
    int threads = 1;
    int64_t horizon = 0;
    int64_t window_left = 0, window_right = 0;
    double v = 0.5;
    int64_t box_width = 64, box_height = 64;
    int64_t x_star = 0;
    bool step_shift = false;  // narrow-wedge shift in scaling sweeps

    ModelParams params() const {
        if (eps.has_value() && eps.value() > 0.0) return ModelParams::weak(b1, eps.value(), rho);
        if (!b2.has_value())
            throw std::invalid_argument("config: model needs either b2 or eps > 0");
        return ModelParams::general(b1, b2.value(), rho);
    }

    InitialCondition initial() const {
        if (ic_kind == "step") return InitialCondition::step();
        if (ic_kind == "bernoulli") return InitialCondition::bernoulli(ic_v);
        if (ic_kind == "explicit") {
            std::vector<uint8_t> occ;
            occ.reserve(ic_occupancy.size());
            for (char c : ic_occupancy) {
                if (c != '0' && c != '1')
                    throw std::invalid_argument("config: initial.occupancy must be a 0/1 string");
                occ.push_back(static_cast<uint8_t>(c - '0'));
            }
            return InitialCondition::explicit_occ(ic_left, occ);
        }
        throw std::invalid_argument("config: unknown initial.kind '" + ic_kind + "'");
    }

    void validate() const {
        bool known = false;
        for (const auto& k : experiment_kinds()) known = known || (k == kind);
        if (!known) throw std::invalid_argument("config: unknown experiment kind '" + kind + "'");
        if (!(b1 > 0.0 && b1 < 1.0))
            throw std::invalid_argument("config: model.b1 must lie in (0,1)");
        if (b2 && !(*b2 > 0.0 && *b2 < b1))
            throw std::invalid_argument("config: model.b2 must lie in (0, b1)");
        if (eps && !(*eps >= 0.0)) throw std::invalid_argument("config: model.eps must be >= 0");
        if (!b2 && !(eps && *eps > 0.0))
            throw std::invalid_argument("config: model needs b2 or positive eps");
        if (!(rho > 0.0 && rho < 1.0))
            throw std::invalid_argument("config: model.rho must lie in the open interval (0,1)");
        if (!(ic_v >= 0.0 && ic_v <= 1.0))
            throw std::invalid_argument("config: initial.v must lie in [0,1]");
        if (ic_kind == "explicit" && ic_occupancy.empty())
            throw std::invalid_argument("config: initial.occupancy required for explicit kind");
        if (ic_kind != "step" && ic_kind != "bernoulli" && ic_kind != "explicit")
            throw std::invalid_argument("config: unknown initial.kind '" + ic_kind + "'");
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("config: run.v must lie in [0,1]");
        for (double e : eps_grid)
            if (!(e > 0.0)) throw std::invalid_argument("config: grids.eps entries must be > 0");
        if (horizon < 0) throw std::invalid_argument("config: run.horizon must be >= 0");
        if (threads < 1) throw std::invalid_argument("config: run.threads must be >= 1");
        if (box_width < 1 || box_height < 1)
            throw std::invalid_argument("config: run.box dimensions must be positive");
        if (window_right < window_left)
            throw std::invalid_argument("config: run.window_right < run.window_left");
        params();    // side validation of the model block
        initial();   // and the initial condition block
    }

    static ExperimentConfig parse(const std::string& text);
    std::string serialize() const;
};

namespace detail {

struct KvFile {
    // section -> key -> value, insertion order preserved per section
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;

    static KvFile parse(const std::string& text) {
        KvFile f;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                if (b == std::string::npos) return std::string();
                const auto e = s.find_last_not_of(" \t\r");
                return s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw std::invalid_argument("config: malformed section header at line " +
                                                std::to_string(lineno));
                section = line.substr(1, line.size() - 2);
                f.sections[section];
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config: expected key = value at line " +
                                            std::to_string(lineno));
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument("config: empty key at line " + std::to_string(lineno));
            for (auto& [k, v] : f.sections[section])
                if (k == key)
                    throw std::invalid_argument("config: duplicate key '" + key + "' in [" +
                                                section + "]");
            f.sections[section].emplace_back(key, val);
        }
        return f;
    }
};

inline double to_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: " + where + " expects a number, got '" + s + "'");
    }
}

inline int64_t to_int(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: " + where + " expects an integer, got '" + s + "'");
    }
}

inline bool to_bool(const std::string& s, const std::string& where) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("config: " + where + " expects true/false, got '" + s + "'");
}

} // namespace detail

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    using detail::to_bool;
    using detail::to_double;
    using detail::to_int;
    const auto kv = detail::KvFile::parse(text);
    ExperimentConfig c;
    for (const auto& [section, entries] : kv.sections) {
        for (const auto& [key, val] : entries) {
            const std::string where = "[" + section + "] " + key;
            if (section.empty() && key == "experiment") {
                c.kind = val;
            } else if (section == "model") {
                if (key == "b1") c.b1 = to_double(val, where);
                else if (key == "b2") c.b2 = to_double(val, where);
                else if (key == "eps") c.eps = to_double(val, where);
                else if (key == "rho") c.rho = to_double(val, where);
                else throw std::invalid_argument("config: unknown key '" + where + "'");
            } else if (section == "initial") {
                if (key == "kind") c.ic_kind = val;
                else if (key == "v") c.ic_v = to_double(val, where);
                else if (key == "left") c.ic_left = to_int(val, where);
                else if (key == "occupancy") c.ic_occupancy = val;
                else throw std::invalid_argument("config: unknown key '" + where + "'");
            } else if (section == "grids") {
                std::istringstream is(val);
                std::string tok;
                if (key == "eps") {
                    while (is >> tok) c.eps_grid.push_back(to_double(tok, where));
                } else if (key == "t") {
                    while (is >> tok) c.t_grid.push_back(to_int(tok, where));
                } else if (key == "sites") {
                    while (is >> tok) c.site_grid.push_back(to_int(tok, where));
                } else {
                    throw std::invalid_argument("config: unknown key '" + where + "'");
                }
            } else if (section == "run") {
                if (key == "replicas") c.replicas = static_cast<std::size_t>(to_int(val, where));
                else if (key == "seed") c.seed = static_cast<uint64_t>(to_int(val, where));
                else if (key == "out") c.out_dir = val;
                else if (key == "threads") c.threads = static_cast<int>(to_int(val, where));
                else if (key == "horizon") c.horizon = to_int(val, where);
                else if (key == "window_left") c.window_left = to_int(val, where);
                else if (key == "window_right") c.window_right = to_int(val, where);
                else if (key == "v") c.v = to_double(val, where);
                else if (key == "box_width") c.box_width = to_int(val, where);
                else if (key == "box_height") c.box_height = to_int(val, where);
                else if (key == "x_star") c.x_star = to_int(val, where);
                else if (key == "step_shift") c.step_shift = to_bool(val, where);
                else throw std::invalid_argument("config: unknown key '" + where + "'");
            } else {
                throw std::invalid_argument("config: unknown section '[" + section + "]'");
            }
        }
    }
    c.validate();
    return c;
}

inline std::string ExperimentConfig::serialize() const {
    std::ostringstream os;
    os << "# sixv config v1\n";
    os << "experiment = " << kind << "\n\n";
    os << "[model]\n";
    os << "b1 = " << format_double(b1) << "\n";
    if (b2) os << "b2 = " << format_double(*b2) << "\n";
    if (eps) os << "eps = " << format_double(*eps) << "\n";
    os << "rho = " << format_double(rho) << "\n\n";
    os << "[initial]\n";
    os << "kind = " << ic_kind << "\n";
    os << "v = " << format_double(ic_v) << "\n";
    if (ic_kind == "explicit") {
        os << "left = " << ic_left << "\n";
        os << "occupancy = " << ic_occupancy << "\n";
    }
    os << "\n[grids]\n";
    auto join_d = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? " " : "") + format_double(v[i]);
        return s;
    };
    auto join_i = [](const std::vector<int64_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
        return s;
    };
    if (!eps_grid.empty()) os << "eps = " << join_d(eps_grid) << "\n";
    if (!t_grid.empty()) os << "t = " << join_i(t_grid) << "\n";
    if (!site_grid.empty()) os << "sites = " << join_i(site_grid) << "\n";
    os << "\n[run]\n";
    os << "replicas = " << replicas << "\n";
    os << "seed = " << seed << "\n";
    if (!out_dir.empty()) os << "out = " << out_dir << "\n";
    os << "threads = " << threads << "\n";
    os << "horizon = " << horizon << "\n";
    if (window_left != 0 || window_right != 0) {
        os << "window_left = " << window_left << "\n";
        os << "window_right = " << window_right << "\n";
    }
    os << "v = " << format_double(v) << "\n";
    os << "box_width = " << box_width << "\n";
    os << "box_height = " << box_height << "\n";
    os << "x_star = " << x_star << "\n";
    os << "step_shift = " << (step_shift ? "true" : "false") << "\n";
    return os.str();
}

} // namespace sixv
