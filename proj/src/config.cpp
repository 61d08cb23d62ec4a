#include "nlsrecon/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace nlsrecon {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::vector<std::string> tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

double to_double(const std::string& s) {
    const std::string t = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw FormatError("expected a number, got '" + t + "'");
    return v;
}

long long to_integer(const std::string& s) {
    const std::string t = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw FormatError("expected an integer, got '" + t + "'");
    return v;
}

Phantom preset(const std::string& name) {
    if (name == "none") return {};
    if (name == "test1") return Phantom::test1();
    if (name == "test2") return Phantom::test2();
    if (name == "test3") return Phantom::test3();
    throw FormatError("unknown phantom preset '" + name + "' (expected none, test1, test2 or test3)");
}

Shape parse_shape(const std::vector<std::string>& t) {
    if (t.empty()) throw FormatError("empty shape");
    const std::string& kind = t[0];
    auto args = [&](std::size_t n) {
        if (t.size() != n + 1)
            throw FormatError("shape '" + kind + "' takes " + std::to_string(n) + " numbers, got " +
                              std::to_string(t.size() - 1));
        std::vector<double> v;
        for (std::size_t i = 1; i < t.size(); ++i) v.push_back(to_double(t[i]));
        return v;
    };
    if (kind == "disk") {
        const auto v = args(3);
        return Disk{v[0], v[1], v[2]};
    }
    if (kind == "rect") {
        const auto v = args(4);
        return AxisRect{v[0], v[1], v[2], v[3]};
    }
    if (kind == "square_ring") {
        const auto v = args(4);
        return SquareRing{v[0], v[1], v[2], v[3]};
    }
    if (kind == "annulus") {
        const auto v = args(4);
        return Annulus{v[0], v[1], v[2], v[3]};
    }
    if (kind == "strip") {
        const auto v = args(7);
        return SlantedStrip{v[0], v[1], v[2], AxisRect{v[3], v[4], v[5], v[6]}};
    }
    throw FormatError("unknown shape '" + kind + "'");
}

}  // namespace

Inclusion parse_inclusion(const std::string& text) {
    const auto parts = split(text, ';');
    if (parts.empty()) throw FormatError("empty inclusion");
    auto head = tokens(parts[0]);
    if (head.size() < 3) throw FormatError("inclusion needs '<re|im> <amplitude> <shape> ...'");
    Inclusion inc;
    if (head[0] == "re")
        inc.target = Component::Real;
    else if (head[0] == "im")
        inc.target = Component::Imag;
    else
        throw FormatError("inclusion target must be 're' or 'im', got '" + head[0] + "'");
    inc.amplitude = to_double(head[1]);
    if (!std::isfinite(inc.amplitude)) throw FormatError("inclusion amplitude must be finite");
    inc.shapes.push_back(parse_shape({head.begin() + 2, head.end()}));
    for (std::size_t i = 1; i < parts.size(); ++i) inc.shapes.push_back(parse_shape(tokens(parts[i])));
    return inc;
}

LsMethod parse_ls_method(const std::string& text) {
    if (text == "auto") return LsMethod::Auto;
    if (text == "direct") return LsMethod::Direct;
    if (text == "iterative") return LsMethod::Iterative;
    throw FormatError("ls_method must be auto, direct or iterative, got '" + text + "'");
}

std::string to_string(LsMethod method) {
    switch (method) {
        case LsMethod::Auto: return "auto";
        case LsMethod::Direct: return "direct";
        case LsMethod::Iterative: return "iterative";
    }
    return "auto";
}

PipelineConfig parse_pipeline_config(const std::string& text, const std::string& source_name,
                                     const std::vector<std::string>& overrides) {
    PipelineConfig cfg;
    InversionConfig& inv = cfg.inversion;
    std::vector<Inclusion> inclusions;

    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"name", [&](const std::string& v) { cfg.name = v; }},
        {"output_dir", [&](const std::string& v) { cfg.output_dir = v; }},
        {"half_width", [&](const std::string& v) { cfg.half_width = to_double(v); }},
        {"nx", [&](const std::string& v) { cfg.nx = static_cast<int>(to_integer(v)); }},
        {"dt", [&](const std::string& v) { cfg.dt = to_double(v); }},
        {"T", [&](const std::string& v) { cfg.horizon = to_double(v); }},
        {"p", [&](const std::string& v) { cfg.p = to_double(v); }},
        {"q", [&](const std::string& v) { cfg.q = to_double(v); }},
        {"phantom", [&](const std::string& v) {
             preset(v);
             cfg.phantom_preset = v;
         }},
        {"inclusion", [&](const std::string& v) { inclusions.push_back(parse_inclusion(v)); }},
        {"noise_delta", [&](const std::string& v) { cfg.noise_delta = to_double(v); }},
        {"seed", [&](const std::string& v) {
             const long long s = to_integer(v);
             if (s < 0) throw FormatError("seed must be nonnegative");
             cfg.seed = static_cast<std::uint64_t>(s);
         }},
        {"lambda", [&](const std::string& v) { inv.lambda = to_double(v); }},
        {"beta", [&](const std::string& v) { inv.beta = to_double(v); }},
        {"focus", [&](const std::string& v) {
             const auto xy = split(v, ',');
             if (xy.size() != 2) throw FormatError("focus needs 'x, y'");
             inv.focus = {to_double(xy[0]), to_double(xy[1])};
         }},
        {"epsilon", [&](const std::string& v) { inv.epsilon = to_double(v); }},
        {"n_modes", [&](const std::string& v) { inv.n_modes = static_cast<int>(to_integer(v)); }},
        {"n_quad", [&](const std::string& v) { cfg.n_quad = static_cast<int>(to_integer(v)); }},
        {"k_max", [&](const std::string& v) { inv.k_max = static_cast<int>(to_integer(v)); }},
        {"reg_w0", [&](const std::string& v) { inv.reg.w0 = to_double(v); }},
        {"reg_w1", [&](const std::string& v) { inv.reg.w1 = to_double(v); }},
        {"reg_w2", [&](const std::string& v) { inv.reg.w2 = to_double(v); }},
        {"ls_tol", [&](const std::string& v) { inv.ls_tol = to_double(v); }},
        {"ls_max_iter", [&](const std::string& v) { inv.ls_max_iter = static_cast<int>(to_integer(v)); }},
        {"ls_method", [&](const std::string& v) { inv.ls_method = parse_ls_method(v); }},
        {"direct_limit", [&](const std::string& v) { inv.direct_limit = static_cast<int>(to_integer(v)); }},
        {"admissible_bound", [&](const std::string& v) { inv.admissible_bound = to_double(v); }},
        {"diag_lambdas", [&](const std::string& v) {
             cfg.diag_lambdas.clear();
             for (const auto& s : split(v, ',')) cfg.diag_lambdas.push_back(to_double(s));
         }},
        {"diag_n_list", [&](const std::string& v) {
             cfg.diag_n_list.clear();
             for (const auto& s : split(v, ',')) cfg.diag_n_list.push_back(static_cast<int>(to_integer(s)));
         }},
    };

    std::set<std::string> seen;
    auto apply = [&](const std::string& key, const std::string& value, const std::string& where) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw FormatError(where + ": unknown key '" + key + "'");
        if (key != "inclusion" && !seen.insert(key).second && where != "--set")
            throw FormatError(where + ": key '" + key + "' given twice");
        seen.insert(key);
        try {
            it->second(value);
        } catch (const FormatError& e) {
            throw FormatError(where + ": " + key + ": " + e.what());
        }
    };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source_name + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw FormatError(where + ": expected 'key = value'");
        apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw FormatError("--set " + o + ": expected key=value");
        apply(trim(o.substr(0, eq)), trim(o.substr(eq + 1)), "--set");
    }

    for (const char* key : {"nx", "dt", "T", "p"})
        if (!seen.count(key)) throw FormatError(source_name + ": missing required key '" + std::string(key) + "'");

    cfg.phantom = preset(cfg.phantom_preset);
    for (auto& inc : inclusions) cfg.phantom.parts.push_back(std::move(inc));

    inv.seed = cfg.seed;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) cfg.output_dir = env;

    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) throw FormatError(source_name + ": " + msg);
    };
    check(cfg.half_width > 0.0, "half_width must be positive");
    check(cfg.nx >= 5, "nx must be at least 5");
    check(cfg.dt > 0.0, "dt must be positive");
    check(cfg.horizon > 0.0, "T must be positive");
    check(cfg.p > 1.0, "p must exceed 1");
    check(cfg.noise_delta >= 0.0, "noise_delta must be nonnegative");
    check(cfg.n_quad == 0 || cfg.n_quad >= min_quad_nodes(inv.n_modes), "n_quad is below 2 n_modes + 16");
    check(!cfg.name.empty() && cfg.name.find('/') == std::string::npos, "name must be a plain file prefix");
    try {
        inv.validate();
        make_time_grid(cfg.horizon, cfg.dt);
    } catch (const InvalidArgument& e) {
        throw FormatError(source_name + ": " + e.what());
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pipeline_config(ss.str(), path.filename().string(), overrides);
}

}  // namespace nlsrecon
