#include "run_config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>

namespace mixqnm::cli {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        throw ConfigError("bad-type", where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k))
            throw ConfigError("unknown-key", "unknown key '" + k + "' in " + where);
}

const json& need(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key))
        throw ConfigError("missing-key", where + "." + key + " is required");
    return j.at(key);
}

double number(const json& v, const std::string& what)
{
    if (!v.is_number())
        throw ConfigError("bad-type", what + " must be a number");
    return v.get<double>();
}

Vec2d pair(const json& v, const std::string& what)
{
    if (!v.is_array() || v.size() != 2)
        throw ConfigError("bad-type", what + " must be a 2-element array");
    return {number(v[0], what), number(v[1], what)};
}

cplx complex_value(const json& v, const std::string& what)
{
    if (v.is_number())
        return v.get<double>();
    const Vec2d p = pair(v, what);
    return {p(0), p(1)};
}

Channel parse_channel(const json& j, const std::string& where)
{
    only_keys(j, where, {"g", "shape", "lambda", "weight"});
    Channel ch;
    ch.g = pair(need(j, "g", where), where + ".g");
    ch.lambda = number(need(j, "lambda", where), where + ".lambda");
    if (j.contains("weight"))
        ch.weight = number(j["weight"], where + ".weight");
    if (j.contains("shape")) {
        const json& s = j["shape"];
        const std::string name = s.is_string() ? s.get<std::string>() : "";
        if (name == "ohmic-gaussian" || name == "ohmic_gaussian")
            ch.shape = Shape::ohmic_gaussian;
        else if (name == "ohmic-lorentzian" || name == "ohmic_lorentzian")
            ch.shape = Shape::ohmic_lorentzian;
        else
            throw ConfigError("bad-shape", where + ".shape must be ohmic-gaussian or ohmic-lorentzian");
    }
    return ch;
}

InitialState parse_initial(const json& j)
{
    if (j.is_string()) {
        if (j.get<std::string>() != "vacuum")
            throw ConfigError("bad-initial", "initial must be \"vacuum\" or an object");
        return InitialState::vacuum();
    }
    only_keys(j, "initial", {"phi0", "pi0", "D"});
    InitialState in = InitialState::vacuum();
    if (j.contains("phi0"))
        in.phi0 = pair(j["phi0"], "initial.phi0");
    if (j.contains("pi0"))
        in.pi0 = pair(j["pi0"], "initial.pi0");
    if (j.contains("D")) {
        const json& d = j["D"];
        if (!d.is_array() || d.size() != 16)
            throw ConfigError("bad-initial", "initial.D must hold 16 [re,im] entries");
        for (int i = 0; i < 16; ++i)
            in.D(i) = complex_value(d[i], "initial.D");
    }
    try {
        check_initial(in);
    } catch (const PreconditionError& e) {
        throw ConfigError("bad-initial", e.what());
    }
    return in;
}

} // namespace

RunConfig parse_config(const json& j)
{
    only_keys(j, "config", {"model", "params", "regime", "initial", "grid", "oracle", "output"});
    RunConfig cfg;

    const json& model = need(j, "model", "config");
    only_keys(model, "model", {"channels"});
    const json& chans = need(model, "channels", "model");
    if (!chans.is_array())
        throw ConfigError("bad-type", "model.channels must be an array");
    std::vector<Channel> list;
    for (std::size_t i = 0; i < chans.size(); ++i)
        list.push_back(parse_channel(chans[i], "model.channels[" + std::to_string(i) + "]"));
    cfg.model = build_model(list);

    const json& par = need(j, "params", "config");
    only_keys(par, "params", {"m", "k", "beta"});
    cfg.params.m = pair(need(par, "m", "params"), "params.m");
    if (par.contains("k"))
        cfg.params.kmag = number(par["k"], "params.k");
    const json& beta = need(par, "beta", "params");
    if (beta.is_string() && (beta == "inf" || beta == "infinity"))
        cfg.params.beta = infinite_beta;
    else if (beta.is_string())
        throw ConfigError("bad-beta", "params.beta must be a number or \"inf\"");
    else
        cfg.params.beta = number(beta, "params.beta");
    check_params(cfg.params);

    if (j.contains("regime")) {
        if (!j["regime"].is_string())
            throw ConfigError("bad-type", "regime must be a string");
        cfg.regime.name = j["regime"].get<std::string>();
        if (cfg.regime.name != "auto" && cfg.regime.name != "hierarchy")
            regime_from_string(cfg.regime.name);
    }
    if (j.contains("initial"))
        cfg.initial = parse_initial(j["initial"]);

    if (j.contains("grid")) {
        const json& g = j["grid"];
        only_keys(g, "grid", {"t_max", "n_points", "omega_max"});
        if (g.contains("t_max")) {
            if (g["t_max"].is_string()) {
                if (g["t_max"] != "auto")
                    throw ConfigError("bad-grid", "grid.t_max must be positive or \"auto\"");
            } else {
                cfg.t_max = number(g["t_max"], "grid.t_max");
                if (!(*cfg.t_max > 0.0) || !std::isfinite(*cfg.t_max))
                    throw ConfigError("bad-grid", "grid.t_max must be positive or \"auto\"");
            }
        }
        if (g.contains("n_points")) {
            if (!g["n_points"].is_number_integer() || g["n_points"].get<long>() < 2 || g["n_points"].get<long>() > 10000000)
                throw ConfigError("bad-grid", "grid.n_points must be an integer in [2, 1e7]");
            cfg.n_points = g["n_points"].get<int>();
        }
        if (g.contains("omega_max")) {
            cfg.omega_max = number(g["omega_max"], "grid.omega_max");
            if (!(cfg.omega_max > 0.0) || !std::isfinite(cfg.omega_max))
                throw ConfigError("bad-grid", "grid.omega_max must be positive");
        }
    }

    if (j.contains("oracle")) {
        const json& o = j["oracle"];
        only_keys(o, "oracle", {"dt", "memory_cut", "record_every", "richardson", "noise", "scheme"});
        if (o.contains("dt")) {
            cfg.oracle.dt = number(o["dt"], "oracle.dt");
            if (!(cfg.oracle.dt > 0.0))
                throw ConfigError("bad-dt", "oracle.dt must be positive");
        }
        if (o.contains("memory_cut"))
            cfg.oracle.memory_cut = number(o["memory_cut"], "oracle.memory_cut");
        if (o.contains("record_every")) {
            if (!o["record_every"].is_number_integer())
                throw ConfigError("bad-type", "oracle.record_every must be an integer");
            cfg.oracle.record_every = o["record_every"].get<int>();
        }
        for (const char* flag : {"richardson", "noise"})
            if (o.contains(flag) && !o[flag].is_boolean())
                throw ConfigError("bad-type", std::string("oracle.") + flag + " must be a boolean");
        if (o.contains("richardson"))
            cfg.oracle.richardson = o["richardson"].get<bool>();
        if (o.contains("noise"))
            cfg.oracle.noise = o["noise"].get<bool>();
        if (o.contains("scheme") && o["scheme"] != "trapezoid-pc")
            throw ConfigError("bad-scheme", "oracle.scheme must be \"trapezoid-pc\"");
        check_config(cfg.oracle);
    }

    if (j.contains("output")) {
        const json& o = j["output"];
        only_keys(o, "output", {"format", "path"});
        if (o.contains("format")) {
            if (!o["format"].is_string() || (o["format"] != "csv" && o["format"] != "json"))
                throw ConfigError("bad-format", "output.format must be csv or json");
            cfg.format = o["format"].get<std::string>();
        }
        if (o.contains("path")) {
            if (!o["path"].is_string())
                throw ConfigError("bad-type", "output.path must be a string");
            cfg.path = o["path"].get<std::string>();
        }
    }

    cfg.hash = fnv1a_hex(j.dump());
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("unreadable", "cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("bad-json", path + ": " + e.what());
    } catch (const json::out_of_range& e) {
        throw ConfigError("number-overflow", path + ": " + e.what());
    }
    return parse_config(j);
}

Regime resolve_regime(const RunConfig& cfg, const std::string& override_name)
{
    const std::string name = override_name.empty() ? cfg.regime.name : override_name;
    RegimeOptions ro;
    if (name == "auto")
        return classify_regime(cfg.model, cfg.params, ro);
    if (name == "hierarchy") {
        // accept any split and any coupling ratio, keep only the sub-branch choice
        ro.kappa = std::numeric_limits<double>::infinity();
        ro.hierarchy_ratio = 0.0;
        const Regime r = classify_regime(cfg.model, cfg.params, ro);
        return is_hierarchy(r) ? r : Regime::hierarchy_g1sq;
    }
    return regime_from_string(name);
}

std::string fnv1a_hex(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace mixqnm::cli
