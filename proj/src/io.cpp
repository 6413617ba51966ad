#include "cstop/io.hpp"

#include "cstop/error.hpp"
#include "cstop/expression.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cstop {

Rational json_rational(const Json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) {
        if (j.is_number_unsigned()) return Rational(std::to_string(j.get<std::uint64_t>()));
        return Rational(std::to_string(j.get<std::int64_t>()));
    }
    if (j.is_number_float()) return parse_rational(j.dump());
    throw Error(ErrorCode::ParseError, "expected a number, got " + j.dump());
}

ExtendedReal json_extended(const Json& j) {
    if (j.is_string()) return parse_extended(j.get<std::string>());
    return ExtendedReal(json_rational(j));
}

Json rational_json(const Rational& q) { return to_string(q); }

Json extended_json(const ExtendedReal& x) { return x.to_string(); }

namespace {

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
    return j.at(key);
}

std::vector<Rational> vec_of(const Json& j) {
    std::vector<Rational> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(json_rational(e));
    } else {
        out.push_back(json_rational(j));
    }
    return out;
}

Json vec_json(const std::vector<Rational>& v) {
    Json a = Json::array();
    for (const auto& q : v) a.push_back(rational_json(q));
    return a;
}

Path path_of(const Json& j) {
    if (!j.is_array()) throw Error(ErrorCode::ParseError, "history must be an array");
    Path p;
    for (const auto& s : j) p.push_back(vec_of(s));
    return p;
}

Json path_json(const Path& p) {
    Json a = Json::array();
    for (const auto& s : p) a.push_back(vec_json(s));
    return a;
}

std::vector<InstanceSpec::BranchSpec> law_of(const Json& j) {
    std::vector<InstanceSpec::BranchSpec> law;
    for (const auto& b : j) law.push_back({json_rational(field(b, "p")), vec_of(field(b, "w"))});
    return law;
}

Json law_json(const std::vector<InstanceSpec::BranchSpec>& law) {
    Json a = Json::array();
    for (const auto& b : law) a.push_back({{"p", rational_json(b.p)}, {"w", vec_json(b.w)}});
    return a;
}

std::vector<std::string> strings_of(const Json& j) {
    std::vector<std::string> out;
    if (j.is_string()) {
        out.push_back(j.get<std::string>());
        return out;
    }
    if (!j.is_array()) throw Error(ErrorCode::ParseError, "expected a function string or an array of them");
    for (const auto& e : j) {
        if (e.is_array()) {
            for (const auto& x : e) out.push_back(x.get<std::string>());
        } else {
            out.push_back(e.get<std::string>());
        }
    }
    return out;
}

Json strings_json(const std::vector<std::string>& v) {
    if (v.size() == 1) return v.front();
    return Json(v);
}

}  // namespace

InstanceSpec parse_instance(const Json& j) {
    InstanceSpec s;
    try {
        s.t0 = j.contains("t0") ? json_rational(j.at("t0")) : Rational(0);
        s.dt = json_rational(field(j, "dt"));
        s.depth = field(j, "depth").get<int>();
        const Json& br = field(j, "branching");
        if (!br.is_array() || br.empty()) throw Error(ErrorCode::ParseError, "branching must be a non-empty array");
        if (br.front().is_array()) {
            for (const auto& law : br) s.branching.push_back(law_of(law));
        } else {
            s.branching.push_back(law_of(br));
        }
        s.x0_history = path_of(field(j, "x0_history"));
        if (j.contains("w_history")) s.w_history = path_of(j.at("w_history"));
        if (j.contains("snap_bits")) s.snap_bits = j.at("snap_bits").get<int>();
        s.drift = strings_of(field(j, "drift"));
        s.diffusion = strings_of(field(j, "diffusion"));
        s.f = j.contains("f") ? j.at("f").get<std::string>() : "zero";
        s.pi = j.contains("pi") ? j.at("pi").get<std::string>() : "zero";
        if (j.contains("constraints")) {
            const Json& c = j.at("constraints");
            if (c.contains("ineq")) {
                for (const auto& g : c.at("ineq")) {
                    InstanceSpec::IneqSpec e;
                    e.g = field(g, "g").get<std::string>();
                    if (g.contains("y")) e.y = json_extended(g.at("y"));
                    s.ineq.push_back(std::move(e));
                }
            }
            if (c.contains("eq")) {
                for (const auto& h : c.at("eq")) {
                    InstanceSpec::EqSpec e;
                    e.h = field(h, "h").get<std::string>();
                    if (h.contains("z")) e.z = json_extended(h.at("z"));
                    s.eq.push_back(std::move(e));
                }
            }
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    return s;
}

Json emit_instance(const InstanceSpec& s) {
    Json j;
    j["t0"] = rational_json(s.t0);
    j["dt"] = rational_json(s.dt);
    j["depth"] = s.depth;
    if (s.branching.size() == 1) {
        j["branching"] = law_json(s.branching.front());
    } else {
        Json a = Json::array();
        for (const auto& law : s.branching) a.push_back(law_json(law));
        j["branching"] = a;
    }
    j["x0_history"] = path_json(s.x0_history);
    if (!s.w_history.empty()) j["w_history"] = path_json(s.w_history);
    if (s.snap_bits) j["snap_bits"] = *s.snap_bits;
    j["drift"] = strings_json(s.drift);
    j["diffusion"] = strings_json(s.diffusion);
    j["f"] = s.f;
    j["pi"] = s.pi;
    Json ineq = Json::array();
    for (const auto& g : s.ineq) ineq.push_back({{"g", g.g}, {"y", extended_json(g.y)}});
    Json eq = Json::array();
    for (const auto& h : s.eq) eq.push_back({{"h", h.h}, {"z", extended_json(h.z)}});
    j["constraints"] = {{"ineq", ineq}, {"eq", eq}};
    return j;
}

TreeInstance build_instance(const InstanceSpec& s) {
    TreeConfig c;
    c.t0 = s.t0;
    c.dt = s.dt;
    c.depth = s.depth;
    if (s.branching.empty() || s.branching.front().empty()) throw Error(ErrorCode::InvalidBranching, "no branches");
    c.noise_dim = s.branching.front().front().w.size();
    if (s.x0_history.empty()) throw Error(ErrorCode::InvalidInstance, "x0_history is empty");
    c.state_dim = s.x0_history.back().size();
    for (const auto& law : s.branching) {
        BranchLaw bl;
        for (const auto& b : law) bl.push_back({b.p, b.w});
        c.branching.push_back(std::move(bl));
    }
    c.history = s.x0_history;
    c.brownian_history = s.w_history;
    const std::size_t l = c.state_dim, d = c.noise_dim;
    if (s.drift.size() != l) throw Error(ErrorCode::InvalidInstance, "drift needs " + std::to_string(l) + " entries");
    if (s.diffusion.size() != l * d) {
        throw Error(ErrorCode::InvalidInstance, "diffusion needs " + std::to_string(l * d) + " entries");
    }
    std::vector<Expression> drift, diff;
    for (const auto& e : s.drift) drift.push_back(Expression::parse(e, s.snap_bits));
    for (const auto& e : s.diffusion) diff.push_back(Expression::parse(e, s.snap_bits));
    c.coefficients.drift = [drift](const Rational& t, const Path& p) {
        State out;
        for (const auto& e : drift) out.push_back(e.evaluate_finite(t, p));
        return out;
    };
    c.coefficients.diffusion = [diff](const Rational& t, const Path& p) {
        std::vector<Rational> out;
        for (const auto& e : diff) out.push_back(e.evaluate_finite(t, p));
        return out;
    };
    c.reward = make_functional(Expression::parse(s.f, s.snap_bits));
    Expression pi = Expression::parse(s.pi, s.snap_bits);
    c.terminal = [pi](const Rational& t, const Path& p) { return ExtendedReal(pi.evaluate_finite(t, p)); };
    for (const auto& g : s.ineq) c.constraints.ineq.push_back({make_functional(Expression::parse(g.g, s.snap_bits)), g.y});
    for (const auto& h : s.eq) c.constraints.eq.push_back({make_functional(Expression::parse(h.h, s.snap_bits)), h.z});
    return build_tree(std::move(c));
}

std::uint64_t instance_hash(const InstanceSpec& spec) {
    const std::string text = emit_instance(spec).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

BudgetVector parse_budgets(const Json& j) {
    BudgetVector b;
    try {
        if (j.contains("ineq")) {
            for (const auto& y : j.at("ineq")) b.y.push_back(json_extended(y));
        }
        if (j.contains("eq")) {
            for (const auto& z : j.at("eq")) b.z.push_back(json_extended(z));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    return b;
}

Json emit_budgets(const BudgetVector& b) {
    Json y = Json::array(), z = Json::array();
    for (const auto& v : b.y) y.push_back(extended_json(v));
    for (const auto& v : b.z) z.push_back(extended_json(v));
    return {{"ineq", y}, {"eq", z}};
}

namespace {

NodeId node_of(const std::string& word, const TreeInstance& tree) {
    return tree.find(word_from_string(word, tree.max_branches()));
}

std::string word_key(NodeId id, const TreeInstance& tree) {
    return word_to_string(tree.word_of(id), tree.max_branches());
}

}  // namespace

RandomizedStoppingRule parse_rule(const Json& j, const TreeInstance& tree) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "rule must be an object of word -> q");
    RandomizedStoppingRule r;
    r.q.assign(tree.size(), Rational(0));
    for (NodeId leaf : tree.leaves()) r.q[leaf] = 1;
    for (const auto& [word, q] : j.items()) r.q[node_of(word, tree)] = json_rational(q);
    validate_rule(tree, r);
    return r;
}

Json emit_rule(const RandomizedStoppingRule& rule, const TreeInstance& tree) {
    Json j = Json::object();
    for (NodeId id = 0; id < tree.size(); ++id) j[word_key(id, tree)] = rational_json(rule.q.at(id));
    return j;
}

StoppingMeasure parse_measure(const Json& j, const TreeInstance& tree) {
    StoppingMeasure m;
    m.stop.assign(tree.size(), Rational(0));
    m.cont.assign(tree.size(), Rational(0));
    try {
        if (j.contains("s")) {
            for (const auto& [word, v] : j.at("s").items()) m.stop[node_of(word, tree)] = json_rational(v);
        }
        if (j.contains("u")) {
            for (const auto& [word, v] : j.at("u").items()) m.cont[node_of(word, tree)] = json_rational(v);
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    return m;
}

Json emit_measure(const StoppingMeasure& m, const TreeInstance& tree) {
    Json s = Json::object(), u = Json::object();
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (sgn(m.stop[id]) != 0) s[word_key(id, tree)] = rational_json(m.stop[id]);
        if (sgn(m.cont[id]) != 0) u[word_key(id, tree)] = rational_json(m.cont[id]);
    }
    return {{"s", s}, {"u", u}};
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out << text;
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

void write_json_atomic(const std::filesystem::path& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

}  // namespace cstop
