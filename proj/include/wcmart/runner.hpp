#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cancellation.hpp"
#include "errors.hpp"
#include "fourier.hpp"
#include "instances.hpp"
#include "martingale.hpp"
#include "random.hpp"
#include "tensor_space.hpp"
#include "tree_model.hpp"
#include "witnesses.hpp"

namespace wcmart {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Malformed configuration; the message starts with a JSON-path-like location.
class ConfigError : public ValidationError {
public:
    ConfigError(const std::string& location, const std::string& what)
        : ValidationError(location + ": " + what), location_(location) {}
    const std::string& location() const { return location_; }

private:
    std::string location_;
};

struct ProblemConfig {
    ModelParams params;
    std::vector<RatMatrix> w_basis;  // m × ell each
    std::vector<RatVector> phi_images;
    std::optional<std::vector<int>> group;
    std::optional<int> depth;
    std::optional<std::uint64_t> seed;
};

namespace detail {

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{"m", "ell", "w_basis", "phi_images", "group", "depth", "seed"};
    return keys;
}

inline std::string at(const std::string& loc, std::size_t i) { return loc + "[" + std::to_string(i) + "]"; }

inline long read_int(const Json& j, const std::string& loc, long lo, long hi) {
    if (!j.is_number_integer()) throw ConfigError(loc, "expected an integer");
    const long v = j.get<long>();
    if (v < lo || v > hi) throw ConfigError(loc, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
}

inline Rational read_rational(const Json& j, const std::string& loc) {
    if (j.is_number_integer()) return Rational(mpz_class(std::to_string(j.get<long long>()), 10));
    if (!j.is_string()) throw ConfigError(loc, "expected a rational string like \"p/q\"");
    try {
        return parse_rational(j.get<std::string>());
    } catch (const ValidationError& e) {
        throw ConfigError(loc, e.what());
    }
}

inline const Json& read_array(const Json& j, const std::string& loc, std::size_t expected = SIZE_MAX) {
    if (!j.is_array()) throw ConfigError(loc, "expected an array");
    if (expected != SIZE_MAX && j.size() != expected)
        throw ConfigError(loc, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
    return j;
}

inline std::string rational_text(const Json& j) {
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    return to_string(parse_rational(j.get<std::string>()));
}

}  // namespace detail

/// Shape and syntax checks only; the algebraic invariants are checked by build_problem.
inline ProblemConfig parse_config(const Json& j) {
    if (!j.is_object()) throw ConfigError("$", "config must be a JSON object");
    for (const auto& item : j.items()) {
        const auto& keys = detail::config_keys();
        if (std::find(keys.begin(), keys.end(), item.key()) == keys.end())
            throw ConfigError("$." + item.key(), "unknown key");
    }
    for (const char* key : {"m", "ell", "w_basis", "phi_images"})
        if (!j.contains(key)) throw ConfigError(std::string("$.") + key, "missing required key");

    ProblemConfig cfg;
    cfg.params.m = static_cast<int>(detail::read_int(j["m"], "$.m", 2, 35));
    cfg.params.ell = static_cast<int>(detail::read_int(j["ell"], "$.ell", 1, 64));
    const auto m = static_cast<std::size_t>(cfg.params.m);
    const auto ell = static_cast<std::size_t>(cfg.params.ell);

    const Json& basis = detail::read_array(j["w_basis"], "$.w_basis");
    for (std::size_t b = 0; b < basis.size(); ++b) {
        const std::string loc = detail::at("$.w_basis", b);
        const Json& rows = detail::read_array(basis[b], loc, m);
        RatMatrix t(m, ell);
        for (std::size_t i = 0; i < m; ++i) {
            const Json& row = detail::read_array(rows[i], detail::at(loc, i), ell);
            for (std::size_t k = 0; k < ell; ++k) t(i, k) = detail::read_rational(row[k], detail::at(detail::at(loc, i), k));
        }
        cfg.w_basis.push_back(std::move(t));
    }

    const Json& images = detail::read_array(j["phi_images"], "$.phi_images", basis.size());
    for (std::size_t b = 0; b < images.size(); ++b) {
        const std::string loc = detail::at("$.phi_images", b);
        const Json& v = detail::read_array(images[b], loc, m);
        RatVector image;
        for (std::size_t i = 0; i < m; ++i) image.push_back(detail::read_rational(v[i], detail::at(loc, i)));
        cfg.phi_images.push_back(std::move(image));
    }

    if (j.contains("group") && !j["group"].is_null()) {
        const Json& g = detail::read_array(j["group"], "$.group");
        std::vector<int> orders;
        long product = 1;
        for (std::size_t i = 0; i < g.size(); ++i) {
            orders.push_back(static_cast<int>(detail::read_int(g[i], detail::at("$.group", i), 2, 35)));
            product *= orders.back();
        }
        if (orders.empty()) throw ConfigError("$.group", "needs at least one cyclic order");
        if (product != cfg.params.m)
            throw ConfigError("$.group", "cyclic orders multiply to " + std::to_string(product) + ", expected m = " + std::to_string(cfg.params.m));
        cfg.group = std::move(orders);
    }
    if (j.contains("depth") && !j["depth"].is_null()) cfg.depth = static_cast<int>(detail::read_int(j["depth"], "$.depth", 1, 40));
    if (j.contains("seed") && !j["seed"].is_null()) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) throw ConfigError("$.seed", "expected an integer");
        if (j["seed"].is_number_integer() && j["seed"].get<long long>() < 0) throw ConfigError("$.seed", "must be nonnegative");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    return cfg;
}

inline ProblemConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("byte " + std::to_string(e.byte), "JSON syntax error");
    }
    return parse_config(j);
}

inline ProblemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline OrderedJson rational_json(const RatVector& v) {
    OrderedJson out = OrderedJson::array();
    for (const auto& x : v) out.push_back(to_string(x));
    return out;
}

inline OrderedJson rational_json(const RatMatrix& a) {
    OrderedJson out = OrderedJson::array();
    for (std::size_t r = 0; r < a.rows(); ++r) out.push_back(rational_json(a.row(r)));
    return out;
}

inline OrderedJson serialize_config(const ProblemConfig& cfg) {
    OrderedJson out;
    out["m"] = cfg.params.m;
    out["ell"] = cfg.params.ell;
    out["w_basis"] = OrderedJson::array();
    for (const auto& t : cfg.w_basis) out["w_basis"].push_back(rational_json(t));
    out["phi_images"] = OrderedJson::array();
    for (const auto& v : cfg.phi_images) out["phi_images"].push_back(rational_json(v));
    if (cfg.group) out["group"] = *cfg.group;
    if (cfg.depth) out["depth"] = *cfg.depth;
    if (cfg.seed) out["seed"] = *cfg.seed;
    return out;
}

/// Canonical form of a syntactically valid config: fixed key order, rationals
/// in lowest terms as strings, null optionals dropped.
inline OrderedJson normalize_config(const Json& raw) {
    OrderedJson out;
    for (const auto& key : detail::config_keys()) {
        if (!raw.contains(key) || raw[key].is_null()) continue;
        const Json& v = raw[key];
        if (key == "w_basis") {
            OrderedJson basis = OrderedJson::array();
            for (const auto& t : v) {
                OrderedJson rows = OrderedJson::array();
                for (const auto& row : t) {
                    OrderedJson r = OrderedJson::array();
                    for (const auto& x : row) r.push_back(detail::rational_text(x));
                    rows.push_back(std::move(r));
                }
                basis.push_back(std::move(rows));
            }
            out[key] = std::move(basis);
        } else if (key == "phi_images") {
            OrderedJson images = OrderedJson::array();
            for (const auto& img : v) {
                OrderedJson r = OrderedJson::array();
                for (const auto& x : img) r.push_back(detail::rational_text(x));
                images.push_back(std::move(r));
            }
            out[key] = std::move(images);
        } else {
            out[key] = OrderedJson::parse(v.dump());
        }
    }
    return out;
}

struct Problem {
    WSpace w;
    PhiMap phi;
    std::optional<GroupStructure> group;
};

/// Re-validates every algebraic invariant and builds W and φ.
inline Problem build_problem(const ProblemConfig& cfg) {
    cfg.params.validate();
    std::vector<TensorVW> basis;
    for (std::size_t b = 0; b < cfg.w_basis.size(); ++b) {
        try {
            basis.push_back(TensorVW::from_matrix(cfg.params, cfg.w_basis[b]));
        } catch (const Error& e) {
            throw ConfigError(detail::at("$.w_basis", b), e.what());
        }
    }
    std::optional<WSpace> w;
    try {
        w = WSpace::from_basis(cfg.params, std::move(basis));
    } catch (const Error& e) {
        throw ConfigError("$.w_basis", e.what());
    }
    std::optional<PhiMap> phi;
    try {
        phi = PhiMap::create(*w, cfg.phi_images);
    } catch (const Error& e) {
        throw ConfigError("$.phi_images", e.what());
    }
    std::optional<GroupStructure> g;
    if (cfg.group) g = GroupStructure(*cfg.group);
    return Problem{std::move(*w), std::move(*phi), std::move(g)};
}

inline ProblemConfig config_from_instance(const Instance& inst) {
    ProblemConfig cfg;
    cfg.params = inst.w.params();
    for (const auto& b : inst.w.basis()) cfg.w_basis.push_back(b.entries());
    cfg.phi_images = inst.phi.images();
    if (inst.group) cfg.group = inst.group->cyclic_orders();
    return cfg;
}

/// Shortest round-trip decimal form, so CSV output is reproducible byte for byte.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline OrderedJson norm_json(const NormValue& v) {
    OrderedJson out;
    out["squared"] = to_string(v.squared);
    out["exact"] = v.exact ? OrderedJson(to_string(*v.exact)) : OrderedJson(nullptr);
    out["value"] = v.value;
    return out;
}

struct FourierSummary {
    bool translation_invariant = false;
    std::optional<bool> cancelling;
    std::optional<bool> weakly_cancelling;
    bool agrees = true;
    bool exact = false;
    std::vector<int> fiber_dims;
};

struct RunReport {
    std::string command;
    ModelParams params;
    std::optional<bool> cancelling;
    std::optional<NastyWitness> nasty_witness;
    std::optional<bool> weakly_cancelling;
    std::optional<WeakCancellationWitness> witness;
    std::optional<FourierSummary> fourier;
    std::optional<RatMatrix> extension;
    std::vector<std::pair<int, NormValue>> norms;
    std::optional<NormValue> stabilized_norm;
    std::optional<WitnessReport> curve;

    /// A witness accompanies exactly the verdicts that came out false.
    void check_consistency() const {
        if (cancelling && (*cancelling == nasty_witness.has_value()))
            throw InvariantError("report: cancellation witness does not match verdict");
        if (weakly_cancelling && (*weakly_cancelling == witness.has_value()))
            throw InvariantError("report: weak cancellation witness does not match verdict");
    }

    OrderedJson to_json() const {
        check_consistency();
        OrderedJson out;
        out["command"] = command;
        out["m"] = params.m;
        out["ell"] = params.ell;
        OrderedJson verdicts = OrderedJson::object();
        if (cancelling) verdicts["cancelling"] = *cancelling;
        if (weakly_cancelling) verdicts["weakly_cancelling"] = *weakly_cancelling;
        if (fourier) {
            OrderedJson f;
            f["translation_invariant"] = fourier->translation_invariant;
            f["cancelling"] = fourier->cancelling ? OrderedJson(*fourier->cancelling) : OrderedJson(nullptr);
            f["weakly_cancelling"] = fourier->weakly_cancelling ? OrderedJson(*fourier->weakly_cancelling) : OrderedJson(nullptr);
            f["agrees_with_spatial"] = fourier->agrees;
            f["exact_arithmetic"] = fourier->exact;
            f["fiber_dims"] = fourier->fiber_dims;
            verdicts["fourier"] = std::move(f);
        }
        out["verdicts"] = std::move(verdicts);
        if (nasty_witness) out["nasty_direction"] = {{"j", nasty_witness->j}, {"a", rational_json(nasty_witness->a)}};
        if (witness) {
            OrderedJson w;
            w["j"] = witness->j;
            w["a"] = rational_json(witness->a);
            w["theta"] = to_string(witness->theta);
            out["witness"] = std::move(w);
        }
        if (extension) out["extension"] = rational_json(*extension);
        if (!norms.empty()) {
            OrderedJson rows = OrderedJson::array();
            for (const auto& [n, v] : norms) {
                OrderedJson r;
                r["depth"] = n;
                for (auto& [k, x] : norm_json(v).items()) r[k] = x;
                rows.push_back(std::move(r));
            }
            out["transform_norm"] = std::move(rows);
        }
        if (stabilized_norm) out["stabilized_norm"] = norm_json(*stabilized_norm);
        if (curve) {
            OrderedJson rows = OrderedJson::array();
            for (const auto& pt : curve->curve) {
                OrderedJson r;
                r["N"] = pt.depth;
                r["lhs"] = to_string(pt.lhs);
                r["rhs"] = pt.rhs;
                r["ratio"] = pt.ratio;
                rows.push_back(std::move(r));
            }
            out["curve"] = std::move(rows);
        }
        return out;
    }

    /// Curves as N,lhs,rhs,ratio; norms as depth,squared,exact,value; verdicts as key,value.
    std::string to_csv() const {
        check_consistency();
        std::ostringstream os;
        if (curve) {
            os << "N,lhs,rhs,ratio\n";
            for (const auto& pt : curve->curve)
                os << pt.depth << ',' << to_string(pt.lhs) << ',' << format_double(pt.rhs) << ',' << format_double(pt.ratio) << '\n';
        } else if (!norms.empty()) {
            os << "depth,squared,exact,value\n";
            for (const auto& [n, v] : norms)
                os << n << ',' << to_string(v.squared) << ',' << (v.exact ? to_string(*v.exact) : "") << ',' << format_double(v.value) << '\n';
        } else if (extension) {
            for (std::size_t r = 0; r < extension->rows(); ++r) {
                for (std::size_t c = 0; c < extension->cols(); ++c) os << (c ? "," : "") << to_string((*extension)(r, c));
                os << '\n';
            }
        } else {
            os << "key,value\n";
            if (cancelling) os << "cancelling," << (*cancelling ? "true" : "false") << '\n';
            if (weakly_cancelling) os << "weakly_cancelling," << (*weakly_cancelling ? "true" : "false") << '\n';
            if (witness) os << "theta," << to_string(witness->theta) << '\n';
            if (fourier) {
                os << "translation_invariant," << (fourier->translation_invariant ? "true" : "false") << '\n';
                os << "fourier_agrees," << (fourier->agrees ? "true" : "false") << '\n';
            }
        }
        return os.str();
    }
};

namespace detail {

inline void fill_verdicts(RunReport& r, const Problem& pr) {
    r.params = pr.w.params();
    const auto c = is_cancelling(pr.w);
    r.cancelling = c.cancelling;
    r.nasty_witness = c.witness;
    const auto wc = is_weakly_cancelling(pr.w, pr.phi);
    r.weakly_cancelling = wc.weakly_cancelling;
    r.witness = wc.witness;
}

inline FourierSummary fourier_summary(const Problem& pr, const GroupStructure& g) {
    check_group(pr.w.params(), g);
    FourierSummary s;
    s.exact = g.is_elementary_two_group();
    s.translation_invariant = is_translation_invariant(pr.w, g) && is_translation_invariant(pr.phi, g);
    if (!s.translation_invariant) return s;
    for (const auto& f : fibers(pr.w, g)) s.fiber_dims.push_back(static_cast<int>(f.dim()));
    s.cancelling = fourier_cancelling(pr.w, g);
    s.weakly_cancelling = fourier_weak_cancelling(pr.w, pr.phi, g);
    s.agrees = *s.cancelling == is_cancelling(pr.w).cancelling &&
               *s.weakly_cancelling == is_weakly_cancelling(pr.w, pr.phi).weakly_cancelling;
    return s;
}

}  // namespace detail

inline RunReport run_check(const ProblemConfig& cfg) {
    const Problem pr = build_problem(cfg);
    RunReport r;
    r.command = "check";
    detail::fill_verdicts(r, pr);
    if (pr.group) r.fourier = detail::fourier_summary(pr, *pr.group);
    return r;
}

/// Blow-up curve N = 1..n_max along the first weak-cancellation violation.
inline RunReport run_witness(const ProblemConfig& cfg, int n_max) {
    if (n_max < 1) throw ValidationError("witness: depth must be at least 1");
    const Problem pr = build_problem(cfg);
    RunReport r;
    r.command = "witness";
    detail::fill_verdicts(r, pr);
    if (*r.weakly_cancelling)
        throw PreconditionError("weak cancellation holds, so there is no blow-up witness; the transform is bounded (see `norm`)");
    r.curve = blow_up_curve(pr.w, pr.phi, r.witness->j, r.witness->a, n_max);
    return r;
}

inline RunReport run_extend(const ProblemConfig& cfg) {
    const Problem pr = build_problem(cfg);
    RunReport r;
    r.command = "extend";
    detail::fill_verdicts(r, pr);
    r.extension = build_extension(pr.w, pr.phi).matrix();
    return r;
}

/// Exact transform norm for depths 2..N (1..N when N = 1) and the depth-free value.
inline RunReport run_norm(const ProblemConfig& cfg, int depth) {
    if (depth < 1) throw ValidationError("norm: depth must be at least 1");
    const Problem pr = build_problem(cfg);
    RunReport r;
    r.command = "norm";
    detail::fill_verdicts(r, pr);
    const ExtendedMap ext = build_extension(pr.w, pr.phi);
    r.extension = ext.matrix();
    r.stabilized_norm = off_diagonal_norm(ext);
    for (int n = std::min(2, depth); n <= depth; ++n) {
        NormValue v = transform_norm(ext, n);
        if (n >= 2 && v.squared != r.stabilized_norm->squared)
            throw InvariantError("transform norm at depth " + std::to_string(n) + " is not the stabilized value");
        r.norms.emplace_back(n, std::move(v));
    }
    return r;
}

inline RunReport run_fourier(const ProblemConfig& cfg) {
    const Problem pr = build_problem(cfg);
    if (!pr.group) throw ConfigError("$.group", "the fourier command needs a group");
    RunReport r;
    r.command = "fourier";
    detail::fill_verdicts(r, pr);
    r.fourier = detail::fourier_summary(pr, *pr.group);
    if (!r.fourier->translation_invariant)
        throw PreconditionError("W or phi is not translation invariant under the given group");
    if (!r.fourier->agrees) throw InvariantError("Fourier verdicts disagree with the spatial checkers");
    return r;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
    std::uint64_t seed = 0;
    int count = 200;
    int threads = 1;
    int depth = 5;          // depth of the delta and Sobolev martingales
    int m_max = 5;
    int ell_max = 3;
    int invariant_every = 4;  // every k-th instance is translation invariant
};

struct SweepFailure {
    std::string check;
    std::uint64_t instance = 0;
    ProblemConfig minimal;
};

struct SweepReport {
    SweepOptions options;
    int instances = 0;
    int cancelling = 0;
    int weakly_cancelling = 0;
    int translation_invariant = 0;
    std::map<std::string, std::pair<int, int>> checks;  // name → (passed, failed)
    std::vector<SweepFailure> failures;                 // first failure of each check, shrunk

    bool all_passed() const { return failures.empty(); }

    OrderedJson to_json() const {
        OrderedJson out;
        out["command"] = "sweep";
        out["seed"] = options.seed;
        out["instances"] = instances;
        out["cancelling"] = cancelling;
        out["weakly_cancelling"] = weakly_cancelling;
        out["translation_invariant"] = translation_invariant;
        OrderedJson cs = OrderedJson::object();
        for (const auto& [name, pf] : checks) cs[name] = {{"passed", pf.first}, {"failed", pf.second}};
        out["checks"] = std::move(cs);
        OrderedJson fs = OrderedJson::array();
        for (const auto& f : failures) {
            OrderedJson x;
            x["check"] = f.check;
            x["instance"] = f.instance;
            x["minimal_config"] = serialize_config(f.minimal);
            fs.push_back(std::move(x));
        }
        out["failures"] = std::move(fs);
        return out;
    }

    std::string to_csv() const {
        std::ostringstream os;
        os << "check,passed,failed\n";
        for (const auto& [name, pf] : checks) os << name << ',' << pf.first << ',' << pf.second << '\n';
        return os.str();
    }
};

namespace detail {

using SweepCheck = std::function<std::optional<bool>(const Instance&, std::uint64_t)>;

inline Instance sweep_instance(const SweepOptions& opt, std::uint64_t index) {
    Rng rng(split_seed(opt.seed, index));
    if (opt.invariant_every > 0 && index % static_cast<std::uint64_t>(opt.invariant_every) == 0) {
        static const std::vector<std::vector<int>> groups{{2}, {3}, {4}, {6}, {2, 2}};
        const auto& orders = groups[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(groups.size()) - 1))];
        return random_invariant_instance(rng, GroupStructure(orders), static_cast<int>(uniform_int(rng, 1, std::min(opt.ell_max, 2))));
    }
    InstanceOptions io;
    io.m_max = opt.m_max;
    io.ell_max = opt.ell_max;
    return random_instance(rng, io);
}

inline std::vector<std::pair<std::string, SweepCheck>> sweep_checks(int depth) {
    std::vector<std::pair<std::string, SweepCheck>> checks;
    // A_j slices consist of genuine members of W.
    checks.emplace_back("slice_membership", [](const Instance& in, std::uint64_t) -> std::optional<bool> {
        for (int j = 1; j <= in.w.params().m; ++j) {
            const Subspace slice = nasty_slice(j, in.w);
            for (const auto& a : slice.basis())
                if (!in.w.contains(rank_one(nasty_vector(j, in.w.params()), a))) return false;
        }
        return true;
    });
    checks.emplace_back("cancelling_implies_weak", [](const Instance& in, std::uint64_t) -> std::optional<bool> {
        if (!is_cancelling(in.w).cancelling) return std::nullopt;
        return is_weakly_cancelling(in.w, in.phi).weakly_cancelling;
    });
    checks.emplace_back("basis_change_invariance", [](const Instance& in, std::uint64_t s) -> std::optional<bool> {
        Rng rng(s);
        const auto mixed = mix_basis(rng, in.w.basis());
        WSpace w2 = WSpace::from_basis(in.w.params(), mixed);
        std::vector<RatVector> images;
        for (const auto& b : w2.basis()) images.push_back(in.phi.apply(b));
        const PhiMap phi2 = PhiMap::create(w2, std::move(images));
        return is_cancelling(w2).cancelling == is_cancelling(in.w).cancelling &&
               is_weakly_cancelling(w2, phi2).weakly_cancelling == is_weakly_cancelling(in.w, in.phi).weakly_cancelling;
    });
    checks.emplace_back("extension_contract", [](const Instance& in, std::uint64_t) -> std::optional<bool> {
        if (!is_weakly_cancelling(in.w, in.phi).weakly_cancelling) return std::nullopt;
        try {
            return !extension_contract_violation(build_extension(in.w, in.phi), in.w, in.phi).has_value();
        } catch (const InvariantError&) {
            return false;
        }
    });
    checks.emplace_back("disjoint_supports", [depth](const Instance& in, std::uint64_t s) -> std::optional<bool> {
        if (!is_weakly_cancelling(in.w, in.phi).weakly_cancelling) return std::nullopt;
        const ExtendedMap ext = build_extension(in.w, in.phi);
        Rng rng(s);
        const ModelParams& p = in.w.params();
        for (int t = 0; t < 4; ++t) {
            TreePath path;
            for (int d = 0; d < depth; ++d) path.prefix.push_back(static_cast<int>(uniform_int(rng, 1, p.m)));
            path.repeat = static_cast<int>(uniform_int(rng, 1, p.m));
            const RatVector a = random_vector(rng, static_cast<std::size_t>(p.ell), 3);
            if (!disjoint_support_check(ext, path, a, depth).disjoint) return false;
            if (transform(delta_martingale(path, a, depth, p), ext).max_overlap() > 1) return false;
        }
        return true;
    });
    checks.emplace_back("planted_violation_detected", [](const Instance& in, std::uint64_t s) -> std::optional<bool> {
        if (!is_weakly_cancelling(in.w, in.phi).weakly_cancelling) return std::nullopt;
        Rng rng(s);
        const ModelParams& p = in.w.params();
        const int j = static_cast<int>(uniform_int(rng, 1, p.m));
        const int k = static_cast<int>(uniform_int(rng, 0, p.ell - 1));
        const Rational delta = uniform_int(rng, 0, 1) ? Rational(1) : Rational(-1, 2);
        const ExtendedMap bad = plant_violation(build_extension(in.w, in.phi), j, k, delta);
        const auto report = disjoint_support_check(bad, TreePath::constant(j), unit_vector(static_cast<std::size_t>(p.ell), static_cast<std::size_t>(k)), 3);
        return !report.disjoint && report.digit == j;
    });
    checks.emplace_back("norm_stabilizes", [](const Instance& in, std::uint64_t) -> std::optional<bool> {
        if (!is_weakly_cancelling(in.w, in.phi).weakly_cancelling) return std::nullopt;
        const ExtendedMap ext = build_extension(in.w, in.phi);
        const Rational target = off_diagonal_norm(ext).squared;
        for (int n = 2; n <= 4; ++n)
            if (transform_norm(ext, n).squared != target) return false;
        return true;
    });
    checks.emplace_back("blow_up_exact", [](const Instance& in, std::uint64_t) -> std::optional<bool> {
        const auto v = is_weakly_cancelling(in.w, in.phi);
        if (v.weakly_cancelling) return std::nullopt;
        try {
            blow_up_curve(in.w, in.phi, v.witness->j, v.witness->a, 6);
        } catch (const InvariantError&) {
            return false;
        }
        return true;
    });
    checks.emplace_back("sobolev_sampler", [depth](const Instance& in, std::uint64_t s) -> std::optional<bool> {
        const FiniteMartingale f = random_sobolev(in.w, std::min(depth, 4), s);
        if (!validate_sobolev(f, in.w).member) return false;
        const ScalarTreeFunction t = transform(f, in.phi);
        FiniteMartingale g(f.params(), f.depth());
        for (const auto& [idx, v] : f.leaves()) g.set_leaf(idx, scaled(v, Rational(-3, 2)));
        const ScalarTreeFunction tg = transform(g, in.phi);
        for (std::uint64_t leaf = 0; leaf < f.leaf_count(); ++leaf)
            if (tg.value_at_index(leaf) != Rational(-3, 2) * t.value_at_index(leaf)) return false;
        return riesz_potential(f, Rational(0)) == f;
    });
    checks.emplace_back("fourier_agreement", [](const Instance& in, std::uint64_t) -> std::optional<bool> {
        if (!in.group) return std::nullopt;
        const GroupStructure& g = *in.group;
        if (!is_translation_invariant(in.w, g) || !is_translation_invariant(in.phi, g)) return false;
        return fourier_cancelling(in.w, g) == is_cancelling(in.w).cancelling &&
               fourier_weak_cancelling(in.w, in.phi, g) == is_weakly_cancelling(in.w, in.phi).weakly_cancelling;
    });
    return checks;
}

/// Runs a check, mapping library exceptions to a failure.
inline std::optional<bool> run_guarded(const SweepCheck& check, const Instance& in, std::uint64_t seed) {
    try {
        return check(in, seed);
    } catch (const Error&) {
        return false;
    }
}

/// Drops basis tensors (with their φ images) while the check keeps failing.
inline Instance shrink(const Instance& failing, const SweepCheck& check, std::uint64_t seed) {
    Instance current = failing;
    bool progress = true;
    while (progress && current.w.dim() > 0) {
        progress = false;
        for (std::size_t drop = 0; drop < current.w.dim(); ++drop) {
            std::vector<TensorVW> basis;
            std::vector<RatVector> images;
            for (std::size_t b = 0; b < current.w.dim(); ++b) {
                if (b == drop) continue;
                basis.push_back(current.w.basis()[b]);
                images.push_back(current.phi.images()[b]);
            }
            WSpace w = WSpace::from_basis(current.w.params(), std::move(basis));
            PhiMap phi = PhiMap::create(w, std::move(images));
            Instance candidate{std::move(w), std::move(phi), current.group};
            if (run_guarded(check, candidate, seed) == std::optional<bool>(false)) {
                current = std::move(candidate);
                progress = true;
                break;
            }
        }
    }
    return current;
}

}  // namespace detail

/// Seeded property sweep. Instance i uses sub-seed split_seed(seed, i) and
/// check c on it uses split_seed(that, c + 1); results are collected by index,
/// so the aggregate does not depend on the thread count.
inline SweepReport run_sweep(const SweepOptions& opt) {
    if (opt.count < 0) throw ValidationError("sweep: count must be nonnegative");
    if (opt.depth < 1) throw ValidationError("sweep: depth must be at least 1");
    if (opt.m_max < 2 || opt.ell_max < 1) throw ValidationError("sweep: size bounds too small");
    const auto checks = detail::sweep_checks(opt.depth);
    struct Outcome {
        bool cancelling = false;
        bool weakly = false;
        bool invariant = false;
        std::vector<std::optional<bool>> results;
    };
    std::vector<Outcome> outcomes(static_cast<std::size_t>(opt.count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < opt.count; i = next++) {
            const auto idx = static_cast<std::uint64_t>(i);
            const Instance in = detail::sweep_instance(opt, idx);
            Outcome& o = outcomes[static_cast<std::size_t>(i)];
            o.cancelling = is_cancelling(in.w).cancelling;
            o.weakly = is_weakly_cancelling(in.w, in.phi).weakly_cancelling;
            o.invariant = in.group.has_value();
            const std::uint64_t base = split_seed(opt.seed, idx);
            for (std::size_t c = 0; c < checks.size(); ++c)
                o.results.push_back(detail::run_guarded(checks[c].second, in, split_seed(base, c + 1)));
        }
    };
    const int threads = std::max(1, std::min(opt.threads, std::max(1, opt.count)));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    SweepReport rep;
    rep.options = opt;
    rep.instances = opt.count;
    for (const auto& [name, fn] : checks) rep.checks[name] = {0, 0};
    for (std::size_t c = 0; c < checks.size(); ++c) {
        bool shrunk = false;
        for (int i = 0; i < opt.count; ++i) {
            const auto& r = outcomes[static_cast<std::size_t>(i)].results[c];
            if (!r) continue;
            auto& slot = rep.checks[checks[c].first];
            if (*r) {
                ++slot.first;
                continue;
            }
            ++slot.second;
            if (shrunk) continue;
            shrunk = true;
            const auto idx = static_cast<std::uint64_t>(i);
            const std::uint64_t seed = split_seed(split_seed(opt.seed, idx), c + 1);
            const Instance minimal = detail::shrink(detail::sweep_instance(opt, idx), checks[c].second, seed);
            rep.failures.push_back({checks[c].first, idx, config_from_instance(minimal)});
        }
    }
    for (const auto& o : outcomes) {
        rep.cancelling += o.cancelling;
        rep.weakly_cancelling += o.weakly;
        rep.translation_invariant += o.invariant;
    }
    return rep;
}

}  // namespace wcmart
