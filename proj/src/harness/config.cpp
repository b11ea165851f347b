#include "fpo/harness/config.hpp"

#include <json.hpp>
#include <set>
#include <stdexcept>

namespace fpo::harness {

namespace {

using toml::Document;
using toml::Value;

/// Tracks which keys were consumed so unknown keys can be rejected.
class Reader {
public:
    explicit Reader(const Document& doc) : doc_(doc) {}

    double number(const std::string& table, const std::string& key, double fallback) {
        const Value* v = take(table, key);
        return v ? v->number() : fallback;
    }

    int integer(const std::string& table, const std::string& key, int fallback) {
        const Value* v = take(table, key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::Int) {
            throw std::invalid_argument("config: " + table + "." + key + " must be an integer");
        }
        return static_cast<int>(v->int_value);
    }

    bool boolean(const std::string& table, const std::string& key, bool fallback) {
        const Value* v = take(table, key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::Bool) {
            throw std::invalid_argument("config: " + table + "." + key + " must be a boolean");
        }
        return v->bool_value;
    }

    std::string string(const std::string& table, const std::string& key,
                       const std::string& fallback) {
        const Value* v = take(table, key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::String) {
            throw std::invalid_argument("config: " + table + "." + key + " must be a string");
        }
        return v->string_value;
    }

    std::vector<double> number_array(const std::string& table, const std::string& key,
                                     std::vector<double> fallback) {
        const Value* v = take(table, key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::Array) {
            throw std::invalid_argument("config: " + table + "." + key + " must be an array");
        }
        std::vector<double> out;
        for (const auto& e : v->array) out.push_back(e.number());
        return out;
    }

    std::vector<std::int64_t> int_array(const std::string& table, const std::string& key,
                                        std::vector<std::int64_t> fallback) {
        const Value* v = take(table, key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::Array) {
            throw std::invalid_argument("config: " + table + "." + key + " must be an array");
        }
        std::vector<std::int64_t> out;
        for (const auto& e : v->array) {
            if (e.kind != Value::Kind::Int) {
                throw std::invalid_argument("config: " + table + "." + key +
                                            " must contain integers");
            }
            out.push_back(e.int_value);
        }
        return out;
    }

    void finish() const {
        for (const auto& [table, entries] : doc_.tables) {
            for (const auto& [key, value] : entries) {
                if (!consumed_.count(table + "\n" + key)) {
                    const std::string where = table.empty() ? key : table + "." + key;
                    throw std::invalid_argument("config: unknown key '" + where + "'");
                }
            }
        }
    }

private:
    const Value* take(const std::string& table, const std::string& key) {
        consumed_.insert(table + "\n" + key);
        return doc_.find(table, key);
    }

    const Document& doc_;
    std::set<std::string> consumed_;
};

}  // namespace

ExperimentConfig ExperimentConfig::from_toml(const toml::Document& doc) {
    Reader r(doc);
    ExperimentConfig c;

    c.environment = r.string("experiment", "environment", "cliff");
    c.method = r.string("experiment", "method", "fpo-ucb-s");
    c.name = r.string("experiment", "name", c.environment + "-" + c.method);
    c.iterations = r.integer("experiment", "iterations", 300);
    c.output_dir = r.string("experiment", "output_dir", "runs/" + c.name);
    c.threads = r.integer("experiment", "threads", 1);
    {
        std::vector<std::int64_t> seeds = r.int_array("experiment", "seeds", {1, 2, 3, 4, 5});
        c.seeds.assign(seeds.begin(), seeds.end());
    }

    c.cliff.step_size = r.number("env", "step_size", c.cliff.step_size);
    c.cliff.noise_scale = r.number("env", "noise_scale", c.cliff.noise_scale);
    c.cliff.cliff_base = r.number("env", "cliff_base", c.cliff.cliff_base);
    c.cliff.fall_reward = r.number("env", "fall_reward", c.cliff.fall_reward);
    c.cliff.init_scale = r.number("env", "init_scale", c.cliff.init_scale);
    c.cliff_prior_a = r.number("env", "prior_a", c.cliff_prior_a);
    c.cliff_prior_b = r.number("env", "prior_b", c.cliff_prior_b);
    c.toy.target_low = r.number("env", "target_low", c.toy.target_low);
    c.toy.target_high = r.number("env", "target_high", c.toy.target_high);
    c.toy.p_high = r.number("env", "p_high", c.toy.p_high);
    c.toy.bonus = r.number("env", "bonus", c.toy.bonus);
    const int default_horizon = c.environment == "toy" ? c.toy.horizon : c.cliff.horizon;
    const int horizon = r.integer("env", "horizon", default_horizon);
    c.cliff.horizon = horizon;
    c.toy.horizon = horizon;

    auto& t = c.trainer;
    t.total_iterations = c.iterations;
    t.polgrad.gamma = r.number("polgrad", "gamma", t.polgrad.gamma);
    t.polgrad.gae_lambda = r.number("polgrad", "gae_lambda", t.polgrad.gae_lambda);
    t.polgrad.kl_limit = r.number("polgrad", "kl_limit", t.polgrad.kl_limit);
    t.polgrad.batch_size = r.integer("polgrad", "batch_size", t.polgrad.batch_size);
    t.polgrad.cg_iters = r.integer("polgrad", "cg_iters", t.polgrad.cg_iters);
    t.polgrad.cg_damping = r.number("polgrad", "cg_damping", t.polgrad.cg_damping);
    t.polgrad.backtrack_ratio = r.number("polgrad", "backtrack_ratio", t.polgrad.backtrack_ratio);
    t.polgrad.max_backtracks = r.integer("polgrad", "max_backtracks", t.polgrad.max_backtracks);
    {
        std::vector<std::int64_t> hidden = r.int_array("polgrad", "policy_hidden", {5, 5});
        t.policy_hidden.assign(hidden.begin(), hidden.end());
    }

    t.acquisition.kappa = r.number("acquisition", "kappa", t.acquisition.kappa);
    t.acquisition.n_candidates = r.integer("acquisition", "n_candidates",
                                           t.acquisition.n_candidates);
    t.acquisition.n_refine = r.integer("acquisition", "n_refine", t.acquisition.n_refine);

    t.quadrature.rel_tol = r.number("quadrature", "rel_tol", t.quadrature.rel_tol);
    t.quadrature.abs_tol = r.number("quadrature", "abs_tol", t.quadrature.abs_tol);
    t.quadrature.max_subdivisions = r.integer("quadrature", "max_subdivisions",
                                              t.quadrature.max_subdivisions);
    t.quadrature.trajs_per_node = r.integer("quadrature", "trajs_per_node",
                                            t.quadrature.trajs_per_node);
    t.quadrature.m_discrete = r.integer("quadrature", "m_discrete", t.quadrature.m_discrete);
    t.quadrature.eval_horizon = r.integer("quadrature", "eval_horizon",
                                          t.quadrature.eval_horizon);

    t.fixed_psi = r.number_array("method", "fixed_psi", {});
    t.initial_psi = r.number_array("method", "initial_psi", {});
    t.epopt_epsilon = r.number("method", "epopt_epsilon", t.epopt_epsilon);
    t.epopt_rejection_start_iter = r.integer("method", "epopt_rejection_start_iter",
                                             t.epopt_rejection_start_iter);
    t.epopt_keep_high = r.boolean("method", "epopt_keep_high", t.epopt_keep_high);
    t.pair_updated_fingerprint = r.boolean("method", "pair_updated_fingerprint",
                                           t.pair_updated_fingerprint);

    r.finish();

    const auto method = parse_method(c.method);
    if (!method) {
        throw std::invalid_argument("config: unknown method '" + c.method + "'");
    }
    t.method = *method;

    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    return from_toml(toml::parse_file(path));
}

void ExperimentConfig::validate() const {
    if (environment != "cliff" && environment != "toy") {
        throw std::invalid_argument("config: unknown environment '" + environment + "'");
    }
    if (iterations < 1) {
        throw std::invalid_argument("config: iterations must be >= 1");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("config: at least one seed is required");
    }
    if (threads < 1) {
        throw std::invalid_argument("config: threads must be >= 1");
    }
    if (trainer.method == Method::Enum && environment != "toy") {
        throw std::invalid_argument(
            "config: method 'enum' needs a discrete theta support; environment '" + environment +
            "' is continuous");
    }
    if (trainer.method == Method::Fixed) {
        const std::size_t want = environment == "toy" ? 1 : 2;
        if (trainer.fixed_psi.size() != want) {
            throw std::invalid_argument("config: method 'fixed' needs fixed_psi of dimension " +
                                        std::to_string(want));
        }
    }
    if (!(trainer.epopt_epsilon > 0.0) || trainer.epopt_epsilon > 1.0) {
        throw std::invalid_argument("config: epopt_epsilon must lie in (0, 1]");
    }
    if (trainer.polgrad.batch_size < 1) {
        throw std::invalid_argument("config: batch_size must be >= 1");
    }
    if (!(trainer.polgrad.gamma >= 0.0) || trainer.polgrad.gamma >= 1.0) {
        throw std::invalid_argument("config: gamma must lie in [0, 1)");
    }
    if (!(trainer.polgrad.kl_limit > 0.0)) {
        throw std::invalid_argument("config: kl_limit must be positive");
    }
    // Constructor-level checks (horizon, noise_scale, prior shapes, ...) run here
    // so `validate` fails before any compute.
    make_environment();
}

std::shared_ptr<const Environment> ExperimentConfig::make_environment() const {
    if (environment == "cliff") {
        return std::make_shared<CliffWalker>(cliff,
                                             BetaDistribution(cliff_prior_a, cliff_prior_b));
    }
    return std::make_shared<ToyVelocity>(toy);
}

std::string code_version() {
#ifdef FPO_GIT_REVISION
    return FPO_GIT_REVISION;
#else
    return "unknown";
#endif
}

std::string ExperimentConfig::manifest_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["code_version"] = code_version();
    j["environment"] = environment;
    j["method"] = method;
    j["iterations"] = iterations;
    j["seeds"] = seeds;
    j["output_dir"] = output_dir;
    j["threads"] = threads;
    if (environment == "cliff") {
        j["env"] = {{"step_size", cliff.step_size},
                    {"noise_scale", cliff.noise_scale},
                    {"cliff_base", cliff.cliff_base},
                    {"fall_reward", cliff.fall_reward},
                    {"horizon", cliff.horizon},
                    {"init_scale", cliff.init_scale},
                    {"prior_a", cliff_prior_a},
                    {"prior_b", cliff_prior_b}};
    } else {
        j["env"] = {{"target_low", toy.target_low},
                    {"target_high", toy.target_high},
                    {"p_high", toy.p_high},
                    {"bonus", toy.bonus},
                    {"horizon", toy.horizon}};
    }
    j["polgrad"] = {{"gamma", trainer.polgrad.gamma},
                    {"gae_lambda", trainer.polgrad.gae_lambda},
                    {"kl_limit", trainer.polgrad.kl_limit},
                    {"batch_size", trainer.polgrad.batch_size},
                    {"cg_iters", trainer.polgrad.cg_iters},
                    {"cg_damping", trainer.polgrad.cg_damping},
                    {"backtrack_ratio", trainer.polgrad.backtrack_ratio},
                    {"max_backtracks", trainer.polgrad.max_backtracks},
                    {"policy_hidden", trainer.policy_hidden}};
    j["acquisition"] = {{"kappa", trainer.acquisition.kappa},
                        {"n_candidates", trainer.acquisition.n_candidates},
                        {"n_refine", trainer.acquisition.n_refine}};
    j["quadrature"] = {{"rel_tol", trainer.quadrature.rel_tol},
                       {"abs_tol", trainer.quadrature.abs_tol},
                       {"max_subdivisions", trainer.quadrature.max_subdivisions},
                       {"trajs_per_node", trainer.quadrature.trajs_per_node},
                       {"m_discrete", trainer.quadrature.m_discrete},
                       {"eval_horizon", trainer.quadrature.eval_horizon}};
    j["method_options"] = {{"fixed_psi", trainer.fixed_psi},
                           {"initial_psi", trainer.initial_psi},
                           {"epopt_epsilon", trainer.epopt_epsilon},
                           {"epopt_rejection_start_iter", trainer.epopt_rejection_start_iter},
                           {"epopt_keep_high", trainer.epopt_keep_high},
                           {"pair_updated_fingerprint", trainer.pair_updated_fingerprint}};
    return j.dump(2) + "\n";
}

}  // namespace fpo::harness
