#include "fpo/harness/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "fpo/harness/history.hpp"

namespace fpo::harness {

namespace {

double nearest_rank(const std::vector<double>& sorted, double p) {
    const auto n = sorted.size();
    const std::size_t rank = std::min(
        n, std::max<std::size_t>(1, static_cast<std::size_t>(
                                        std::ceil(p * static_cast<double>(n)))));
    return sorted[rank - 1];
}

double mean_theta_of(const std::vector<double>& psi, const std::string& environment) {
    if (environment == "cliff") {
        return psi[0] / (psi[0] + psi[1]);  // Beta(a, b) mean
    }
    return psi[0];  // probability of the high target
}

}  // namespace

Quartiles quartiles(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("quartiles: empty sample");
    }
    std::sort(values.begin(), values.end());
    Quartiles q;
    q.q1 = nearest_rank(values, 0.25);
    q.median = nearest_rank(values, 0.50);
    q.q3 = nearest_rank(values, 0.75);
    return q;
}

double median(std::vector<double> values) { return quartiles(std::move(values)).median; }

Summary aggregate(const std::vector<std::filesystem::path>& run_dirs) {
    if (run_dirs.empty()) {
        throw std::invalid_argument("aggregate: no run directories given");
    }
    Summary summary;

    for (const auto& dir : run_dirs) {
        std::ifstream mf(dir / "manifest.json");
        if (!mf) {
            throw std::runtime_error("aggregate: missing manifest.json in " + dir.string());
        }
        const auto manifest = nlohmann::json::parse(mf);
        const std::string method = manifest.at("method");
        const std::string environment = manifest.at("environment");
        const std::vector<std::uint64_t> seeds = manifest.at("seeds");
        const int iterations = manifest.at("iterations");

        if (summary.environment.empty()) {
            summary.environment = environment;
            summary.iterations = iterations;
            if (environment == "cliff") {
                const double a = manifest.at("env").at("prior_a");
                const double b = manifest.at("env").at("prior_b");
                summary.prior_mean_theta = a / (a + b);
            } else {
                summary.prior_mean_theta = manifest.at("env").at("p_high");
            }
        } else if (summary.environment != environment) {
            throw std::invalid_argument("aggregate: mixed environments across run directories");
        }

        MethodSummary ms;
        ms.method = method;
        std::vector<std::vector<double>> curves;
        std::vector<std::vector<double>> theta_curves;
        for (std::uint64_t seed : seeds) {
            const auto rows = read_history(dir / ("history_seed" + std::to_string(seed) + ".csv"));
            if (rows.empty()) {
                throw std::runtime_error("aggregate: empty history for seed " +
                                         std::to_string(seed));
            }
            ms.final_j.push_back(rows.back().j);
            std::vector<double> curve, theta_curve;
            for (const auto& row : rows) {
                curve.push_back(row.j);
                theta_curve.push_back(mean_theta_of(row.psi, environment));
            }
            curves.push_back(std::move(curve));
            theta_curves.push_back(std::move(theta_curve));
        }
        ms.seeds = static_cast<int>(seeds.size());
        ms.final_quartiles = quartiles(ms.final_j);

        const std::size_t T = curves.front().size();
        for (const auto& c : curves) {
            if (c.size() != T) {
                throw std::runtime_error("aggregate: per-seed histories disagree on length in " +
                                         dir.string());
            }
        }
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<double> col, theta_col;
            for (std::size_t s = 0; s < curves.size(); ++s) {
                col.push_back(curves[s][t]);
                theta_col.push_back(theta_curves[s][t]);
            }
            ms.median_curve.push_back(median(col));
            ms.median_mean_theta.push_back(median(theta_col));
        }

        if (!summary.methods.emplace(method, std::move(ms)).second) {
            throw std::invalid_argument("aggregate: duplicate run directory for method '" +
                                        method + "'");
        }
    }
    return summary;
}

void write_summary(const Summary& summary, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["environment"] = summary.environment;
    j["iterations"] = summary.iterations;
    j["prior_mean_theta"] = summary.prior_mean_theta;
    auto& methods = j["methods"];
    for (const auto& [name, ms] : summary.methods) {
        methods[name] = {{"final_j", ms.final_j},
                         {"q1", ms.final_quartiles.q1},
                         {"median", ms.final_quartiles.median},
                         {"q3", ms.final_quartiles.q3},
                         {"seeds", ms.seeds},
                         {"median_curve", ms.median_curve},
                         {"median_mean_theta", ms.median_mean_theta}};
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write summary: " + path.string());
    }
    out << j.dump(2) << "\n";
}

Summary read_summary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open summary: " + path.string());
    }
    const auto j = nlohmann::json::parse(in);
    Summary summary;
    summary.environment = j.at("environment");
    summary.iterations = j.at("iterations");
    summary.prior_mean_theta = j.at("prior_mean_theta");
    for (const auto& [name, m] : j.at("methods").items()) {
        MethodSummary ms;
        ms.method = name;
        ms.final_j = m.at("final_j").get<std::vector<double>>();
        ms.final_quartiles.q1 = m.at("q1");
        ms.final_quartiles.median = m.at("median");
        ms.final_quartiles.q3 = m.at("q3");
        ms.seeds = m.at("seeds");
        ms.median_curve = m.at("median_curve").get<std::vector<double>>();
        ms.median_mean_theta = m.at("median_mean_theta").get<std::vector<double>>();
        summary.methods.emplace(name, std::move(ms));
    }
    return summary;
}

}  // namespace fpo::harness
