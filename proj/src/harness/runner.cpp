#include "fpo/harness/runner.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

#include "fpo/harness/history.hpp"

namespace fpo::harness {

namespace {

int fingerprint_dim(const ExperimentConfig& config) {
    const auto env = config.make_environment();
    return config.trainer.method == Method::FpoUcbAction ? env->action_dim() : env->state_dim();
}

}  // namespace

std::filesystem::path run_experiment(const ExperimentConfig& config,
                                     const std::filesystem::path& output_root,
                                     std::ostream& log) {
    config.validate();

    std::filesystem::path dir(config.output_dir);
    if (dir.is_relative()) dir = output_root / dir;
    std::filesystem::create_directories(dir);

    {
        std::ofstream manifest(dir / "manifest.json");
        if (!manifest) {
            throw std::runtime_error("cannot write manifest in " + dir.string());
        }
        manifest << config.manifest_json();
    }

    const auto env = config.make_environment();
    const int psi_dim = config.environment == "cliff" ? 2 : 1;
    const int fp_dim = fingerprint_dim(config);

    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;

    const auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.seeds.size() || failed.load()) return;
            const std::uint64_t seed = config.seeds[i];
            try {
                Trainer trainer(env, config.trainer, seed);
                HistoryWriter writer(dir / ("history_seed" + std::to_string(seed) + ".csv"),
                                     psi_dim, fp_dim);
                for (int n = 0; n < config.iterations; ++n) {
                    const IterationRecord rec = trainer.step();
                    writer.append(rec);
                    if (config.iterations >= 20 && (n + 1) % (config.iterations / 10) == 0) {
                        std::lock_guard<std::mutex> guard(log_mutex);
                        log << config.name << " seed " << seed << ": iteration " << (n + 1)
                            << "/" << config.iterations << " J=" << rec.j << "\n";
                        log.flush();
                    }
                }
                std::lock_guard<std::mutex> guard(log_mutex);
                log << config.name << " seed " << seed << ": done\n";
                log.flush();
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> guard(log_mutex);
                if (!failed.exchange(true)) {
                    first_error = "seed " + std::to_string(seed) + ": " + e.what();
                }
            }
        }
    };

    const int threads = std::min<int>(config.threads, static_cast<int>(config.seeds.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) {
        throw std::runtime_error("run failed: " + first_error);
    }
    return dir;
}

}  // namespace fpo::harness
