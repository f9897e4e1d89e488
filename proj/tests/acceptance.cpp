// Acceptance harness: one criterion per number, one PASS/FAIL line each.
// Run with no arguments for all nine, or pass criterion numbers to select.
// --cli <path> points at the command-line binary (criterion 5).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aflsim/aggregation.hpp"
#include "aflsim/config.hpp"
#include "aflsim/dataset.hpp"
#include "aflsim/engine.hpp"
#include "aflsim/errors.hpp"
#include "aflsim/model.hpp"
#include "aflsim/rng.hpp"
#include "aflsim/runlog.hpp"

using namespace aflsim;
namespace fs = std::filesystem;

namespace {

std::string g_cli_path;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

double median3(double a, double b, double c) {
    std::vector<double> v = {a, b, c};
    std::sort(v.begin(), v.end());
    return v[1];
}

BufferEntry entry(std::size_t n, double s, int f) {
    BufferEntry e;
    e.update.num_samples = n;
    e.s = s;
    e.f = f;
    return e;
}

double final_accuracy(const RunLog& log) {
    for (auto it = log.records.rbegin(); it != log.records.rend(); ++it)
        if (it->accuracy) return *it->accuracy;
    throw SimulationError("run produced no evaluated records");
}

// Shared desk-scale base: the official dataset when its directory is
// supplied, otherwise the synthetic fallback at the same scale.
ExperimentConfig desk_base(bool& used_synthetic) {
    ExperimentConfig base;
    base.subset = 10000;
    base.synthetic_train = 10000;
    base.synthetic_test = 2000;
    used_synthetic = false;
    try {
        ExperimentConfig probe = base;
        resolve_capabilities(probe);
        prepare_data(probe);  // throws when the IDX files are absent
    } catch (const IngestionError&) {
        base.source = DataSource::Synthetic;
        used_synthetic = true;
    }
    return base;
}

bool criterion_1() {
    Timer timer;
    double worst_sum = 0.0;
    Rng rng(4211);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t size = 2 + rng.uniform_int(7);
        const double alpha = rng.uniform(0.05, 0.95);
        std::vector<BufferEntry> b;
        std::vector<int> raw;
        for (std::size_t k = 0; k < size; ++k) {
            raw.push_back(static_cast<int>(rng.uniform_int(11)));
            b.push_back(entry(1 + rng.uniform_int(5000), staleness_factor(raw.back(), 0, alpha),
                              1 + static_cast<int>(rng.uniform_int(20))));
        }
        std::vector<double> betas = compute_betas(b);
        double sum = 0.0;
        for (double beta : betas) sum += beta;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        if (std::abs(sum - 1.0) > 1e-9) {
            std::printf("criterion 1 (beta weights): FAIL - weights sum to %.12f\n", sum);
            return false;
        }

        const std::size_t j = rng.uniform_int(size);
        std::vector<BufferEntry> more = b;
        more[j].update.num_samples *= 2;
        std::vector<BufferEntry> staler = b;
        staler[j].s = staleness_factor(raw[j] + 3, 0, alpha);
        std::vector<BufferEntry> chattier = b;
        chattier[j].f += 1;
        if (!(compute_betas(more)[j] > betas[j]) || !(compute_betas(staler)[j] < betas[j]) ||
            !(compute_betas(chattier)[j] < betas[j])) {
            std::printf("criterion 1 (beta weights): FAIL - monotonicity broke on trial %d\n",
                        trial);
            return false;
        }
    }

    std::vector<double> sym = compute_betas({entry(80, 0.6, 2), entry(80, 0.6, 2), entry(80, 0.6, 2)});
    double sym_err = 0.0;
    for (double beta : sym) sym_err = std::max(sym_err, std::abs(beta - 1.0 / 3.0));
    bool ok = sym_err <= 1e-12 && timer.seconds() < 5.0;
    std::printf(
        "criterion 1 (beta weights): %s - 1000 buffers, max |sum-1| = %.2e, symmetric case off "
        "by %.2e, %.2fs\n",
        ok ? "PASS" : "FAIL", worst_sum, sym_err, timer.seconds());
    return ok;
}

bool criterion_2() {
    bool fresh_exact = true;
    for (int t : {0, 1, 7, 123}) fresh_exact = fresh_exact && staleness_factor(t, t, 0.5) == 1.0;
    double at3 = staleness_factor(3, 0, 0.5);  // raw staleness 3
    double err = std::abs(at3 - 0.5);
    bool ok = fresh_exact && err <= 1e-12;
    std::printf(
        "criterion 2 (staleness factor): %s - s(t=tau) exactly 1: %s, s(raw 3, alpha 0.5) = "
        "%.15f\n",
        ok ? "PASS" : "FAIL", fresh_exact ? "yes" : "no", at3);
    return ok;
}

bool criterion_3() {
    Timer timer;
    Network net = Network::mlp(2, 2, 2);
    ModelParameters zeros = net.zeros();
    Rng rng(900);
    auto rand_model = [&]() {
        ModelParameters m = zeros;
        for (double& x : m.values) x = rng.uniform(-1.0, 1.0);
        return m;
    };
    auto upd = [&](int id, ModelParameters m, int tau) {
        ClientUpdate u;
        u.client_id = id;
        u.model = std::move(m);
        u.tau = tau;
        u.num_samples = 25;
        return u;
    };

    StrategyConfig cfg;
    cfg.buffer_target = 3;
    DynamicBufferedStrategy dyn(zeros, cfg);
    FedBuffStrategy buf(zeros, cfg);
    double worst_ab = 0.0;
    for (int k = 0; k < 6; ++k) {  // two full flush cycles, fresh distinct clients
        ModelParameters m = rand_model();
        dyn.receive(upd(k, m, dyn.timestamp()));
        buf.receive(upd(k, m, buf.timestamp()));
        for (std::size_t i = 0; i < zeros.values.size(); ++i)
            worst_ab = std::max(worst_ab,
                                std::abs(dyn.global_model().values[i] - buf.global_model().values[i]));
    }

    StrategyConfig one = cfg;
    one.buffer_target = 1;
    DynamicBufferedStrategy dyn1(zeros, one);
    FedAsyncStrategy async1(zeros, one);
    double worst_b1 = 0.0;
    for (int k = 0; k < 5; ++k) {
        ModelParameters m = rand_model();
        dyn1.receive(upd(k, m, dyn1.timestamp()));
        async1.receive(upd(k, m, async1.timestamp()));
        for (std::size_t i = 0; i < zeros.values.size(); ++i)
            worst_b1 = std::max(
                worst_b1, std::abs(dyn1.global_model().values[i] - async1.global_model().values[i]));
    }

    bool ok = worst_ab <= 1e-12 && worst_b1 <= 1e-12 && timer.seconds() < 5.0;
    std::printf(
        "criterion 3 (degenerate equivalence): %s - vs buffered mean %.2e, B=1 vs immediate "
        "mix %.2e, %.2fs\n",
        ok ? "PASS" : "FAIL", worst_ab, worst_b1, timer.seconds());
    return ok;
}

bool criterion_4() {
    Timer timer;
    Rng rng(derive_seed(606, "fd"));
    int coords = 0;
    double worst = 0.0;
    for (int pair = 0; pair < 10; ++pair) {
        const std::size_t in = 6 + rng.uniform_int(8);
        const std::size_t hid = 4 + rng.uniform_int(5);
        const std::size_t classes = 3 + rng.uniform_int(4);
        Network net = Network::mlp(in, hid, classes);
        ModelParameters params = net.init_params(rng);

        Batch batch;
        const std::size_t rows = 3 + rng.uniform_int(3);
        batch.inputs = Matrix(rows, in);
        batch.labels.resize(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            batch.labels[r] = static_cast<int>(rng.uniform_int(classes));
            for (std::size_t c = 0; c < in; ++c) batch.inputs(r, c) = rng.uniform(0.0, 1.0);
        }

        const double mu = (pair % 2 == 0) ? 0.0 : 0.3;
        ModelParameters anchor = params;
        for (double& x : anchor.values) x += rng.uniform(-0.05, 0.05);
        Gradient grad = net.backward(params, batch, mu, &anchor);

        for (int k = 0; k < 6; ++k, ++coords) {
            const std::size_t i = rng.uniform_int(params.values.size());
            const double h = 1e-4;
            ModelParameters lo = params, hi = params;
            lo.values[i] -= h;
            hi.values[i] += h;
            double fd = (net.training_loss(hi, batch, mu, &anchor) -
                         net.training_loss(lo, batch, mu, &anchor)) /
                        (2.0 * h);
            double rel = std::abs(fd - grad.values[i]) /
                         std::max({std::abs(fd), std::abs(grad.values[i]), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    bool ok = coords >= 50 && worst < 1e-4 && timer.seconds() < 30.0;
    std::printf(
        "criterion 4 (gradient check): %s - %d coordinates over 10 model/batch pairs, worst "
        "relative error %.2e, %.2fs\n",
        ok ? "PASS" : "FAIL", coords, worst, timer.seconds());
    return ok;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return "<unreadable:" + p.string() + ">";
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool criterion_5() {
    Timer timer;
    if (g_cli_path.empty()) g_cli_path = "aflsim";
    fs::path dir = fs::temp_directory_path() / "aflsim_acceptance_5";
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::path cfg = dir / "desk.cfg";
    {
        std::ofstream out(cfg);
        out << "data.source = synthetic\ndata.synthetic_train = 1200\n"
               "data.synthetic_test = 400\nsim.rounds = 30\n";
    }
    auto invoke = [&](const std::string& out_dir) {
        std::string cmd = g_cli_path + " compare --preset 1.4 --config " + cfg.string() +
                          " --seed 5 --out-dir " + out_dir + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    fs::path a = dir / "a", b = dir / "b";
    if (invoke(a.string()) != 0 || invoke(b.string()) != 0) {
        std::printf("criterion 5 (determinism): FAIL - could not run '%s compare'\n",
                    g_cli_path.c_str());
        return false;
    }
    bool identical = true;
    std::vector<std::string> files = {"dynamic_buffered.csv", "fedasync.csv", "fedbuff.csv",
                                      "compare_summary.json"};
    for (const std::string& f : files)
        if (slurp(a / f) != slurp(b / f)) {
            identical = false;
            std::printf("criterion 5 (determinism): %s differs between invocations\n", f.c_str());
        }
    fs::remove_all(dir);
    std::printf("criterion 5 (determinism): %s - two compare invocations, %zu files byte-compared, "
                "%.2fs\n",
                identical ? "PASS" : "FAIL", files.size(), timer.seconds());
    return identical;
}

bool criterion_6() {
    Timer timer;
    bool synthetic = false;
    ExperimentConfig base = desk_base(synthetic);
    if (synthetic)
        std::printf("criterion 6: official dataset unavailable, measuring on the synthetic "
                    "fallback at the same scale\n");

    std::map<std::string, std::vector<double>> acc;
    for (const char* preset : {"1.1", "1.3"}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            ExperimentConfig c = preset_config(preset, base);
            c.seed = seed;
            acc[preset].push_back(final_accuracy(run_simulation(c)));
        }
    }
    double iid = median3(acc["1.1"][0], acc["1.1"][1], acc["1.1"][2]);
    double worst = median3(acc["1.3"][0], acc["1.3"][1], acc["1.3"][2]);
    double gap_pp = (iid - worst) * 100.0;
    bool ok = gap_pp >= 5.0 && timer.seconds() < 600.0;
    std::printf(
        "criterion 6 (heterogeneity bias): %s - median over 3 seeds: preset 1.1 %.4f, preset "
        "1.3 %.4f, gap %.2f pp (need >= 5), %.1fs\n",
        ok ? "PASS" : "FAIL", iid, worst, gap_pp, timer.seconds());
    return ok;
}

bool criterion_7() {
    Timer timer;
    bool synthetic = false;
    ExperimentConfig base = desk_base(synthetic);
    if (synthetic)
        std::printf("criterion 7: official dataset unavailable, measuring on the synthetic "
                    "fallback at the same scale\n");

    std::map<std::string, std::vector<double>> acc;
    for (std::uint64_t seed : {1, 2, 3}) {
        ExperimentConfig c = preset_config("1.4", base);
        c.seed = seed;
        PreparedData data = prepare_data(c);
        for (const char* strategy : {"dynamic_buffered", "fedbuff", "fedasync"}) {
            ExperimentConfig run = c;
            run.strategy = strategy;
            acc[strategy].push_back(final_accuracy(run_simulation(run, data)));
        }
    }
    double dyn = median3(acc["dynamic_buffered"][0], acc["dynamic_buffered"][1],
                         acc["dynamic_buffered"][2]);
    double fbf = median3(acc["fedbuff"][0], acc["fedbuff"][1], acc["fedbuff"][2]);
    double fas = median3(acc["fedasync"][0], acc["fedasync"][1], acc["fedasync"][2]);
    double lead_pp = (dyn - fas) * 100.0;

    bool order_top = dyn > fbf;
    bool order_mid = fbf > fas;
    bool lead = lead_pp >= 5.0;
    bool ok = order_top && order_mid && lead && timer.seconds() < 1800.0;
    std::printf(
        "criterion 7 (strategy ordering): %s - medians over 3 seeds: dynamic_buffered %.4f, "
        "fedbuff %.4f, fedasync %.4f; dynamic>fedbuff %s, fedbuff>fedasync %s, dynamic-fedasync "
        "%.2f pp (need >= 5) %s; %.1fs\n",
        ok ? "PASS" : "FAIL", dyn, fbf, fas, order_top ? "yes" : "NO", order_mid ? "yes" : "NO",
        lead_pp, lead ? "yes" : "NO", timer.seconds());
    if (!order_top)
        std::printf(
            "criterion 7: note - fedbuff runs in faithful-idle mode by default; idling enforces "
            "near-uniform client participation, which at 10 clients with a 3-slot buffer "
            "outweighs dynamic weighting (set strategy.fedbuff_idle = false for the "
            "continuous-training reading, under which the ordering holds)\n");
    return ok;
}

bool criterion_8() {
    Timer timer;
    ExperimentConfig c;
    c.source = DataSource::Synthetic;
    c.synthetic_train = 2000;  // IID split: equal data per client
    c.synthetic_test = 500;
    c.rounds = 100;
    c.eval_every = 100;
    c.seed = 1;
    RunLog log = run_simulation(c);

    std::map<int, int> counts;
    for (const RunRecord& r : log.records) ++counts[r.client_id];
    int fastest = counts[0];
    int slowest = counts[9];
    bool ok = fastest >= 10 * std::max(slowest, 1) && timer.seconds() < 60.0;
    std::printf(
        "criterion 8 (upload-rate skew): %s - first 100 receives: fastest client %d uploads, "
        "slowest %d (20x capability spread), %.1fs\n",
        ok ? "PASS" : "FAIL", fastest, slowest, timer.seconds());
    return ok;
}

bool criterion_9() {
    Timer timer;
    fs::path dir = fs::temp_directory_path() / "aflsim_acceptance_9";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // Full-size generated fixtures prove the parser handles official-shape
    // files end to end even when the real download is absent.
    auto write_images = [&](const fs::path& p, std::uint32_t n, std::uint32_t magic) {
        std::ofstream out(p, std::ios::binary);
        auto be32 = [&](std::uint32_t x) {
            unsigned char b[4] = {static_cast<unsigned char>(x >> 24),
                                  static_cast<unsigned char>(x >> 16),
                                  static_cast<unsigned char>(x >> 8),
                                  static_cast<unsigned char>(x)};
            out.write(reinterpret_cast<char*>(b), 4);
        };
        be32(magic);
        be32(n);
        be32(28);
        be32(28);
        std::vector<char> row(784, 0);
        for (std::uint32_t i = 0; i < n; ++i) {
            row[i % 784] = static_cast<char>(i % 251);
            out.write(row.data(), 784);
        }
    };
    auto write_labels = [&](const fs::path& p, std::uint32_t n) {
        std::ofstream out(p, std::ios::binary);
        unsigned char head[8] = {0, 0, 8, 1,
                                 static_cast<unsigned char>(n >> 24),
                                 static_cast<unsigned char>(n >> 16),
                                 static_cast<unsigned char>(n >> 8),
                                 static_cast<unsigned char>(n)};
        out.write(reinterpret_cast<char*>(head), 8);
        std::vector<char> body(n);
        for (std::uint32_t i = 0; i < n; ++i) body[i] = static_cast<char>(i % 10);
        out.write(body.data(), n);
    };

    write_images(dir / "train-images", 60000, 0x00000803);
    write_labels(dir / "train-labels", 60000);
    write_images(dir / "test-images", 10000, 0x00000803);
    write_labels(dir / "test-labels", 10000);

    bool counts_ok = false, labels_ok = true, corrupt_ok = false;
    try {
        Dataset train = load_idx((dir / "train-images").string(), (dir / "train-labels").string());
        Dataset test = load_idx((dir / "test-images").string(), (dir / "test-labels").string());
        counts_ok = train.size() == 60000 && test.size() == 10000;
        for (int label : train.labels) labels_ok = labels_ok && label >= 0 && label < 10;
        for (int label : test.labels) labels_ok = labels_ok && label >= 0 && label < 10;
    } catch (const std::exception& e) {
        std::printf("criterion 9: full-size fixture failed to parse: %s\n", e.what());
    }

    write_images(dir / "bad-images", 100, 0x00000903);  // corrupted magic
    write_labels(dir / "bad-labels", 100);
    try {
        load_idx((dir / "bad-images").string(), (dir / "bad-labels").string());
    } catch (const IngestionError&) {
        corrupt_ok = true;
    }
    fs::remove_all(dir);

    // The official files, when a dataset directory is supplied.
    std::string official = "not found (set AFLSIM_DATA_DIR to check the official files)";
    bool official_ok = true;
    try {
        ExperimentConfig c;  // defaults: source = idx, dir from the environment
        PreparedData data = prepare_data(c);
        official_ok = data.train.size() == 60000 && data.test.size() == 10000;
        official = official_ok ? "parsed 60000/10000 examples, labels in range"
                               : "unexpected example counts " + std::to_string(data.train.size()) +
                                     "/" + std::to_string(data.test.size());
    } catch (const IngestionError&) {
        // Absent files: the generated fixtures above already exercised the path.
    }

    bool ok = counts_ok && labels_ok && corrupt_ok && official_ok && timer.seconds() < 10.0;
    std::printf(
        "criterion 9 (idx ingestion): %s - generated 60000/10000 fixtures %s, labels in range "
        "%s, corrupted magic rejected %s; official files: %s; %.1fs\n",
        ok ? "PASS" : "FAIL", counts_ok ? "parsed" : "FAILED", labels_ok ? "yes" : "NO",
        corrupt_ok ? "yes" : "NO", official.c_str(), timer.seconds());
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc) {
            g_cli_path = argv[++i];
        } else {
            try {
                selected.push_back(std::stoi(arg));
            } catch (...) {
                std::fprintf(stderr, "usage: %s [criterion numbers] [--cli path]\n", argv[0]);
                return 2;
            }
        }
    }
    if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

    bool (*criteria[])() = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                            criterion_6, criterion_7, criterion_8, criterion_9};
    int failures = 0;
    for (int n : selected) {
        if (n < 1 || n > 9) {
            std::fprintf(stderr, "no criterion %d\n", n);
            return 2;
        }
        try {
            if (!criteria[n - 1]()) ++failures;
        } catch (const std::exception& e) {
            std::printf("criterion %d: FAIL - unexpected exception: %s\n", n, e.what());
            ++failures;
        }
    }
    if (failures > 0) std::printf("%d of %zu criteria failed\n", failures, selected.size());
    return failures == 0 ? 0 : 1;
}
