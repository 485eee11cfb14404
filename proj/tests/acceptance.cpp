// End-to-end acceptance run. Usage: acceptance <facefuse-binary> <work-dir>
// Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "facefuse/cli/config.hpp"
#include "facefuse/engine/gradcheck.hpp"
#include "facefuse/error.hpp"
#include "facefuse/expt/report.hpp"
#include "facefuse/format.hpp"
#include "facefuse/rng.hpp"
#include "facefuse/model/network.hpp"
#include "facefuse/train/checkpoint.hpp"

using namespace facefuse;
namespace fs = std::filesystem;
using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradEps = 1e-5;
constexpr std::size_t kGradCases = 50;
constexpr double kGradSeconds = 120;
constexpr double kConvTolerance = 1e-12;
constexpr int kConvCases = 100;
constexpr double kIdAccuracy = 0.90;
constexpr double kIdSeconds = 600;
constexpr double kTransferPoints = 0.10;
constexpr double kSoftmaxTolerance = 1e-6;
constexpr std::array<std::uint64_t, 3> kFusionSeeds{1, 2, 3};

// Backbone and head budget of the full runs.
const std::vector<std::string> kBackboneBudget{"--iterations", "2000", "--batch", "50", "--eval-every", "200"};
const std::vector<std::string> kHeadBudget{"--head-iterations", "2000", "--head-batch", "50"};

std::string g_binary;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::vector<std::pair<int, Verdict>> g_results;

void report(int criterion, Verdict v) {
    std::cout << "criterion " << criterion << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
    g_results.emplace_back(criterion, std::move(v));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs the tool inside `cwd` with FACEFUSE_THREADS set; stderr and stdout go
// to `cwd`/log.txt. Returns the wall time in seconds.
double tool(const fs::path& cwd, std::size_t threads, const std::vector<std::string>& args) {
    std::string cmd = "cd " + quote(cwd.string()) + " && FACEFUSE_THREADS=" + std::to_string(threads) + " " +
                      quote(g_binary);
    for (const std::string& a : args) cmd += " " + quote(a);
    cmd += " >> log.txt 2>&1";
    const auto start = Clock::now();
    const int status = std::system(cmd.c_str());
    if (status != 0) throw Error("command failed (" + std::to_string(status) + "): " + cmd);
    return seconds_since(start);
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<std::string> backbone_flags(const std::string& root) {
    std::vector<std::string> flags;
    for (Task t : kAllTasks) {
        const std::string name(to_string(t));
        flags.push_back("--" + name);
        flags.push_back(root + "/b/" + name + "/checkpoint.ffck");
    }
    return flags;
}

struct PipelineRun {
    double id_seconds = 0;
    std::map<std::string, std::string> checkpoints_before;
};

// Backbones, cross matrix and fusion study under `cwd`/`root`, reading
// `cwd`/d/manifest.jsonl.
PipelineRun pipeline(const fs::path& cwd, const std::string& root, std::size_t threads, std::uint64_t seed,
                     const std::vector<std::string>& data_flags, const std::vector<std::string>& backbone_budget,
                     const std::vector<std::string>& head_budget, bool with_cross) {
    PipelineRun run;
    for (Task t : kAllTasks) {
        const std::string name(to_string(t));
        std::vector<std::string> args{"train", "--task", name, "--manifest", "d/manifest.jsonl",
                                      "--seed", std::to_string(seed), "--out", root + "/b/" + name};
        const double s = tool(cwd, threads, concat(concat(args, data_flags), backbone_budget));
        if (t == Task::id) run.id_seconds = s;
        run.checkpoints_before[name] = slurp(cwd / root / "b" / name / "checkpoint.ffck");
    }
    const std::vector<std::string> common =
        concat(concat({"--seed", std::to_string(seed)}, head_budget), backbone_flags(root));
    if (with_cross) tool(cwd, threads, concat({"cross", "--out", root + "/cross"}, common));
    tool(cwd, threads, concat({"fuse", "--out", root + "/fuse"}, common));
    return run;
}

std::optional<double> last_test_accuracy(const fs::path& metrics_csv) {
    std::istringstream in(slurp(metrics_csv));
    std::string line, last;
    while (std::getline(in, line)) {
        if (!line.empty()) last = line;
    }
    const std::string field = last.substr(last.rfind(',') + 1);
    if (field.empty()) return std::nullopt;
    return std::stod(field);
}

// ---- criterion 1 ----

void gradient_fidelity() {
    const auto start = Clock::now();
    const std::vector<LayerKindReport> reports = run_gradient_suite(2024, kGradCases, kGradEps);
    const double elapsed = seconds_since(start);
    bool pass = elapsed < kGradSeconds;
    std::string detail;
    for (const LayerKindReport& r : reports) {
        pass = pass && r.cases >= kGradCases && r.max_rel_error < kGradTolerance;
        detail += r.kind + "=" + format_shortest(r.max_rel_error) + " ";
    }
    detail += "(< " + format_shortest(kGradTolerance) + ", " + std::to_string(kGradCases) + " cases each) in " +
              format_fixed(elapsed, 1) + " s";
    report(1, {pass, detail});
}

// ---- criterion 2 ----

Tensor<double> oracle_conv(const Tensor<double>& in, const Tensor<double>& w, const Tensor<double>& b,
                           std::size_t stride, std::size_t pad) {
    const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2);
    const std::size_t K = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const std::size_t oh = (H + 2 * pad - kh) / stride + 1, ow = (W + 2 * pad - kw) / stride + 1;
    Tensor<double> out(Shape{K, oh, ow});
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                double s = b[k];
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t i = 0; i < kh; ++i)
                        for (std::size_t j = 0; j < kw; ++j) {
                            const long sy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
                            const long sx = static_cast<long>(x * stride + j) - static_cast<long>(pad);
                            if (sy < 0 || sx < 0 || sy >= static_cast<long>(H) || sx >= static_cast<long>(W)) continue;
                            s += w[((k * C + c) * kh + i) * kw + j] *
                                 in.at(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
                        }
                out.at(k, y, x) = s;
            }
    return out;
}

void conv_oracle() {
    Rng rng(99);
    double worst = 0;
    int cases = 0;
    while (cases < kConvCases) {
        const std::size_t C = 1 + rng.below(4), K = 1 + rng.below(5);
        const std::size_t kh = 1 + rng.below(5), kw = 1 + rng.below(5);
        const std::size_t stride = 1 + rng.below(3), pad = rng.below(3);
        const std::size_t H = kh + rng.below(12), W = kw + rng.below(12);
        if ((H + 2 * pad - kh) % stride != 0 || (W + 2 * pad - kw) % stride != 0) continue;
        Tensor<double> in(Shape{C, H, W});
        LayerParams<double> p{LayerKind::conv, Tensor<double>(Shape{K, C, kh, kw}), Tensor<double>(Shape{K})};
        for (double& v : in.data()) v = rng.uniform(-1, 1);
        for (double& v : p.weights.data()) v = rng.uniform(-1, 1);
        for (double& v : p.bias.data()) v = rng.uniform(-1, 1);
        const Tensor<double> got = conv2d_forward(in, p, ConvGeometry{stride, pad});
        const Tensor<double> want = oracle_conv(in, p.weights, p.bias, stride, pad);
        if (got.shape() != want.shape()) {
            worst = INFINITY;
        } else {
            for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
        }
        ++cases;
    }
    report(2, {worst <= kConvTolerance, "max abs diff " + format_shortest(worst) + " over " + std::to_string(cases) +
                                            " cases (<= " + format_shortest(kConvTolerance) + ")"});
}

// ---- criterion 3 ----

void determinism(const fs::path& work) {
    const std::vector<std::string> data{"--augment", "3"};
    const std::vector<std::string> budget{"--iterations", "60", "--batch", "16", "--eval-every", "20"};
    const std::vector<std::string> heads{"--head-iterations", "60", "--head-batch", "16"};
    std::vector<fs::path> roots;
    for (std::size_t threads : {1, 4}) {
        const fs::path cwd = work / ("determinism_t" + std::to_string(threads));
        fs::remove_all(cwd);
        fs::create_directories(cwd);
        tool(cwd, threads, {"synth", "--out", "d", "--images-per-id", "8"});
        pipeline(cwd, "run", threads, 5, data, budget, heads, true);
        roots.push_back(cwd);
    }
    std::size_t files = 0, differing = 0;
    std::string first_difference;
    for (const auto& entry : fs::recursive_directory_iterator(roots[0])) {
        if (!entry.is_regular_file() || entry.path().filename() == "log.txt") continue;
        const fs::path rel = fs::relative(entry.path(), roots[0]);
        ++files;
        if (!fs::exists(roots[1] / rel) || slurp(entry.path()) != slurp(roots[1] / rel)) {
            ++differing;
            if (first_difference.empty()) first_difference = rel.string();
        }
    }
    std::size_t other = 0;
    for (const auto& entry : fs::recursive_directory_iterator(roots[1])) {
        if (entry.is_regular_file() && entry.path().filename() != "log.txt") ++other;
    }
    const bool pass = files > 0 && differing == 0 && other == files;
    report(3, {pass, std::to_string(files) + " files (images, metrics, checkpoints, features, reports) compared between "
                     "FACEFUSE_THREADS=1 and 4: " +
                         std::to_string(differing) + " differ" +
                         (first_difference.empty() ? "" : " (first: " + first_difference + ")")});
}

// ---- criteria 4-9 on the default synthetic set ----

struct FullRuns {
    fs::path cwd;
    std::vector<PipelineRun> runs;
};

FullRuns full_runs(const fs::path& work) {
    FullRuns full;
    full.cwd = work / "full";
    fs::remove_all(full.cwd);
    fs::create_directories(full.cwd);
    tool(full.cwd, 1, {"synth", "--out", "d"});
    for (std::uint64_t seed : kFusionSeeds) {
        full.runs.push_back(pipeline(full.cwd, "seed" + std::to_string(seed), 1, seed, {}, kBackboneBudget,
                                     kHeadBudget, seed == kFusionSeeds[0]));
    }
    return full;
}

void learnability(const FullRuns& full) {
    const fs::path dir = full.cwd / "seed1" / "b" / "id";
    const std::optional<double> acc = last_test_accuracy(dir / "metrics.csv");
    const double seconds = full.runs[0].id_seconds;
    const bool pass = acc && *acc >= kIdAccuracy && seconds < kIdSeconds;
    report(4, {pass, "ID backbone test accuracy " + (acc ? format_fixed(100 * *acc, 2) + "%" : std::string("n/a")) +
                         " (>= " + format_fixed(100 * kIdAccuracy, 0) + "%) after 2000 iterations of batch 50, " +
                         format_fixed(seconds, 1) + " s (< " + format_fixed(kIdSeconds, 0) + " s)"});
}

void transfer(const FullRuns& full) {
    const CrossTaskMatrix m = cross_from_json(Json::parse(slurp(full.cwd / "seed1" / "cross" / "cross.json")));
    bool pass = true;
    std::string detail = "ID features vs majority baseline:";
    for (Task t : {Task::age, Task::race, Task::gender}) {
        const double acc = m.accuracy(Task::id, t);
        const double base = m.baseline[static_cast<std::size_t>(t)];
        pass = pass && acc - base >= kTransferPoints;
        detail += " " + std::string(to_string(t)) + " " + format_fixed(100 * acc, 2) + " vs " +
                  format_fixed(100 * base, 2);
    }
    detail += " (need +" + format_fixed(100 * kTransferPoints, 0) + " points)";
    report(5, {pass, detail});
}

void fusion_dominance(const FullRuns& full) {
    bool pass = true;
    std::string detail = "all - own margins (points) per seed";
    for (Task t : kAllTasks) {
        detail += "; " + std::string(display_name(t)) + ":";
        double sum = 0;
        for (std::uint64_t seed : kFusionSeeds) {
            const FusionReport r = fusion_from_json(
                Json::parse(slurp(full.cwd / ("seed" + std::to_string(seed)) / "fuse" / "fusion.json")));
            const double margin = r.margin(t);
            pass = pass && margin >= 0;
            sum += margin;
            detail += " " + format_fixed(100 * margin, 2);
        }
        detail += " mean " + format_fixed(100 * sum / static_cast<double>(kFusionSeeds.size()), 2) + " ref " +
                  format_fixed(kReferenceMargins[static_cast<std::size_t>(t)], 1);
    }
    report(6, {pass, detail});
}

void checkpoint_round_trip(const FullRuns& full, const fs::path& work) {
    bool pass = true;
    std::string detail;
    const fs::path source = full.cwd / "seed1" / "b" / "id";
    const Checkpoint<float> original = load_checkpoint<float>(source / "checkpoint.ffck");
    const fs::path copy = work / "roundtrip.ffck";
    save_checkpoint(original, copy);
    const Checkpoint<float> loaded = load_checkpoint<float>(copy);

    Rng rng(7);
    std::size_t identical = 0;
    for (int i = 0; i < 10; ++i) {
        Tensor<float> x(original.network.spec().input_shape);
        for (float& v : x.data()) v = static_cast<float>(rng.uniform(-1, 1));
        const Tensor<float> a = forward_full(original.network, x).logits;
        const Tensor<float> b = forward_full(loaded.network, x).logits;
        const bool same = std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end(),
                                     [](float p, float q) {
                                         return std::bit_cast<std::uint32_t>(p) == std::bit_cast<std::uint32_t>(q);
                                     });
        identical += same ? 1 : 0;
    }
    pass = pass && identical == 10;
    detail += std::to_string(identical) + "/10 forwards bitwise identical";

    // Recorded test accuracy is reproduced by the reloaded backbone.
    RunConfig config;
    apply_json(config, Json::parse(slurp(source / "config.json")));
    config.data.manifest = full.cwd / config.data.manifest;
    const Dataset data = load_dataset(config.data);
    const std::vector<Example<float>> test = to_examples<float>(data.split.test);
    const double reproduced = evaluate(loaded.network, std::span<const Example<float>>(test), Task::id);
    const std::optional<double> recorded = last_test_accuracy(source / "metrics.csv");
    pass = pass && recorded && reproduced == *recorded;
    detail += "; test accuracy " + format_shortest(reproduced) + " vs recorded " +
              (recorded ? format_shortest(*recorded) : std::string("n/a"));

    const std::vector<std::uint8_t> bytes = serialize_checkpoint(original);
    std::size_t rejected = 0, attempts = 0, other_failures = 0;
    auto expect_rejected = [&](const std::vector<std::uint8_t>& bad) {
        ++attempts;
        try {
            deserialize_checkpoint<float>(bad);
        } catch (const CheckpointError&) {
            ++rejected;
        } catch (...) {
            ++other_failures;
        }
    };
    for (std::size_t cut = 0; cut < bytes.size(); cut += 1 + bytes.size() / 300) {
        expect_rejected(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<long>(cut)));
    }
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::uint8_t> bad = bytes;
        bad[rng.below(bad.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
        expect_rejected(bad);
    }
    pass = pass && rejected == attempts && other_failures == 0;
    detail += "; " + std::to_string(rejected) + "/" + std::to_string(attempts) +
              " truncated or corrupted files rejected with a checkpoint error";
    report(7, {pass, detail});
}

bool table_layout(const std::string& csv, const std::vector<std::string>& rows) {
    static const std::regex value(R"(\d{1,3}\.\d\d)");
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "Features,ID,Age,Race,Gender") return false;
    for (const std::string& label : rows) {
        if (!std::getline(in, line)) return false;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.size() != 5 || cells[0] != label) return false;
        for (std::size_t k = 1; k < 5; ++k) {
            if (!std::regex_match(cells[k], value)) return false;
        }
    }
    return !std::getline(in, line);
}

void protocol(const FullRuns& full) {
    tool(full.cwd, 1, {"train", "--task", "id", "--manifest", "d/manifest.jsonl", "--paper-faithful", "--dry-run",
                       "--out", "paper_faithful"});
    const Json echo = Json::parse(slurp(full.cwd / "paper_faithful" / "config.json"));
    const bool accepted = echo["train"]["batch_size"] == 200 && echo["train"]["iterations"] == 20000 &&
                          echo["data"]["augment_factor"] == 10 && echo["data"]["train_fraction"] == 0.7 &&
                          echo["data"]["group_by_source"] == false;
    const std::string log = slurp(full.cwd / "log.txt");
    const bool split = log.find("train id: 8400 train / 3600 test samples, 24 identities, per-sample split") !=
                       std::string::npos;
    const bool t1 = table_layout(slurp(full.cwd / "seed1" / "cross" / "table1.csv"),
                                 {"ID(200)", "Age(50)", "Race(50)", "Gender(50)"});
    const bool t2 = table_layout(slurp(full.cwd / "seed1" / "fuse" / "table2.csv"), {"Own", "Other three", "All"});
    report(8, {accepted && split && t1 && t2,
               std::string("paper-faithful defaults (batch 200, 20000 iterations, 10x augmentation, 0.7 per-sample "
                           "split) ") +
                   (accepted && split ? "accepted, 8400/3600 split" : "rejected") + "; table1.csv layout " +
                   (t1 ? "ok" : "mismatch") + "; table2.csv layout " + (t2 ? "ok" : "mismatch")});
}

void structural(const FullRuns& full) {
    std::vector<std::string> failures;
    auto require = [&](bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    };

    // Feature dims, including the 350-wide fusion input.
    const fs::path features = full.cwd / "seed1" / "cross" / "features";
    std::vector<FeatureSet> test_sets;
    for (Task t : kAllTasks) {
        FeatureSet set = read_feature_set(features / (std::string(to_string(t)) + "_test.tsv"));
        require(set.dim == (t == Task::id ? 200u : 50u), "feature dim of " + std::string(to_string(t)));
        test_sets.push_back(std::move(set));
    }
    const std::vector<std::size_t> dims{200, 50, 50, 50};
    require(build_fusion_head<float>(dims, 24, 1).spec().input_shape == Shape{350}, "fusion head input 350");

    // Concat alignment: every fused row carries the same sample's vectors.
    std::vector<FeatureSet> shuffled = test_sets;
    std::reverse(shuffled.begin(), shuffled.end());
    std::reverse(shuffled[1].rows.begin(), shuffled[1].rows.end());
    const FeatureSet fused = concat_features(shuffled);
    require(fused.dim == 350, "fused dim 350");
    std::vector<std::map<std::string, const FeatureRow*>> index(4);
    for (std::size_t k = 0; k < 4; ++k) {
        for (const FeatureRow& r : test_sets[k].rows) index[k][r.ref] = &r;
    }
    bool aligned = fused.rows.size() == test_sets[0].rows.size();
    for (const FeatureRow& row : fused.rows) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < 4 && aligned; ++k) {
            const auto it = index[k].find(row.ref);
            aligned = it != index[k].end() && it->second->labels == row.labels &&
                      std::equal(it->second->values.begin(), it->second->values.end(), row.values.begin() + offset);
            offset += test_sets[k].dim;
        }
    }
    require(aligned, "concat alignment");

    // Frozen backbones: checkpoints unchanged after the cross and fusion studies.
    for (std::size_t s = 0; s < full.runs.size(); ++s) {
        for (const auto& [task, bytes] : full.runs[s].checkpoints_before) {
            const fs::path path = full.cwd / ("seed" + std::to_string(kFusionSeeds[s])) / "b" / task / "checkpoint.ffck";
            require(slurp(path) == bytes, "frozen backbone " + path.string());
        }
    }

    // Softmax normalization.
    Rng rng(3);
    double worst = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Tensor<double> logits(Shape{2 + rng.below(100)});
        const double scale = trial % 2 ? 1e3 : 10;
        for (double& v : logits.data()) v = rng.uniform(-scale, scale);
        const SoftmaxLoss<double> s = softmax_cross_entropy(logits, 0);
        double sum = 0;
        for (double p : s.probs.data()) sum += p;
        worst = std::max(worst, std::abs(sum - 1));
    }
    require(worst <= kSoftmaxTolerance, "softmax normalization");

    // Learning-rate schedule never increases, in the recorded trace and in lr_at.
    std::istringstream in(slurp(full.cwd / "seed1" / "b" / "id" / "metrics.csv"));
    std::string line;
    std::getline(in, line);
    double previous = INFINITY;
    bool monotone = true;
    while (std::getline(in, line)) {
        const std::size_t a = line.find(',');
        const double lr = std::stod(line.substr(a + 1, line.find(',', a + 1) - a - 1));
        monotone = monotone && lr <= previous;
        previous = lr;
    }
    for (int trial = 0; trial < 100; ++trial) {
        TrainConfig c;
        c.iterations = 1 + rng.below(30000);
        c.lr = LrSchedule{rng.uniform(0.001, 1), rng.uniform(0.05, 1), rng.below(5000)};
        double last = INFINITY;
        for (std::size_t it = 0; it < c.iterations; it += 1 + rng.below(97)) {
            monotone = monotone && lr_at(c, it) <= last;
            last = lr_at(c, it);
        }
    }
    require(monotone, "lr schedule monotonicity");

    std::string detail = "feature dims 200/50/350, concat alignment over " + std::to_string(fused.rows.size()) +
                         " rows, frozen backbones (" + std::to_string(4 * full.runs.size()) +
                         " checkpoints), softmax sum error " + format_shortest(worst) + ", lr monotonicity";
    for (const std::string& f : failures) detail += "; failed: " + f;
    report(9, {failures.empty(), detail});
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: acceptance <facefuse-binary> <work-dir>\n";
        return 2;
    }
    g_binary = fs::absolute(argv[1]).string();
    const fs::path work = fs::absolute(argv[2]);
    fs::create_directories(work);

    auto guarded = [](const std::vector<int>& criteria, const auto& body) {
        try {
            body();
        } catch (const std::exception& e) {
            for (int c : criteria) report(c, {false, std::string("aborted: ") + e.what()});
        }
    };
    guarded({1}, gradient_fidelity);
    guarded({2}, conv_oracle);
    guarded({3}, [&] { determinism(work); });
    std::optional<FullRuns> full;
    guarded({4, 5, 6, 7, 8, 9}, [&] { full = full_runs(work); });
    if (full) {
        guarded({4}, [&] { learnability(*full); });
        guarded({5}, [&] { transfer(*full); });
        guarded({6}, [&] { fusion_dominance(*full); });
        guarded({7}, [&] { checkpoint_round_trip(*full, work); });
        guarded({8}, [&] { protocol(*full); });
        guarded({9}, [&] { structural(*full); });
    }

    std::sort(g_results.begin(), g_results.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t passed = 0;
    std::cout << "\nsummary\n";
    for (const auto& [criterion, verdict] : g_results) {
        std::cout << "  criterion " << criterion << ": " << (verdict.pass ? "PASS" : "FAIL") << "\n";
        passed += verdict.pass ? 1 : 0;
    }
    std::cout << passed << "/" << g_results.size() << " criteria passed" << std::endl;
    return passed == g_results.size() ? 0 : 1;
}
