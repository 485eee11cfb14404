#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "facefuse/data/synth.hpp"
#include "facefuse/error.hpp"
#include "facefuse/expt/experiments.hpp"
#include "facefuse/parallel.hpp"
#include "facefuse/train/checkpoint.hpp"
#include "facefuse/train/trainer.hpp"
#include "support.hpp"

using namespace facefuse;
namespace fs = std::filesystem;

namespace {

BackboneOptions tiny_backbone() {
    BackboneOptions o;
    o.filters = {4, 8, 8};
    o.same_padding = true;
    return o;
}

// 24 synthetic identities at 16x16, six images each, split by source.
struct TinyData {
    std::vector<Example<float>> train, test;
};

const TinyData& tiny_data() {
    static const TinyData data = [] {
        SynthConfig synth;
        synth.images_per_id = 6;
        synth.resolution = 16;
        const fs::path dir = test::scratch_dir("train_data");
        synth_generate(synth, dir);
        DataConfig config;
        config.manifest = dir / "manifest.jsonl";
        config.augment = AugmentSpec{2, 3};
        const Dataset ds = load_dataset(config);
        return TinyData{to_examples<float>(ds.split.train), to_examples<float>(ds.split.test)};
    }();
    return data;
}

Network<float> tiny_net(Task task, std::uint64_t seed = 1) {
    return build_backbone<float>(TaskDescriptor::defaults(task, 24), Shape{1, 16, 16}, seed, tiny_backbone());
}

TrainConfig quick_config(std::size_t iterations) {
    TrainConfig c;
    c.batch_size = 16;
    c.iterations = iterations;
    c.eval_every = 10;
    c.seed = 5;
    return c;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

FeatureSet toy_features(std::size_t dim, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    FeatureSet set;
    set.sources = {Task::id};
    set.dim = dim;
    set.split = "train";
    for (std::size_t i = 0; i < n; ++i) {
        FeatureRow row;
        row.ref = "r" + std::to_string(i);
        row.labels = Labels{static_cast<int>(i % 5), static_cast<int>(i % 3), static_cast<int>(i % 4),
                            static_cast<int>(i % 2)};
        for (std::size_t d = 0; d < dim; ++d) row.values.push_back(rng.uniform(-1, 1));
        set.rows.push_back(row);
    }
    return set;
}

}  // namespace

TEST_CASE("lr_at step decay") {
    TrainConfig c;
    c.iterations = 4000;
    c.lr = LrSchedule{0.1, 0.5, 1000};
    CHECK(lr_at(c, 0) == 0.1);
    CHECK(lr_at(c, 999) == 0.1);
    CHECK(lr_at(c, 1000) == 0.05);
    CHECK(lr_at(c, 2999) == 0.025);

    c.lr.interval = 0;
    CHECK(c.resolved_interval() == 1000);
    CHECK(c.resolved_eval_every() == 40);
}

TEST_CASE("lr_at is non-increasing") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        TrainConfig c;
        c.iterations = 1 + rng.below(5000);
        c.lr = LrSchedule{rng.uniform(0, 1), rng.uniform(0.01, 1), rng.below(300)};
        double previous = std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < c.iterations; it += 1 + rng.below(20)) {
            const double lr = lr_at(c, it);
            CHECK(lr <= previous);
            previous = lr;
        }
    }
}

TEST_CASE("training defaults") {
    const TrainConfig c;
    CHECK(c.batch_size == 200);
    CHECK(c.iterations == 20000);
    CHECK(c.resolved_eval_every() == 200);
    CHECK(c.resolved_interval() == 5000);
}

TEST_CASE("invalid configurations") {
    TrainConfig c;
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.lr.initial = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.lr.initial = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.lr.factor = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.lr.factor = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("one step at lr 0 leaves parameters unchanged") {
    const TinyData& data = tiny_data();
    const Network<float> net = tiny_net(Task::age);
    TrainConfig c = quick_config(1);
    c.lr.initial = 0;
    const TrainResult<float> r = train(net, std::span<const Example<float>>(data.train), {}, Task::age, c);
    CHECK(r.checkpoint.network == net);
    REQUIRE(r.metrics.size() == 1);

    // Independent recomputation of the first batch loss.
    Rng rng(c.seed);
    double loss = 0;
    for (std::size_t k = 0; k < c.batch_size; ++k) {
        const Example<float>& e = data.train[rng.below(data.train.size())];
        const Tensor<float> logits = forward_full(net, e.input).logits;
        double m = logits[0];
        for (float v : logits.data()) m = std::max<double>(m, v);
        double z = 0;
        for (float v : logits.data()) z += std::exp(v - m);
        loss += m + std::log(z) - logits[static_cast<std::size_t>(e.labels.age)];
    }
    CHECK(r.metrics[0].train_loss == doctest::Approx(loss / c.batch_size).epsilon(1e-5));
    CHECK(r.metrics[0].lr == 0);
}

TEST_CASE("training is deterministic across runs and worker counts") {
    const TinyData& data = tiny_data();
    const TrainConfig c = quick_config(12);
    const std::span<const Example<float>> tr(data.train), te(data.test);
    const std::size_t saved = worker_count();
    set_worker_count(1);
    const TrainResult<float> a = train(tiny_net(Task::race), tr, te, Task::race, c);
    const TrainResult<float> b = train(tiny_net(Task::race), tr, te, Task::race, c);
    set_worker_count(4);
    const TrainResult<float> d = train(tiny_net(Task::race), tr, te, Task::race, c);
    set_worker_count(saved);
    CHECK(a.metrics == b.metrics);
    CHECK(a.metrics == d.metrics);
    CHECK(a.checkpoint.network == b.checkpoint.network);
    CHECK(a.checkpoint.network == d.checkpoint.network);
    CHECK(a.checkpoint.rng_state == d.checkpoint.rng_state);
    CHECK(serialize_checkpoint(a.checkpoint) == serialize_checkpoint(d.checkpoint));
}

TEST_CASE("metrics trace shape") {
    const TinyData& data = tiny_data();
    const TrainConfig c = quick_config(25);
    const TrainResult<float> r = train(tiny_net(Task::gender), std::span<const Example<float>>(data.train),
                                       std::span<const Example<float>>(data.test), Task::gender, c);
    REQUIRE(r.metrics.size() == 25);
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
        CHECK(r.metrics[i].iteration == i);
        const bool evaluated = (i + 1) % 10 == 0 || i + 1 == 25;
        CHECK(r.metrics[i].test_acc.has_value() == evaluated);
    }
    CHECK(*r.metrics.back().test_acc == evaluate(r.checkpoint.network,
                                                 std::span<const Example<float>>(data.test), Task::gender));

    const std::string csv = metrics_csv(r.metrics);
    CHECK(csv.rfind("iteration,lr,train_loss,train_acc,test_acc\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);
    CHECK(csv.find("\n0,0.05,") != std::string::npos);
}

TEST_CASE("training loss decreases on the synthetic set") {
    const TinyData& data = tiny_data();
    const TrainConfig c = quick_config(200);
    const TrainResult<float> r =
        train(tiny_net(Task::age), std::span<const Example<float>>(data.train), {}, Task::age, c);
    std::vector<double> early, late;
    for (const MetricsRow& row : r.metrics) (row.iteration < 100 ? early : late).push_back(row.train_loss);
    CHECK(median(late) < median(early));
}

TEST_CASE("non-finite loss aborts with diagnostics") {
    std::vector<Example<float>> bad = tiny_data().train;
    for (Example<float>& e : bad) e.input.fill(std::numeric_limits<float>::quiet_NaN());
    try {
        train(tiny_net(Task::age), std::span<const Example<float>>(bad), {}, Task::age, quick_config(3));
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string what = e.what();
        CHECK(what.find("iteration 0") != std::string::npos);
        CHECK(what.find("lr 0.05") != std::string::npos);
        CHECK(what.find("batch: ") != std::string::npos);
    }
}

TEST_CASE("empty training set is a configuration error") {
    CHECK_THROWS_AS(train(tiny_net(Task::age), std::span<const Example<float>>{}, {}, Task::age, quick_config(1)),
                    ConfigError);
}

TEST_CASE("evaluate breaks argmax ties toward the lowest class") {
    Network<double> head = build_cross_task_head<double>(3, 2, 1);
    for (LayerParams<double>& p : head.mutable_params()) p.weights.fill(0);
    std::vector<Example<double>> set;
    for (int i = 0; i < 10; ++i) {
        set.push_back(Example<double>{"e" + std::to_string(i), Labels{0, 0, 0, i < 5 ? 0 : 1}, Tensor<double>(Shape{3})});
    }
    CHECK(predict(head, set[0].input) == 0);
    CHECK(evaluate(head, std::span<const Example<double>>(set), Task::gender) == 0.5);
}

TEST_CASE("a single sample is memorized") {
    const Example<float> e = tiny_data().train.front();
    TrainConfig c = quick_config(60);
    c.batch_size = 1;
    c.lr.initial = 0.02;
    const std::vector<Example<float>> one{e};
    const TrainResult<float> r = train(tiny_net(Task::id), std::span<const Example<float>>(one),
                                       std::span<const Example<float>>(one), Task::id, c);
    CHECK(*r.metrics.back().test_acc == 1.0);
}

TEST_CASE("evaluate agrees with a recount over exported predictions") {
    const TinyData& data = tiny_data();
    const TrainResult<float> r = train(tiny_net(Task::race), std::span<const Example<float>>(data.train), {},
                                       Task::race, quick_config(40));
    const std::span<const Example<float>> test(data.test);
    const std::vector<std::size_t> predictions = predict_all(r.checkpoint.network, test);
    REQUIRE(predictions.size() == data.test.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const Tensor<float> logits = forward_full(r.checkpoint.network, data.test[i].input).logits;
        const auto best = static_cast<std::size_t>(
            std::max_element(logits.data().begin(), logits.data().end()) - logits.data().begin());
        CHECK(predictions[i] == best);
        hits += static_cast<int>(best) == data.test[i].labels.race ? 1 : 0;
    }
    CHECK(evaluate(r.checkpoint.network, test, Task::race) ==
          static_cast<double>(hits) / static_cast<double>(predictions.size()));
}

TEST_CASE("checkpoint round trip is bitwise") {
    const TinyData& data = tiny_data();
    TrainResult<float> r = train(tiny_net(Task::gender), std::span<const Example<float>>(data.train),
                                 std::span<const Example<float>>(data.test), Task::gender, quick_config(20));
    r.checkpoint.config_echo = R"({"note":"echo"})";
    const fs::path path = test::scratch_dir("ckpt") / "model.ffck";
    save_checkpoint(r.checkpoint, path);
    CHECK(checkpoint_precision(path) == Precision::f32);
    const Checkpoint<float> back = load_checkpoint<float>(path);
    CHECK(back.network == r.checkpoint.network);
    CHECK(back.iteration == 20);
    CHECK(back.rng_state == r.checkpoint.rng_state);
    CHECK(back.config_echo == r.checkpoint.config_echo);

    Rng rng(9);
    for (int i = 0; i < 10; ++i) {
        const Tensor<float> x = test::random_tensor<float>(rng, Shape{1, 16, 16});
        const Tensor<float> a = forward_full(r.checkpoint.network, x).logits;
        const Tensor<float> b = forward_full(back.network, x).logits;
        CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end(),
                         [](float p, float q) { return std::bit_cast<std::uint32_t>(p) == std::bit_cast<std::uint32_t>(q); }));
    }
    CHECK(evaluate(back.network, std::span<const Example<float>>(data.test), Task::gender) ==
          *r.metrics.back().test_acc);

    const Network<double> wide = build_cross_task_head<double>(7, 3, 2);
    save_checkpoint(wide, path);
    CHECK(checkpoint_precision(path) == Precision::f64);
    CHECK(load_checkpoint<double>(path).network == wide);
    CHECK_THROWS_AS(load_checkpoint<float>(path), CheckpointError);
}

TEST_CASE("corrupted checkpoints are rejected") {
    const Network<float> net = build_cross_task_head<float>(6, 3, 4);
    const std::vector<std::uint8_t> good = serialize_checkpoint(Checkpoint<float>{net, 3, "rng", "echo"});
    CHECK(deserialize_checkpoint<float>(good).network == net);

    for (std::size_t cut = 0; cut < good.size(); cut += 1 + cut / 7) {
        CAPTURE(cut);
        CHECK_THROWS_AS(deserialize_checkpoint<float>(std::vector<std::uint8_t>(good.begin(), good.begin() + cut)),
                        CheckpointError);
    }
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint8_t> bad = good;
        bad[rng.below(bad.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
        CHECK_THROWS_AS(deserialize_checkpoint<float>(bad), CheckpointError);
    }
    std::vector<std::uint8_t> magic = good;
    magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_checkpoint<float>(magic), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint<float>("/nonexistent/model.ffck"), CheckpointError);
}

TEST_CASE("head training") {
    const FeatureSet train_set = toy_features(8, 40, 1);
    FeatureSet test_set = toy_features(8, 12, 2);
    test_set.split = "test";
    const Network<double> head = build_cross_task_head<double>(8, 3, 7);

    SUBCASE("zero iterations return the initialization") {
        TrainConfig c;
        c.iterations = 0;
        const TrainResult<double> r = train_head(train_set, test_set, head, Task::age, c);
        CHECK(r.checkpoint.network == head);
        CHECK(r.metrics.empty());
    }
    SUBCASE("feature width must match the head") {
        CHECK_THROWS_AS(train_head(toy_features(9, 10, 1), test_set, head, Task::age, quick_config(1)),
                        DimensionError);
    }
    SUBCASE("feature rows become flat examples") {
        const auto examples = feature_examples<double>(train_set);
        REQUIRE(examples.size() == 40);
        CHECK(examples[3].ref == "r3");
        CHECK(examples[3].input.shape() == Shape{8});
        CHECK(examples[3].input[5] == train_set.rows[3].values[5]);
    }
}

TEST_CASE("a head on ID features beats the gender baseline without touching the backbone") {
    const TinyData& data = tiny_data();
    const TrainResult<float> id = train(tiny_net(Task::id), std::span<const Example<float>>(data.train), {}, Task::id,
                                        quick_config(150));
    const fs::path path = test::scratch_dir("frozen") / "id.ffck";
    save_checkpoint(id.checkpoint, path);
    const std::string before = test::slurp(path);

    const Network<float> backbone = load_checkpoint<float>(path).network;
    const FeatureSet tr = extract_features(backbone, std::span<const Example<float>>(data.train), Task::id, "train");
    const FeatureSet te = extract_features(backbone, std::span<const Example<float>>(data.test), Task::id, "test");
    TrainConfig c = quick_config(300);
    const TrainResult<double> head =
        train_head(tr, te, build_cross_task_head<double>(tr.dim, 2, 3), Task::gender, c);

    CHECK(test::slurp(path) == before);
    CHECK(load_checkpoint<float>(path).network == backbone);
    const double accuracy = *head.metrics.back().test_acc;
    const double baseline = majority_baseline(te, Task::gender);
    MESSAGE("gender from ID features: " << accuracy << " vs baseline " << baseline);
    CHECK(accuracy > baseline);
}
