#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "aflsim/client.hpp"
#include "aflsim/dataset.hpp"
#include "aflsim/errors.hpp"
#include "aflsim/model.hpp"
#include "aflsim/rng.hpp"

using namespace aflsim;

namespace {

struct Fixture {
    Dataset data = synthetic_dataset(120, 10, 3);
    Network net = Network::mlp(784, 16, 10);
    ModelParameters initial;

    Fixture() {
        Rng rng(derive_seed(99, "init"));
        initial = net.init_params(rng);
    }

    ClientState make_client(int id = 0, std::uint64_t seed = 5) const {
        ClientState s;
        s.client_id = id;
        s.capability = 1.0;
        s.data_indices.resize(data.size());
        std::iota(s.data_indices.begin(), s.data_indices.end(), 0);
        s.base_model = initial;
        s.base_timestamp = 0;
        s.rng_seed = seed;
        return s;
    }

    double loss_on_own_data(const ModelParameters& m) const {
        std::vector<std::size_t> idx(data.size());
        std::iota(idx.begin(), idx.end(), 0);
        return net.training_loss(m, gather(data, idx));
    }
};

double distance(const ModelParameters& a, const ModelParameters& b) {
    REQUIRE(a.values.size() == b.values.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        double diff = a.values[i] - b.values[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

} // namespace

TEST_CASE("local_train is a pure function of its inputs") {
    Fixture f;
    TrainingConfig cfg;
    ClientState c = f.make_client();
    ClientUpdate a = local_train(c, cfg, f.data, f.net);
    ClientUpdate b = local_train(c, cfg, f.data, f.net);
    CHECK(a.model.values == b.model.values);

    ClientState other = f.make_client(0, 6);
    ClientUpdate d = local_train(other, cfg, f.data, f.net);
    CHECK(a.model.values != d.model.values);
}

TEST_CASE("zero learning rate returns the base model bit for bit") {
    Fixture f;
    TrainingConfig cfg;
    cfg.eta = 0.0;
    ClientUpdate u = local_train(f.make_client(), cfg, f.data, f.net);
    CHECK(u.model.values == f.initial.values);
}

TEST_CASE("update metadata passes through from the client state") {
    Fixture f;
    TrainingConfig cfg;
    cfg.epochs = 1;
    ClientState c = f.make_client(7);
    c.base_timestamp = 42;
    ClientUpdate u = local_train(c, cfg, f.data, f.net);
    CHECK(u.client_id == 7);
    CHECK(u.tau == 42);
    CHECK(u.num_samples == 120);
}

TEST_CASE("two epochs of sgd reduce the local training loss") {
    Fixture f;
    TrainingConfig cfg;
    cfg.eta = 0.05;
    cfg.mu = 0.0;
    ClientUpdate u = local_train(f.make_client(), cfg, f.data, f.net);
    double before = f.loss_on_own_data(f.initial);
    double after = f.loss_on_own_data(u.model);
    CHECK(after < before);
    CHECK(after < before * 0.9);
}

TEST_CASE("proximal term keeps the result closer to the base model") {
    Fixture f;
    TrainingConfig lax, tight;
    lax.eta = tight.eta = 0.01;
    lax.mu = 0.0;
    tight.mu = 10.0;
    ClientUpdate free_run = local_train(f.make_client(), lax, f.data, f.net);
    ClientUpdate anchored = local_train(f.make_client(), tight, f.data, f.net);
    double d_free = distance(free_run.model, f.initial);
    double d_anchored = distance(anchored.model, f.initial);
    CHECK(d_anchored < d_free);
    CHECK(d_anchored > 0.0);
}

TEST_CASE("a final short minibatch is consumed, not skipped") {
    Fixture f;
    TrainingConfig cfg;
    cfg.epochs = 1;
    cfg.minibatch_size = 50;
    ClientState c = f.make_client();
    c.data_indices.resize(7);  // single batch smaller than minibatch_size
    ClientUpdate u = local_train(c, cfg, f.data, f.net);
    CHECK(u.num_samples == 7);
    CHECK(u.model.values != f.initial.values);
}

TEST_CASE("empty partition is rejected") {
    Fixture f;
    TrainingConfig cfg;
    ClientState c = f.make_client();
    c.data_indices.clear();
    CHECK_THROWS_AS(local_train(c, cfg, f.data, f.net), ConfigError);
}

TEST_CASE("training duration formula") {
    TrainingConfig cfg;  // epochs 2, minibatch 50
    ClientState c;
    c.capability = 100.0;
    c.data_indices.resize(200);
    CHECK(training_duration(c, cfg, 1.0) == doctest::Approx(0.08).epsilon(1e-12));

    c.data_indices.resize(201);  // ceil kicks in: 5 batches
    CHECK(training_duration(c, cfg, 1.0) == doctest::Approx(0.10).epsilon(1e-12));

    c.data_indices.resize(200);
    CHECK(training_duration(c, cfg, 2.5) == doctest::Approx(0.20).epsilon(1e-12));

    SUBCASE("inverse in capability, 20x spread") {
        ClientState fast = c, slow = c;
        fast.capability = 100.0;
        slow.capability = 5.0;
        double r = training_duration(slow, cfg, 1.0) / training_duration(fast, cfg, 1.0);
        CHECK(r == doctest::Approx(20.0).epsilon(1e-12));
    }

    SUBCASE("non-decreasing in data size, stepping at batch boundaries") {
        ClientState s = c;
        double prev = 0.0;
        for (std::size_t n : {1u, 49u, 50u, 51u, 99u, 100u, 101u, 150u}) {
            s.data_indices.resize(n);
            double d = training_duration(s, cfg, 1.0);
            CHECK(d >= prev);
            prev = d;
        }
        s.data_indices.resize(50);
        double at50 = training_duration(s, cfg, 1.0);
        s.data_indices.resize(51);
        CHECK(training_duration(s, cfg, 1.0) > at50);
    }
}
