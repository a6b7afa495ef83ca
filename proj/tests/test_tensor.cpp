#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "amr/tensor.hpp"

using namespace amr;

namespace {

void randomize(ParamStore& ps, uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& p : ps.all()) init_normal(*p, rng, 0.5);
}

}  // namespace

TEST_CASE("softmax of an all-zero vector is uniform") {
    Tape t;
    auto y = t.softmax_rows(t.zeros(1, 5));
    for (double v : t.values(y)) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and are nonnegative") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d(0, 3);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> vals(12);
        for (auto& v : vals) v = d(rng);
        Tape t;
        auto y = t.softmax_rows(t.input(3, 4, vals));
        const auto& yv = t.values(y);
        for (int r = 0; r < 3; ++r) {
            double s = 0;
            for (int c = 0; c < 4; ++c) {
                CHECK(yv[r * 4 + c] >= 0.0);
                s += yv[r * 4 + c];
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("max over rows takes column-wise maxima") {
    Tape t;
    auto y = t.max_over_rows(t.input(2, 2, {0.2, 0.7, 0.9, 0.1}));
    CHECK(t.values(y) == std::vector<double>{0.9, 0.7});
}

TEST_CASE("concat backward splits the gradient without loss") {
    ParamStore ps;
    auto& a = ps.create("a", 2, 3);
    auto& b = ps.create("b", 1, 3);
    randomize(ps, 5);
    Tape t;
    auto cat = t.concat_rows({t.param(a), t.param(b)});
    auto loss = t.sum_all(t.mul(cat, cat));
    ps.zero_grads();
    t.backward(loss);
    // d(sum x^2)/dx = 2x, routed to each source block exactly
    for (size_t i = 0; i < a.size(); ++i) CHECK(a.grad[i] == doctest::Approx(2 * a.value[i]));
    for (size_t i = 0; i < b.size(); ++i) CHECK(b.grad[i] == doctest::Approx(2 * b.value[i]));
}

TEST_CASE("quadratic loss gradient is near machine precision") {
    ParamStore ps;
    ps.create("w", 3, 3);
    randomize(ps, 7);
    auto res = grad_check(ps, [&](Tape& t) {
        auto w = t.param(*ps.find("w"));
        return t.sum_all(t.mul(w, w));
    });
    CHECK(res.checked > 0);
    CHECK(res.max_rel_error < 1e-7);
}

TEST_CASE("random op graphs match central differences") {
    // five-or-more-op chains over the full op set used by the model
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        ParamStore ps;
        auto& A = ps.create("A", 3, 4);
        auto& B = ps.create("B", 4, 3);
        auto& C = ps.create("C", 3, 3);
        auto& g = ps.create("g", 1, 3);
        auto& bias = ps.create("b", 1, 3);
        randomize(ps, seed);
        auto build = [&](Tape& t) {
            auto x = t.matmul(t.param(A), t.param(B));       // 3x3
            x = t.add(x, t.param(C));
            x = t.layernorm_rows(x, t.param(g), t.param(bias));
            x = t.softmax_rows(x);
            auto y = t.sigmoid(t.matmul_nt(x, t.transpose(t.param(C))));
            auto z = t.mul(x, y);
            return t.sum_all(t.log(t.clamp(z, 1e-9, 10.0)));
        };
        auto res = grad_check(ps, build, {.eps = 1e-5, .max_coords_per_param = 8, .seed = seed});
        CAPTURE(seed);
        CHECK_FALSE(res.nonfinite_loss);
        CHECK(res.max_rel_error < 1e-4);
    }
}

TEST_CASE("embedding, conv1d and pooling gradients") {
    for (uint64_t seed = 21; seed <= 24; ++seed) {
        ParamStore ps;
        auto& table = ps.create("table", 6, 4);
        auto& w = ps.create("w", 3 * 4, 5);
        auto& b = ps.create("b", 1, 5);
        auto& proj = ps.create("proj", 5, 2);
        randomize(ps, seed);
        auto build = [&](Tape& t) {
            auto emb = t.embedding_rows(t.param(table), {0, 3, 2, 3, 5});
            auto conv = t.relu(t.conv1d_rows(emb, t.param(w), t.param(b), 3));
            auto pooled = t.max_over_rows(conv);
            auto out = t.matmul(pooled, t.param(proj));
            return t.sum_all(t.sigmoid(out));
        };
        auto res = grad_check(ps, build, {.eps = 1e-5, .max_coords_per_param = 10, .seed = seed});
        CAPTURE(seed);
        CHECK(res.max_rel_error < 1e-4);
    }
}

TEST_CASE("scalar broadcast and slicing gradients") {
    ParamStore ps;
    auto& x = ps.create("x", 2, 6);
    auto& rv = ps.create("rv", 1, 6);
    randomize(ps, 31);
    auto build = [&](Tape& t) {
        auto a = t.add_rowvec(t.param(x), t.param(rv));
        auto s = t.sum_all(t.sigmoid(t.slice_cols(a, 1, 4)));
        auto top = t.slice_rows(a, 0, 1);
        auto scaled = t.div_by_scalar(top, t.sum_all(t.sigmoid(top)));
        auto both = t.concat_cols({scaled, t.mul_by_scalar(top, s)});
        return t.sum_all(t.mul(both, both));
    };
    auto res = grad_check(ps, build, {.eps = 1e-5, .max_coords_per_param = 12, .seed = 31});
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("shape mismatches report both shapes") {
    Tape t;
    auto a = t.zeros(2, 3);
    auto b = t.zeros(4, 5);
    try {
        t.matmul(a, b);
        FAIL("expected TensorError");
    } catch (const TensorError& e) {
        std::string msg = e.what();
        CHECK(msg.find("(2x3)") != std::string::npos);
        CHECK(msg.find("(4x5)") != std::string::npos);
    }
    CHECK_THROWS_AS(t.add(a, b), TensorError);
}

TEST_CASE("grad_check flags non-finite losses instead of comparing") {
    ParamStore ps;
    ps.create("w", 2, 2);
    randomize(ps, 41);
    auto res = grad_check(ps, [&](Tape& t) {
        auto w = t.param(*ps.find("w"));
        return t.sum_all(t.log(t.scale(t.mul(w, w), -1.0)));  // log of negatives
    });
    CHECK(res.nonfinite_loss);
}

TEST_CASE("checkpoint roundtrip preserves float64 values exactly") {
    namespace fs = std::filesystem;
    std::string path = (fs::temp_directory_path() / "amr_ckpt_test.bin").string();
    ParamStore ps;
    ps.create("layer.weight", 3, 5);
    ps.create("layer.bias", 1, 5);
    randomize(ps, 43);
    save_checkpoint(ps, path);

    ParamStore fresh;
    load_checkpoint(fresh, path);
    REQUIRE(fresh.all().size() == 2);
    for (size_t i = 0; i < ps.all().size(); ++i) {
        const auto& a = *ps.all()[i];
        const auto& b = *fresh.all()[i];
        CHECK(a.name == b.name);
        REQUIRE(a.value.size() == b.value.size());
        for (size_t j = 0; j < a.value.size(); ++j) CHECK(a.value[j] == b.value[j]);
    }

    // float32 inference checkpoints quantize but stay close
    save_checkpoint(ps, path, true);
    ParamStore f32;
    load_checkpoint(f32, path);
    for (size_t i = 0; i < ps.all().size(); ++i)
        for (size_t j = 0; j < ps.all()[i]->value.size(); ++j) {
            double a = ps.all()[i]->value[j], b = f32.all()[i]->value[j];
            CHECK(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)));
            CHECK(static_cast<double>(static_cast<float>(a)) == b);
        }

    // corrupted magic is rejected
    {
        std::ofstream bad(path, std::ios::binary);
        bad << "NOTACKPT00000000";
    }
    ParamStore junk;
    CHECK_THROWS_AS(load_checkpoint(junk, path), TensorError);
    fs::remove(path);
}

TEST_CASE("load_checkpoint validates shapes") {
    namespace fs = std::filesystem;
    std::string path = (fs::temp_directory_path() / "amr_ckpt_shape.bin").string();
    ParamStore ps;
    ps.create("w", 2, 2);
    save_checkpoint(ps, path);
    ParamStore other;
    other.create("w", 3, 3);
    CHECK_THROWS_AS(load_checkpoint(other, path), TensorError);
    fs::remove(path);
}
