#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <vector>

#include "relatt/num/adam.hpp"
#include "relatt/num/checkpoint.hpp"
#include "relatt/num/rng.hpp"

using namespace relatt;

namespace {

// Independent scalar Adam used as the oracle for the tensor implementation.
struct ScalarAdam {
    double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.1;
    double m = 0.0, v = 0.0;
    int t = 0;

    double step(double x, double g) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        double mhat = m / (1 - std::pow(b1, t));
        double vhat = v / (1 - std::pow(b2, t));
        return x - lr * mhat / (std::sqrt(vhat) + eps);
    }
};

}  // namespace

TEST_CASE("five Adam steps on x^2 match the scalar oracle and frozen trace") {
    // frozen from the oracle: x0 = 1, lr = 0.1, grad = 2x
    const double frozen[5] = {0.90000000049999995, 0.80041222869179285, 0.70158627294603026,
                              0.60393906057374602, 0.50796365926434195};

    Tensor x = Tensor::scalar(1.0);
    std::vector<Tensor> snapshot{x};
    AdamConfig cfg;
    cfg.lr = 0.1;
    AdamState adam(snapshot, cfg);
    ScalarAdam ref;
    double xr = 1.0;
    for (int t = 0; t < 5; ++t) {
        Tensor g = Tensor::scalar(2.0 * x[0]);
        std::vector<Tensor*> ptr{&x};
        adam.step(ptr, std::vector<Tensor>{g});
        xr = ref.step(xr, 2.0 * xr);
        CHECK(x[0] == Catch::Approx(xr).margin(1e-12));
        CHECK(x[0] == Catch::Approx(frozen[t]).margin(1e-12));
    }
    CHECK(adam.step_count() == 5);
}

TEST_CASE("first Adam step moves by about lr, against the gradient sign") {
    Tensor x = Tensor::scalar(5.0);
    std::vector<Tensor> snapshot{x};
    AdamConfig cfg;
    cfg.lr = 0.1;
    AdamState adam(snapshot, cfg);
    std::vector<Tensor*> ptr{&x};
    adam.step(ptr, std::vector<Tensor>{Tensor::scalar(2.0)});
    // bias-corrected first step: m_hat/sqrt(v_hat) = g/|g|
    CHECK(x[0] == Catch::Approx(5.0 - 0.1).epsilon(1e-6));
}

TEST_CASE("zero gradient leaves the parameter unchanged") {
    Tensor x = Tensor::vector({1.0, -2.0});
    std::vector<Tensor> snapshot{x};
    AdamState adam(snapshot, AdamConfig{});
    std::vector<Tensor*> ptr{&x};
    adam.step(ptr, std::vector<Tensor>{Tensor::vector({0.0, 0.0})});
    CHECK(x[0] == 1.0);
    CHECK(x[1] == -2.0);
}

TEST_CASE("Adam rejects shape mismatches") {
    Tensor x = Tensor::vector({1.0, 2.0});
    std::vector<Tensor> snapshot{x};
    AdamState adam(snapshot, AdamConfig{});
    std::vector<Tensor*> ptr{&x};
    CHECK_THROWS_AS(adam.step(ptr, std::vector<Tensor>{Tensor::vector({1.0})}), ContractError);
}

TEST_CASE("doubling every gradient leaves the eps->0 step trajectory unchanged") {
    auto run = [](double scale) {
        Tensor x = Tensor::scalar(1.0);
        std::vector<Tensor> snapshot{x};
        AdamConfig cfg;
        cfg.lr = 0.05;
        cfg.epsilon = 1e-300;
        AdamState adam(snapshot, cfg);
        std::vector<double> trace;
        Rng rng(42);
        double prev = x[0];
        for (int t = 0; t < 8; ++t) {
            std::vector<Tensor*> ptr{&x};
            adam.step(ptr, std::vector<Tensor>{Tensor::scalar(scale * rng.uniform(0.1, 1.0))});
            trace.push_back(x[0] - prev);
            prev = x[0];
        }
        return trace;
    };
    auto steps1 = run(1.0);
    auto steps2 = run(2.0);
    for (std::size_t i = 0; i < steps1.size(); ++i)
        CHECK(steps1[i] == Catch::Approx(steps2[i]).margin(1e-12));
}

TEST_CASE("checkpoint round-trips tensors and string sections bit-exactly") {
    namespace fs = std::filesystem;
    Rng rng(9);
    Checkpoint ckpt;
    ckpt.config_hash = 0xDEADBEEFCAFEF00DULL;
    ckpt.strings["config"] = "lr = 0.01\nseed = 42\n";
    ckpt.strings["entities"] = "a\nb\nc\n";
    Tensor a = Tensor::zeros({3, 4});
    for (std::int64_t i = 0; i < a.numel(); ++i) a[i] = rng.uniform(-10, 10);
    a[0] = 0.1;  // not exactly representable: the bit pattern must survive
    Tensor b = Tensor::vector({1e-300, -0.0, 3.5});
    ckpt.tensors.emplace_back("weights", a);
    ckpt.tensors.emplace_back("bias", b);

    fs::path path = fs::temp_directory_path() / "relatt_ckpt_test.bin";
    save_checkpoint(ckpt, path.string());
    Checkpoint loaded = load_checkpoint(path.string());

    CHECK(loaded.config_hash == ckpt.config_hash);
    CHECK(loaded.string("config") == ckpt.strings["config"]);
    CHECK(loaded.string("entities") == ckpt.strings["entities"]);
    REQUIRE(loaded.tensors.size() == 2);
    CHECK(loaded.tensors[0].first == "weights");
    const Tensor& a2 = loaded.tensor("weights");
    REQUIRE(a2.same_shape(a));
    for (std::int64_t i = 0; i < a.numel(); ++i)
        CHECK(std::memcmp(&a2.data()[static_cast<std::size_t>(i)],
                          &a.data()[static_cast<std::size_t>(i)], sizeof(double)) == 0);
    const Tensor& b2 = loaded.tensor("bias");
    CHECK(std::signbit(b2[1]));  // -0.0 preserved

    // byte-identical files on rewrite
    fs::path path2 = fs::temp_directory_path() / "relatt_ckpt_test2.bin";
    save_checkpoint(loaded, path2.string());
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("checkpoint loader rejects garbage") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "relatt_ckpt_bad.bin";
    {
        std::ofstream os(path, std::ios::binary);
        os << "not a checkpoint";
    }
    CHECK_THROWS_AS(load_checkpoint(path.string()), ParseError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/path.bin"), IoError);
}
