#include <doctest.h>

#include <random>
#include <vector>

#include "taseg/kernels.hpp"

using namespace taseg;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

struct BackendGuard {
    kernels::Backend saved = kernels::active_backend();
    ~BackendGuard() { kernels::set_backend(saved); }
};

} // namespace

TEST_CASE("kernel dispatch reports a valid backend") {
    const auto b = kernels::active_backend();
    CHECK(kernels::backend_name(b) != nullptr);
    BackendGuard guard;
    kernels::set_backend(kernels::Backend::scalar);
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
}

TEST_CASE("simd kernels match the scalar reference") {
    const auto best = kernels::best_backend();
    if (best == kernels::Backend::scalar) {
        MESSAGE("no SIMD backend on this CPU; equivalence trivially holds");
        return;
    }
    BackendGuard guard;
    kernels::set_backend(best);

    std::mt19937_64 rng(123);
    // Sizes straddle the vector width, including sub-width and remainders.
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 100u, 1000u}) {
        auto a = random_vec(n, rng);
        auto b = random_vec(n, rng);

        SUBCASE("") {} // keep per-size failures attributable
        {
            auto dst_simd = a;
            auto dst_ref = a;
            kernels::axpy(dst_simd.data(), b.data(), 1.7, n);
            kernels::scalar::axpy(dst_ref.data(), b.data(), 1.7, n);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(dst_simd[i] == doctest::Approx(dst_ref[i]).epsilon(1e-14));
        }
        {
            const double simd = kernels::dot(a.data(), b.data(), n);
            const double ref = kernels::scalar::dot(a.data(), b.data(), n);
            CHECK(simd == doctest::Approx(ref).epsilon(1e-12));
        }
        {
            const double simd = kernels::sum(a.data(), n);
            const double ref = kernels::scalar::sum(a.data(), n);
            CHECK(simd == doctest::Approx(ref).epsilon(1e-12));
        }
        {
            std::vector<double> dst_simd(n), dst_ref(n);
            kernels::relu(dst_simd.data(), a.data(), n);
            kernels::scalar::relu(dst_ref.data(), a.data(), n);
            CHECK(dst_simd == dst_ref); // max against zero is exact
        }
        {
            std::vector<double> dst_simd(n), dst_ref(n);
            kernels::relu_backward(dst_simd.data(), a.data(), b.data(), n);
            kernels::scalar::relu_backward(dst_ref.data(), a.data(), b.data(), n);
            CHECK(dst_simd == dst_ref); // pure select, exact
        }
    }
}

TEST_CASE("relu zeroes negatives and keeps positives") {
    const std::vector<double> x = {-1.0, 0.0, 2.5, -0.0, 3.0};
    std::vector<double> out(x.size());
    kernels::scalar::relu(out.data(), x.data(), x.size());
    CHECK(out == std::vector<double>{0.0, 0.0, 2.5, 0.0, 3.0});
}

TEST_CASE("relu_backward masks by the sign of the pre-activation") {
    const std::vector<double> g = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> pre = {-1.0, 0.0, 0.5, 2.0};
    std::vector<double> out(g.size());
    kernels::scalar::relu_backward(out.data(), g.data(), pre.data(), g.size());
    CHECK(out == std::vector<double>{0.0, 0.0, 3.0, 4.0});
}
