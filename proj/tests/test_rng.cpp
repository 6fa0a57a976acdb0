#include <doctest.h>

#include "ringbp/rng.hpp"
#include "test_support.hpp"

using namespace ringbp;

TEST_CASE("streams are reproducible and distinct") {
    StreamRng a(42, {1, 2});
    StreamRng b(42, {1, 2});
    StreamRng c(42, {1, 3});
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform and normal moments") {
    StreamRng rng(7, {0});
    testsupport::MomentAccumulator u, n, n2;
    for (int i = 0; i < 200000; ++i) {
        u.add(rng.next_double());
        const double g = rng.next_normal();
        n.add(g);
        n2.add(g * g);
    }
    CHECK(testsupport::within_se(u.estimate(), 0.5, 4.0));
    CHECK(testsupport::within_se(n.estimate(), 0.0, 4.0));
    CHECK(testsupport::within_se(n2.estimate(), 1.0, 4.0));
}

TEST_CASE("complex normal splits variance evenly") {
    StreamRng rng(9, {0});
    testsupport::MomentAccumulator re2, im2, cross;
    for (int i = 0; i < 200000; ++i) {
        const auto z = rng.next_cnormal(2.0);
        re2.add(z.real() * z.real());
        im2.add(z.imag() * z.imag());
        cross.add(z.real() * z.imag());
    }
    CHECK(testsupport::within_se(re2.estimate(), 1.0, 4.0));
    CHECK(testsupport::within_se(im2.estimate(), 1.0, 4.0));
    CHECK(testsupport::within_se(cross.estimate(), 0.0, 4.0));
}

TEST_CASE("next_below stays in range and covers values") {
    StreamRng rng(11, {0});
    std::vector<int> hits(4, 0);
    for (int i = 0; i < 4000; ++i) {
        const auto v = rng.next_below(4);
        REQUIRE(v < 4);
        ++hits[static_cast<std::size_t>(v)];
    }
    for (int h : hits) CHECK(h > 800);
}
