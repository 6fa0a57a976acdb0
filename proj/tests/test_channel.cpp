#include <doctest.h>

#include <sstream>

#include "ringbp/channel.hpp"
#include "test_support.hpp"

using namespace ringbp;

TEST_CASE("snr to sigma2 convention") {
    CHECK(snr_to_sigma2(0.0) == doctest::Approx(1.0));
    CHECK(snr_to_sigma2(10.0) == doctest::Approx(0.1));
    CHECK(snr_to_sigma2(6.0) == doctest::Approx(0.251189).epsilon(1e-5));
}

TEST_CASE("alphabets are unit power with 2^m points") {
    for (const Alphabet& a : {Alphabet::bpsk(), Alphabet::qpsk(), Alphabet::qam16()}) {
        CHECK(a.size() == (1 << a.bits_per_symbol));
        double power = 0.0;
        for (const auto& s : a.symbols) power += std::norm(s);
        CHECK(power / a.size() == doctest::Approx(1.0).epsilon(1e-12));
    }
    const Alphabet b = Alphabet::bpsk();
    CHECK(b.symbols[0] == Complex(1.0, 0.0));
    CHECK(b.symbols[1] == Complex(-1.0, 0.0));
    const Alphabet q = Alphabet::qpsk();
    for (const auto& s : q.symbols) {
        CHECK(std::abs(std::abs(s.real()) - 1.0 / std::sqrt(2.0)) < 1e-15);
        CHECK(std::abs(std::abs(s.imag()) - 1.0 / std::sqrt(2.0)) < 1e-15);
    }
}

TEST_CASE("qam16 gray labels differ by one bit between nearest neighbors") {
    const Alphabet a = Alphabet::qam16();
    const double step = 2.0 / std::sqrt(10.0);
    for (int p = 0; p < 16; ++p) {
        for (int q = 0; q < 16; ++q) {
            const double d = std::abs(a.symbols[p] - a.symbols[q]);
            if (p != q && d < step * 1.01) {
                int bits = p ^ q;
                int popcount = 0;
                while (bits) {
                    popcount += bits & 1;
                    bits >>= 1;
                }
                CHECK(popcount == 1);
            }
        }
    }
}

TEST_CASE("draw_channel shape, determinism and entry energy") {
    StreamRng rng_a(5, {1});
    StreamRng rng_b(5, {1});
    const CMatrix h1 = draw_channel(4, 4, rng_a);
    const CMatrix h2 = draw_channel(4, 4, rng_b);
    CHECK(h1.rows() == 4);
    CHECK(h1.cols() == 4);
    CHECK((h1 - h2).norm() == 0.0);  // same seed, same matrix

    StreamRng rng(6, {1});
    testsupport::MomentAccumulator energy;
    for (int t = 0; t < 8000; ++t) {
        const CMatrix h = draw_channel(4, 4, rng);
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) energy.add(std::norm(h(r, c)));
        }
    }
    const auto est = energy.estimate();
    CHECK(std::abs(est.mean - 0.25) < 0.01 * 0.25);
}

TEST_CASE("transmit matches the linear model and its moments") {
    const CMatrix h = testsupport::h_ex();

    SUBCASE("noiseless limit") {
        const ChannelInstance ch = make_channel(h, 1e-30, Alphabet::bpsk());
        StreamRng rng(3, {2});
        const Observation obs = transmit(ch, rng);
        CHECK((obs.y - h * obs.x_true).norm() < 1e-12);
    }

    SUBCASE("symbol and noise second moments") {
        const double sigma2 = 0.5;
        const ChannelInstance ch = make_channel(h, sigma2, Alphabet::qpsk());
        StreamRng rng(4, {2});
        CMatrix xx = CMatrix::Zero(4, 4);
        CMatrix nn = CMatrix::Zero(4, 4);
        const int trials = 100000;
        for (int t = 0; t < trials; ++t) {
            const Observation obs = transmit(ch, rng);
            xx += obs.x_true * obs.x_true.adjoint();
            const CVector noise = obs.y - h * obs.x_true;
            nn += noise * noise.adjoint();
        }
        xx /= trials;
        nn /= trials;
        CHECK((xx - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.02);
        CHECK((nn - sigma2 * CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.02 * sigma2);
    }
}

TEST_CASE("channel invariants are enforced") {
    CHECK_THROWS_AS(make_channel(CMatrix::Identity(2, 3), 1.0, Alphabet::bpsk()), ConfigError);
    CHECK_THROWS_AS(make_channel(CMatrix::Identity(3, 3), 0.0, Alphabet::bpsk()), ConfigError);
}

TEST_CASE("matrix text format round-trips and rejects junk") {
    const CMatrix h = testsupport::h_ex();

    // Spot-check the fixture against independently typed values.
    CHECK(h(0, 0) == Complex(-0.1, -0.1));
    CHECK(h(0, 3) == Complex(-0.2, 0.8));
    CHECK(h(1, 0) == Complex(0.2, -0.7));
    CHECK(h(2, 1) == Complex(0.2, 0.8));
    CHECK(h(2, 3) == Complex(0.0, 0.4));
    CHECK(h(3, 2) == Complex(0.2, 0.5));

    std::ostringstream out;
    write_matrix_text(out, h);
    std::istringstream in(out.str());
    const CMatrix again = read_matrix_text(in);
    CHECK((h - again).norm() == 0.0);

    CHECK(parse_complex("0.4i") == Complex(0.0, 0.4));
    CHECK(parse_complex("-0.5") == Complex(-0.5, 0.0));
    CHECK(parse_complex("+1e-3-2e-4i") == Complex(1e-3, -2e-4));
    CHECK_THROWS_AS(parse_complex("1+2"), IoError);
    CHECK_THROWS_AS(parse_complex("abc"), IoError);
    std::istringstream ragged("1+1i 2+2i\n3+3i\n");
    CHECK_THROWS_AS(read_matrix_text(ragged), IoError);
}
