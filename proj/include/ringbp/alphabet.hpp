#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ringbp/errors.hpp"

namespace ringbp {

enum class Modulation { Bpsk, Qpsk, Qam16 };

/// A unit-average-power symbol set with Gray bit labels. The index of a
/// symbol is its bit pattern (bit 0 first), so index <-> bits is implicit.
struct Alphabet {
    Modulation name = Modulation::Bpsk;
    std::vector<std::complex<double>> symbols;
    int bits_per_symbol = 1;

    int size() const { return static_cast<int>(symbols.size()); }

    bool bit(int symbol_index, int bit_index) const {
        return ((symbol_index >> bit_index) & 1) != 0;
    }

    /// Index of the nearest constellation point.
    int hard_decision(std::complex<double> value) const {
        int best = 0;
        double best_d = std::norm(value - symbols[0]);
        for (int s = 1; s < size(); ++s) {
            const double d = std::norm(value - symbols[s]);
            if (d < best_d) {
                best_d = d;
                best = s;
            }
        }
        return best;
    }

    static Alphabet bpsk() {
        Alphabet a;
        a.name = Modulation::Bpsk;
        a.bits_per_symbol = 1;
        a.symbols = {{1.0, 0.0}, {-1.0, 0.0}};
        return a;
    }

    static Alphabet qpsk() {
        Alphabet a;
        a.name = Modulation::Qpsk;
        a.bits_per_symbol = 2;
        const double s = 1.0 / std::sqrt(2.0);
        a.symbols.resize(4);
        for (int idx = 0; idx < 4; ++idx) {
            const double re = (idx & 1) ? -s : s;
            const double im = (idx & 2) ? -s : s;
            a.symbols[idx] = {re, im};
        }
        return a;
    }

    static Alphabet qam16() {
        Alphabet a;
        a.name = Modulation::Qam16;
        a.bits_per_symbol = 4;
        const double s = 1.0 / std::sqrt(10.0);
        // Gray levels per dimension: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
        auto level = [&](int two_bits) {
            switch (two_bits) {
                case 0: return -3.0 * s;
                case 1: return -1.0 * s;
                case 3: return 1.0 * s;
                default: return 3.0 * s;
            }
        };
        a.symbols.resize(16);
        for (int idx = 0; idx < 16; ++idx) {
            a.symbols[idx] = {level(idx & 3), level((idx >> 2) & 3)};
        }
        return a;
    }

    static Alphabet from_name(const std::string& s) {
        if (s == "bpsk") return bpsk();
        if (s == "qpsk") return qpsk();
        if (s == "qam16" || s == "16qam") return qam16();
        throw ConfigError("unknown alphabet: " + s);
    }
};

inline const char* to_string(Modulation m) {
    switch (m) {
        case Modulation::Bpsk: return "bpsk";
        case Modulation::Qpsk: return "qpsk";
        default: return "qam16";
    }
}

}  // namespace ringbp
