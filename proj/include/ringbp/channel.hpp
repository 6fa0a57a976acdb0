#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ringbp/alphabet.hpp"
#include "ringbp/errors.hpp"
#include "ringbp/linalg.hpp"
#include "ringbp/rng.hpp"

namespace ringbp {

/// SNR convention: SNR = 1/sigma2, so sigma2 = 10^(-snr_db/10).
inline double snr_to_sigma2(double snr_db) {
    return std::pow(10.0, -snr_db / 10.0);
}

/// One simulated link: channel matrix, noise power and symbol set.
struct ChannelInstance {
    CMatrix h;       // N x M, N >= M
    double sigma2 = 1.0;
    Alphabet alphabet = Alphabet::bpsk();

    int n() const { return static_cast<int>(h.rows()); }
    int m() const { return static_cast<int>(h.cols()); }
};

inline ChannelInstance make_channel(CMatrix h, double sigma2, Alphabet alphabet) {
    if (h.rows() < h.cols()) throw ConfigError("channel requires N >= M");
    if (!(sigma2 > 0.0)) throw ConfigError("channel requires sigma2 > 0");
    if (!h.allFinite()) throw ConfigError("channel matrix has non-finite entries");
    return ChannelInstance{std::move(h), sigma2, std::move(alphabet)};
}

/// One received vector together with the ground truth that produced it.
struct Observation {
    CVector y;
    CVector x_true;
    std::vector<int> symbols_true;  // alphabet indices; bits are their binary digits
};

/// i.i.d. circularly-symmetric Gaussian channel entries with per-entry
/// variance 1/N, so each column has unit energy in expectation and
/// SNR = 1/sigma2 is the per-stream receive SNR.
inline CMatrix draw_channel(int n, int m, StreamRng& rng) {
    CMatrix h(n, m);
    const double entry_var = 1.0 / static_cast<double>(n);
    for (int c = 0; c < m; ++c) {
        for (int r = 0; r < n; ++r) {
            h(r, c) = rng.next_cnormal(entry_var);
        }
    }
    return h;
}

/// Draws x uniform over the alphabet, n ~ CN(0, sigma2 I), and returns
/// y = H x + n with the ground truth attached.
inline Observation transmit(const ChannelInstance& ch, StreamRng& rng) {
    Observation obs;
    const int m = ch.m();
    obs.symbols_true.resize(m);
    obs.x_true.resize(m);
    for (int j = 0; j < m; ++j) {
        const int idx = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(ch.alphabet.size())));
        obs.symbols_true[j] = idx;
        obs.x_true(j) = ch.alphabet.symbols[idx];
    }
    obs.y = ch.h * obs.x_true;
    for (int r = 0; r < ch.n(); ++r) {
        obs.y(r) += rng.next_cnormal(ch.sigma2);
    }
    return obs;
}

// ---------------------------------------------------------------------------
// Text matrix format: one row per line, one "a+bi" token per entry.
// ---------------------------------------------------------------------------

inline std::string format_complex(Complex z) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%+.17g%+.17gi", z.real(), z.imag());
    return buf;
}

inline Complex parse_complex(const std::string& token) {
    // Accepted forms: a, bi, a+bi, a-bi (signs optional on the leading part).
    const std::string what = "bad complex token '" + token + "'";
    if (token.empty()) throw IoError(what);
    std::size_t pos = 0;
    auto read_number = [&]() -> double {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(token.substr(pos), &used);
        } catch (const std::exception&) {
            throw IoError(what);
        }
        pos += used;
        return value;
    };
    const double first = read_number();
    if (pos == token.size()) return {first, 0.0};
    if (token[pos] == 'i' || token[pos] == 'j') {
        if (pos + 1 != token.size()) throw IoError(what);
        return {0.0, first};
    }
    const double second = read_number();
    if (pos + 1 != token.size() || (token[pos] != 'i' && token[pos] != 'j')) throw IoError(what);
    return {first, second};
}

inline void write_matrix_text(std::ostream& out, const CMatrix& h) {
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
        for (Eigen::Index c = 0; c < h.cols(); ++c) {
            if (c) out << ' ';
            out << format_complex(h(r, c));
        }
        out << '\n';
    }
}

inline CMatrix read_matrix_text(std::istream& in) {
    std::vector<std::vector<Complex>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<Complex> row;
        std::string token;
        while (ls >> token) {
            if (token[0] == '#') break;
            row.push_back(parse_complex(token));
        }
        if (row.empty()) continue;
        if (!rows.empty() && rows.front().size() != row.size()) {
            throw IoError("matrix rows have inconsistent lengths");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("matrix file contains no entries");
    CMatrix h(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
        for (Eigen::Index c = 0; c < h.cols(); ++c) {
            h(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
    }
    if (!h.allFinite()) throw IoError("matrix file has non-finite entries");
    return h;
}

inline void write_matrix_file(const std::string& path, const CMatrix& h) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_matrix_text(out, h);
    if (!out) throw IoError("write failed: " + path);
}

inline CMatrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    return read_matrix_text(in);
}

}  // namespace ringbp
