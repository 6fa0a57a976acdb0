#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ringbp/channel.hpp"
#include "ringbp/density_evolution.hpp"
#include "ringbp/detector.hpp"
#include "ringbp/parallel.hpp"
#include "ringbp/truncated_link.hpp"

namespace ringbp {

enum class DetectorKind { RingBpDiscrete, RingBpBinary, GaussianBp, Lmmse };

inline const char* to_string(DetectorKind d) {
    switch (d) {
        case DetectorKind::RingBpDiscrete: return "ring_bp_discrete";
        case DetectorKind::RingBpBinary: return "ring_bp_binary";
        case DetectorKind::GaussianBp: return "gaussian_bp";
        default: return "lmmse";
    }
}

inline DetectorKind detector_from_name(const std::string& s) {
    if (s == "ring_bp_discrete") return DetectorKind::RingBpDiscrete;
    if (s == "ring_bp_binary") return DetectorKind::RingBpBinary;
    if (s == "gaussian_bp") return DetectorKind::GaussianBp;
    if (s == "lmmse") return DetectorKind::Lmmse;
    throw ConfigError("unknown detector: " + s);
}

struct HistogramConfig {
    int bins = 81;
    double lo = -40.0;
    double hi = 40.0;
    int turns = 2;
};

struct ExperimentConfig {
    int n = 4;
    int m = 4;
    std::string alphabet = "bpsk";
    std::vector<double> snr_db;
    std::vector<DetectorKind> detectors{DetectorKind::RingBpBinary};
    int iterations = 2;
    RingSchedule::Mode schedule = RingSchedule::Mode::Parallel;
    int num_channels = 200;
    long long trials_per_channel = 5000;
    std::uint64_t seed = 1;
    StatisticsMode statistics = StatisticsMode::Exact;
    int de_turns = 2;
    int quad_nodes = 40;
    int threads = 0;                // 0 = RINGBP_THREADS or hardware
    std::string fixed_channel;      // matrix file path; empty = random ensemble
    std::string out_dir = "out";
    HistogramConfig histogram;
};

/// Named run sizes. "smoke" is the desk-scale default; "paper" is the
/// full 1600-channel ensemble.
inline void apply_profile(ExperimentConfig& cfg, const std::string& profile) {
    if (profile == "smoke") {
        cfg.num_channels = 200;
        cfg.trials_per_channel = 5000;
    } else if (profile == "paper") {
        cfg.num_channels = 1600;
        cfg.trials_per_channel = 10000;
    } else {
        throw ConfigError("unknown profile: " + profile);
    }
}

// ---------------------------------------------------------------------------
// Config file: flat key = value lines under [section] headers.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
inline T parse_number(const std::string& value, const std::string& where) {
    std::istringstream is(value);
    T out{};
    if (!(is >> out) || !(is >> std::ws).eof()) {
        throw ConfigError(where + ": cannot parse '" + value + "'");
    }
    return out;
}

inline std::vector<std::string> split_words(const std::string& value) {
    std::istringstream is(value);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

}  // namespace detail

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);

    ExperimentConfig cfg;
    cfg.detectors.clear();
    std::string section = "experiment";
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = path + ":" + std::to_string(line_no);
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(where + ": malformed section header");
            section = detail::trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        const std::string field = where + " (" + section + "." + key + ")";

        if (section == "experiment") {
            if (key == "n") cfg.n = detail::parse_number<int>(value, field);
            else if (key == "m") cfg.m = detail::parse_number<int>(value, field);
            else if (key == "alphabet") cfg.alphabet = value;
            else if (key == "snr_db") {
                cfg.snr_db.clear();
                for (const auto& w : detail::split_words(value)) {
                    cfg.snr_db.push_back(detail::parse_number<double>(w, field));
                }
            } else if (key == "detector" || key == "detectors") {
                cfg.detectors.clear();
                for (const auto& w : detail::split_words(value)) {
                    cfg.detectors.push_back(detector_from_name(w));
                }
            } else if (key == "iterations") cfg.iterations = detail::parse_number<int>(value, field);
            else if (key == "schedule") {
                if (value == "parallel") cfg.schedule = RingSchedule::Mode::Parallel;
                else if (value == "sequential") cfg.schedule = RingSchedule::Mode::Sequential;
                else throw ConfigError(field + ": expected parallel or sequential");
            } else if (key == "num_channels") cfg.num_channels = detail::parse_number<int>(value, field);
            else if (key == "trials_per_channel") cfg.trials_per_channel = detail::parse_number<long long>(value, field);
            else if (key == "seed") cfg.seed = detail::parse_number<std::uint64_t>(value, field);
            else if (key == "statistics" || key == "stats") {
                if (value == "exact") cfg.statistics = StatisticsMode::Exact;
                else if (value == "circular") cfg.statistics = StatisticsMode::CircularSymmetry;
                else throw ConfigError(field + ": expected exact or circular");
            } else if (key == "de_turns") cfg.de_turns = detail::parse_number<int>(value, field);
            else if (key == "quad_nodes") cfg.quad_nodes = detail::parse_number<int>(value, field);
            else if (key == "threads") cfg.threads = detail::parse_number<int>(value, field);
            else if (key == "fixed_channel") cfg.fixed_channel = value;
            else if (key == "profile") apply_profile(cfg, value);
            else throw ConfigError(field + ": unknown key");
        } else if (section == "output") {
            if (key == "dir") cfg.out_dir = value;
            else throw ConfigError(field + ": unknown key");
        } else if (section == "histogram") {
            if (key == "bins") cfg.histogram.bins = detail::parse_number<int>(value, field);
            else if (key == "min") cfg.histogram.lo = detail::parse_number<double>(value, field);
            else if (key == "max") cfg.histogram.hi = detail::parse_number<double>(value, field);
            else if (key == "turns") cfg.histogram.turns = detail::parse_number<int>(value, field);
            else throw ConfigError(field + ": unknown key");
        } else {
            throw ConfigError(where + ": unknown section [" + section + "]");
        }
    }
    if (cfg.detectors.empty()) cfg.detectors.push_back(DetectorKind::RingBpBinary);
    return cfg;
}

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n < 1 || cfg.m < 1) throw ConfigError("antenna counts must be >= 1");
    if (cfg.n < cfg.m) throw ConfigError("config requires n >= m");
    if (cfg.snr_db.empty()) throw ConfigError("snr_db list must not be empty");
    if (cfg.detectors.empty()) throw ConfigError("at least one detector required");
    if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (cfg.num_channels < 1 && cfg.fixed_channel.empty()) {
        throw ConfigError("num_channels must be >= 1");
    }
    if (cfg.trials_per_channel < 0) throw ConfigError("trials_per_channel must be >= 0");
    if (cfg.de_turns < 0) throw ConfigError("de_turns must be >= 0");
    if (cfg.quad_nodes < 4) throw ConfigError("quad_nodes must be >= 4");
    if (cfg.histogram.bins < 1 || !(cfg.histogram.hi > cfg.histogram.lo)) {
        throw ConfigError("histogram grid is empty");
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ResultRow {
    double snr_db = 0.0;
    DetectorKind detector = DetectorKind::RingBpBinary;
    double ber_sim = std::numeric_limits<double>::quiet_NaN();
    double ber_sim_se = std::numeric_limits<double>::quiet_NaN();
    double ber_de = std::numeric_limits<double>::quiet_NaN();
    double ber_bound = std::numeric_limits<double>::quiet_NaN();
    double sinr_avg_db = std::numeric_limits<double>::quiet_NaN();
    double sinr_bound_avg_db = std::numeric_limits<double>::quiet_NaN();
    long long num_bits = 0;
};

namespace detail {

inline std::string csv_value(double v) {
    if (std::isnan(v)) return "";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline constexpr std::uint64_t kChannelTag = 0x6368616eULL;  // stream id namespaces
inline constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;

struct ChannelAccum {
    std::vector<long long> errors;  // per detector
    long long bits = 0;
    // density-evolution summaries (binary input only)
    double gamma_sum = 0.0, gamma_bound_sum = 0.0;
    double qsum = 0.0, qsum_bound = 0.0;
    bool de_done = false;
    // analytic linear-MMSE summaries
    double lmmse_gamma_sum = 0.0, lmmse_qsum = 0.0;
    bool lmmse_done = false;
    DeDiagnostics diag;
};

inline long long count_bit_errors(const Alphabet& alphabet, int hat, int truth) {
    long long e = 0;
    for (int b = 0; b < alphabet.bits_per_symbol; ++b) {
        e += ((hat ^ truth) >> b) & 1;
    }
    return e;
}

}  // namespace detail

/// Writes results.csv (schema-tagged). Timing stays on the log stream so
/// re-runs with the same seed produce byte-identical files.
inline void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "# schema: ringbp.results.v1\n";
    out << "snr_db,detector,ber_sim,ber_sim_se,ber_de,ber_bound,sinr_avg_db,sinr_bound_avg_db,num_bits\n";
    for (const auto& r : rows) {
        out << detail::csv_value(r.snr_db) << ',' << to_string(r.detector) << ','
            << detail::csv_value(r.ber_sim) << ',' << detail::csv_value(r.ber_sim_se) << ','
            << detail::csv_value(r.ber_de) << ',' << detail::csv_value(r.ber_bound) << ','
            << detail::csv_value(r.sinr_avg_db) << ',' << detail::csv_value(r.sinr_bound_avg_db)
            << ',' << r.num_bits << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

/// Monte-Carlo sweep plus per-channel density-evolution analysis. All
/// detectors share channels and noise (common random numbers); every
/// random draw is a pure function of (seed, stream ids), so the output is
/// reproducible under any thread count.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg,
                                             std::ostream& log = std::cerr) {
    validate_config(cfg);
    const Alphabet alphabet = Alphabet::from_name(cfg.alphabet);
    const bool binary_input = alphabet.name == Modulation::Bpsk;

    std::vector<CMatrix> channels;
    if (!cfg.fixed_channel.empty()) {
        channels.push_back(read_matrix_file(cfg.fixed_channel));
        if (channels[0].rows() < channels[0].cols()) throw ConfigError("fixed channel requires N >= M");
    } else {
        channels.reserve(static_cast<std::size_t>(cfg.num_channels));
        for (int c = 0; c < cfg.num_channels; ++c) {
            StreamRng rng(cfg.seed, {detail::kChannelTag, static_cast<std::uint64_t>(c)});
            channels.push_back(draw_channel(cfg.n, cfg.m, rng));
        }
    }
    const int num_ch = static_cast<int>(channels.size());
    const RingSchedule schedule{cfg.schedule, cfg.iterations};
    DeOptions de_opts;
    de_opts.quad_nodes = cfg.quad_nodes;

    const bool wants_ring = std::any_of(cfg.detectors.begin(), cfg.detectors.end(), [](DetectorKind d) {
        return d != DetectorKind::Lmmse;
    });
    const bool wants_de = binary_input &&
                          std::any_of(cfg.detectors.begin(), cfg.detectors.end(), [](DetectorKind d) {
                              return d == DetectorKind::RingBpBinary || d == DetectorKind::RingBpDiscrete;
                          });
    const bool wants_lmmse_analysis =
        std::any_of(cfg.detectors.begin(), cfg.detectors.end(), [](DetectorKind d) {
            return d == DetectorKind::Lmmse || d == DetectorKind::GaussianBp;
        });

    std::vector<ResultRow> rows;
    for (std::size_t snr_idx = 0; snr_idx < cfg.snr_db.size(); ++snr_idx) {
        const double snr = cfg.snr_db[snr_idx];
        const double sigma2 = snr_to_sigma2(snr);
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<detail::ChannelAccum> accum(static_cast<std::size_t>(num_ch));
        parallel_for(
            num_ch,
            [&](std::int64_t c) {
                auto& acc = accum[static_cast<std::size_t>(c)];
                acc.errors.assign(cfg.detectors.size(), 0);
                const ChannelInstance ch =
                    make_channel(channels[static_cast<std::size_t>(c)], sigma2, alphabet);

                std::unique_ptr<RingLinks> links;
                if (wants_ring || wants_de) {
                    links = std::make_unique<RingLinks>(ch.h, sigma2, cfg.statistics);
                }
                if (wants_de && cfg.de_turns > 0) {
                    const auto trace = run_de(*links, cfg.de_turns, de_opts, &acc.diag);
                    const SinrReport rep = belief_sinr(*links, trace.back(), de_opts, &acc.diag);
                    for (int j = 0; j < ch.m(); ++j) {
                        const auto sj = static_cast<std::size_t>(j);
                        acc.gamma_sum += rep.gamma[sj];
                        acc.gamma_bound_sum += rep.gamma_bound[sj];
                    }
                    acc.qsum = rep.ber_estimate * ch.m();
                    acc.qsum_bound = rep.ber_bound * ch.m();
                    acc.de_done = true;
                }
                if (wants_lmmse_analysis) {
                    const RVector g = lmmse_sinr(ch);
                    for (int j = 0; j < ch.m(); ++j) {
                        acc.lmmse_gamma_sum += g(j);
                        acc.lmmse_qsum += q_function(std::sqrt(g(j)));
                    }
                    acc.lmmse_done = true;
                }

                for (long long t = 0; t < cfg.trials_per_channel; ++t) {
                    StreamRng rng(cfg.seed,
                                  {detail::kNoiseTag, static_cast<std::uint64_t>(snr_idx),
                                   static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(t)});
                    const Observation obs = transmit(ch, rng);
                    acc.bits += static_cast<long long>(ch.m()) * alphabet.bits_per_symbol;
                    for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
                        long long e = 0;
                        switch (cfg.detectors[d]) {
                            case DetectorKind::RingBpBinary: {
                                const auto det = ring_bp_binary(*links, obs.y, alphabet, schedule);
                                for (int j = 0; j < ch.m(); ++j) {
                                    e += detail::count_bit_errors(
                                        alphabet, det.hard[static_cast<std::size_t>(j)],
                                        obs.symbols_true[static_cast<std::size_t>(j)]);
                                }
                                break;
                            }
                            case DetectorKind::RingBpDiscrete: {
                                const auto det = ring_bp_discrete(*links, obs.y, alphabet, schedule);
                                for (int j = 0; j < ch.m(); ++j) {
                                    e += detail::count_bit_errors(
                                        alphabet, det.hard[static_cast<std::size_t>(j)],
                                        obs.symbols_true[static_cast<std::size_t>(j)]);
                                }
                                break;
                            }
                            case DetectorKind::GaussianBp: {
                                const auto det = ring_bp_gaussian(*links, obs.y, schedule);
                                for (int j = 0; j < ch.m(); ++j) {
                                    const int hat = alphabet.hard_decision(
                                        det.mean_fwd[static_cast<std::size_t>(j)]);
                                    e += detail::count_bit_errors(
                                        alphabet, hat, obs.symbols_true[static_cast<std::size_t>(j)]);
                                }
                                break;
                            }
                            case DetectorKind::Lmmse: {
                                const auto det = lmmse_detect(ch, obs.y);
                                for (int j = 0; j < ch.m(); ++j) {
                                    e += detail::count_bit_errors(
                                        alphabet, det.hard[static_cast<std::size_t>(j)],
                                        obs.symbols_true[static_cast<std::size_t>(j)]);
                                }
                                break;
                            }
                        }
                        acc.errors[d] += e;
                    }
                }
            },
            cfg.threads);

        // Deterministic reduction in channel order.
        for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
            const DetectorKind kind = cfg.detectors[d];
            ResultRow row;
            row.snr_db = snr;
            row.detector = kind;
            long long errors = 0, bits = 0;
            double gamma_sum = 0.0, gamma_bound_sum = 0.0, qsum = 0.0, qsum_bound = 0.0;
            double lmmse_gamma_sum = 0.0, lmmse_qsum = 0.0;
            int psd_clips = 0;
            double quad_err = 0.0;
            bool any_de = false, any_lmmse = false;
            for (const auto& acc : accum) {
                errors += acc.errors[d];
                bits += acc.bits;
                gamma_sum += acc.gamma_sum;
                gamma_bound_sum += acc.gamma_bound_sum;
                qsum += acc.qsum;
                qsum_bound += acc.qsum_bound;
                lmmse_gamma_sum += acc.lmmse_gamma_sum;
                lmmse_qsum += acc.lmmse_qsum;
                any_de = any_de || acc.de_done;
                any_lmmse = any_lmmse || acc.lmmse_done;
                psd_clips += acc.diag.psd_clips;
                quad_err = std::max(quad_err, acc.diag.max_quad_error);
            }
            row.num_bits = bits;
            if (bits > 0) {
                row.ber_sim = static_cast<double>(errors) / static_cast<double>(bits);
                row.ber_sim_se =
                    std::sqrt(row.ber_sim * (1.0 - row.ber_sim) / static_cast<double>(bits));
            }
            const double streams_total = static_cast<double>(num_ch) * cfg.m;
            const bool de_row = (kind == DetectorKind::RingBpBinary ||
                                 kind == DetectorKind::RingBpDiscrete) &&
                                any_de;
            const bool lmmse_row =
                (kind == DetectorKind::Lmmse || kind == DetectorKind::GaussianBp) && any_lmmse;
            if (de_row) {
                row.ber_de = qsum / streams_total;
                row.ber_bound = qsum_bound / streams_total;
                row.sinr_avg_db = 10.0 * std::log10(gamma_sum / streams_total);
                row.sinr_bound_avg_db = 10.0 * std::log10(gamma_bound_sum / streams_total);
            } else if (lmmse_row) {
                row.ber_de = lmmse_qsum / streams_total;
                row.sinr_avg_db = 10.0 * std::log10(lmmse_gamma_sum / streams_total);
            }
            rows.push_back(row);

            const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
            log << "snr_db=" << snr << " detector=" << to_string(kind)
                << " channels=" << num_ch << " bits=" << bits << " psd_clips=" << psd_clips
                << " quad_err=" << quad_err << " wall_time_s=" << dt.count() << '\n';
        }
    }
    return rows;
}

/// Same engine restricted to two or more detectors sharing the exact same
/// channel and noise realizations.
inline std::vector<ResultRow> compare_detectors(const ExperimentConfig& cfg,
                                                std::ostream& log = std::cerr) {
    if (cfg.detectors.size() < 2) {
        throw ConfigError("compare requires at least two detectors");
    }
    return run_experiment(cfg, log);
}

// ---------------------------------------------------------------------------
// Fixed-channel density measurements
// ---------------------------------------------------------------------------

/// Per-(stream, turn) empirical density of the forward message, folded by
/// the transmitted bit so it is conditioned on +1 by symmetry.
struct LlrDensityTable {
    HistogramConfig grid;
    int turns = 0;
    int streams = 0;
    // mass[turn][stream][bin], unit mass per (turn, stream)
    std::vector<std::vector<std::vector<double>>> mass;
    // folded first/second moments per turn and stream
    std::vector<std::vector<double>> mean, var;
    long long trials = 0;
};

inline LlrDensityTable measure_llr_density(const RingLinks& links, const Alphabet& alphabet,
                                           double sigma2, long long trials,
                                           const HistogramConfig& grid, std::uint64_t seed,
                                           int threads = 0) {
    if (alphabet.name != Modulation::Bpsk) {
        throw AlphabetMismatch("llr density measurement requires BPSK");
    }
    const int m = links.streams();
    const int turns = grid.turns;
    const ChannelInstance ch = make_channel(links.h(), sigma2, alphabet);

    struct Block {
        std::vector<std::vector<std::vector<long long>>> counts;  // [turn][stream][bin]
        std::vector<std::vector<double>> sum, sum2;
        long long n = 0;
    };
    const int block_count = std::min<long long>(64, std::max<long long>(1, trials));
    std::vector<Block> blocks(static_cast<std::size_t>(block_count));
    const double bin_w = (grid.hi - grid.lo) / grid.bins;

    parallel_for(
        block_count,
        [&](std::int64_t b) {
            auto& blk = blocks[static_cast<std::size_t>(b)];
            blk.counts.assign(static_cast<std::size_t>(turns),
                              std::vector<std::vector<long long>>(
                                  static_cast<std::size_t>(m),
                                  std::vector<long long>(static_cast<std::size_t>(grid.bins), 0)));
            blk.sum.assign(static_cast<std::size_t>(turns),
                           std::vector<double>(static_cast<std::size_t>(m), 0.0));
            blk.sum2 = blk.sum;
            const long long lo = trials * b / block_count;
            const long long hi = trials * (b + 1) / block_count;
            std::vector<std::vector<double>> trace;
            for (long long t = lo; t < hi; ++t) {
                StreamRng rng(seed, {detail::kNoiseTag, 0, 0, static_cast<std::uint64_t>(t)});
                const Observation obs = transmit(ch, rng);
                trace.clear();
                BinaryOptions opts;
                opts.forward_trace = &trace;
                RingSchedule schedule{RingSchedule::Mode::Parallel, turns};
                (void)ring_bp_binary(links, obs.y, alphabet, schedule, opts);
                for (int turn = 0; turn < turns; ++turn) {
                    for (int j = 0; j < m; ++j) {
                        const double x = obs.x_true(j).real();
                        const double folded =
                            x * trace[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)];
                        int bin = static_cast<int>(std::floor((folded - grid.lo) / bin_w));
                        bin = std::clamp(bin, 0, grid.bins - 1);
                        ++blk.counts[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)]
                                    [static_cast<std::size_t>(bin)];
                        blk.sum[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)] += folded;
                        blk.sum2[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)] +=
                            folded * folded;
                    }
                }
                ++blk.n;
            }
        },
        threads);

    LlrDensityTable table;
    table.grid = grid;
    table.turns = turns;
    table.streams = m;
    table.mass.assign(static_cast<std::size_t>(turns),
                      std::vector<std::vector<double>>(
                          static_cast<std::size_t>(m),
                          std::vector<double>(static_cast<std::size_t>(grid.bins), 0.0)));
    table.mean.assign(static_cast<std::size_t>(turns),
                      std::vector<double>(static_cast<std::size_t>(m), 0.0));
    table.var = table.mean;

    for (int turn = 0; turn < turns; ++turn) {
        for (int j = 0; j < m; ++j) {
            long long n = 0;
            double sum = 0.0, sum2 = 0.0;
            std::vector<long long> counts(static_cast<std::size_t>(grid.bins), 0);
            for (const auto& blk : blocks) {
                n += blk.n;
                sum += blk.sum[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)];
                sum2 += blk.sum2[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)];
                for (int bin = 0; bin < grid.bins; ++bin) {
                    counts[static_cast<std::size_t>(bin)] +=
                        blk.counts[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)]
                                  [static_cast<std::size_t>(bin)];
                }
            }
            table.trials = n;
            const double mean = sum / static_cast<double>(n);
            table.mean[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)] = mean;
            table.var[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)] =
                sum2 / static_cast<double>(n) - mean * mean;
            for (int bin = 0; bin < grid.bins; ++bin) {
                table.mass[static_cast<std::size_t>(turn)][static_cast<std::size_t>(j)]
                          [static_cast<std::size_t>(bin)] =
                    static_cast<double>(counts[static_cast<std::size_t>(bin)]) /
                    static_cast<double>(n);
            }
        }
    }
    return table;
}

inline void write_llr_hist_csv(const std::filesystem::path& path, const LlrDensityTable& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "# schema: ringbp.llr_hist.v1\n";
    out << "node,turn,bin_center,mass\n";
    const double bin_w = (table.grid.hi - table.grid.lo) / table.grid.bins;
    for (int j = 0; j < table.streams; ++j) {
        for (int turn = 0; turn < table.turns; ++turn) {
            for (int bin = 0; bin < table.grid.bins; ++bin) {
                const double center = table.grid.lo + (bin + 0.5) * bin_w;
                out << j << ',' << (turn + 1) << ',' << detail::csv_value(center) << ','
                    << detail::csv_value(table.mass[static_cast<std::size_t>(turn)]
                                                   [static_cast<std::size_t>(j)]
                                                   [static_cast<std::size_t>(bin)])
                    << '\n';
            }
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline void write_de_trace_rows(std::ostream& out, const RingLinks& links,
                                const std::vector<DeStates>& trace, double snr_db) {
    for (std::size_t turn = 1; turn < trace.size(); ++turn) {
        for (int j = 0; j < links.streams(); ++j) {
            const auto sj = static_cast<std::size_t>(j);
            out << detail::csv_value(snr_db) << ',' << j << '|' << links.prev(j) << ',' << turn
                << ',' << detail::csv_value(trace[turn].forward[sj].mean) << ','
                << detail::csv_value(trace[turn].forward[sj].variance) << '\n';
        }
        for (int j = 0; j < links.streams(); ++j) {
            const auto sj = static_cast<std::size_t>(j);
            out << detail::csv_value(snr_db) << ',' << j << '|' << links.next(j) << ',' << turn
                << ',' << detail::csv_value(trace[turn].backward[sj].mean) << ','
                << detail::csv_value(trace[turn].backward[sj].variance) << '\n';
        }
    }
}

/// The channel an experiment operates on: the fixed fixture when given,
/// otherwise channel 0 of the seeded ensemble.
inline CMatrix experiment_channel(const ExperimentConfig& cfg) {
    if (!cfg.fixed_channel.empty()) {
        CMatrix h = read_matrix_file(cfg.fixed_channel);
        if (h.rows() < h.cols()) throw ConfigError("fixed channel requires N >= M");
        return h;
    }
    StreamRng rng(cfg.seed, {detail::kChannelTag, 0});
    return draw_channel(cfg.n, cfg.m, rng);
}

/// Writes out_dir/de_trace.csv: density-evolution states per directed
/// pair and turn, for every configured SNR point.
inline std::filesystem::path run_de_trace(const ExperimentConfig& cfg,
                                          std::ostream& log = std::cerr) {
    validate_config(cfg);
    const CMatrix h = experiment_channel(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / "de_trace.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "# schema: ringbp.de_trace.v1\n";
    out << "snr_db,pair,turn,m,v\n";
    DeOptions opts;
    opts.quad_nodes = cfg.quad_nodes;
    for (double snr : cfg.snr_db) {
        DeDiagnostics diag;
        const RingLinks links(h, snr_to_sigma2(snr), cfg.statistics);
        const auto trace = run_de(links, cfg.de_turns, opts, &diag);
        write_de_trace_rows(out, links, trace, snr);
        log << "de_trace snr_db=" << snr << " turns=" << cfg.de_turns
            << " psd_clips=" << diag.psd_clips << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
    return path;
}

/// Writes out_dir/llr_hist.csv: per-node forward-message histograms for
/// the first configured SNR point.
inline std::filesystem::path run_llr_hist(const ExperimentConfig& cfg,
                                          std::ostream& log = std::cerr) {
    validate_config(cfg);
    const Alphabet alphabet = Alphabet::from_name(cfg.alphabet);
    const CMatrix h = experiment_channel(cfg);
    const double sigma2 = snr_to_sigma2(cfg.snr_db.front());
    const RingLinks links(h, sigma2, cfg.statistics);
    const auto table = measure_llr_density(links, alphabet, sigma2, cfg.trials_per_channel,
                                           cfg.histogram, cfg.seed, cfg.threads);
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / "llr_hist.csv";
    write_llr_hist_csv(path, table);
    log << "llr_hist snr_db=" << cfg.snr_db.front() << " trials=" << table.trials << '\n';
    return path;
}

/// Runs the sweep and writes out_dir/results.csv; in fixed-channel mode
/// with binary input the density trace and histograms are emitted too.
inline std::vector<ResultRow> run_and_write(const ExperimentConfig& cfg,
                                            std::ostream& log = std::cerr) {
    auto rows = run_experiment(cfg, log);
    std::filesystem::create_directories(cfg.out_dir);
    write_results_csv(std::filesystem::path(cfg.out_dir) / "results.csv", rows);
    if (!cfg.fixed_channel.empty() && cfg.alphabet == "bpsk") {
        run_de_trace(cfg, log);
        run_llr_hist(cfg, log);
    }
    return rows;
}

}  // namespace ringbp
