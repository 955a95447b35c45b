#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snlab/metric.hpp"

namespace snlab {

// Parsed run configuration. The file format is a small block grammar:
//
//   metric {
//     variant = rotational        # flat | conformal | rotational
//     matrix = 1 0 0 1            # flat only, row-major 2x2
//     drift = 0.5 0               # flat only
//     constant = 2.0              # factor constant term
//     fourier = [(0, 1, 1.0, 0.0)]  # (k1, k2, cos_amp, sin_amp)
//   }
//   run {
//     Q = 5
//     seed = 1
//     restarts = 8
//     directions = [(1, 0), (0, 1)]
//     t0 = 0.1
//     octaves = 6
//     n_list = [2, 4, 8, 16]
//   }
//
// '#' starts a comment; the run block and every key are optional.
struct RunConfig {
    MetricSpec metric;
    bool has_metric = false;

    int Q = 5;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: library default
    int restarts = 8;
    std::vector<Vec2> directions;
    double t0 = 0.1;
    int octaves = 6;
    std::vector<int> n_list{2, 4, 8, 16};
    std::string out_dir = ".";
    bool strict = false;
};

struct ConfigError {
    std::string message;
    int line = 0;
};

// throws std::runtime_error with a line-tagged message on malformed input
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

}  // namespace snlab
