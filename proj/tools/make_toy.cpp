// Writes a two-class CSV of noisy tones for trying the lmfcc tool:
//   lmfcc_make_toy <out.csv> [rows=400] [width=64] [seed=1]
// Class "normal" completes 2 cycles per record, "attack" 9, each with a random phase.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "lmfcc/core.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: lmfcc_make_toy <out.csv> [rows] [width] [seed]\n";
        return 2;
    }
    const std::size_t rows = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 400;
    const std::size_t width = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 64;
    lmfcc::Rng rng(argc > 4 ? std::strtoull(argv[4], nullptr, 10) : 1);
    std::ofstream out(argv[1]);
    if (!out) {
        std::cerr << "cannot write " << argv[1] << '\n';
        return 3;
    }
    for (std::size_t t = 0; t < width; ++t) out << 'f' << t << ',';
    out << "label\n";
    char buf[32];
    for (std::size_t i = 0; i < rows; ++i) {
        const bool attack = i % 2;
        const double cycles = attack ? 9.0 : 2.0, phase = rng.uniform(0.0, 2.0 * M_PI);
        for (std::size_t t = 0; t < width; ++t) {
            const double v = 0.5 + 0.35 * std::cos(2.0 * M_PI * cycles * static_cast<double>(t) / static_cast<double>(width) + phase) +
                             0.05 * (2.0 * rng.uniform() - 1.0);
            std::snprintf(buf, sizeof buf, "%.6f", v);
            out << buf << ',';
        }
        out << (attack ? "attack" : "normal") << '\n';
    }
    return 0;
}
