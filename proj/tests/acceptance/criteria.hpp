#pragma once

#include <cstdint>
#include <sstream>
#include <string>

namespace acceptance {

struct Verdict {
    bool pass = false;
    std::string detail;
};

Verdict criterion_1();
Verdict criterion_2();
Verdict criterion_3();
Verdict criterion_4();
Verdict criterion_5();
Verdict criterion_6();
Verdict criterion_7();
Verdict criterion_8();
Verdict criterion_9();
Verdict criterion_10();
Verdict criterion_11();
Verdict criterion_12();

/// Fixed seed family per criterion, chosen before any run.
inline std::uint64_t base_seed(int criterion) { return 0x5eed0000ULL + 1000ULL * static_cast<std::uint64_t>(criterion); }

template <class... Ts>
std::string cat(const Ts&... xs) {
    std::ostringstream out;
    out.precision(6);
    (out << ... << xs);
    return out.str();
}

}  // namespace acceptance
