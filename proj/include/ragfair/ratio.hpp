#pragma once

#include <cstdint>
#include <string>

namespace ragfair {

// Exact violation ratio. Reports render it to two decimal places, round-half-up,
// e.g. 599/2100 -> "28.52".
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const;

    // Percent scaled to hundredths, rounded half-up with integer arithmetic.
    std::uint64_t percent_hundredths() const;

    // Rendered percent without the sign, e.g. "28.52".
    std::string percent() const;

    bool operator==(const Ratio&) const = default;
};

// den >= 1 and num <= den, else ArgumentError.
Ratio make_ratio(std::uint64_t num, std::uint64_t den);

} // namespace ragfair
