#include "ragfair/ratio.hpp"

#include "ragfair/errors.hpp"

namespace ragfair {

double Ratio::value() const {
    return static_cast<double>(num) / static_cast<double>(den);
}

std::uint64_t Ratio::percent_hundredths() const {
    // round-half-up of (num * 10000) / den
    const std::uint64_t scaled = num * 10000;
    return (2 * scaled + den) / (2 * den);
}

std::string Ratio::percent() const {
    const std::uint64_t h = percent_hundredths();
    std::string out = std::to_string(h / 100);
    out += '.';
    const std::uint64_t frac = h % 100;
    out += static_cast<char>('0' + frac / 10);
    out += static_cast<char>('0' + frac % 10);
    return out;
}

Ratio make_ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0)
        throw ArgumentError("ratio denominator must be >= 1");
    if (num > den)
        throw ArgumentError("ratio numerator exceeds denominator");
    return Ratio{num, den};
}

} // namespace ragfair
