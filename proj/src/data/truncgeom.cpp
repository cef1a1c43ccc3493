#include "cvl/data/truncgeom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvl/errors.hpp"

namespace cvl::data {

TruncGeom::TruncGeom(double p, int lower, int upper) : p_(p), lower_(lower), upper_(upper) {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidSpec("TruncGeom: p must lie in (0, 1]");
    if (upper <= lower) throw InvalidSpec("TruncGeom: upper bound must exceed lower bound");
    const double g = 1.0 - p;
    log_gamma_ = g > 0.0 ? std::log(g) : -std::numeric_limits<double>::infinity();
    normalizer_ = g > 0.0 ? -std::expm1(support_size() * log_gamma_) : 1.0;
}

double TruncGeom::pmf(int delta_t) const {
    if (delta_t < 1 || delta_t > support_size()) return 0.0;
    if (p_ == 1.0) return delta_t == 1 ? 1.0 : 0.0;
    return p_ * std::exp((delta_t - 1) * log_gamma_) / normalizer_;
}

double TruncGeom::cdf(int k) const {
    if (k < 1) return 0.0;
    if (k >= support_size()) return 1.0;
    if (p_ == 1.0) return 1.0;
    return -std::expm1(k * log_gamma_) / normalizer_;
}

int TruncGeom::sample(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    if (p_ == 1.0 || support_size() == 1) return 1;
    // Smallest k with (1 - g^k) / (1 - g^n) > u.
    const double k = std::floor(std::log1p(-u * normalizer_) / log_gamma_) + 1.0;
    return static_cast<int>(std::clamp(k, 1.0, static_cast<double>(support_size())));
}

}  // namespace cvl::data
