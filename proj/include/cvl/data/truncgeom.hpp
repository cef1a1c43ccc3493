#pragma once

#include "cvl/rng.hpp"

namespace cvl::data {

/// Geometric law over future-time offsets truncated to the remaining horizon.
/// With g = 1 - p and n = upper - lower, offsets dt in {1, ..., n} have
/// probability (1 - g) g^{dt-1} / (1 - g^n).
class TruncGeom {
public:
    /// Throws InvalidSpec unless p in (0, 1] and upper > lower.
    TruncGeom(double p, int lower, int upper);

    double p() const { return p_; }
    double gamma() const { return 1.0 - p_; }
    int lower() const { return lower_; }
    int upper() const { return upper_; }
    int support_size() const { return upper_ - lower_; }

    double pmf(int delta_t) const;
    /// P(offset <= k).
    double cdf(int k) const;
    /// Closed-form inverse-CDF draw; consumes exactly one uniform variate.
    int sample(Rng& rng) const;

private:
    double p_;
    int lower_;
    int upper_;
    double log_gamma_;   // log(1 - p), -inf when p == 1
    double normalizer_;  // 1 - g^n
};

}  // namespace cvl::data
