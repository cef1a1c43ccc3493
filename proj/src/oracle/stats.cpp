#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "cvl/errors.hpp"
#include "cvl/oracle/oracle.hpp"

namespace cvl::oracle {

namespace {

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw InvalidSpec("spearman: sequences differ in length");
    if (xs.size() < 2) throw InvalidSpec("spearman: need at least two points");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

ChiSquareResult chi_square_gof(std::span<const long long> counts, std::span<const double> probs) {
    if (counts.size() != probs.size() || counts.empty()) throw InvalidSpec("chi-square: size mismatch");
    const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), 0LL));
    std::vector<double> observed;
    std::vector<double> expected;
    double obs_acc = 0.0;
    double exp_acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        obs_acc += static_cast<double>(counts[i]);
        exp_acc += n * probs[i];
        if (exp_acc >= 5.0) {
            observed.push_back(obs_acc);
            expected.push_back(exp_acc);
            obs_acc = exp_acc = 0.0;
        }
    }
    if (obs_acc > 0.0 || exp_acc > 0.0) {
        if (expected.empty()) {
            observed.push_back(obs_acc);
            expected.push_back(exp_acc);
        } else {
            observed.back() += obs_acc;
            expected.back() += exp_acc;
        }
    }
    ChiSquareResult out;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double diff = observed[i] - expected[i];
        out.statistic += diff * diff / expected[i];
    }
    out.dof = static_cast<int>(observed.size()) - 1;
    if (out.dof <= 0) {
        out.p_value = 1.0;
        return out;
    }
    boost::math::chi_squared dist(out.dof);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
    return out;
}

}  // namespace cvl::oracle
