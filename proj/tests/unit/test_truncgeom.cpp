#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cvl/data/truncgeom.hpp"
#include "cvl/errors.hpp"
#include "cvl/oracle/oracle.hpp"

using cvl::data::TruncGeom;

TEST(TruncGeom, HandComputedPmf) {
    // p = 1/2 over {1, 2, 3}: weights 1/2, 1/4, 1/8 normalised by 7/8.
    const TruncGeom d(0.5, 0, 3);
    EXPECT_NEAR(d.pmf(1), 4.0 / 7.0, 1e-15);
    EXPECT_NEAR(d.pmf(2), 2.0 / 7.0, 1e-15);
    EXPECT_NEAR(d.pmf(3), 1.0 / 7.0, 1e-15);
    EXPECT_EQ(d.pmf(0), 0.0);
    EXPECT_EQ(d.pmf(4), 0.0);
}

TEST(TruncGeom, PmfSumsToOneAndMatchesCdf) {
    for (double p : {0.001, 0.01, 0.1, 0.5, 0.9}) {
        const TruncGeom d(p, 7, 57);
        double running = 0.0;
        for (int k = 1; k <= d.support_size(); ++k) {
            running += d.pmf(k);
            EXPECT_NEAR(d.cdf(k), running, 1e-12) << "p " << p << " k " << k;
        }
        EXPECT_NEAR(running, 1.0, 1e-12);
    }
}

TEST(TruncGeom, PmfAgreesWithDirectSum) {
    const double p = 0.05;
    const int n = 30;
    const TruncGeom d(p, 10, 10 + n);
    double z = 0.0;
    for (int k = 1; k <= n; ++k) z += p * std::pow(1.0 - p, k - 1);
    for (int k = 1; k <= n; ++k) EXPECT_NEAR(d.pmf(k), p * std::pow(1.0 - p, k - 1) / z, 1e-14);
}

TEST(TruncGeom, DegenerateCases) {
    cvl::Rng rng = cvl::make_stream(0, 0);
    const TruncGeom one(0.3, 4, 5);
    const TruncGeom certain(1.0, 0, 10);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(one.sample(rng), 1);
        EXPECT_EQ(certain.sample(rng), 1);
    }
    EXPECT_EQ(certain.pmf(1), 1.0);
    EXPECT_EQ(certain.pmf(2), 0.0);
}

TEST(TruncGeom, InvalidParameters) {
    EXPECT_THROW(TruncGeom(0.0, 0, 5), cvl::InvalidSpec);
    EXPECT_THROW(TruncGeom(1.5, 0, 5), cvl::InvalidSpec);
    EXPECT_THROW(TruncGeom(0.1, 5, 5), cvl::InvalidSpec);
    EXPECT_THROW(TruncGeom(std::nan(""), 0, 5), cvl::InvalidSpec);
}

TEST(TruncGeom, ConsumesOneVariatePerDraw) {
    const TruncGeom d(0.1, 0, 40);
    cvl::Rng a = cvl::make_stream(5, 0);
    cvl::Rng b = cvl::make_stream(5, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        d.sample(a);
        unif(b);
    }
    EXPECT_EQ(a(), b());
}

TEST(TruncGeom, SamplesStayInSupport) {
    cvl::Rng rng = cvl::make_stream(1, 0);
    for (double p : {1e-6, 0.01, 0.99}) {
        const TruncGeom d(p, 0, 13);
        for (int i = 0; i < 2000; ++i) {
            const int k = d.sample(rng);
            ASSERT_GE(k, 1);
            ASSERT_LE(k, 13);
        }
    }
}

TEST(TruncGeom, EmpiricalFrequenciesPassChiSquare) {
    const TruncGeom d(0.05, 0, 60);
    cvl::Rng rng = cvl::make_stream(2, 0);
    std::vector<long long> counts(d.support_size(), 0);
    for (int i = 0; i < 100000; ++i) ++counts[d.sample(rng) - 1];
    std::vector<double> probs(d.support_size());
    for (int k = 1; k <= d.support_size(); ++k) probs[k - 1] = d.pmf(k);
    const auto res = cvl::oracle::chi_square_gof(counts, probs);
    EXPECT_GT(res.p_value, 0.001) << "chi2 " << res.statistic << " dof " << res.dof;
}
