#pragma once

#include "cvl/policy/policy.hpp"

namespace cvl::policy::detail {

inline constexpr double kActionClip = 1.0 - 1e-6;

struct RawHeads {
    Mat mean;
    Mat raw_log_std;
    Mat log_std;
    Mat d_log_std_d_raw;
};

Mat log_softmax_columns(const Mat& logits);
double log1m_tanh2(double u);
RawHeads raw_heads(const PolicyParams& policy, const Mat& out);

}  // namespace cvl::policy::detail
