#pragma once

// Central finite-difference verification of the reverse-mode gradients of
// the training loss with respect to every shared parameter, v and each phi_t.
// Runs in double precision.

#include "sinevid/siren.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sinevid {

struct GradcheckOptions {
    ModelDims dims{2, 8, 8, 4, 30.0};
    std::size_t frames = 3;
    std::size_t coords = 16;
    std::size_t trials = 100;
    double step = 1e-4;
    std::uint64_t seed = 0;
};

struct GroupError {
    std::string name;
    double max_rel_error = 0.0;     // worst norm-wise error over trials
    double max_entry_error = 0.0;   // worst per-entry error, informational
};

struct GradcheckReport {
    std::vector<GroupError> groups; // shared parameters in declared order, then "v", then "phi"
    double max_rel_error = 0.0;
    double max_entry_error = 0.0;
    std::size_t trials = 0;
    std::size_t checked = 0; // scalar entries compared
};

// Norm-wise error of one tensor: ||g - d|| / max(||g||, ||d||), with d the
// central differences; 0 when both vanish. Per-entry errors of tiny
// components are dominated by the O(step^2) truncation term, which is large
// for omega0 = 30, so they are reported but not used as the verdict.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);
double entry_error(double analytic, double numeric); // |g - d| / max(|g|, |d|, 1e-6)

GradcheckReport gradcheck_model(const GradcheckOptions& opts);

} // namespace sinevid
