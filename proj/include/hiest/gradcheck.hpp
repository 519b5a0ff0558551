#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hiest/tensor.hpp"

namespace hiest {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double tolerance = 1e-4;
    double step = 1e-5;

    bool passed() const;
    double worst() const;
    std::string summary() const;
};

/// Compare analytic gradients against central finite differences.
///
/// f must rebuild a scalar loss from the current parameter values each time
/// it is called: once on a fresh tape for the analytic pass, then twice per
/// parameter element (tape-free) at x ± step. Relative error per element is
/// |analytic − fd| / max(1, |fd|); the report keeps the per-parameter worst.
GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double step = 1e-5, double tolerance = 1e-4);

}  // namespace hiest
