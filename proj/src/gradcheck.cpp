#include "hiest/gradcheck.hpp"

#include <cmath>
#include <sstream>

namespace hiest {

bool GradCheckReport::passed() const {
    for (const auto& e : entries)
        if (!(e.max_rel_err < tolerance)) return false;
    return true;
}

double GradCheckReport::worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_err);
    return w;
}

std::string GradCheckReport::summary() const {
    std::ostringstream os;
    for (const auto& e : entries) {
        os << (e.max_rel_err < tolerance ? "ok   " : "FAIL ") << e.name
           << "  max_rel_err=" << e.max_rel_err << "  (analytic=" << e.analytic
           << ", numeric=" << e.numeric << " at flat index " << e.worst_index << ")\n";
    }
    return os.str();
}

GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double step, double tolerance) {
    GradCheckReport report;
    report.tolerance = tolerance;
    report.step = step;

    for (auto& [name, p] : params) Tensor(p).zero_grad();

    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        Tensor loss = f();
        if (loss.size() != 1)
            throw RankError("grad_check: f must return a scalar, got shape " +
                            shape_to_string(loss.shape()));
        tape.backward(loss);
    }
    analytic.reserve(params.size());
    for (const auto& [name, p] : params) {
        auto g = p.grad();
        analytic.emplace_back(g.begin(), g.end());
        if (analytic.back().empty()) analytic.back().assign(p.size(), 0.0);
    }

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi].second;
        GradCheckEntry entry;
        entry.name = params[pi].first;
        auto data = p.mutable_data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double orig = data[i];
            data[i] = orig + step;
            const double up = f().item();
            data[i] = orig - step;
            const double down = f().item();
            data[i] = orig;
            const double fd = (up - down) / (2.0 * step);
            const double a = analytic[pi][i];
            const double rel = std::fabs(a - fd) / std::max(1.0, std::fabs(fd));
            if (rel > entry.max_rel_err) {
                entry.max_rel_err = rel;
                entry.worst_index = i;
                entry.analytic = a;
                entry.numeric = fd;
            }
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace hiest
