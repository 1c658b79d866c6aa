#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "phcbf/errors.hpp"
#include "phcbf/simulation.hpp"

namespace phcbf {

namespace {

constexpr double kLeaveRadius = 0.5;  // normalised units; the orbit must move this far away first
constexpr std::size_t kReferenceCount = 64;

}  // namespace

LimitCycleResult detect_limit_cycle(const Trajectory& traj, double window, double band,
                                    double epsilon) {
    const auto& rec = traj.records;
    if (rec.size() < 3 || rec.back().t - rec.front().t <= 2.0 * window) {
        throw ContractViolation("detect_limit_cycle: trajectory shorter than two windows");
    }
    const double t_start = rec.back().t - window;
    const auto first = std::lower_bound(rec.begin(), rec.end(), t_start,
                                        [](const TrajectoryRecord& r, double t) { return r.t < t; });
    const std::size_t begin = static_cast<std::size_t>(first - rec.begin());
    const std::size_t count = rec.size() - begin;

    LimitCycleResult res;
    for (std::size_t i = begin; i < rec.size(); ++i) {
        res.energy_mean += rec[i].H;
    }
    res.energy_mean /= static_cast<double>(count);
    for (std::size_t i = begin; i < rec.size(); ++i) {
        res.energy_spread = std::max(res.energy_spread, std::abs(rec[i].H - res.energy_mean));
    }
    res.energy_bounded = res.energy_spread <= band;

    const Eigen::Index n = rec[begin].x.size();
    Matrix Z(n, static_cast<Eigen::Index>(count));
    for (std::size_t k = 0; k < count; ++k) {
        Z.col(static_cast<Eigen::Index>(k)) = rec[begin + k].x;
    }
    const Vector mean = Z.rowwise().mean();
    Vector sd = ((Z.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
    if (sd.maxCoeff() <= 0.0) {
        // At rest: nothing moves, so there is no orbit to detect.
        res.recurrence_distance = 0.0;
        return res;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const double s = sd[j] > 1e-12 * sd.maxCoeff() ? sd[j] : 1.0;
        Z.row(j) = (Z.row(j).array() - mean[j]) / s;
    }

    // References are taken from the first half of the window so each has at
    // least half a window in which to return.
    const std::size_t half = count / 2;
    const std::size_t stride = std::max<std::size_t>(1, half / kReferenceCount);
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> periods;
    for (std::size_t r = 0; r < half; r += stride) {
        const auto ref = Z.col(static_cast<Eigen::Index>(r));
        std::size_t k = r + 1;
        while (k < count && (Z.col(static_cast<Eigen::Index>(k)) - ref).norm() <= kLeaveRadius) {
            ++k;
        }
        double local_best = std::numeric_limits<double>::infinity();
        std::size_t local_arg = 0;
        bool returned = false;
        for (; k < count; ++k) {
            const double d = (Z.col(static_cast<Eigen::Index>(k)) - ref).norm();
            if (d < local_best) {
                local_best = d;
                local_arg = k;
            }
            if (d <= epsilon) {
                returned = true;
            } else if (returned) {
                break;  // past the first close approach
            }
        }
        best = std::min(best, local_best);
        if (returned) {
            periods.push_back(rec[begin + local_arg].t - rec[begin + r].t);
        }
    }
    res.recurrence_distance = best;
    res.recurrent = best <= epsilon;
    if (!periods.empty()) {
        std::nth_element(periods.begin(), periods.begin() + periods.size() / 2, periods.end());
        res.period = periods[periods.size() / 2];
    }
    res.detected = res.energy_bounded && res.recurrent;
    return res;
}

}  // namespace phcbf
