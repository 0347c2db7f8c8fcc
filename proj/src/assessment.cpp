#include "lcmon/assessment.hpp"

#include <cmath>

#include "lcmon/errors.hpp"

namespace lcmon {

FlashoverTestResult flashover_statistics(std::span<const double> u_f,
                                         const FlashoverStatsConfig& config) {
    if (u_f.size() < 2)
        throw InsufficientData("flashover_statistics: need at least 2 tests");
    for (double v : u_f)
        if (!(v > 0.0))
            throw InvalidArgument("flashover_statistics: voltages must be positive");

    FlashoverTestResult res;
    res.flashover_voltages.assign(u_f.begin(), u_f.end());
    const double n = static_cast<double>(u_f.size());
    double sum = 0.0;
    for (double v : u_f) sum += v;
    res.u_avg = sum / n;
    double ss = 0.0;
    for (double v : u_f) ss += (v - res.u_avg) * (v - res.u_avg);
    res.sigma = std::sqrt(ss / (n - 1.0));
    res.u_avg_low = res.u_avg - 0.572 * res.sigma;
    res.sigma_rel = 1.64 * res.sigma / res.u_avg;
    const double sigma_used = config.sigma_mode == SustainedSigmaMode::relative_deviation
                                  ? res.sigma_rel
                                  : res.sigma;
    res.u50 = res.u_avg_low * (1.0 - 1.3 * sigma_used);
    return res;
}

double u50_from_percent(double u_ph_kv, double pct_u50) {
    if (!(pct_u50 > 0.0)) throw InvalidArgument("u50_from_percent: pct must be positive");
    if (!(u_ph_kv > 0.0)) throw InvalidArgument("u50_from_percent: u_ph must be positive");
    return 100.0 * u_ph_kv / pct_u50;
}

double sigma_m_from_percent(double pct_sigma_m, double u50_hat_kv) {
    if (pct_sigma_m < 0.0)
        throw InvalidArgument("sigma_m_from_percent: pct must be non-negative");
    return pct_sigma_m * u50_hat_kv / 100.0;
}

std::string_view to_string(InsulatorState s) {
    switch (s) {
        case InsulatorState::operational: return "operational";
        case InsulatorState::hazardous: return "hazardous";
        case InsulatorState::extremely_hazardous: return "extremely-hazardous";
    }
    return "?";
}

InsulatorState state_from_string(std::string_view s) {
    if (s == "operational") return InsulatorState::operational;
    if (s == "hazardous") return InsulatorState::hazardous;
    if (s == "extremely-hazardous") return InsulatorState::extremely_hazardous;
    throw InvalidArgument("unknown state '" + std::string(s) + "'");
}

int severity(InsulatorState s) { return static_cast<int>(s); }

StateAssessment classify_state(double u50_hat_kv, double sigma_kv, double sigma_m_hat_kv,
                               double u_ph_kv, double r) {
    if (!(u50_hat_kv > 0.0) || !(u_ph_kv > 0.0))
        throw InvalidArgument("classify_state: voltages must be positive");
    if (sigma_kv < 0.0 || sigma_m_hat_kv < 0.0)
        throw InvalidArgument("classify_state: deviations must be non-negative");
    if (!(r > 0.0)) throw InvalidArgument("classify_state: r must be positive");

    StateAssessment a;
    a.u50_hat_kv = u50_hat_kv;
    a.sigma_m_hat_kv = sigma_m_hat_kv;
    a.sigma_total_kv = sigma_kv + sigma_m_hat_kv;
    a.u_ph_kv = u_ph_kv;
    a.r = r;
    a.thresholds.lower_3sigma = u50_hat_kv - 3.0 * a.sigma_total_kv;
    a.thresholds.lower_1p28sigma = u50_hat_kv - 1.28 * a.sigma_total_kv;

    const double stress = r * u_ph_kv;
    if (stress < a.thresholds.lower_3sigma) {
        a.state = InsulatorState::operational;
    } else if (stress < a.thresholds.lower_1p28sigma) {
        a.state = InsulatorState::hazardous;
    } else {
        a.state = InsulatorState::extremely_hazardous;
    }
    return a;
}

StateAssessment worst_case_over_window(std::span<const TimedAssessment> assessments,
                                       double window_days,
                                       std::optional<std::int64_t> as_of) {
    if (assessments.empty())
        throw InsufficientData("worst_case_over_window: no assessments");
    if (!(window_days > 0.0))
        throw InvalidArgument("worst_case_over_window: window must be positive");

    std::int64_t reference;
    if (as_of) {
        reference = *as_of;
    } else {
        reference = assessments.front().timestamp;
        for (const auto& t : assessments) reference = std::max(reference, t.timestamp);
    }
    const double window_seconds = window_days * 86400.0;

    const TimedAssessment* worst = nullptr;
    for (const auto& t : assessments) {
        if (t.timestamp > reference) continue;
        if (static_cast<double>(reference - t.timestamp) > window_seconds) continue;
        if (worst == nullptr || severity(t.assessment.state) > severity(worst->assessment.state) ||
            (severity(t.assessment.state) == severity(worst->assessment.state) &&
             t.timestamp > worst->timestamp)) {
            worst = &t;
        }
    }
    if (worst == nullptr)
        throw InsufficientData("worst_case_over_window: window contains no assessments");
    return worst->assessment;
}

}  // namespace lcmon
