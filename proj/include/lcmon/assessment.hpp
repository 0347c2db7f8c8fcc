#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lcmon {

// Fleet-average scatter of laboratory flashover voltages, kV. Used as the
// prior for field strings that have no lab test of their own; overridable
// everywhere it appears.
inline constexpr double kDefaultSigmaKv = 14.0;

// Safety factor on the phase-to-ground voltage; the shipped default suits
// lines shorter than 100 km.
inline constexpr double kDefaultSafetyFactor = 1.6;

// Statistics of one repeated flashover test series.
//   u_avg     mean discharge voltage
//   sigma     sample standard deviation (N-1)
//   u_avg_low 90%-confidence lower mean, u_avg - 0.572 sigma
//   sigma_rel 90%-confidence relative deviation, 1.64 sigma / u_avg
//   u50       sustained critical voltage, u_avg_low * (1 - 1.3 sigma_used)
struct FlashoverTestResult {
    std::vector<double> flashover_voltages;  // kV
    double u_avg = 0.0;
    double sigma = 0.0;
    double u_avg_low = 0.0;
    double sigma_rel = 0.0;
    double u50 = 0.0;
};

// Which deviation enters the sustained-voltage factor (1 - 1.3 sigma). The
// source formula reads as if it took the absolute kV deviation, which is
// dimensionally inconsistent; the relative form is the default and the
// as-written absolute form is kept selectable.
enum class SustainedSigmaMode { relative_deviation, absolute_as_written };

struct FlashoverStatsConfig {
    SustainedSigmaMode sigma_mode = SustainedSigmaMode::relative_deviation;
};

// Requires N >= 2 positive voltages.
FlashoverTestResult flashover_statistics(std::span<const double> u_f,
                                         const FlashoverStatsConfig& config = {});

// Critical voltage from its percentage expression: 100 * u_ph / pct.
double u50_from_percent(double u_ph_kv, double pct_u50);

// Model-error deviation in kV from a relative RMSE: pct * u50_hat / 100.
double sigma_m_from_percent(double pct_sigma_m, double u50_hat_kv);

enum class InsulatorState { operational, hazardous, extremely_hazardous };

std::string_view to_string(InsulatorState s);
InsulatorState state_from_string(std::string_view s);

// Severity for worst-case aggregation: higher is worse.
int severity(InsulatorState s);

struct StateThresholds {
    double lower_3sigma = 0.0;     // u50_hat - 3 sigma_total
    double lower_1p28sigma = 0.0;  // u50_hat - 1.28 sigma_total
};

struct StateAssessment {
    InsulatorState state = InsulatorState::operational;
    double u50_hat_kv = 0.0;
    double sigma_m_hat_kv = 0.0;
    double sigma_total_kv = 0.0;  // sigma + sigma_m_hat
    double u_ph_kv = 0.0;
    double r = kDefaultSafetyFactor;
    StateThresholds thresholds;
};

// Three-state verdict. With s = r * u_ph and sigma_t = sigma + sigma_m_hat:
//   operational           s <  u50 - 3 sigma_t
//   hazardous             u50 - 3 sigma_t <= s < u50 - 1.28 sigma_t
//   extremely hazardous   s >= u50 - 1.28 sigma_t
// The three conditions partition the line, so exactly one holds.
StateAssessment classify_state(double u50_hat_kv, double sigma_kv, double sigma_m_hat_kv,
                               double u_ph_kv, double r = kDefaultSafetyFactor);

struct TimedAssessment {
    std::int64_t timestamp = 0;  // seconds since epoch
    StateAssessment assessment;
};

// Most severe assessment within the trailing window; among equals, the most
// recent wins. The window ends at `as_of` when given, otherwise at the
// latest timestamp present. Throws InsufficientData when nothing falls
// inside the window.
StateAssessment worst_case_over_window(std::span<const TimedAssessment> assessments,
                                       double window_days,
                                       std::optional<std::int64_t> as_of = std::nullopt);

}  // namespace lcmon
