#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "msf/safety_filter.hpp"
#include "msf/scenario.hpp"

namespace msf {

struct StepRecord {
    long step = 0;
    double t = 0.0;
    FleetState x_true;  ///< state measured at t, before u_s is applied
    FleetState x_a;     ///< state delivered to the controller
    FleetInput u_c;     ///< controller command
    FleetInput u_a;     ///< command delivered to the plant side
    FleetInput u_s;     ///< command applied to the plant
    std::optional<FilterMode> mode;  ///< empty when the filter is disabled
    double intervention = 0.0;
    std::vector<double> agent_intervention;
    int alarm = 0;
    double residual = 0.0;
    double min_pairwise = 0.0;
    double min_wall = 0.0;
    std::string solver_status = "none";
    int solver_iterations = 0;
    int tracker_iterations = 0;
    double tracking_error = 0.0;  ///< mean |p_i - reference_i| over the fleet, true state
};

struct SimLog {
    ScenarioConfig config;
    std::vector<StepRecord> records;
    FleetState final_state;  ///< plant state after the last step
    std::vector<BackupTrajectory> backups;  ///< one per step when requested
    long fallback_count = 0;
};

struct RunOptions {
    bool keep_backups = false;
};

/// Closed loop per step: sensor attack, tracker, actuation attack, filter,
/// plant, detector, record. Deterministic for a fixed configuration.
/// Throws InitialInfeasibility (initial state or first filter problem) and
/// RuntimeAbort (non-finite state).
SimLog run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

struct TimeSpan {
    double start = 0.0;
    double end = 0.0;
};

struct MetricsSummary {
    double min_pairwise = 0.0;
    double min_wall = 0.0;
    double max_intervention = 0.0;
    std::vector<TimeSpan> intervention_intervals;
    std::optional<double> first_alarm_time;
    long alarm_count = 0;
    std::optional<double> first_agent_intervention;  ///< agent 0, if per-agent data is present
    std::optional<double> baseline_tracking_error;   ///< mean over the second before the attack
    std::optional<double> recovery_time;             ///< after attack end, error back within +10% for good
    double final_tracking_error = 0.0;
    long fallback_count = 0;
    long modified_steps = 0;
};

MetricsSummary summarize(const SimLog& log);

enum class ExportFormat { Csv, Json };

/// Mean distance from each agent to its reference.
double tracking_error(const FleetState& x, double t, const ReferenceSpec& ref);

std::vector<std::string> csv_header(std::size_t agents);
/// CSV goes to `<dir>/log.csv` plus `<dir>/summary.json`; JSON to `<dir>/log.json`.
/// Returns the written log path.
std::filesystem::path export_log(const SimLog& log, const MetricsSummary& summary,
                                 const std::filesystem::path& dir, ExportFormat format);

void write_csv(const SimLog& log, std::ostream& out);
nlohmann::json to_json(const SimLog& log, const MetricsSummary& summary);
nlohmann::json to_json(const MetricsSummary& summary);

/// Reloads a JSON export exactly, or the columns a CSV export carries
/// (x_a/u_a are not in the CSV; the reference comes from `config`).
SimLog load_log(const std::filesystem::path& path, const std::optional<ScenarioConfig>& config = std::nullopt);

}  // namespace msf
