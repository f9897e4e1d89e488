#ifndef AFLSIM_RUNLOG_HPP
#define AFLSIM_RUNLOG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace aflsim {

// One server receive. accuracy/loss are present only on evaluated receives.
struct RunRecord {
    int t = 0;                 // server timestamp after this receive (1-based)
    double sim_time = 0.0;     // simulated seconds at delivery
    int client_id = 0;
    int staleness_raw = 0;     // t_before - tau
    bool flushed = false;
    std::optional<double> accuracy;
    std::optional<double> loss;
};

struct RunLog {
    std::string strategy;
    std::string preset;        // empty when not run through a preset
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;
    nlohmann::json metadata;   // resolved config snapshot + seed + version
};

// Rows with accuracy present, under the fixed header
// step,strategy,accuracy,loss,sim_time,client_id,staleness,flushed
// LF line endings, 9 significant digits. Throws IngestionError with the path
// on I/O failure.
void write_csv(const RunLog& log, const std::string& path);

// Same rows with accuracy/loss smoothed by a centered-left moving average of
// the given window (raw values are never modified in the log itself).
void write_csv_smoothed(const RunLog& log, const std::string& path, int window);

// Parsed CSV row; strategy comes back as text, everything else numeric.
struct CsvRow {
    int step = 0;
    std::string strategy;
    double accuracy = 0.0;
    double loss = 0.0;
    double sim_time = 0.0;
    int client_id = 0;
    int staleness = 0;
    bool flushed = false;
};

std::vector<CsvRow> read_csv(const std::string& path);

// Metadata sidecar (pretty JSON, trailing newline).
void write_metadata(const RunLog& log, const std::string& path);

struct StrategyOutcome {
    std::string strategy;
    double final_accuracy = 0.0;
    int final_t = 0;
    std::vector<std::pair<int, double>> curve;  // (t, accuracy) for evaluated receives
};

struct PairwiseDelta {
    std::string a;
    std::string b;
    double delta_pp = 0.0;  // (final_acc(a) - final_acc(b)) in percentage points
};

struct ComparisonSummary {
    std::string preset;
    std::uint64_t seed = 0;
    std::vector<StrategyOutcome> outcomes;  // sorted by strategy name
    std::vector<PairwiseDelta> deltas;      // all ordered pairs a < b by name
};

// Aligns per-strategy accuracy curves on t and reports final-round deltas in
// percentage points. All logs must share preset and seed and carry at least
// one evaluated record; violations raise ComparisonError.
ComparisonSummary compare_strategies(const std::vector<RunLog>& logs);

nlohmann::json summary_to_json(const ComparisonSummary& summary);

} // namespace aflsim

#endif
