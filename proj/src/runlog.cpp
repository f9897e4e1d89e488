#include "aflsim/runlog.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aflsim/errors.hpp"

namespace aflsim {

namespace {

const char* kHeader = "step,strategy,accuracy,loss,sim_time,client_id,staleness,flushed";

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
    if (!out) throw IngestionError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IngestionError("write failed: " + path);
}

std::string render_rows(const RunLog& log,
                        const std::vector<double>& accuracy,
                        const std::vector<double>& loss) {
    std::ostringstream out;
    out << kHeader << "\n";
    std::size_t k = 0;
    for (const RunRecord& r : log.records) {
        if (!r.accuracy) continue;
        out << r.t << ',' << log.strategy << ',' << fmt9(accuracy[k]) << ','
            << fmt9(loss[k]) << ',' << fmt9(r.sim_time) << ',' << r.client_id << ','
            << r.staleness_raw << ',' << (r.flushed ? 1 : 0) << "\n";
        ++k;
    }
    return out.str();
}

void collect_evaluated(const RunLog& log, std::vector<double>& accuracy, std::vector<double>& loss) {
    for (const RunRecord& r : log.records) {
        if (!r.accuracy) continue;
        accuracy.push_back(*r.accuracy);
        loss.push_back(r.loss.value_or(0.0));
    }
}

std::vector<double> moving_average(const std::vector<double>& v, int window) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t first = i + 1 >= static_cast<std::size_t>(window) ? i + 1 - window : 0;
        double sum = 0.0;
        for (std::size_t j = first; j <= i; ++j) sum += v[j];
        out[i] = sum / static_cast<double>(i - first + 1);
    }
    return out;
}

} // namespace

void write_csv(const RunLog& log, const std::string& path) {
    std::vector<double> accuracy, loss;
    collect_evaluated(log, accuracy, loss);
    write_text(path, render_rows(log, accuracy, loss));
}

void write_csv_smoothed(const RunLog& log, const std::string& path, int window) {
    if (window < 1) throw ConfigError("smoothing window must be at least 1");
    std::vector<double> accuracy, loss;
    collect_evaluated(log, accuracy, loss);
    write_text(path, render_rows(log, moving_average(accuracy, window), moving_average(loss, window)));
}

void write_metadata(const RunLog& log, const std::string& path) {
    write_text(path, log.metadata.dump(2) + "\n");
}

std::vector<CsvRow> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open csv: " + path);

    std::string line;
    if (!std::getline(in, line)) throw IngestionError("empty csv: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) {
        throw IngestionError(path + ": unexpected header '" + line + "'");
    }

    std::vector<CsvRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::string field;
        std::istringstream fs(line);
        while (std::getline(fs, field, ',')) fields.push_back(field);
        if (fields.size() != 8) {
            throw IngestionError(path + ":" + std::to_string(lineno) + ": expected 8 fields, got " +
                                 std::to_string(fields.size()));
        }
        try {
            CsvRow row;
            row.step = std::stoi(fields[0]);
            row.strategy = fields[1];
            row.accuracy = std::stod(fields[2]);
            row.loss = std::stod(fields[3]);
            row.sim_time = std::stod(fields[4]);
            row.client_id = std::stoi(fields[5]);
            row.staleness = std::stoi(fields[6]);
            row.flushed = std::stoi(fields[7]) != 0;
            rows.push_back(row);
        } catch (const std::exception&) {
            throw IngestionError(path + ":" + std::to_string(lineno) + ": malformed row '" + line + "'");
        }
    }
    return rows;
}

ComparisonSummary compare_strategies(const std::vector<RunLog>& logs) {
    if (logs.empty()) throw ComparisonError("nothing to compare: no run logs given");

    ComparisonSummary summary;
    summary.preset = logs.front().preset;
    summary.seed = logs.front().seed;
    for (const RunLog& log : logs) {
        if (log.preset != summary.preset) {
            throw ComparisonError("run logs mix presets '" + summary.preset + "' and '" +
                                  log.preset + "'");
        }
        if (log.seed != summary.seed) {
            throw ComparisonError("run logs mix seeds " + std::to_string(summary.seed) + " and " +
                                  std::to_string(log.seed));
        }
    }

    for (const RunLog& log : logs) {
        StrategyOutcome outcome;
        outcome.strategy = log.strategy;
        for (const RunRecord& r : log.records) {
            if (r.accuracy) outcome.curve.emplace_back(r.t, *r.accuracy);
        }
        if (outcome.curve.empty()) {
            throw ComparisonError("run log for '" + log.strategy + "' has no evaluated records");
        }
        outcome.final_t = outcome.curve.back().first;
        outcome.final_accuracy = outcome.curve.back().second;
        summary.outcomes.push_back(std::move(outcome));
    }

    std::sort(summary.outcomes.begin(), summary.outcomes.end(),
              [](const StrategyOutcome& a, const StrategyOutcome& b) { return a.strategy < b.strategy; });
    for (std::size_t i = 1; i < summary.outcomes.size(); ++i) {
        if (summary.outcomes[i].strategy == summary.outcomes[i - 1].strategy) {
            throw ComparisonError("two run logs share the strategy name '" +
                                  summary.outcomes[i].strategy + "'");
        }
    }

    for (std::size_t i = 0; i < summary.outcomes.size(); ++i) {
        for (std::size_t j = i + 1; j < summary.outcomes.size(); ++j) {
            PairwiseDelta d;
            d.a = summary.outcomes[i].strategy;
            d.b = summary.outcomes[j].strategy;
            d.delta_pp = (summary.outcomes[i].final_accuracy - summary.outcomes[j].final_accuracy) * 100.0;
            summary.deltas.push_back(d);
        }
    }
    return summary;
}

nlohmann::json summary_to_json(const ComparisonSummary& summary) {
    nlohmann::json j;
    j["preset"] = summary.preset;
    j["seed"] = summary.seed;
    j["strategies"] = nlohmann::json::array();
    for (const StrategyOutcome& o : summary.outcomes) {
        nlohmann::json s;
        s["strategy"] = o.strategy;
        s["final_accuracy"] = o.final_accuracy;
        s["final_t"] = o.final_t;
        nlohmann::json curve = nlohmann::json::array();
        for (const auto& [t, acc] : o.curve) curve.push_back({{"t", t}, {"accuracy", acc}});
        s["curve"] = std::move(curve);
        j["strategies"].push_back(std::move(s));
    }
    j["deltas_pp"] = nlohmann::json::array();
    for (const PairwiseDelta& d : summary.deltas) {
        j["deltas_pp"].push_back({{"a", d.a}, {"b", d.b}, {"delta", d.delta_pp}});
    }
    return j;
}

} // namespace aflsim
