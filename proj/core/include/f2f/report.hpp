#ifndef F2F_REPORT_HPP
#define F2F_REPORT_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "f2f/cluster.hpp"
#include "f2f/encoder.hpp"
#include "f2f/episodic.hpp"
#include "f2f/synthetic.hpp"
#include "f2f/trainer.hpp"

namespace f2f {

inline constexpr std::string_view tool_version = "0.1.0";

using Json = nlohmann::json;

// Config documents. Parsing fills in defaults for absent keys and rejects
// unknown keys with InvalidSpecError; serialising writes every field.

Json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const Json& j);

Json to_json(const EncoderArchitecture& arch);
EncoderArchitecture architecture_from_json(const Json& j);

Json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);

Json to_json(const EpisodeSpec& spec);

/**
 * Training run document: {"model": <architecture>, "train": <TrainConfig>,
 * "init_seed": <int>}. Every key is optional.
 */
struct TrainJob {
    EncoderArchitecture architecture{{32, 64, 128}, Activation::relu};
    TrainConfig train;
    std::uint64_t init_seed = 0;
};

Json to_json(const TrainJob& job);
TrainJob train_job_from_json(const Json& j);

Json to_json(const TrainReport& report);

/// One table row: setting label, n_way, k_shot, episodes, means and std-devs.
Json eval_row(const AggregateReport& report);
Json to_json(const ClusterStats& stats);

/**
 * Skeleton RunReportFile: tool_version, kind, timestamp (UTC, ISO-8601) and
 * the resolved config. Callers add "rows", "cluster_stats", "wall_clock_seconds".
 */
Json make_run_report(std::string_view kind, Json config);

/// Concatenates the rows of several reports and renders a fixed-width table.
Json merge_reports(const std::vector<Json>& reports, const std::vector<std::string>& sources);

/// Table lines "N-way - K-shot | MRe@K | MH@R..." with percentages to two decimals.
std::vector<std::string> render_table(const Json& rows);

/// Pretty-printed with sorted keys and a trailing newline; written atomically.
void write_json(const Json& doc, const std::filesystem::path& path);
/// Throws FormatError on unreadable or malformed JSON.
Json read_json(const std::filesystem::path& path);

}  // namespace f2f

#endif  // F2F_REPORT_HPP
