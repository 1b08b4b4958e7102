#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsrl/datapipe/chat.hpp"
#include "tsrl/series/sample.hpp"

namespace tsrl::eval {

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// PNG of the sample's series as a data URL. The sample must have a plot file on disk
/// (relative paths resolve against `store_dir`); the raster is re-rendered from the spec.
std::string plot_data_url(const QASample& sample, const std::filesystem::path& store_dir);

/// System message with the answer-tag instruction, then a user message carrying the image
/// and the question with its labelled options.
std::vector<datapipe::ChatMessage> build_prompt(const QASample& sample, const std::string& image_url);

struct EvalConfig {
    int repeats = 5;
    std::uint64_t seed = 0;             // repeat k sends seed + k
    std::optional<double> temperature = 1.0;
    std::optional<int> max_tokens;
    int max_parallel = 4;
};

std::vector<std::string> validate(const EvalConfig& config);

struct SampleRecord {
    std::string sample_id;
    TaskKind task_kind = TaskKind::fact_adherent;
    std::vector<bool> grades;                          // one per repeat
    std::vector<std::optional<std::string>> extracted; // answer-tag contents
    std::vector<std::string> diagnostics;              // "repeat k: ..." for every failed or untagged repeat
};

struct TaskAccuracy {
    std::size_t samples = 0;
    double accuracy = 0.0;
    std::vector<double> per_run;
    double margin_of_error = 0.0;
};

struct EvalReport {
    int repeats = 0;
    std::map<TaskKind, TaskAccuracy> per_task;
    double accuracy = 0.0;
    std::vector<double> per_run;
    double margin_of_error = 0.0; // max_k |per_run[k] - accuracy|
    std::vector<SampleRecord> records; // dataset order
};

/// Largest absolute deviation of the run accuracies from their mean.
double margin_of_error(const std::vector<double>& per_run);

/// Grade of one completion: answer-tag extraction, then the reward engine's indicator
/// (exact task score 1 for periodicity and ood samples).
bool grade_response(const QASample& sample, std::string_view response);

using ImageSource = std::function<std::string(const QASample&)>;

/// Failed requests are graded incorrect and keep their error as a diagnostic.
EvalReport evaluate(const std::vector<QASample>& dataset, datapipe::ChatClient& client, const EvalConfig& config,
                    const ImageSource& image_for);

nlohmann::json to_json(const EvalReport& report);
/// Task columns in the fixed order of the reasoning taxonomy, percentages with margins.
std::string format_table(const EvalReport& report, const std::string& model_name);

/// Reads an exported line-delimited sample file.
std::vector<QASample> load_samples_jsonl(const std::filesystem::path& path);

} // namespace tsrl::eval
