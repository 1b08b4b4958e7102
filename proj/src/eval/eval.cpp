#include "tsrl/eval/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "tsrl/datapipe/prompts.hpp"
#include "tsrl/plot/render.hpp"
#include "tsrl/reward/reward.hpp"
#include "tsrl/series/dsl.hpp"
#include "tsrl/series/synth.hpp"

namespace tsrl::eval {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (const auto rest = bytes.size() - i; rest > 0) {
        std::uint32_t v = bytes[i] << 16;
        if (rest == 2) v |= bytes[i + 1] << 8;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::string plot_data_url(const QASample& sample, const std::filesystem::path& store_dir) {
    if (!sample.plot_path) throw EvalError(fmt::format("{}: sample has no plot", sample.sample_id));
    const std::filesystem::path p(*sample.plot_path);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p.is_absolute() ? p : store_dir / p, ec))
        throw EvalError(fmt::format("{}: plot file {} is missing", sample.sample_id, *sample.plot_path));
    const auto parsed = series::parse_series_spec(sample.series_spec);
    if (!parsed.ok()) throw EvalError(fmt::format("{}: series spec does not parse", sample.sample_id));
    const auto png = plot::render_png(series::synthesize(*parsed.spec), parsed.spec->plot);
    return "data:image/png;base64," + base64_encode(png);
}

std::vector<datapipe::ChatMessage> build_prompt(const QASample& sample, const std::string& image_url) {
    using datapipe::ContentPart;
    std::vector<datapipe::ChatMessage> out;
    out.push_back(datapipe::ChatMessage::text("system", std::string(datapipe::prompt_template("eval_system"))));
    datapipe::ChatMessage user{"user", {}};
    user.content.push_back({ContentPart::Kind::image_url, image_url});
    std::string text = sample.question + "\n\n" + datapipe::format_options(sample.options);
    user.content.push_back({ContentPart::Kind::text, std::move(text)});
    out.push_back(std::move(user));
    return out;
}

std::vector<std::string> validate(const EvalConfig& config) {
    std::vector<std::string> issues;
    if (config.repeats < 1) issues.push_back("repeats must be >= 1");
    if (config.max_parallel < 1) issues.push_back("max_parallel must be >= 1");
    if (config.temperature && !(*config.temperature >= 0.0)) issues.push_back("temperature must be >= 0");
    return issues;
}

double margin_of_error(const std::vector<double>& per_run) {
    if (per_run.empty()) return 0.0;
    double mean = 0.0;
    for (double a : per_run) mean += a;
    mean /= static_cast<double>(per_run.size());
    double m = 0.0;
    for (double a : per_run) m = std::max(m, std::abs(a - mean));
    return m;
}

bool grade_response(const QASample& sample, std::string_view response) {
    const auto extracted = reward::extract_answer(response);
    if (!extracted) return false;
    const auto task = reward::answer_task_for(sample.task_kind);
    if (task == reward::AnswerTask::mcq || task == reward::AnswerTask::noise) {
        const auto parsed = reward::parse_structured_answer(*extracted, task);
        return parsed && reward::indicator_reward(*parsed.answer, sample.gold_answer) == 1.0;
    }
    if (!sample.primitive_label) return false;
    reward::GroundTruth truth;
    truth.task = task;
    truth.primitive = *sample.primitive_label;
    truth.series_len = sample.series_spec.value("count", std::size_t{0});
    return reward::combined_reward(response, truth).task_reward == 1.0;
}

EvalReport evaluate(const std::vector<QASample>& dataset, datapipe::ChatClient& client, const EvalConfig& config,
                    const ImageSource& image_for) {
    if (const auto issues = validate(config); !issues.empty()) throw EvalError(issues.front());
    if (dataset.empty()) throw EvalError("dataset is empty");
    const auto repeats = static_cast<std::size_t>(config.repeats);

    // Prompts are built up front so a missing plot fails before any request is sent.
    std::vector<std::vector<datapipe::ChatMessage>> prompts;
    prompts.reserve(dataset.size());
    for (const auto& s : dataset) prompts.push_back(build_prompt(s, image_for(s)));

    std::vector<SampleRecord> records(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        records[i].sample_id = dataset[i].sample_id;
        records[i].task_kind = dataset[i].task_kind;
        records[i].grades.assign(repeats, false);
        records[i].extracted.assign(repeats, std::nullopt);
    }
    std::vector<std::vector<std::string>> errors(dataset.size() * repeats);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job; (job = next++) < dataset.size() * repeats;) {
            const std::size_t i = job / repeats, k = job % repeats;
            datapipe::ChatRequest req;
            req.messages = prompts[i];
            req.temperature = config.temperature;
            req.max_tokens = config.max_tokens;
            req.seed = config.seed + k;
            const auto res = client.complete(req);
            if (!res.ok) {
                errors[job].push_back(fmt::format("repeat {}: endpoint error: {}", k, res.error));
                continue;
            }
            records[i].extracted[k] = reward::extract_answer(res.content);
            if (!records[i].extracted[k]) errors[job].push_back(fmt::format("repeat {}: no answer tag", k));
            records[i].grades[k] = grade_response(dataset[i], res.content);
        }
    };
    const int n_threads = std::min<int>(config.max_parallel, static_cast<int>(dataset.size() * repeats));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t job = 0; job < errors.size(); ++job)
        for (auto& e : errors[job]) records[job / repeats].diagnostics.push_back(std::move(e));

    EvalReport report;
    report.repeats = config.repeats;
    std::map<TaskKind, std::vector<double>> correct_by_task;
    std::vector<double> correct(repeats, 0.0);
    for (const auto& r : records) {
        auto& t = correct_by_task[r.task_kind];
        t.resize(repeats, 0.0);
        ++report.per_task[r.task_kind].samples;
        for (std::size_t k = 0; k < repeats; ++k) {
            t[k] += r.grades[k];
            correct[k] += r.grades[k];
        }
    }
    auto finish = [&](std::vector<double> counts, std::size_t n, std::vector<double>& per_run, double& acc, double& moe) {
        per_run.clear();
        double sum = 0.0;
        for (double c : counts) {
            per_run.push_back(c / static_cast<double>(n));
            sum += c;
        }
        acc = sum / static_cast<double>(n * repeats);
        moe = margin_of_error(per_run);
    };
    for (auto& [kind, t] : report.per_task)
        finish(correct_by_task[kind], t.samples, t.per_run, t.accuracy, t.margin_of_error);
    finish(correct, records.size(), report.per_run, report.accuracy, report.margin_of_error);
    report.records = std::move(records);
    return report;
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json per_task = nlohmann::json::object();
    for (const auto& [kind, t] : report.per_task)
        per_task[std::string(to_string(kind))] = {{"samples", t.samples},
                                                  {"accuracy", t.accuracy},
                                                  {"per_run", t.per_run},
                                                  {"margin_of_error", t.margin_of_error}};
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : report.records) {
        nlohmann::json extracted = nlohmann::json::array();
        for (const auto& e : r.extracted) extracted.push_back(e ? nlohmann::json(*e) : nlohmann::json(nullptr));
        records.push_back({{"sample_id", r.sample_id},
                           {"task_kind", to_string(r.task_kind)},
                           {"grades", r.grades},
                           {"extracted", extracted},
                           {"diagnostics", r.diagnostics}});
    }
    return {{"repeats", report.repeats},
            {"accuracy", report.accuracy},
            {"per_run", report.per_run},
            {"margin_of_error", report.margin_of_error},
            {"per_task", per_task},
            {"records", records}};
}

std::string format_table(const EvalReport& report, const std::string& model_name) {
    std::vector<TaskKind> cols;
    for (auto k : kReasoningTasks) cols.push_back(k);
    for (auto k : kPrimitiveTasks)
        if (report.per_task.count(k)) cols.push_back(k);

    const std::size_t name_w = std::max<std::size_t>(model_name.size(), 5);
    std::string header = fmt::format("{:<{}}", "Model", name_w);
    std::string rule;
    std::string row = fmt::format("{:<{}}", model_name, name_w);
    auto cell = [](const std::optional<std::pair<double, double>>& v) {
        return v ? fmt::format("{:.1f} ±{:.1f}", 100.0 * v->first, 100.0 * v->second) : std::string("-");
    };
    for (auto k : cols) {
        const auto name = display_name(k);
        const auto it = report.per_task.find(k);
        const auto text = cell(it == report.per_task.end()
                                   ? std::nullopt
                                   : std::optional(std::pair{it->second.accuracy, it->second.margin_of_error}));
        const std::size_t w = std::max(name.size(), text.size());
        header += fmt::format(" | {:>{}}", name, w);
        row += fmt::format(" | {:>{}}", text, w);
    }
    const auto overall = cell(std::pair{report.accuracy, report.margin_of_error});
    const std::size_t w = std::max<std::size_t>(7, overall.size());
    header += fmt::format(" | {:>{}}", "Overall", w);
    row += fmt::format(" | {:>{}}", overall, w);
    // "±" is two bytes but one column wide; count columns, not bytes.
    std::size_t width = 0;
    for (unsigned char c : header) width += (c & 0xC0) != 0x80;
    rule.assign(width, '-');
    return fmt::format("Accuracy (%) over {} repeats\n{}\n{}\n{}\n", report.repeats, header, rule, row);
}

std::vector<QASample> load_samples_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw EvalError(fmt::format("cannot open {}", path.string()));
    std::vector<QASample> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw EvalError(fmt::format("{}:{}: not JSON", path.string(), n));
        try {
            out.push_back(sample_from_json(doc));
        } catch (const std::exception& e) {
            throw EvalError(fmt::format("{}:{}: {}", path.string(), n, e.what()));
        }
    }
    return out;
}

} // namespace tsrl::eval
