#include <stdexcept>

#include <fmt/format.h>

#include "tsrl/datapipe/prompts.hpp"

namespace tsrl::datapipe {

std::string_view prompt_template(std::string_view name) {
    const auto& all = prompt_templates();
    const auto it = all.find(name);
    if (it == all.end()) throw std::out_of_range(fmt::format("no prompt template named \"{}\"", name));
    return it->second;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const auto open = tmpl.find("{{", i);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(i));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw std::invalid_argument("unterminated placeholder in template");
        out.append(tmpl.substr(i, open - i));
        const std::string key(tmpl.substr(open + 2, close - open - 2));
        const auto it = vars.find(key);
        if (it == vars.end()) throw std::invalid_argument(fmt::format("no value for placeholder {{{{{}}}}}", key));
        out += it->second;
        i = close + 2;
    }
    return out;
}

std::string task_template_name(TaskKind kind) { return fmt::format("task_{}", to_string(kind)); }

std::string format_options(const std::vector<AnswerOption>& options) {
    std::string out;
    for (const auto& o : options) out += fmt::format("{}. {}\n", o.label, o.text);
    if (!out.empty()) out.pop_back();
    return out;
}

} // namespace tsrl::datapipe
