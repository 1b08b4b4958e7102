#pragma once

#include <map>
#include <string>
#include <string_view>

#include "tsrl/series/sample.hpp"

namespace tsrl::datapipe {

/// Templates embedded from prompts/<version>/, keyed by file stem.
const std::map<std::string_view, std::string_view>& prompt_templates();
std::string_view prompt_version();

/// Throws std::out_of_range for an unknown template name.
std::string_view prompt_template(std::string_view name);

/// Replaces every {{key}}. A placeholder without a value throws std::invalid_argument.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Task description template name for a reasoning kind, e.g. "task_event_aware".
std::string task_template_name(TaskKind kind);

/// "A. text" lines.
std::string format_options(const std::vector<AnswerOption>& options);

} // namespace tsrl::datapipe
