#pragma once

#include <string>
#include <string_view>

#include "vlmbench/types.hpp"

namespace vlmbench {

struct PromptText {
    std::string text;
    bool reasoning_active = false;

    bool operator==(const PromptText&) const = default;
};

// ROLE, TASK, THEORY and FORMAT joined by single newlines, skipping empty
// parts. ROLE is the task's own role when set, else the global one. With
// reasoning enabled FORMAT is replaced (not extended) by cot_directive().
PromptText build_prompt(const TaskSpec& task, std::string_view global_role);

// Fixed chain-of-thought instruction. Template version 1; changing the text
// changes every reasoning-mode prompt, so bump kCotTemplateVersion with it.
//
//   First, describe what you observe in the image that is relevant to this task.
//   Then, reason step by step toward your answer.
//   Finally, write your final answer on the last line, in exactly this format:
//   ANSWER: <placeholder>
//
// plus one type-specific sentence about the answer form. Placeholders:
// numeric <integer>, category <label>, boolean <yes or no>, text <text>.
std::string cot_directive(TaskType type);

inline constexpr int kCotTemplateVersion = 1;

}  // namespace vlmbench
