#include "vlmbench/prompt.hpp"

namespace vlmbench {

std::string cot_directive(TaskType type) {
    std::string_view placeholder;
    std::string_view answer_rule;
    switch (type) {
        case TaskType::numeric:
            placeholder = "<integer>";
            answer_rule = "The final answer must be a single integer number.";
            break;
        case TaskType::category:
            placeholder = "<label>";
            answer_rule = "The final answer must be a single category label.";
            break;
        case TaskType::boolean:
            placeholder = "<yes or no>";
            answer_rule = "The final answer must be exactly one word: yes or no.";
            break;
        case TaskType::text:
            placeholder = "<text>";
            answer_rule = "The final answer must be a short free-text answer on one line.";
            break;
    }

    std::string out;
    out += "First, describe what you observe in the image that is relevant to this task.\n";
    out += "Then, reason step by step toward your answer.\n";
    out += "Finally, write your final answer on the last line, in exactly this format:\n";
    out += "ANSWER: ";
    out += placeholder;
    out += '\n';
    out += answer_rule;
    return out;
}

PromptText build_prompt(const TaskSpec& task, std::string_view global_role) {
    const std::string_view role = task.role.empty() ? global_role : std::string_view(task.role);
    const std::string format = task.reasoning_enabled ? cot_directive(task.task_type) : task.format;

    PromptText prompt;
    prompt.reasoning_active = task.reasoning_enabled;
    for (std::string_view part : {role, std::string_view(task.task), std::string_view(task.theory),
                                  std::string_view(format)}) {
        if (part.empty()) continue;
        if (!prompt.text.empty()) prompt.text += '\n';
        prompt.text += part;
    }
    return prompt;
}

}  // namespace vlmbench
