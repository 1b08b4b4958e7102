#pragma once

// (response, task, truth) cases with hand-computed reward breakdowns.

#include <optional>
#include <string>
#include <vector>

namespace tsrl::fixtures {

struct RewardCase {
    std::string response;
    std::string task;  // answer task name
    std::string truth; // gold answer in the answer grammar
    std::size_t series_len;
    double format;
    std::optional<double> task_reward;
    double combined;
};

inline std::vector<RewardCase> reward_cases() {
    const std::optional<double> absent;
    return {
        // choice tasks
        {"I compared the peaks. <answer>B</answer>", "mcq", "B", 0, 0, 1, 1},
        {"no tags here", "mcq", "B", 0, -0.5, absent, -0.5},
        {"<answer>A</answer> then <answer>C</answer>", "mcq", "C", 0, 0, 1, 1},
        {"<answer>A</answer> then <answer>C</answer>", "mcq", "A", 0, 0, 0, 0},
        {"<answer>b</answer>", "mcq", "B", 0, 0, 1, 1},
        {"<answer>A</answer>", "mcq", "C", 0, 0, 0, 0},
        {"<answer></answer>", "mcq", "B", 0, 0, 0, 0},
        {"<answer>  D \n</answer>", "mcq", "D", 0, 0, 1, 1},
        {"<answer>high</answer>", "noise", "high", 0, 0, 1, 1},
        {"<answer>HIGH</answer>", "noise", "high", 0, 0, 1, 1},
        {"<answer>medium</answer>", "noise", "low", 0, 0, 0, 0},
        {"<answer>A B</answer>", "mcq", "A", 0, 0, 0, 0},
        {"<answer>B", "mcq", "B", 0, -0.5, absent, -0.5},
        {"B</answer>", "mcq", "B", 0, -0.5, absent, -0.5},
        {"</answer>B<answer>", "mcq", "B", 0, -0.5, absent, -0.5},
        {"<ANSWER>B</ANSWER>", "mcq", "B", 0, -0.5, absent, -0.5},
        {"<answer>A<answer>B</answer>", "mcq", "B", 0, 0, 1, 1},
        {"<answer>A</answer></answer>", "mcq", "A", 0, 0, 1, 1},
        {"Reasoning first. <answer>C</answer> trailing words", "event_aware", "C", 0, 0, 1, 1},
        {"<answer>\nlow\n</answer>", "noise", "low", 0, 0, 1, 1},
        {"", "mcq", "A", 0, -0.5, absent, -0.5},
        // periodicity
        {"<answer>period=24</answer>", "periodicity", "period=24", 0, 0, 1, 1},
        {"<answer>none</answer>", "periodicity", "period=24", 0, 0, 0, 0},
        {"<answer>period=30</answer>", "periodicity", "period=24", 0, 0, 0.75, 0.75},
        {"<answer>period=18</answer>", "periodicity", "period=24", 0, 0, 0.75, 0.75},
        {"<answer>none</answer>", "periodicity", "none", 0, 0, 1, 1},
        {"<answer>period=12</answer>", "periodicity", "none", 0, 0, 0, 0},
        {"<answer>period=48</answer>", "periodicity", "period=24", 0, 0, 0, 0},
        {"<answer>period=60</answer>", "periodicity", "period=24", 0, 0, 0, 0},
        {"<answer>period=24 steps</answer>", "periodicity", "period=24", 0, 0, 1, 1},
        {"<answer>Period = 25</answer>", "periodicity", "period=24", 0, 0, 1.0 - 1.0 / 24.0, 1.0 - 1.0 / 24.0},
        {"<answer>period=0</answer>", "periodicity", "period=24", 0, 0, 0, 0},
        {"<answer>period=abc</answer>", "periodicity", "period=24", 0, 0, 0, 0},
        {"<answer>NONE</answer>", "periodicity", "none", 0, 0, 1, 1},
        {"<answer>period=24.5</answer>", "periodicity", "period=24", 0, 0, 1.0 - 0.5 / 24.0, 1.0 - 0.5 / 24.0},
        {"period=24", "periodicity", "period=24", 0, -0.5, absent, -0.5},
        {"<answer>period=6</answer>", "periodicity", "period=12", 0, 0, 0.5, 0.5},
        // ood, point-wise F1 = 2TP / (2TP + FP + FN)
        {"<answer>[10,15)</answer>", "ood", "[10,15)", 100, 0, 1, 1},
        {"<answer>[10,20)</answer>", "ood", "[15,25)", 100, 0, 0.5, 0.5},
        {"<answer>[30,40)</answer>", "ood", "[10,15)", 100, 0, 0, 0},
        {"<answer>none</answer>", "ood", "none", 100, 0, 1, 1},
        {"<answer>none</answer>", "ood", "[10,15)", 100, 0, 0, 0},
        {"<answer>[10,15)</answer>", "ood", "none", 100, 0, 0, 0},
        {"<answer>[10,15);[40,42)</answer>", "ood", "[10,15);[40,42)", 100, 0, 1, 1},
        {"<answer>[10,15)</answer>", "ood", "[10,15);[40,42)", 100, 0, 10.0 / 12.0, 10.0 / 12.0},
        {"<answer>[0,100)</answer>", "ood", "[10,15)", 100, 0, 10.0 / 105.0, 10.0 / 105.0},
        {"<answer>[90,110)</answer>", "ood", "[10,15)", 100, 0, 0, 0},
        {"<answer>[15,10)</answer>", "ood", "[10,15)", 100, 0, 0, 0},
        {"<answer>[40,42);[10,15)</answer>", "ood", "[10,15);[40,42)", 100, 0, 0, 0},
        {"<answer>[10, 15) ; [40, 42)</answer>", "ood", "[10,15);[40,42)", 100, 0, 1, 1},
        {"<answer>[10,15)</answer>", "ood", "[12,20)", 100, 0, 6.0 / 13.0, 6.0 / 13.0},
        {"<answer>None</answer>", "ood", "none", 100, 0, 1, 1},
        {"<answer>[10,15];</answer>", "ood", "[10,15)", 100, 0, 0, 0},
        {"<answer>[5,6)</answer>", "ood", "[5,6)", 6, 0, 1, 1},
        {"<answer>[5,7)</answer>", "ood", "[5,6)", 6, 0, 0, 0},
        {"[10,15)", "ood", "[10,15)", 100, -0.5, absent, -0.5},
    };
}

} // namespace tsrl::fixtures
