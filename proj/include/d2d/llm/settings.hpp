#pragma once

#include <string>

namespace d2d::llm {

inline constexpr double kStructuredTemperature = 0.2;
inline constexpr double kGenerativeTemperature = 0.7;
inline constexpr const char* kDefaultModel = "gpt-4o";

// Model choice for one pipeline stage.
struct StageModel {
    std::string model_id = kDefaultModel;
    double temperature = kStructuredTemperature;
    int max_repairs = 2;
};

} // namespace d2d::llm
