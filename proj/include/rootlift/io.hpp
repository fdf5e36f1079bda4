#pragma once

#include <filesystem>
#include <string>

#include "rootlift/scene.hpp"
#include "rootlift/toy.hpp"

namespace rootlift::io {

inline constexpr const char* kToolVersion = "0.1.0";

/// Doubles formatted with 17 significant digits: parses back bit-exactly and
/// is byte-stable across runs.
std::string fmt_double(double v);

/// Scene document. Throws ParseError on I/O, syntax, or schema violations.
synth::Scene load_scene(const std::filesystem::path& path);
std::string scene_to_json(const synth::Scene& scene);
void save_scene(const std::filesystem::path& path, const synth::Scene& scene);

/// Solve result document. error_vs_gt (meters) is emitted when ground truth
/// was available.
std::string result_to_json(const SolveResult& result, const double* error_vs_gt);
void save_result(const std::filesystem::path& path, const SolveResult& result, const double* error_vs_gt);

/// Training report (JSON) and the per-epoch metric table (CSV).
std::string report_to_json(const toy::TrainReport& report);
std::string report_to_csv(const toy::TrainReport& report);
void save_report(const std::filesystem::path& json_path, const std::filesystem::path& csv_path,
                 const toy::TrainReport& report);

}  // namespace rootlift::io
