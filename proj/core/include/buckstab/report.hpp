#pragma once

#include "buckstab/cascade.hpp"
#include "buckstab/config.hpp"
#include "buckstab/sim.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace buckstab {

/// Stage analysis bundle used by reports: closed-loop set plus margins
/// and DC figures.
struct StageAnalysis {
    StageSpec spec;
    ClosedLoopSet loop;
    Margins margins;
};

StageAnalysis analyze_stage(const StageSpec& spec);

nlohmann::ordered_json stage_report(const StageAnalysis& a);

/// analyze-single report: one block per stage, overall verdict.
nlohmann::ordered_json single_report(const SystemConfig& cfg,
                                     const std::vector<StageAnalysis>& stages);

/// analyze-cascade report. Verdicts are computed in the configured
/// feedthrough mode; the opposite mode's verdict is attached and any
/// disagreement flagged.
nlohmann::ordered_json cascade_report(const SystemConfig& cfg,
                                      const CascadeModel& model,
                                      const StabilityReport& verdicts,
                                      const CascadeModel& other_mode_model,
                                      const StabilityReport& other_mode_verdicts);

nlohmann::ordered_json simulation_report(const SimTrace& trace,
                                         const TraceClassification& cls);

std::string render_report(const nlohmann::ordered_json& j);

}  // namespace buckstab
