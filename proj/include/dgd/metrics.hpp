#pragma once

#include "dgd/hand_model.hpp"
#include "dgd/physics.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace dgd {

inline constexpr const char* kReportSchema = "eval_v1";

/// One evaluated candidate: refined pose and its verdict.
struct EvaluatedGrasp {
  int hand_class = 0;
  PhysicsVerdict verdict;
};

struct HandMetrics {
  std::string hand;
  int hand_class = 0;
  int total = 0;
  int passed = 0;
  double success_rate = 0.0;                 // percent
  std::optional<double> diversity;           // rad, absent with no passing grasps
  std::optional<double> collision_depth;     // mm, mean over passing grasps
  std::optional<double> max_collision_depth;  // mm
  bool in_mean = true;
};

struct MeanMetrics {
  int hands = 0;
  double success_rate = 0.0;
  std::optional<double> diversity;
  std::optional<double> collision_depth;
};

struct EvalReport {
  std::string label;
  std::vector<HandMetrics> hands;
  MeanMetrics mean;
};

/// Per-dim population standard deviation of joint angles over the passing
/// grasps, averaged over the hand's valid joint dims.
double joint_diversity(const HandSpec& spec, const std::vector<HandPose>& poses);

/// Groups by hand class (roster order). Hands in `excluded_from_mean` still
/// get a column but do not enter the Mean. Means over optional metrics use
/// the included hands that have a value.
EvalReport compute_metrics(const std::vector<HandSpec>& roster, const std::vector<EvaluatedGrasp>& grasps,
                           const std::vector<int>& excluded_from_mean = {2}, const std::string& label = "");

nlohmann::json report_to_json(const EvalReport& report);
std::string report_json(const EvalReport& report);
std::string reports_json(const std::vector<EvalReport>& reports);
/// Fixed-width table: one row per metric, one column per hand plus Mean.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace dgd
