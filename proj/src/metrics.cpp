#include "dgd/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace dgd {

double joint_diversity(const HandSpec& spec, const std::vector<HandPose>& poses) {
  if (poses.empty()) throw std::invalid_argument("diversity of an empty set");
  if (spec.dof() == 0) return 0.0;
  const double n = static_cast<double>(poses.size());
  double total = 0.0;
  for (int j = 0; j < spec.dof(); ++j) {
    double mean = 0.0;
    for (const auto& p : poses) mean += p.joints(j);
    mean /= n;
    double var = 0.0;
    for (const auto& p : poses) var += (p.joints(j) - mean) * (p.joints(j) - mean);
    total += std::sqrt(var / n);
  }
  return total / spec.dof();
}

EvalReport compute_metrics(const std::vector<HandSpec>& roster, const std::vector<EvaluatedGrasp>& grasps,
                           const std::vector<int>& excluded_from_mean, const std::string& label) {
  if (grasps.empty()) throw std::invalid_argument("compute_metrics needs at least one candidate");
  std::map<int, std::vector<const EvaluatedGrasp*>> by_class;
  for (const auto& g : grasps) by_class[g.hand_class].push_back(&g);

  EvalReport report;
  report.label = label;
  for (const auto& [cls, group] : by_class) {
    auto it = std::find_if(roster.begin(), roster.end(), [cls = cls](const HandSpec& h) { return h.class_id == cls; });
    if (it == roster.end()) throw std::invalid_argument("grasp for a hand class missing from the roster");
    HandMetrics m;
    m.hand = it->name;
    m.hand_class = cls;
    m.total = static_cast<int>(group.size());
    std::vector<HandPose> passing;
    std::vector<double> depths;
    for (const EvaluatedGrasp* g : group) {
      if (!g->verdict.passed) continue;
      passing.push_back(g->verdict.refined_pose);
      depths.push_back(g->verdict.max_penetration * 1000.0);
    }
    m.passed = static_cast<int>(passing.size());
    m.success_rate = 100.0 * m.passed / m.total;
    if (!passing.empty()) {
      m.diversity = joint_diversity(*it, passing);
      double sum = 0.0;
      for (double d : depths) sum += d;
      m.collision_depth = sum / static_cast<double>(depths.size());
      m.max_collision_depth = *std::max_element(depths.begin(), depths.end());
    }
    m.in_mean = std::find(excluded_from_mean.begin(), excluded_from_mean.end(), cls) == excluded_from_mean.end();
    report.hands.push_back(m);
  }

  double sr = 0.0, div = 0.0, col = 0.0;
  int n_div = 0, n_col = 0;
  for (const auto& m : report.hands) {
    if (!m.in_mean) continue;
    ++report.mean.hands;
    sr += m.success_rate;
    if (m.diversity) {
      div += *m.diversity;
      ++n_div;
    }
    if (m.collision_depth) {
      col += *m.collision_depth;
      ++n_col;
    }
  }
  if (report.mean.hands > 0) report.mean.success_rate = sr / report.mean.hands;
  if (n_div > 0) report.mean.diversity = div / n_div;
  if (n_col > 0) report.mean.collision_depth = col / n_col;
  return report;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json hands = nlohmann::json::array();
  for (const auto& m : r.hands) {
    hands.push_back({{"hand", m.hand},
                     {"hand_class", m.hand_class},
                     {"total", m.total},
                     {"passed", m.passed},
                     {"success_rate_pct", m.success_rate},
                     {"diversity_rad", opt(m.diversity)},
                     {"collision_depth_mm", opt(m.collision_depth)},
                     {"max_collision_depth_mm", opt(m.max_collision_depth)},
                     {"in_mean", m.in_mean}});
  }
  return {{"label", r.label},
          {"hands", hands},
          {"mean",
           {{"hands", r.mean.hands},
            {"success_rate_pct", r.mean.success_rate},
            {"diversity_rad", opt(r.mean.diversity)},
            {"collision_depth_mm", opt(r.mean.collision_depth)}}}};
}

namespace {

std::string cell(const std::optional<double>& v, const char* fmt) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

}  // namespace

std::string report_json(const EvalReport& report) {
  nlohmann::json j = report_to_json(report);
  j["schema"] = kReportSchema;
  return j.dump(2) + "\n";
}

std::string reports_json(const std::vector<EvalReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return nlohmann::json{{"schema", kReportSchema}, {"reports", arr}}.dump(2) + "\n";
}

std::string format_table(const std::vector<EvalReport>& reports) {
  std::string out;
  char buf[128];
  for (const auto& r : reports) {
    if (!r.label.empty()) out += "[" + r.label + "]\n";
    std::snprintf(buf, sizeof buf, "%-22s", "metric");
    out += buf;
    for (const auto& m : r.hands) {
      std::snprintf(buf, sizeof buf, " %12s", (m.hand + (m.in_mean ? "" : "*")).c_str());
      out += buf;
    }
    out += "         Mean\n";
    auto row = [&](const char* name, auto get_hand, const std::optional<double>& mean, const char* fmt) {
      std::snprintf(buf, sizeof buf, "%-22s", name);
      out += buf;
      for (const auto& m : r.hands) {
        std::snprintf(buf, sizeof buf, " %12s", cell(get_hand(m), fmt).c_str());
        out += buf;
      }
      std::snprintf(buf, sizeof buf, " %12s\n", cell(mean, fmt).c_str());
      out += buf;
    };
    row("success_rate (%)", [](const HandMetrics& m) { return std::optional<double>(m.success_rate); },
        r.mean.hands > 0 ? std::optional<double>(r.mean.success_rate) : std::nullopt, "%.2f");
    row("diversity (rad)", [](const HandMetrics& m) { return m.diversity; }, r.mean.diversity, "%.3f");
    row("collision (mm)", [](const HandMetrics& m) { return m.collision_depth; }, r.mean.collision_depth, "%.2f");
    row("max collision (mm)", [](const HandMetrics& m) { return m.max_collision_depth; }, std::nullopt, "%.2f");
  }
  return out;
}

}  // namespace dgd
