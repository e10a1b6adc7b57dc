// dgd: dataset generation, training, sampling, physics filtering, functional
// selection and evaluation from one config file.

#include "dgd/hand_io.hpp"
#include "dgd/mesh_io.hpp"
#include "dgd/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dgd;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  return json::parse(in);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

PipelineConfig config_of(const Globals& g) {
  if (g.config.empty()) throw UsageError("--config is required");
  return load_pipeline_config(g.config);
}

std::vector<HandSpec> roster_of(const PipelineConfig& cfg) {
  if (cfg.roster.empty()) throw UsageError("config has no roster path");
  return load_roster(cfg.roster);
}

fs::path out_or(const Globals& g, const fs::path& fallback) {
  if (!g.out.empty()) return g.out;
  if (fallback.empty()) throw UsageError("no output location: pass --out");
  return fallback;
}

Dataset dataset_of(const PipelineConfig& cfg) {
  if (cfg.dataset.empty()) throw UsageError("config has no dataset path");
  return load_dataset(cfg.dataset / "dataset.json");
}

/// A mesh file, or the id of a dataset object.
std::pair<std::string, TriangleMesh> object_of(const PipelineConfig& cfg, const std::string& object) {
  if (fs::exists(object)) return {fs::path(object).stem().string(), read_mesh(object)};
  const Dataset d = dataset_of(cfg);
  return {object, d.object(object).mesh};
}

json candidates_json(const std::string& object_id, const std::string& hand, const std::vector<GraspRecord>& recs) {
  json arr = json::array();
  for (const auto& r : recs) arr.push_back(grasp_record_to_json(r));
  return {{"schema", "dgd_candidates_v1"}, {"object_id", object_id}, {"hand", hand}, {"candidates", arr}};
}

std::vector<GraspRecord> read_candidates(const fs::path& path) {
  std::vector<GraspRecord> out;
  for (const auto& c : read_json(path).at("candidates")) out.push_back(grasp_record_from_json(c));
  return out;
}

std::vector<PhysicsVerdict> read_verdicts(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  std::vector<PhysicsVerdict> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    PhysicsVerdict v;
    v.passed = j.at("passed").get<bool>();
    const auto axes = j.at("per_axis").get<std::vector<bool>>();
    for (std::size_t a = 0; a < 6 && a < axes.size(); ++a) v.per_axis[a] = axes[a];
    v.max_penetration = j.at("max_penetration_m").get<double>();
    const auto p = j.at("refined_pose").get<std::vector<double>>();
    if (p.size() != kPoseDim) throw UsageError("verdict pose must have 27 entries");
    v.refined_pose = HandPose::from_vector(Eigen::Map<const PoseVector>(p.data()));
    out.push_back(v);
  }
  return out;
}

std::vector<int> parse_steps(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("bad step list: " + text);
    }
  }
  if (out.empty()) throw UsageError("empty step list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hand grasp diffusion with physics and functional selection"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Pipeline config (JSON)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output file or directory");

  std::string object, hand, affordance, candidates_path, verdicts_path, sweep;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic grasp dataset");
  auto* train_cmd = app.add_subcommand("train", "Train the denoiser on the dataset");
  auto* sample = app.add_subcommand("sample", "Sample grasp candidates for one object and hand");
  sample->add_option("--object", object, "Mesh file or dataset object id")->required();
  sample->add_option("--hand", hand, "Hand name")->required();
  auto* filter = app.add_subcommand("filter", "Physics-filter sampled candidates");
  filter->add_option("--object", object, "Mesh file or dataset object id")->required();
  filter->add_option("--candidates", candidates_path, "Candidates JSON from sample")->required();
  auto* select = app.add_subcommand("select", "Pick the functional grasp among survivors");
  select->add_option("--object", object, "Mesh file or dataset object id")->required();
  select->add_option("--candidates", candidates_path, "Candidates JSON from sample")->required();
  select->add_option("--verdicts", verdicts_path, "Verdict lines from filter")->required();
  select->add_option("--affordance", affordance, "Affordance label")->required();
  auto* eval = app.add_subcommand("eval", "Evaluate on every dataset object and hand");
  eval->add_option("--sweep", sweep, "Comma-separated diffusion step counts; trains one model per value");
  auto* run = app.add_subcommand("run", "Sample, filter and select end to end");
  run->add_option("--object", object, "Mesh file or dataset object id")->required();
  run->add_option("--hand", hand, "Hand name")->required();
  run->add_option("--affordance", affordance, "Affordance label")->required();
  for (auto* sub : {gen, train_cmd, sample, filter, select, eval, run}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const PipelineConfig cfg = config_of(g);
    if (gen->parsed()) {
      const auto roster = roster_of(cfg);
      const Dataset d = generate_synthetic_dataset(cfg, roster, g.seed, std::cerr);
      const fs::path dir = out_or(g, cfg.dataset);
      save_dataset(d, dir);
      std::cout << d.records.size() << " records on " << d.objects.size() << " objects -> " << dir.string() << '\n';
      return kExitOk;
    }
    if (train_cmd->parsed()) {
      const auto roster = roster_of(cfg);
      const Checkpoint ckpt = train_model(cfg, dataset_of(cfg), roster, g.seed, std::cerr);
      const fs::path dir = out_or(g, cfg.checkpoint);
      save_checkpoint(ckpt, dir);
      std::cout << "checkpoint -> " << dir.string() << '\n';
      return kExitOk;
    }
    if (sample->parsed()) {
      const auto roster = roster_of(cfg);
      const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
      const auto [id, mesh] = object_of(cfg, object);
      const HandSpec& spec = hand_by_name(roster, hand);
      const PointCloud cloud = model_object_cloud(mesh, ckpt.params.config, cfg.generation.cloud_points, g.seed);
      const auto recs = sample_candidates(ckpt, spec, cloud, cfg.sampling.num_candidates, g.seed, id);
      const std::string text = candidates_json(id, spec.name, recs).dump(1) + "\n";
      if (g.out.empty()) {
        std::cout << text;
      } else {
        write_file(g.out, text);
      }
      return kExitOk;
    }
    if (filter->parsed()) {
      const auto roster = roster_of(cfg);
      const json cj = read_json(candidates_path);
      const HandSpec& spec = hand_by_name(roster, cj.at("hand").get<std::string>());
      const auto recs = read_candidates(candidates_path);
      const auto verdicts = filter_candidates(object_of(cfg, object).second, spec, recs, cfg.physics);
      std::string lines;
      int survivors = 0;
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        lines += verdict_json_line(static_cast<int>(i), verdicts[i]) + "\n";
        survivors += verdicts[i].passed;
      }
      if (g.out.empty()) {
        std::cout << lines;
      } else {
        write_file(g.out, lines);
      }
      std::cerr << survivors << " of " << verdicts.size() << " passed\n";
      return survivors > 0 ? kExitOk : kExitNoSurvivors;
    }
    if (select->parsed()) {
      const auto roster = roster_of(cfg);
      const json cj = read_json(candidates_path);
      const HandSpec& spec = hand_by_name(roster, cj.at("hand").get<std::string>());
      const auto recs = read_candidates(candidates_path);
      const auto verdicts = read_verdicts(verdicts_path);
      if (verdicts.size() != recs.size()) throw UsageError("candidate and verdict counts differ");
      const auto [id, mesh] = object_of(cfg, object);
      const LabelEmbeddingSet labels =
          cfg.labels.empty() ? synthetic_labels(cfg.functional) : load_label_embeddings(cfg.labels);
      Index label = -1;
      try {
        label = labels.index_of(affordance);
      } catch (const std::out_of_range&) {
        throw UsageError("no embedding for affordance label: " + affordance);
      }
      const PointCloud dense = sample_surface_points(mesh, cfg.generation.cloud_points, g.seed);
      const auto field = toy_point_features(dense, cfg.functional.feature_dim, cfg.functional.feature_seed);
      const auto seg = affordance_softmax(correlation_matrix(field, labels), labels.temperature);
      const PointCloud region = extract_affordance_region(seg, dense, label);
      if (region.empty()) {
        std::cerr << AffordanceNotFound().what() << '\n';
        return kExitAffordanceAbsent;
      }
      std::vector<PointCloud> contact(recs.size());
      int survivors = 0;
      for (std::size_t i = 0; i < recs.size(); ++i) {
        if (!verdicts[i].passed) continue;
        ++survivors;
        const PointCloud hc = hand_cloud_for(spec, verdicts[i].refined_pose, recs[i].rotation,
                                             cfg.physics.hand_samples, cfg.physics.sample_seed);
        contact[i] = extract_contact_region(hc, dense, cfg.functional.contact_threshold);
      }
      if (survivors == 0) {
        std::cerr << "no physics survivors\n";
        return kExitNoSurvivors;
      }
      Selection sel;
      try {
        sel = select_functional_grasp(contact, region);
      } catch (const std::runtime_error& e) {
        std::cerr << e.what() << '\n';
        return kExitNoSurvivors;
      }
      GraspRecord chosen = recs[static_cast<std::size_t>(sel.index)];
      chosen.pose = verdicts[static_cast<std::size_t>(sel.index)].refined_pose;
      const json out = {{"candidate_id", sel.index}, {"chamfer_m2", sel.score}, {"record", grasp_record_to_json(chosen)}};
      if (g.out.empty()) {
        std::cout << out.dump(2) << '\n';
      } else {
        write_file(g.out, out.dump(2) + "\n");
      }
      return kExitOk;
    }
    if (eval->parsed()) {
      const auto roster = roster_of(cfg);
      const Dataset d = dataset_of(cfg);
      std::vector<EvalReport> reports;
      if (sweep.empty()) {
        const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
        reports.push_back(evaluate_model(cfg, ckpt, d, roster, g.seed,
                                         "T=" + std::to_string(ckpt.schedule.steps), std::cerr));
      } else {
        for (int steps : parse_steps(sweep)) {
          PipelineConfig c = cfg;
          c.diffusion_steps = steps;
          c.validate();
          std::cerr << "training T=" << steps << '\n';
          const Checkpoint ckpt = train_model(c, d, roster, g.seed, std::cerr);
          reports.push_back(evaluate_model(c, ckpt, d, roster, g.seed, "T=" + std::to_string(steps), std::cerr));
        }
      }
      std::cout << format_table(reports);
      const std::string text = reports.size() == 1 ? report_json(reports.front()) : reports_json(reports);
      if (!g.out.empty()) write_file(g.out, text);
      return kExitOk;
    }
    if (run->parsed()) {
      const auto roster = roster_of(cfg);
      const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
      const auto [id, mesh] = object_of(cfg, object);
      const RunResult res =
          run_pipeline(cfg, ckpt, roster, mesh, id, hand, affordance, g.seed, out_or(g, "run_out"), std::cerr);
      std::cout << format_table({res.report});
      return res.exit_code;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
