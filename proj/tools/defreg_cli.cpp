// defreg: phantom | mesh | register | eval | truth
//
// Exit codes: 0 ok, 2 usage, 3 config, 4 stage failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "defreg/config.hpp"
#include "defreg/eval.hpp"
#include "defreg/mesh.hpp"
#include "defreg/parallel.hpp"
#include "defreg/phantom.hpp"
#include "defreg/pipeline.hpp"
#include "defreg/volume_io.hpp"

namespace fs = std::filesystem;
using namespace defreg;

namespace {

constexpr int kUsage = 2;
constexpr int kConfig = 3;
constexpr int kStage = 4;

Index3 parse_dims(const std::string& s) {
  std::string t = s;
  for (char& c : t)
    if (c == 'x' || c == 'X' || c == ',') c = ' ';
  std::istringstream in(t);
  std::vector<int> v;
  int x;
  while (in >> x) v.push_back(x);
  if (!in.eof() || (v.size() != 1 && v.size() != 3)) throw std::invalid_argument("--dims expects N or NxNxN");
  return v.size() == 1 ? Index3{v[0], v[0], v[0]} : Index3{v[0], v[1], v[2]};
}

std::string dims_string(const Index3& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

TetMesh load_mesh(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mesh " + path.string());
  return read_mesh(in);
}

nlohmann::json quality_json(const MeshQualityReport& q) {
  nlohmann::json dice = nlohmann::json::object();
  for (const auto& [label, d] : q.dice) dice[std::to_string(label)] = d;
  return {{"# tets", q.tet_count},
          {"# vertices", q.vertex_count},
          {"alpha_min_deg", q.min_dihedral_deg},
          {"alpha_max_deg", q.max_dihedral_deg},
          {"min_volume", q.min_volume},
          {"degenerate", q.degenerate_count},
          {"inverted", q.inverted_count},
          {"dice", dice},
          {"dice_overall", q.dice_overall}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-based non-rigid registration of 3-D volumes"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: all cores; DEFREG_THREADS overrides)");

  // phantom
  auto* ph = app.add_subcommand("phantom", "generate a synthetic phantom");
  std::string kind, dims_arg = "64", out_dir;
  std::uint64_t seed = 0;
  double noise = 0.0;
  ph->add_option("--kind", kind, "sphere-shell | two-tissue-tumor | resected-tumor")->required();
  ph->add_option("--dims", dims_arg, "N or NxNxN (>= 16)");
  ph->add_option("--seed", seed);
  ph->add_option("--noise", noise, "Gaussian noise std as a fraction of the peak intensity");
  ph->add_option("--out", out_dir)->required();

  // mesh
  auto* me = app.add_subcommand("mesh", "BCC image-to-mesh conversion and quality report");
  std::string labels_path, mesh_out, report_out;
  double delta = 5.0;
  me->add_option("--labels", labels_path)->required()->check(CLI::ExistingFile);
  me->add_option("--delta", delta, "lattice pitch (mm)");
  me->add_option("--out", mesh_out, "TMESH1 output")->required();
  me->add_option("--report", report_out, "quality report JSON");

  // register
  auto* rg = app.add_subcommand("register", "run a registration");
  std::string mode, pre_path, intra_path, config_path, landmarks_path, results_dir = "results";
  rg->add_option("--mode", mode, "pbnrr | nemnrr | anrr")->required();
  rg->add_option("--pre", pre_path)->required()->check(CLI::ExistingFile);
  rg->add_option("--intra", intra_path)->required()->check(CLI::ExistingFile);
  rg->add_option("--labels", labels_path)->required()->check(CLI::ExistingFile);
  rg->add_option("--config", config_path)->check(CLI::ExistingFile);
  rg->add_option("--landmarks", landmarks_path)->check(CLI::ExistingFile);
  rg->add_option("--out", results_dir);

  // eval
  auto* ev = app.add_subcommand("eval", "edge Hausdorff distance and landmark errors");
  std::string warped_path, field_path, json_out, csv_out, case_name = "case", variant = "variant";
  ev->add_option("--warped", warped_path)->required()->check(CLI::ExistingFile);
  ev->add_option("--intra", intra_path)->required()->check(CLI::ExistingFile);
  ev->add_option("--field", field_path, "deformation for landmark errors")->check(CLI::ExistingFile);
  ev->add_option("--landmarks", landmarks_path)->check(CLI::ExistingFile);
  ev->add_option("--mesh", mesh_out, "mesh for the # tets / # vertices columns")->check(CLI::ExistingFile);
  ev->add_option("--config", config_path, "Canny / percentile settings")->check(CLI::ExistingFile);
  ev->add_option("--case", case_name);
  ev->add_option("--variant", variant);
  ev->add_option("--json", json_out);
  ev->add_option("--csv", csv_out);

  // truth
  auto* tr = app.add_subcommand("truth", "synthetic FEM deformation of an image");
  std::string image_path;
  double magnitude = 4.0;
  tr->add_option("--image", image_path)->required()->check(CLI::ExistingFile);
  tr->add_option("--labels", labels_path)->required()->check(CLI::ExistingFile);
  tr->add_option("--magnitude", magnitude, "largest displacement (mm)");
  tr->add_option("--delta", delta, "lattice pitch of the generating mesh (mm)");
  tr->add_option("--seed", seed);
  tr->add_option("--noise", noise);
  tr->add_option("--out", out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }
  set_thread_count(resolve_thread_count(threads));

  try {
    if (*ph) {
      Phantom p;
      try {
        p = make_phantom(parse_phantom_kind(kind), parse_dims(dims_arg), seed);
      } catch (const std::invalid_argument& e) {
        std::cerr << "phantom: " << e.what() << '\n';
        return kUsage;
      }
      if (noise > 0.0) add_noise(p.image, noise, seed + 1);
      fs::create_directories(out_dir);
      write_volume(p.image, fs::path(out_dir) / "image.dvol");
      write_volume(p.labels, fs::path(out_dir) / "labels.dvol");
      std::vector<LandmarkPair> pairs;
      if (p.landmarks)
        for (const auto& l : *p.landmarks) pairs.push_back({l.name, l.position, l.position});
      std::ofstream lm(fs::path(out_dir) / "landmarks.csv");
      write_landmarks(lm, pairs);
      std::cerr << "phantom " << kind << ' ' << dims_string(p.image.dims()) << " written to " << out_dir << '\n';
      return 0;
    }

    if (*me) {
      const LabelVolume labels = read_label_volume(labels_path);
      TetMesh mesh;
      try {
        mesh = i2m_bcc(labels, delta);
      } catch (const std::exception& e) {
        throw StageError("mesh", e.what());
      }
      std::ofstream out(mesh_out);
      write_mesh(out, mesh);
      auto q = dihedral_angles(mesh);
      mesh_fidelity(mesh, labels, q);
      const auto j = quality_json(q);
      if (!report_out.empty()) write_json(report_out, j);
      std::cout << j.dump() << '\n';
      return 0;
    }

    if (*rg) {
      RegistrationConfig cfg = config_path.empty() ? RegistrationConfig{} : load_config(config_path);
      const Mode m = parse_mode(mode);
      if (cfg.mode_given && cfg.mode != m)
        throw ConfigError("config file mode " + to_string(cfg.mode) + " contradicts --mode " + mode);
      cfg.mode = m;
      const ScalarVolume pre = read_scalar_volume(pre_path);
      const ScalarVolume intra = read_scalar_volume(intra_path);
      const LabelVolume labels = read_label_volume(labels_path);
      RegistrationInputs in{&pre, &intra, &labels, {}};
      if (!landmarks_path.empty()) in.landmarks = read_landmarks(landmarks_path);
      const RegistrationResult r = run_registration(in, cfg);
      write_results(results_dir, r);
      const auto& last = r.iterations.back();
      if (last.landmarks)
        std::printf("HD_mm=%.3f mean_err_mm=%.3f\n", r.final_hd(), last.landmarks->mean);
      else
        std::printf("HD_mm=%.3f mean_err_mm=nan\n", r.final_hd());
      if (r.partial) std::cerr << "warning: partial result: " << r.partial_reason << '\n';
      return 0;
    }

    if (*ev) {
      const RegistrationConfig cfg = config_path.empty() ? RegistrationConfig{} : load_config(config_path);
      const ScalarVolume warped = read_scalar_volume(warped_path);
      const ScalarVolume intra = read_scalar_volume(intra_path);
      ReportRow row;
      row.case_name = case_name;
      row.variant = variant;
      try {
        row.hd = edge_hd(warped, intra, cfg.canny, cfg.hd_percentile).hd.H;
        if (!landmarks_path.empty()) {
          const auto pairs = read_landmarks(landmarks_path);
          const DenseDeformation field =
              field_path.empty() ? DenseDeformation(warped.geometry()) : read_deformation(field_path);
          row.landmarks = landmark_errors(pairs, field);
        }
      } catch (const FormatError&) {
        throw;
      } catch (const std::exception& e) {
        throw StageError("evaluate", e.what());
      }
      if (!mesh_out.empty()) {
        const TetMesh mesh = load_mesh(mesh_out);
        row.tets = mesh.tet_count() - mesh.removed_count();
        row.vertices = mesh.vertex_count();
      }
      if (!json_out.empty()) write_json(json_out, report_json(row));
      if (!csv_out.empty()) {
        std::ofstream out(csv_out);
        out << kReportCsvHeader << '\n' << report_csv_row(row) << '\n';
      }
      std::cout << kReportCsvHeader << '\n' << report_csv_row(row) << '\n';
      return 0;
    }

    if (*tr) {
      const ScalarVolume image = read_scalar_volume(image_path);
      const LabelVolume labels = read_label_volume(labels_path);
      TetMesh mesh;
      SyntheticTruth t;
      try {
        mesh = i2m_bcc(labels, delta);
        t = generate_synthetic_truth(mesh, MaterialTable::defaults(), magnitude, seed, image.geometry());
      } catch (const std::exception& e) {
        throw StageError("truth", e.what());
      }
      ScalarVolume moved = warp_volume(image, t.field);
      if (noise > 0.0) add_noise(moved, noise, seed + 1);
      fs::create_directories(out_dir);
      write_volume(moved, fs::path(out_dir) / "intra.dvol");
      write_deformation(t.field, fs::path(out_dir) / "field.dvec");
      std::ofstream mo(fs::path(out_dir) / "mesh.tmesh");
      write_mesh(mo, mesh);
      std::cerr << "truth: max " << max_norm(t.field) << " mm, " << t.pinned.size() << " pinned vertices\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const StageError& e) {
    std::cerr << "stage " << e.stage() << " failed: " << e.what() << '\n';
    return kStage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStage;
  }
  return kUsage;
}
