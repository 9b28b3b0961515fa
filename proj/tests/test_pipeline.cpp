#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "defreg/mesh.hpp"
#include "defreg/phantom.hpp"
#include "defreg/pipeline.hpp"
#include "defreg/volume_io.hpp"

using namespace defreg;

namespace {

RegistrationInputs inputs(const ScalarVolume& pre, const ScalarVolume& intra, const LabelVolume& labels) {
  RegistrationInputs in;
  in.pre = &pre;
  in.intra = &intra;
  in.labels = &labels;
  return in;
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config("# comment\nmode = anrr\nblock = 5x5x3\nwindow = 9x9x5  # trailing\nsigma = 1.5\n\n");
  CHECK(c.mode == Mode::anrr);
  CHECK(c.mode_given);
  CHECK(c.match.block == Index3{5, 5, 3});
  CHECK(c.match.window == Index3{9, 9, 5});
  CHECK(c.nem.sigma == 1.5);

  CHECK(config_error_line("mode = pbnrr\nbogus = 3\n") == 2);
  CHECK(config_error_line("sigma = 1\n\nsigma = 2\n") == 3);
  CHECK(config_error_line("block = 3x3\n") == 1);
  CHECK(config_error_line("mesh_size = fast\n") == 1);
  CHECK(config_error_line("mode = pbnrr\n") == -1);
  CHECK_THROWS_AS(parse_config("rejection_fraction = 1.5\n"), ConfigError);

  const RegistrationConfig d;
  CHECK(!d.mode_given);
  CHECK(parse_config(d.canonical()).canonical() == d.canonical());
  CHECK(parse_config(d.canonical()).hash() == d.hash());
  CHECK(c.hash() != d.hash());
  // Table defaults.
  CHECK(d.match.selection_fraction == 0.05);
  CHECK(d.match.block == Index3{3, 3, 3});
  CHECK(d.match.window == Index3{7, 7, 3});
  CHECK(d.solve.rejection_fraction == 0.25);
  CHECK(d.solve.rejection_steps == 10);
  CHECK(d.materials.at(kParenchyma).young_modulus == 2100.0);
  CHECK(d.materials.at(kTumor).young_modulus == 21000.0);
  CHECK(d.materials.at(kParenchyma).poisson == 0.45);
}

TEST_CASE("identical images give a near-zero field") {
  const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {40, 40, 40}, 11);
  RegistrationConfig cfg;
  const auto r = run_pbnrr(inputs(p.image, p.image, p.labels), cfg);
  CHECK(max_norm(r.field) < 0.25);
  REQUIRE(r.iterations.size() == 1);
  // Each rejection round drops the worst matches even when all are exact.
  CHECK(r.iterations[0].rejected == 10);
}

TEST_CASE("defaults run end to end on a 64 cube and ANRR with one iteration equals PBNRR") {
  const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {64, 64, 64}, 12);
  const TetMesh truth_mesh = i2m_bcc(p.labels, 5.0);
  const auto t = generate_synthetic_truth(truth_mesh, MaterialTable::defaults(), 2.0, 12, p.image.geometry());
  const ScalarVolume intra = warp_volume(p.image, t.field);
  const auto in = inputs(p.image, intra, p.labels);

  RegistrationConfig cfg;
  const auto pb = run_pbnrr(in, cfg);
  CHECK(std::isfinite(pb.final_hd()));
  CHECK(pb.iterations.size() == 1);
  CHECK(pb.iterations[0].tets > 0);

  RegistrationConfig one = cfg;
  one.mode = Mode::anrr;
  one.max_iterations = 1;
  const auto an = run_anrr(in, one);
  CHECK(an.metrics_json().dump() == pb.metrics_json().dump());
  CHECK(std::equal(an.field.voxels().begin(), an.field.voxels().end(), pb.field.voxels().begin()));

  // Same inputs, same bytes.
  const auto again = run_pbnrr(in, cfg);
  CHECK(again.metrics_json().dump() == pb.metrics_json().dump());
}

TEST_CASE("mode dispatch and stage errors") {
  const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {32, 32, 32}, 13);
  RegistrationConfig cfg;
  cfg.mode = Mode::pbnrr;
  CHECK_THROWS_AS(run_nemnrr(inputs(p.image, p.image, p.labels), cfg), ConfigError);

  const ScalarVolume flat(p.image.geometry(), 100.0f);
  try {
    run_pbnrr(inputs(flat, flat, p.labels), cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK((e.stage() == "features" || e.stage() == "evaluate"));
  }
}

TEST_CASE("nemnrr on a resected case removes elements") {
  const ShiftCase s = make_resected_shift({48, 48, 48}, 3, 3.0);
  RegistrationConfig cfg;
  cfg.mode = Mode::nemnrr;
  cfg.mesh_size = 4.0;
  const auto r = run_nemnrr(inputs(s.pre, s.intra, s.labels), cfg);
  REQUIRE(r.iterations.size() == 1);
  CHECK(r.iterations[0].removed_tets > 0);
  CHECK(r.trace[0].contains("nem"));
}

TEST_CASE("synthetic truth and results on disk") {
  const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {40, 40, 40}, 14);
  const TetMesh m = i2m_bcc(p.labels, 5.0);
  const auto zero = generate_synthetic_truth(m, MaterialTable::defaults(), 0.0, 1, p.image.geometry());
  CHECK(max_norm(zero.field) == 0.0);
  const auto t = generate_synthetic_truth(m, MaterialTable::defaults(), 4.0, 1, p.image.geometry());
  CHECK(std::abs(max_norm(t.field) - 4.0) <= 1e-6);
  const auto t2 = generate_synthetic_truth(m, MaterialTable::defaults(), 4.0, 1, p.image.geometry());
  CHECK(t.U == t2.U);
  CHECK(generate_synthetic_truth(m, MaterialTable::defaults(), 4.0, 2, p.image.geometry()).U != t.U);

  const ScalarVolume intra = warp_volume(p.image, t.field);
  RegistrationConfig cfg;
  auto in = inputs(p.image, intra, p.labels);
  in.landmarks.push_back({"c", Vec3(20, 20, 20), Vec3(20, 20, 20)});
  const auto r = run_pbnrr(in, cfg);
  REQUIRE(r.iterations[0].landmarks);
  const auto dir = std::filesystem::temp_directory_path() / "defreg_pipeline_test";
  std::filesystem::remove_all(dir);
  write_results(dir, r);
  for (const char* f : {"result.json", "trace.json", "warped.dvol", "field.dvec", "mesh_iter_1.tmesh"})
    CHECK(std::filesystem::exists(dir / f));
  const auto j = nlohmann::json::parse(std::ifstream(dir / "result.json"));
  CHECK(j["provenance"]["hd_note"] == "relative comparison only");
  CHECK(j["metrics"]["final"].contains("Mean error"));
  const ScalarVolume w = read_scalar_volume(dir / "warped.dvol");
  CHECK(std::equal(w.voxels().begin(), w.voxels().end(), r.warped.voxels().begin()));
  std::filesystem::remove_all(dir);
}
