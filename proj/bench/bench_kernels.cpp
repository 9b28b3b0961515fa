// Parallel kernels against their serial references on a phantom case.
// Usage: bench_kernels [dims=64] [repeats=3]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include "defreg/eval.hpp"
#include "defreg/featmatch.hpp"
#include "defreg/fem.hpp"
#include "defreg/mesh.hpp"
#include "defreg/parallel.hpp"
#include "defreg/phantom.hpp"
#include "defreg/reference.hpp"

using namespace defreg;

namespace {

double best_of(int repeats, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double par, double ser) {
  std::printf("%-16s %10.4f %10.4f %8.2fx\n", name, par, ser, ser / par);
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 64;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  std::printf("dims %d^3, threads %d, best of %d\n", n, thread_count(), repeats);
  std::printf("%-16s %10s %10s %9s\n", "kernel", "parallel", "serial", "speedup");

  const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {n, n, n}, 1);
  const Geometry& g = p.image.geometry();
  const TetMesh mesh = i2m_bcc(p.labels, 5.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> U(3 * mesh.vertex_count());
  for (double& u : U) u = nd(rng);

  DenseDeformation field;
  row("mesh_to_dense", best_of(repeats, [&] { field = mesh_to_dense(mesh, U, g); }),
      best_of(1, [&] { reference::mesh_to_dense(mesh, U, g); }));
  row("warp_volume", best_of(repeats, [&] { warp_volume(p.image, field); }),
      best_of(repeats, [&] { reference::warp_volume(p.image, field); }));

  const ScalarVolume intra = warp_volume(p.image, field);
  MatchConfig mc;
  const auto sel = select_features(p.image, mc);
  row("block_match", best_of(repeats, [&] { block_match(p.image, intra, sel.features, mc); }),
      best_of(repeats, [&] { reference::block_match(p.image, intra, sel.features, mc); }));

  const CsrMatrix K = assemble_stiffness(mesh, MaterialTable::defaults());
  row("spmv x100", best_of(repeats, [&] { for (int i = 0; i < 100; ++i) K.multiply(U); }),
      best_of(repeats, [&] { for (int i = 0; i < 100; ++i) reference::spmv(K, U); }));

  const auto edges = canny_edges(p.image);
  std::vector<Vec3> shifted;
  for (const auto& e : edges) shifted.push_back(e + Vec3(0.5, 0.25, 0.0));
  row("hausdorff", best_of(repeats, [&] { hausdorff(edges, shifted); }),
      best_of(1, [&] { reference::hausdorff(edges, shifted); }));

  std::printf("assemble_stiffness %.4f s, canny %.4f s (%zu edges)\n",
              best_of(repeats, [&] { assemble_stiffness(mesh, MaterialTable::defaults()); }),
              best_of(repeats, [&] { canny_edges(p.image); }), edges.size());
  return 0;
}
