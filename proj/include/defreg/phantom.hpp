#pragma once

#include <optional>
#include <string>
#include <vector>

#include "defreg/volume.hpp"

namespace defreg {

enum class PhantomKind { sphere_shell, two_tissue_tumor, resected_tumor };

PhantomKind parse_phantom_kind(const std::string& name);
std::string to_string(PhantomKind kind);

struct Landmark {
  std::string name;
  Vec3 position;  // mm
};

struct Phantom {
  ScalarVolume image;
  LabelVolume labels;
  std::optional<std::vector<Landmark>> landmarks;
};

// Labels used by the tissue phantoms.
inline constexpr std::uint16_t kParenchyma = 1;
inline constexpr std::uint16_t kTumor = 2;

// Synthetic test volumes at 1 mm isotropic spacing. Tissue carries a smooth
// seeded texture so that block matching has structure to lock onto. The
// resected kind is the tumor kind with the tumor and an access corridor
// to the volume edge set to background, using the same seed-driven layout.
// Throws std::invalid_argument when any dimension is below 16.
Phantom make_phantom(PhantomKind kind, const Index3& dims, std::uint64_t seed);

// Mask (1 = carved) of the resection cavity the resected kind removes.
LabelVolume resection_cavity(const Index3& dims, std::uint64_t seed);

// Pre/intra pair for resection experiments: pre is the tumor kind, intra is
// the resected kind of the same seed warped by an in-plane collapse toward
// the cavity, d(x) = m e^(1/2) (c - x)_xy / s exp(-|x - c|^2 / 2s^2), whose
// largest vector has norm m at distance s from c. The collapse center and
// width carry seeded jitter. Landmark pairs follow the true motion.
struct ShiftCase {
  ScalarVolume pre;
  ScalarVolume intra;
  LabelVolume labels;       // pre-operative labels
  DenseDeformation truth;   // backward field: intra(x) = pre(x - d(x)) away from the cavity
  std::vector<Landmark> pre_landmarks;
  std::vector<Landmark> intra_landmarks;
};

ShiftCase make_resected_shift(const Index3& dims, std::uint64_t seed, double magnitude);

// Adds zero-mean Gaussian noise with std = fraction * max |intensity|.
void add_noise(ScalarVolume& v, double fraction, std::uint64_t seed);

}  // namespace defreg
