#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

#include "ctxmatch/dataio.hpp"

namespace ctxmatch::synth {

struct Range {
  std::size_t min;
  std::size_t max;
};

// Scenes of co-walking groups. Each identity has a unit prototype; the first
// two members of up to `confusable_pairs` groups are look-alikes separated by
// `confusable_angle` radians. A group shows up in several images; each member
// is present in a given appearance with probability `cooccurrence`.
// Detections carry prototype + N(0, noise_sigma^2) per component; images are
// padded with low-confidence unlabeled distractors up to a detection count
// drawn from `detections_per_image`.
struct SynthParams {
  std::size_t n_identities = 200;
  std::size_t n_images = 500;
  Range group_size{2, 3};
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  double noise_sigma = 0.03;
  std::size_t confusable_pairs = 0;
  double confusable_angle = 0.25;
  double cooccurrence = 1.0;
  Range detections_per_image{3, 8};
  std::uint64_t seed = 0;

  // Throws std::invalid_argument.
  void validate() const;
};

// Canvas the boxes are laid out on.
inline constexpr double kCanvasWidth = 1920.0;
inline constexpr double kCanvasHeight = 1080.0;
std::size_t canvas_slots();

// Deterministic for fixed params. Throws std::invalid_argument for invalid
// params and std::runtime_error when an image cannot hold its detections.
Dataset generate(const SynthParams& params);

// The look-alike scene: query image with persons a (queried) and b, one
// gallery image with c (same identity as a) and d (same as b), where
// sim(a,c)=0.5, sim(a,d)=0.6, sim(b,c)=0.1, sim(b,d)=0.9.
Dataset lookalike_fixture();

// Parameters of the look-alike regime used by the benchmark: persistent
// pairs of near-identical co-walkers.
SynthParams confusable_regime(std::uint64_t seed);

}  // namespace ctxmatch::synth
