#include "ctxmatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ctxmatch::synth {

namespace {

constexpr double kBoxWidth = 96.0;
constexpr double kBoxHeight = 240.0;
constexpr double kCellWidth = 120.0;
constexpr double kCellHeight = 270.0;
constexpr double kDetectionJitter = 4.0;

std::string padded(const char* prefix, std::size_t n, int width) {
  std::ostringstream os;
  os << prefix << std::setw(width) << std::setfill('0') << n;
  return os.str();
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (double& x : v) {
      x = normal(rng);
      sq += x * x;
    }
  } while (sq == 0.0);
  const double n = std::sqrt(sq);
  for (double& x : v) x /= n;
  return v;
}

// Unit vector at `angle` radians from the unit vector `base`.
std::vector<double> rotated(std::mt19937_64& rng, const std::vector<double>& base, double angle) {
  std::vector<double> u = random_unit(rng, base.size());
  double proj = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) proj += u[i] * base[i];
  double sq = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] -= proj * base[i];
    sq += u[i] * u[i];
  }
  const double n = std::sqrt(sq);
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = std::cos(angle) * base[i] + std::sin(angle) * u[i] / n;
  return out;
}

}  // namespace

void SynthParams::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("SynthParams: " + m); };
  if (group_size.min < 1 || group_size.min > group_size.max) fail("group_size range must satisfy 1 <= min <= max");
  if (detections_per_image.min > detections_per_image.max) fail("detections_per_image range is empty");
  if (embedding_dim < 2) fail("embedding_dim must be >= 2");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be finite and >= 0");
  if (!(cooccurrence >= 0.0 && cooccurrence <= 1.0)) fail("cooccurrence must lie in [0, 1]");
  if (!std::isfinite(confusable_angle) || confusable_angle < 0.0) fail("confusable_angle must be finite and >= 0");
}

std::size_t canvas_slots() {
  return static_cast<std::size_t>(kCanvasWidth / kCellWidth) * static_cast<std::size_t>(kCanvasHeight / kCellHeight);
}

Dataset generate(const SynthParams& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<std::vector<double>> prototypes;
  for (std::size_t i = 0; i < params.n_identities; ++i) prototypes.push_back(random_unit(rng, params.embedding_dim));

  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t next = 0; next < params.n_identities;) {
    std::uniform_int_distribution<std::size_t> size(params.group_size.min, params.group_size.max);
    const std::size_t end = std::min(params.n_identities, next + size(rng));
    std::vector<std::size_t> g;
    for (; next < end; ++next) g.push_back(next);
    groups.push_back(std::move(g));
  }

  std::size_t pairs = 0;
  for (const auto& g : groups) {
    if (pairs == params.confusable_pairs) break;
    if (g.size() < 2) continue;
    prototypes[g[1]] = rotated(rng, prototypes[g[0]], params.confusable_angle);
    ++pairs;
  }

  const std::size_t slots = canvas_slots();
  const std::size_t cols = static_cast<std::size_t>(kCanvasWidth / kCellWidth);
  Dataset ds;
  ds.embedding_dim = params.embedding_dim;
  ds.metadata["name"] = "synth";
  ds.metadata["seed"] = std::to_string(params.seed);
  ds.metadata["confusable_pairs"] = std::to_string(pairs);

  std::vector<std::vector<std::size_t>> appearances(params.n_identities);  // image indices
  std::vector<std::vector<std::size_t>> person_slot(params.n_identities);  // detection index per appearance
  const int id_width = static_cast<int>(std::to_string(std::max<std::size_t>(params.n_identities, 1)).size());
  const int img_width = static_cast<int>(std::to_string(std::max<std::size_t>(params.n_images, 1)).size());

  for (std::size_t im = 0; im < params.n_images && !groups.empty(); ++im) {
    std::uniform_int_distribution<std::size_t> pick_group(0, groups.size() - 1);
    const auto& group = im < groups.size() ? groups[im] : groups[pick_group(rng)];
    std::vector<std::size_t> present;
    for (std::size_t id : group) {
      if (unit(rng) < params.cooccurrence) present.push_back(id);
    }
    if (present.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
      present.push_back(group[pick(rng)]);
    }
    std::uniform_int_distribution<std::size_t> count(params.detections_per_image.min, params.detections_per_image.max);
    const std::size_t total = std::max(count(rng), present.size());
    if (total > slots) {
      throw std::runtime_error("synth: image needs " + std::to_string(total) + " detections but the canvas holds " +
                               std::to_string(slots));
    }

    std::vector<std::size_t> slot_ids(slots);
    for (std::size_t s = 0; s < slots; ++s) slot_ids[s] = s;
    std::shuffle(slot_ids.begin(), slot_ids.end(), rng);

    // Person entries first, then distractors; shuffled so that detection
    // order carries no information.
    std::vector<std::optional<std::size_t>> who(present.begin(), present.end());
    who.resize(total);
    std::shuffle(who.begin(), who.end(), rng);

    GalleryImage img{padded("img", im, img_width), {}};
    std::vector<GtBox> truth;
    for (std::size_t d = 0; d < total; ++d) {
      const std::size_t slot = slot_ids[d];
      const double sx = static_cast<double>(slot % cols) * kCellWidth;
      const double sy = static_cast<double>(slot / cols) * kCellHeight;
      const double w = kBoxWidth * (0.9 + 0.1 * unit(rng));
      const double h = kBoxHeight * (0.9 + 0.1 * unit(rng));
      const double x1 = sx + (kCellWidth - w) / 2.0;
      const double y1 = sy + (kCellHeight - h) / 2.0;
      const BBox gt_box(x1, y1, x1 + w, y1 + h);
      auto jitter = [&] { return kDetectionJitter * (2.0 * unit(rng) - 1.0); };

      if (who[d]) {
        const std::size_t id = *who[d];
        std::vector<double> e = prototypes[id];
        for (double& x : e) x += params.noise_sigma * noise(rng);
        const std::string label = padded("id", id, id_width);
        const BBox det_box(gt_box.x1() + jitter(), gt_box.y1() + jitter(), gt_box.x2() + jitter(), gt_box.y2() + jitter());
        img.detections.push_back({det_box, 1.0 - 0.1 * unit(rng), 0.4 + 0.6 * unit(rng), Embedding(std::move(e)), label});
        truth.push_back({gt_box, label});
        appearances[id].push_back(im);
        person_slot[id].push_back(d);
      } else {
        img.detections.push_back({gt_box, 0.05 + 0.35 * unit(rng), 0.3 + 0.7 * unit(rng),
                                  Embedding(random_unit(rng, params.embedding_dim)), std::nullopt});
      }
    }
    ds.ground_truth.per_image[img.image_id] = std::move(truth);
    ds.images.push_back(std::move(img));
  }

  // One query per identity seen at least twice: its first appearance.
  for (std::size_t id = 0; id < params.n_identities; ++id) {
    if (appearances[id].size() < 2) continue;
    ds.queries.push_back({ds.images[appearances[id][0]].image_id, person_slot[id][0]});
  }
  ds.ground_truth.per_query = query_truth(ds.images, ds.ground_truth.per_image, ds.queries);
  validate(ds);
  return ds;
}

Dataset lookalike_fixture() {
  // c and d span two axes; a and b are placed so their cosines with c and d
  // take the prescribed values, the remainder going to private axes.
  const std::vector<double> a{0.5, 0.6, std::sqrt(1.0 - 0.25 - 0.36), 0.0};
  const std::vector<double> b{0.1, 0.9, 0.0, std::sqrt(1.0 - 0.01 - 0.81)};
  const std::vector<double> c{1.0, 0.0, 0.0, 0.0};
  const std::vector<double> d{0.0, 1.0, 0.0, 0.0};
  const BBox left(100.0, 100.0, 200.0, 400.0);
  const BBox right(300.0, 100.0, 400.0, 400.0);

  Dataset ds;
  ds.embedding_dim = 4;
  ds.metadata["name"] = "lookalike";
  ds.images.push_back({"query", {{left, 0.99, 0.9, Embedding(a), "A"}, {right, 0.98, 0.9, Embedding(b), "B"}}});
  ds.images.push_back({"gallery", {{left, 0.97, 0.9, Embedding(c), "A"}, {right, 0.96, 0.9, Embedding(d), "B"}}});
  for (const auto& img : ds.images) {
    auto& truth = ds.ground_truth.per_image[img.image_id];
    for (const auto& det : img.detections) truth.push_back({det.box, *det.identity});
  }
  ds.queries.push_back({"query", 0});
  ds.ground_truth.per_query = query_truth(ds.images, ds.ground_truth.per_image, ds.queries);
  validate(ds);
  return ds;
}

SynthParams confusable_regime(std::uint64_t seed) {
  SynthParams p;
  p.n_identities = 240;
  p.n_images = 600;
  p.group_size = {2, 2};
  p.embedding_dim = 64;
  p.noise_sigma = 0.06;
  p.confusable_pairs = p.n_identities;
  p.confusable_angle = 0.25;
  p.cooccurrence = 1.0;
  p.detections_per_image = {3, 8};
  p.seed = seed;
  return p;
}

}  // namespace ctxmatch::synth
