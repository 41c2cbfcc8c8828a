#pragma once

#include <atomic>
#include <cstdint>
#include <utility>

#include "glassbuf/image.hpp"
#include "glassbuf/scene.hpp"
#include "glassbuf/world.hpp"

namespace glassbuf {

struct TraceOptions {
  int max_depth        = 8;  // maximum number of scattering vertices
  int roulette_depth   = 4;  // Russian roulette from this many bounces on
  int max_crossings    = 32; // straight passes through transparent sheets per path
  int max_nan_retries  = 4;
};

struct TraceStats {
  std::uint64_t rejected_samples = 0;  // non-finite samples that were redrawn
};

// Unbiased estimate of outgoing radiance for every pixel: cosine-weighted
// diffuse and GGX importance sampling, next-event estimation toward all
// lights, Russian roulette. Each sample draws from
// Pcg32(hash(seed, x, y, sample)), so the image is independent of scheduling.
RadianceImage trace_image(const SceneInstance& instance, int width, int height, int spp, std::uint64_t seed,
    const TraceOptions& options = {}, TraceStats* stats = nullptr);
RadianceImage trace_image(const World& world, int width, int height, int spp, std::uint64_t seed,
    const TraceOptions& options = {}, TraceStats* stats = nullptr);

// Emission seen directly plus light after exactly one scattering event
// (first), and everything after two or more events (second). Uses the same
// random sequences as trace_image, so first + second reproduces it per sample.
std::pair<RadianceImage, RadianceImage> split_direct_indirect(const SceneInstance& instance, int width,
    int height, int spp, std::uint64_t seed, const TraceOptions& options = {}, TraceStats* stats = nullptr);
std::pair<RadianceImage, RadianceImage> split_direct_indirect(const World& world, int width, int height,
    int spp, std::uint64_t seed, const TraceOptions& options = {}, TraceStats* stats = nullptr);

// True where the pixel-center primary ray meets a transparent surface before
// any opaque one. Noise-free.
CoverageMask trace_coverage(const SceneInstance& instance, int width, int height);
CoverageMask trace_coverage(const World& world, int width, int height);

// First opaque surface along the pixel-center ray, passing through
// transparent sheets; nullopt on a miss.
std::optional<SurfacePoint> first_opaque_hit(const World& world, const Camera& camera, int x, int y);

}  // namespace glassbuf
