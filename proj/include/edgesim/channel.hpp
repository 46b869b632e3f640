#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "edgesim/rng.hpp"

namespace edgesim {

/// Statistical description of the block-fading environment. Power gains are
/// exponentially distributed (Rayleigh fading) with the listed means.
struct FadingSpec {
  std::size_t n_links = 1;
  std::vector<double> direct_mean;        // E[h_i], one per link
  std::vector<double> interference_mean;  // E[g_i], one per link
  std::vector<double> external_means;     // one per external interferer
  double external_power = 1.0;
  double noise_power = 1.0;

  std::size_t n_external() const { return external_means.size(); }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  /// Same means for every link.
  static FadingSpec iid(std::size_t n_links, double direct_mean,
                        double interference_mean,
                        std::vector<double> external_means,
                        double external_power = 1.0, double noise_power = 1.0);
};

/// Per-link means drawn once from [lo, hi] and then held fixed (non-iid mode).
/// Link i uses its own setup substream, so the first k links are identical
/// for any n_links >= k.
std::vector<double> draw_link_means(std::uint64_t seed, StreamTag tag,
                                    std::size_t n_links,
                                    std::pair<double, double> range);

/// One slot of channel realizations.
struct ChannelState {
  std::vector<double> h;      // direct gains
  std::vector<double> g;      // interference gains toward the core AP
  std::vector<double> i_ext;  // aggregate external interference per link

  std::size_t size() const { return h.size(); }
};

/// Draws link i's (h, g, I) triple from one stream.
void sample_link(const FadingSpec& spec, std::size_t i, Rng& rng, double& h,
                 double& g, double& i_ext);

/// One fresh iid draw of the full channel state from a single stream.
ChannelState sample_state(const FadingSpec& spec, Rng& rng);

/// Natural-log Shannon rate log(1 + P h / (I + N0)).
double rate(double h, double i_ext, double power, double noise);

/// Channel generator with one substream per link, so the realization of link
/// i does not depend on how many other links exist.
class ChannelSource {
 public:
  ChannelSource(FadingSpec spec, std::uint64_t seed);

  const FadingSpec& spec() const { return spec_; }

  /// Overwrites `out` with the next slot's state.
  void next(ChannelState& out);
  ChannelState next();

 private:
  FadingSpec spec_;
  std::vector<Rng> streams_;
};

}  // namespace edgesim
