#include "edgesim/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace edgesim {

namespace {

void require_positive(const std::vector<double>& v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      throw std::invalid_argument(std::string(name) + "[" + std::to_string(i) +
                                  "] must be a positive finite number");
    }
  }
}

}  // namespace

void FadingSpec::validate() const {
  if (n_links < 1) throw std::invalid_argument("n_links must be >= 1");
  if (direct_mean.size() != n_links) {
    throw std::invalid_argument("direct_mean must have n_links entries");
  }
  if (interference_mean.size() != n_links) {
    throw std::invalid_argument("interference_mean must have n_links entries");
  }
  require_positive(direct_mean, "direct_mean");
  require_positive(interference_mean, "interference_mean");
  require_positive(external_means, "external_means");
  if (!(external_power > 0.0) || !std::isfinite(external_power)) {
    throw std::invalid_argument("external_power must be positive");
  }
  if (!(noise_power > 0.0) || !std::isfinite(noise_power)) {
    throw std::invalid_argument("noise_power must be positive");
  }
}

FadingSpec FadingSpec::iid(std::size_t n_links, double direct_mean,
                           double interference_mean,
                           std::vector<double> external_means,
                           double external_power, double noise_power) {
  FadingSpec spec;
  spec.n_links = n_links;
  spec.direct_mean.assign(n_links, direct_mean);
  spec.interference_mean.assign(n_links, interference_mean);
  spec.external_means = std::move(external_means);
  spec.external_power = external_power;
  spec.noise_power = noise_power;
  spec.validate();
  return spec;
}

std::vector<double> draw_link_means(std::uint64_t seed, StreamTag tag,
                                    std::size_t n_links,
                                    std::pair<double, double> range) {
  std::vector<double> means(n_links);
  for (std::size_t i = 0; i < n_links; ++i) {
    Rng rng(derive_seed(seed, tag, i));
    means[i] = rng.uniform(range.first, range.second);
  }
  return means;
}

void sample_link(const FadingSpec& spec, std::size_t i, Rng& rng, double& h,
                 double& g, double& i_ext) {
  h = rng.exponential(spec.direct_mean[i]);
  g = rng.exponential(spec.interference_mean[i]);
  double total = 0.0;
  for (double mean : spec.external_means) {
    total += spec.external_power * rng.exponential(mean);
  }
  i_ext = total;
}

ChannelState sample_state(const FadingSpec& spec, Rng& rng) {
  ChannelState s;
  s.h.resize(spec.n_links);
  s.g.resize(spec.n_links);
  s.i_ext.resize(spec.n_links);
  for (std::size_t i = 0; i < spec.n_links; ++i) {
    sample_link(spec, i, rng, s.h[i], s.g[i], s.i_ext[i]);
  }
  return s;
}

double rate(double h, double i_ext, double power, double noise) {
  return std::log1p(power * h / (i_ext + noise));
}

ChannelSource::ChannelSource(FadingSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)) {
  spec_.validate();
  streams_.reserve(spec_.n_links);
  for (std::size_t i = 0; i < spec_.n_links; ++i) {
    streams_.emplace_back(derive_seed(seed, StreamTag::DeviceChannel, i));
  }
}

void ChannelSource::next(ChannelState& out) {
  const std::size_t n = spec_.n_links;
  out.h.resize(n);
  out.g.resize(n);
  out.i_ext.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sample_link(spec_, i, streams_[i], out.h[i], out.g[i], out.i_ext[i]);
  }
}

ChannelState ChannelSource::next() {
  ChannelState s;
  next(s);
  return s;
}

}  // namespace edgesim
