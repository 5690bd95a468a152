#pragma once

#include <cstddef>
#include <vector>

#include "nlcms/rng.hpp"
#include "nlcms/types.hpp"

namespace nlcms {

/// Propagation quantities for one simulated system. Immutable once built.
///
/// `layer_channels[l]` maps the output of layer l (N_0 = N_r for the front layer)
/// onto the elements of layer l+1, so it is N_{l+1} x N_l. `terminal` couples the
/// last layer to the single receive antenna.
struct ChannelRealization {
  CMatrix H;
  std::vector<CMatrix> layer_channels;
  CVector terminal;
  double pathloss_db = 0.0;
  double intra_pathloss_db = 0.0;

  std::size_t n_r() const { return static_cast<std::size_t>(H.rows()); }
  std::size_t n_t() const { return static_cast<std::size_t>(H.cols()); }
  std::size_t num_layers() const { return layer_channels.size(); }
};

/// Ricean fading parameters. `k_factor` is linear, not dB.
struct RiceanParams {
  double k_factor = 0.0;
  double aod = 0.0;
  double aoa = 0.0;
};

/// H ~ CN(0, P_L I) with P_L = 10^(pathloss_db/10).
CMatrix sample_rayleigh(std::size_t n_r, std::size_t n_t, double pathloss_db, Rng& rng);

/// Uniform linear array response, element m = exp(j*2*pi*spacing*m*sin(angle)).
CVector steering_vector(std::size_t n, double spacing_wavelengths, double angle);

/// H = sqrt(P_L) * (sqrt(K/(1+K)) H_LoS + sqrt(1/(1+K)) H_NLoS).
///
/// H_LoS is the rank-1 outer product of half-wavelength ULA steering vectors and
/// H_NLoS has i.i.d. CN(0, 1/sqrt(N_t N_r)) entries. The NLoS variance is not
/// power matched to `sample_rayleigh`.
CMatrix sample_ricean(std::size_t n_r, std::size_t n_t, double pathloss_db,
                      const RiceanParams& params, Rng& rng);

/// Draws a Ricean parameter set with angles uniform in [0, 2*pi).
RiceanParams sample_ricean_params(double k_factor, Rng& rng);

struct CascadeChannels {
  std::vector<CMatrix> layers;
  CVector terminal;
};

/// Intra-cascade matrices H_l ~ CN(0, P'_L) chained from N_r through `layer_sizes`,
/// plus the terminal vector h_L ~ CN(0, P'_L I).
CascadeChannels sample_cascade_channels(const std::vector<std::size_t>& layer_sizes,
                                        std::size_t n_r, double intra_pathloss_db, Rng& rng);

/// sigma^2 = signal_power / 10^(snr_db/10).
double noise_variance_from_snr(double snr_db, double signal_power);

}  // namespace nlcms
