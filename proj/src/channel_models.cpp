#include "nlcms/channel_models.hpp"

#include <cmath>
#include <string>

#include "nlcms/errors.hpp"

namespace nlcms {

namespace {

CMatrix sample_cn_matrix(std::size_t rows, std::size_t cols, double variance, Rng& rng) {
  CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  // Column-major fill order is part of the determinism contract.
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = sample_cn(rng, variance);
  return m;
}

}  // namespace

CMatrix sample_rayleigh(std::size_t n_r, std::size_t n_t, double pathloss_db, Rng& rng) {
  if (n_r == 0 || n_t == 0)
    throw InvalidArgument("sample_rayleigh: dimensions must be positive");
  return sample_cn_matrix(n_r, n_t, db_to_linear(pathloss_db), rng);
}

CVector steering_vector(std::size_t n, double spacing_wavelengths, double angle) {
  CVector a(static_cast<Eigen::Index>(n));
  const double step = 2.0 * kPi * spacing_wavelengths * std::sin(angle);
  for (std::size_t m = 0; m < n; ++m) {
    const double phase = step * static_cast<double>(m);
    a(static_cast<Eigen::Index>(m)) = cplx(std::cos(phase), std::sin(phase));
  }
  return a;
}

RiceanParams sample_ricean_params(double k_factor, Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  RiceanParams p;
  p.k_factor = k_factor;
  p.aod = angle(rng);
  p.aoa = angle(rng);
  return p;
}

CMatrix sample_ricean(std::size_t n_r, std::size_t n_t, double pathloss_db,
                      const RiceanParams& params, Rng& rng) {
  if (n_r == 0 || n_t == 0) throw InvalidArgument("sample_ricean: dimensions must be positive");
  if (!(params.k_factor >= 0.0))
    throw InvalidArgument("sample_ricean: K factor must be non-negative");

  const double nlos_var = 1.0 / std::sqrt(static_cast<double>(n_t * n_r));
  const CMatrix nlos = sample_cn_matrix(n_r, n_t, nlos_var, rng);
  const double k = params.k_factor;
  const double amp = std::sqrt(db_to_linear(pathloss_db));

  CMatrix h = (amp * std::sqrt(1.0 / (1.0 + k))) * nlos;
  if (k > 0.0) {
    const CVector rx = steering_vector(n_r, 0.5, params.aoa);
    const CVector tx = steering_vector(n_t, 0.5, params.aod);
    h += (amp * std::sqrt(k / (1.0 + k))) * (rx * tx.transpose());
  }
  return h;
}

CascadeChannels sample_cascade_channels(const std::vector<std::size_t>& layer_sizes,
                                        std::size_t n_r, double intra_pathloss_db, Rng& rng) {
  if (layer_sizes.empty()) throw InvalidArgument("sample_cascade_channels: no layers");
  if (n_r == 0) throw InvalidArgument("sample_cascade_channels: n_r must be positive");
  const double var = db_to_linear(intra_pathloss_db);

  CascadeChannels out;
  out.layers.reserve(layer_sizes.size());
  std::size_t prev = n_r;
  for (std::size_t l = 0; l < layer_sizes.size(); ++l) {
    if (layer_sizes[l] == 0)
      throw InvalidArgument("sample_cascade_channels: layer " + std::to_string(l) + " is empty");
    out.layers.push_back(sample_cn_matrix(layer_sizes[l], prev, var, rng));
    prev = layer_sizes[l];
  }
  out.terminal = sample_cn_matrix(prev, 1, var, rng).col(0);
  return out;
}

double noise_variance_from_snr(double snr_db, double signal_power) {
  if (signal_power < 0.0) throw InvalidArgument("noise_variance_from_snr: negative power");
  return signal_power / db_to_linear(snr_db);
}

}  // namespace nlcms
