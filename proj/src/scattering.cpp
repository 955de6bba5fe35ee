#include "geomark/scattering.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "geomark/errors.hpp"

namespace geomark {

namespace {

// Plain complex product; std::complex's operator* carries C99 Annex G
// inf/nan recovery that costs a libcall per element.
inline Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline Complex mul_conj(Complex a, Complex b) {
  return {a.real() * b.real() + a.imag() * b.imag(), a.imag() * b.real() - a.real() * b.imag()};
}

inline double modulus(Complex z) { return std::sqrt(z.real() * z.real() + z.imag() * z.imag()); }

// 1D periodized Gaussian and Gaussian-modulated wave along one axis.
void periodized_axis(int n, double sigma, double freq, std::vector<Complex>& wave,
                     std::vector<double>& gauss) {
  wave.assign(n, Complex{});
  gauss.assign(n, 0.0);
  const int reps = static_cast<int>(std::ceil(10.0 * sigma / n)) + 1;
  for (int r = 0; r < n; ++r) {
    const double base = r < n / 2 ? r : r - n;
    for (int a = -reps; a <= reps; ++a) {
      const double d = base + static_cast<double>(a) * n;
      const double g = std::exp(-d * d / (2.0 * sigma * sigma));
      gauss[r] += g;
      wave[r] += g * Complex(std::cos(freq * d), std::sin(freq * d));
    }
  }
}

void check_params(const FilterBankParams& p) {
  check_grid_size(p.n);
  const int log2n = static_cast<int>(std::lround(std::log2(p.n)));
  if (p.j_min < 0) throw ConfigError("j_min must be >= 0");
  if (p.j_max > log2n) {
    throw ConfigError("j_max = " + std::to_string(p.j_max) + " exceeds log2(n) = " +
                      std::to_string(log2n));
  }
  if (p.j_max <= p.j_min) throw ConfigError("j_max must exceed j_min");
  if (p.n_angles < 1) throw ConfigError("need at least one angle");
  if (!(p.omega > 0.0) || !(p.sigma > 0.0)) throw ConfigError("omega and sigma must be positive");
}

}  // namespace

FilterBank::FilterBank(FilterBankParams params)
    : params_((check_params(params), params)), fft_(params.n) {
  const int n = params_.n;
  const std::size_t size = fft_.size();
  std::vector<Complex> wx, wy;
  std::vector<double> gx, gy;
  for (int j = params_.j_min; j <= params_.j_max; ++j) {
    const double sigma_j = params_.sigma * std::ldexp(1.0, j);
    const double omega_j = params_.omega * std::ldexp(1.0, -j);
    for (int k = 0; k < params_.n_angles; ++k) {
      const double theta = angle(k);
      periodized_axis(n, sigma_j, omega_j * std::cos(theta), wx, gx);
      periodized_axis(n, sigma_j, omega_j * std::sin(theta), wy, gy);

      Complex wave_sum{};
      double gauss_sum = 0.0;
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          wave_sum += mul(wx[r], wy[c]);
          gauss_sum += gx[r] * gy[c];
        }
      }
      const Complex kappa = wave_sum / gauss_sum;

      ComplexField psi(size);
      double l1 = 0.0;
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const Complex v = mul(wx[r], wy[c]) - kappa * (gx[r] * gy[c]);
          psi[static_cast<std::size_t>(r) * n + c] = v;
          l1 += modulus(v);
        }
      }
      const double scale = static_cast<double>(size) / l1;
      for (Complex& v : psi) v *= scale;

      ComplexField hat(size);
      fft_.forward(psi, hat);
      hat[0] = 0.0;
      spatial_.push_back(std::move(psi));
      frequency_.push_back(std::move(hat));
    }
  }

  const double collapse = 1.0 / params_.n_angles;
  std::vector<Term> minimal;
  for (int k = 0; k < params_.n_angles; ++k) {
    minimal.push_back({filter_index(params_.j_min, k), collapse});
  }
  terms_.push_back(std::move(minimal));
  for (int j = params_.j_min + 1; j <= params_.j_max; ++j) {
    for (int k = 0; k < params_.n_angles; ++k) terms_.push_back({{filter_index(j, k), 1.0}});
  }
}

std::size_t FilterBank::filter_index(int j, int angle) const {
  return static_cast<std::size_t>(j - params_.j_min) * params_.n_angles + angle;
}

double FilterBank::angle(int k) const { return std::numbers::pi * k / params_.n_angles; }

std::size_t FilterBank::first_order_size() const {
  return 1 + static_cast<std::size_t>(params_.n_angles) * (params_.j_max - params_.j_min);
}

std::size_t FilterBank::second_order_size() const {
  const std::size_t scales = params_.j_max - params_.j_min;  // j1 >= j_min + 1
  const std::size_t pairs = scales * (scales - 1) / 2;
  return pairs * params_.n_angles * params_.n_angles;
}

std::vector<std::string> FilterBank::first_order_labels() const {
  std::vector<std::string> labels{"s1:j=" + std::to_string(params_.j_min)};
  for (int j = params_.j_min + 1; j <= params_.j_max; ++j) {
    for (int k = 0; k < params_.n_angles; ++k) {
      labels.push_back("s1:j=" + std::to_string(j) + ",t=" + std::to_string(k));
    }
  }
  return labels;
}

std::vector<std::string> FilterBank::second_order_labels() const {
  std::vector<std::string> labels;
  for (int j1 = params_.j_min + 1; j1 <= params_.j_max; ++j1) {
    for (int t1 = 0; t1 < params_.n_angles; ++t1) {
      for (int j2 = j1 + 1; j2 <= params_.j_max; ++j2) {
        for (int t2 = 0; t2 < params_.n_angles; ++t2) {
          labels.push_back("s2:j1=" + std::to_string(j1) + ",t1=" + std::to_string(t1) +
                           ",j2=" + std::to_string(j2) + ",t2=" + std::to_string(t2));
        }
      }
    }
  }
  return labels;
}

std::vector<double> ScatteringVector::joined() const {
  std::vector<double> out(first_order);
  out.insert(out.end(), second_order.begin(), second_order.end());
  return out;
}

namespace {

void check_image(const RasterImage& img, const FilterBank& bank) {
  if (img.n() != bank.n()) {
    throw ConfigError("image size " + std::to_string(img.n()) + " does not match filter bank size " +
                      std::to_string(bank.n()));
  }
}

ComplexField image_spectrum(const RasterImage& img, const FilterBank& bank) {
  ComplexField in(img.values().begin(), img.values().end());
  ComplexField out;
  bank.fft().forward(in, out);
  return out;
}

// Normalized field IFFT(spectrum * filter_hat) written to `field`.
void filter_field(const ComplexField& spectrum, const ComplexField& filter_hat, const Fft2d& fft,
                  ComplexField& scratch, ComplexField& field) {
  const std::size_t size = spectrum.size();
  scratch.resize(size);
  for (std::size_t i = 0; i < size; ++i) scratch[i] = mul(spectrum[i], filter_hat[i]);
  fft.inverse(scratch, field);
  const double scale = 1.0 / static_cast<double>(size);
  for (Complex& v : field) v *= scale;
}

double mean_modulus(const ComplexField& field) {
  double s = 0.0;
  for (const Complex& v : field) s += modulus(v);
  return s / static_cast<double>(field.size());
}

struct Workspace {
  ComplexField spectrum;
  ComplexField scratch;
  ComplexField field;
};

// Raw per-filter first-order averages; fields kept for reuse when requested.
std::vector<double> per_filter_moments(const ComplexField& spectrum, const FilterBank& bank,
                                       Workspace& ws, std::vector<ComplexField>* keep) {
  std::vector<double> raw(bank.filter_count());
  if (keep) keep->resize(bank.filter_count());
  for (std::size_t f = 0; f < bank.filter_count(); ++f) {
    ComplexField& field = keep ? (*keep)[f] : ws.field;
    filter_field(spectrum, bank.frequency(f), bank.fft(), ws.scratch, field);
    raw[f] = mean_modulus(field);
  }
  return raw;
}

std::vector<double> collapse(const std::vector<double>& raw, const FilterBank& bank) {
  std::vector<double> out;
  out.reserve(bank.first_order_size());
  for (const auto& terms : bank.first_order_terms()) {
    double v = 0.0;
    for (const auto& t : terms) v += t.weight * raw[t.filter];
    out.push_back(v);
  }
  return out;
}

std::vector<double> second_order_from_fields(const std::vector<ComplexField>& fields,
                                             const FilterBank& bank, Workspace& ws) {
  const auto& p = bank.params();
  const Fft2d& fft = bank.fft();
  const std::size_t size = fft.size();
  const double scale = 1.0 / static_cast<double>(size);
  std::vector<double> out;
  out.reserve(bank.second_order_size());
  ComplexField modulus_field(size);
  ComplexField modulus_hat;
  for (int j1 = p.j_min + 1; j1 <= p.j_max; ++j1) {
    for (int t1 = 0; t1 < p.n_angles; ++t1) {
      if (j1 == p.j_max) continue;
      const ComplexField& f1 = fields[bank.filter_index(j1, t1)];
      for (std::size_t i = 0; i < size; ++i) modulus_field[i] = modulus(f1[i]);
      fft.forward(modulus_field, modulus_hat);
      for (int j2 = j1 + 1; j2 <= p.j_max; ++j2) {
        for (int t2 = 0; t2 < p.n_angles; ++t2) {
          const ComplexField& hat = bank.frequency(j2, t2);
          ws.scratch.resize(size);
          for (std::size_t i = 0; i < size; ++i) ws.scratch[i] = mul(modulus_hat[i], hat[i]);
          fft.inverse(ws.scratch, ws.field);
          double s = 0.0;
          for (const Complex& v : ws.field) s += modulus(v);
          out.push_back(s * scale * scale);
        }
      }
    }
  }
  return out;
}

}  // namespace

ComplexField wavelet_transform(const RasterImage& img, const FilterBank& bank, int j, int angle) {
  check_image(img, bank);
  const ComplexField spectrum = image_spectrum(img, bank);
  ComplexField scratch, field;
  filter_field(spectrum, bank.frequency(j, angle), bank.fft(), scratch, field);
  return field;
}

std::vector<double> first_order_moments(const RasterImage& img, const FilterBank& bank) {
  check_image(img, bank);
  Workspace ws;
  ws.spectrum = image_spectrum(img, bank);
  return collapse(per_filter_moments(ws.spectrum, bank, ws, nullptr), bank);
}

std::vector<double> second_order_moments(const RasterImage& img, const FilterBank& bank) {
  return scattering_features(img, bank, 2).second_order;
}

ScatteringVector scattering_features(const RasterImage& img, const FilterBank& bank, int order) {
  check_image(img, bank);
  if (order != 1 && order != 2) throw ConfigError("scattering order must be 1 or 2");
  Workspace ws;
  ws.spectrum = image_spectrum(img, bank);
  ScatteringVector sv;
  if (order == 1) {
    sv.first_order = collapse(per_filter_moments(ws.spectrum, bank, ws, nullptr), bank);
    return sv;
  }
  std::vector<ComplexField> fields;
  sv.first_order = collapse(per_filter_moments(ws.spectrum, bank, ws, &fields), bank);
  sv.second_order = second_order_from_fields(fields, bank, ws);
  return sv;
}

std::vector<std::string> feature_labels(const FilterBank& bank, int order) {
  std::vector<std::string> labels = bank.first_order_labels();
  if (order == 2) {
    const auto second = bank.second_order_labels();
    labels.insert(labels.end(), second.begin(), second.end());
  }
  return labels;
}

// ---------------------------------------------------------------------------

FirstOrderEvaluator::FirstOrderEvaluator(const FilterBank& bank, std::vector<Pixel> pixels)
    : bank_(&bank), pixels_(std::move(pixels)) {
  for (const Pixel& px : pixels_) {
    if (px.row < 0 || px.col < 0 || px.row >= bank.n() || px.col >= bank.n()) {
      throw DomainError("pixel outside the filter bank grid");
    }
  }
  image_.assign(bank.fft().size(), Complex{});
}

const std::vector<double>& FirstOrderEvaluator::forward(std::span<const double> marks) {
  if (marks.size() != pixels_.size()) throw DomainError("mark count does not match pixel count");
  const int n = bank_->n();
  std::fill(image_.begin(), image_.end(), Complex{});
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    image_[static_cast<std::size_t>(pixels_[i].row) * n + pixels_[i].col] += marks[i];
  }
  bank_->fft().forward(image_, image_hat_);
  Workspace ws;
  moments_ = collapse(per_filter_moments(image_hat_, *bank_, ws, &fields_), *bank_);
  return moments_;
}

std::vector<double> FirstOrderEvaluator::pullback(std::span<const double> output_weights,
                                                  double eps) {
  if (!(eps > 0.0)) throw ConfigError("modulus smoothing eps must be positive");
  if (fields_.empty()) throw DomainError("pullback called before forward");
  const Fft2d& fft = bank_->fft();
  const std::size_t size = fft.size();
  const double inv = 1.0 / static_cast<double>(size);

  std::vector<double> filter_weight(bank_->filter_count(), 0.0);
  const auto& terms = bank_->first_order_terms();
  for (std::size_t p = 0; p < terms.size(); ++p) {
    for (const auto& t : terms[p]) filter_weight[t.filter] += output_weights[p] * t.weight;
  }

  accum_.assign(size, Complex{});
  ComplexField phase(size);
  for (std::size_t f = 0; f < filter_weight.size(); ++f) {
    const double w = filter_weight[f];
    if (w == 0.0) continue;
    const ComplexField& field = fields_[f];
    for (std::size_t i = 0; i < size; ++i) {
      const Complex z = field[i];
      phase[i] = z / std::sqrt(z.real() * z.real() + z.imag() * z.imag() + eps);
    }
    fft.forward(phase, scratch_);
    const ComplexField& hat = bank_->frequency(f);
    for (std::size_t i = 0; i < size; ++i) accum_[i] += w * mul_conj(scratch_[i], hat[i]);
  }
  fft.inverse(accum_, scratch_);
  const int n = bank_->n();
  std::vector<double> grad(pixels_.size());
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    const Complex h = scratch_[static_cast<std::size_t>(pixels_[i].row) * n + pixels_[i].col];
    grad[i] = h.real() * inv * inv;
  }
  return grad;
}

Eigen::MatrixXd FirstOrderEvaluator::jacobian(std::span<const double> marks, double eps) {
  forward(marks);
  const std::size_t outputs = bank_->first_order_size();
  Eigen::MatrixXd jac(outputs, pixels_.size());
  std::vector<double> weights(outputs, 0.0);
  for (std::size_t p = 0; p < outputs; ++p) {
    weights[p] = 1.0;
    const std::vector<double> row = pullback(weights, eps);
    for (std::size_t i = 0; i < row.size(); ++i) jac(p, i) = row[i];
    weights[p] = 0.0;
  }
  return jac;
}

Eigen::MatrixXd first_order_gradient(std::span<const double> marks, std::span<const Pixel> pixels,
                                     const FilterBank& bank, double eps) {
  if (!(eps > 0.0)) throw ConfigError("modulus smoothing eps must be positive");
  FirstOrderEvaluator eval(bank, std::vector<Pixel>(pixels.begin(), pixels.end()));
  return eval.jacobian(marks, eps);
}

}  // namespace geomark
