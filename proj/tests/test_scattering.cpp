#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "geomark/errors.hpp"
#include "geomark/fft.hpp"
#include "geomark/raster.hpp"
#include "geomark/scattering.hpp"
#include "support.hpp"

using namespace geomark;

namespace {

const FilterBank& default_bank() {
  static const FilterBank bank;
  return bank;
}

const FilterBank& small_bank() {
  static const FilterBank bank(FilterBankParams{32, 0, 5, 8, 5.5, 1.0});
  return bank;
}

RasterImage random_points_raster(int n, std::uint32_t seed, std::size_t count = 20) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  RasterImage img(n);
  std::uniform_int_distribution<int> pix(0, n - 1);
  for (std::size_t k = 0; k < count; ++k) img.at(pix(gen), pix(gen)) = u(gen);
  return img;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(a[i]), 1e-300));
  }
  return worst;
}

// Image rotated by a quarter turn about pixel (0, 0) of the torus.
RasterImage quarter_turn(const RasterImage& img) {
  const int n = img.n();
  RasterImage out(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) out.at(r, c) = img.at((n - c) % n, r);
  }
  return out;
}

}  // namespace

TEST_CASE("feature dimensions and labels") {
  const FilterBank& bank = default_bank();
  CHECK(bank.first_order_size() == 57);
  CHECK(bank.second_order_size() == 1344);
  CHECK(feature_labels(bank, 2).size() == 1401);
  CHECK(feature_labels(bank, 1).size() == 57);
  const auto labels = feature_labels(bank, 2);
  CHECK(labels[0] == "s1:j=0");
  CHECK(labels[1] == "s1:j=1,t=0");
  CHECK(labels[56] == "s1:j=7,t=7");
  CHECK(labels[57] == "s2:j1=1,t1=0,j2=2,t2=0");
  CHECK(labels[1400] == "s2:j1=6,t1=7,j2=7,t2=7");
  const ScatteringVector v = scattering_features(random_points_raster(128, 1), bank, 2);
  CHECK(v.first_order.size() == 57);
  CHECK(v.second_order.size() == 1344);
  CHECK(v.joined().size() == 1401);
  CHECK(scattering_features(random_points_raster(128, 1), bank, 1).second_order.empty());
}

TEST_CASE("bank construction errors") {
  CHECK_THROWS_AS(FilterBank(FilterBankParams{128, 0, 8, 8, 5.5, 1.0}), ConfigError);
  CHECK_THROWS_AS(FilterBank(FilterBankParams{100, 0, 5, 8, 5.5, 1.0}), std::exception);
  CHECK_THROWS_AS(FilterBank(FilterBankParams{32, 0, 5, 0, 5.5, 1.0}), ConfigError);
}

TEST_CASE("filters have zero mean, unit mean modulus and conjugate point symmetry") {
  const FilterBank& bank = default_bank();
  const int n = bank.n();
  for (int j = 0; j <= 7; ++j) {
    for (int a = 0; a < 8; ++a) {
      CHECK(std::abs(bank.frequency(j, a)[0]) <= 1e-12);
      const ComplexField& psi = bank.spatial(j, a);
      double l1 = 0.0;
      double asym = 0.0;
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const Complex v = psi[static_cast<std::size_t>(r) * n + c];
          const Complex m = psi[static_cast<std::size_t>((n - r) % n) * n + (n - c) % n];
          l1 += std::abs(v);
          asym = std::max(asym, std::abs(m - std::conj(v)));
        }
      }
      CHECK(l1 / (n * n) == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(asym <= 1e-12);
    }
  }
}

TEST_CASE("fft matches a direct DFT") {
  const int n = 16;
  Fft2d fft(n);
  std::mt19937 gen(3);
  std::normal_distribution<double> g;
  ComplexField in(fft.size()), out(fft.size()), back(fft.size());
  for (Complex& v : in) v = {g(gen), g(gen)};
  fft.forward(in, out);
  for (int kr = 0; kr < n; ++kr) {
    for (int kc = 0; kc < n; ++kc) {
      Complex s{};
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const double ph = -2.0 * std::numbers::pi * (kr * r + kc * c) / n;
          s += in[static_cast<std::size_t>(r) * n + c] * Complex(std::cos(ph), std::sin(ph));
        }
      }
      CHECK(std::abs(s - out[static_cast<std::size_t>(kr) * n + kc]) <= 1e-11);
    }
  }
  fft.inverse(out, back);
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(std::abs(back[i] / double(n * n) - in[i]) <= 1e-13);
}

TEST_CASE("wavelet transform is a circular convolution") {
  const FilterBank bank(FilterBankParams{16, 0, 4, 4, 5.5, 1.0});
  const int n = 16;
  RasterImage img(n);
  CHECK(std::abs(wavelet_transform(img, bank, 2, 1)[7]) == 0.0);

  img.at(3, 11) = 1.0;
  const ComplexField sifted = wavelet_transform(img, bank, 2, 1);
  const ComplexField& psi = bank.spatial(2, 1);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const Complex want = psi[static_cast<std::size_t>((r - 3 + n) % n) * n + (c - 11 + n) % n];
      CHECK(std::abs(sifted[static_cast<std::size_t>(r) * n + c] - want) <= 1e-14);
    }
  }

  const RasterImage a = random_points_raster(n, 8, 30), b = random_points_raster(n, 9, 30);
  RasterImage mix(n);
  for (std::size_t i = 0; i < mix.values().size(); ++i) mix.values()[i] = 2.5 * a.values()[i] + b.values()[i];
  const ComplexField fa = wavelet_transform(a, bank, 3, 2), fb = wavelet_transform(b, bank, 3, 2);
  const ComplexField fm = wavelet_transform(mix, bank, 3, 2);
  const ComplexField& psi3 = bank.spatial(3, 2);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * n + c;
      CHECK(std::abs(fm[i] - (2.5 * fa[i] + fb[i])) <= 1e-10);
      Complex direct{};
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          direct += a.at(y, x) * psi3[static_cast<std::size_t>((r - y + n) % n) * n + (c - x + n) % n];
        }
      }
      CHECK(std::abs(fa[i] - direct) <= 1e-12);
    }
  }
  CHECK_THROWS(wavelet_transform(RasterImage(32), bank, 0, 0));
}

TEST_CASE("first-order moments: zero image and single pixel") {
  const FilterBank& bank = default_bank();
  const RasterImage zero(128);
  for (double v : first_order_moments(zero, bank)) CHECK(v == 0.0);
  for (double v : second_order_moments(zero, bank)) CHECK(v == 0.0);

  RasterImage one(128);
  one.at(40, 90) = 1.0;
  const auto s = first_order_moments(one, bank);
  const double inv = 1.0 / (128.0 * 128.0);
  // Direct sums of filter moduli.
  auto filter_mass = [&](int j, int a) {
    double m = 0.0;
    for (const Complex& v : bank.spatial(j, a)) m += std::abs(v);
    return m * inv;
  };
  double collapsed = 0.0;
  for (int a = 0; a < 8; ++a) collapsed += filter_mass(0, a) / 8.0;
  CHECK(s[0] == doctest::Approx(collapsed).epsilon(1e-9));
  for (int j = 1; j <= 7; ++j) {
    for (int a = 0; a < 8; ++a) CHECK(s[1 + (j - 1) * 8 + a] == doctest::Approx(filter_mass(j, a)).epsilon(1e-9));
  }
}

TEST_CASE("shift invariance, homogeneity, rotation equivariance, nonnegativity") {
  const FilterBank& bank = small_bank();
  const int n = bank.n();
  for (std::uint32_t s = 0; s < 4; ++s) {
    const RasterImage img = random_points_raster(n, 100 + s, 25);
    const auto base = scattering_features(img, bank, 2).joined();
    for (double v : base) CHECK(v >= 0.0);

    RasterImage shifted(n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) shifted.at((r + 5 + s) % n, (c + 13) % n) = img.at(r, c);
    }
    CHECK(max_rel(base, scattering_features(shifted, bank, 2).joined()) <= 1e-10);

    RasterImage scaled(n);
    for (std::size_t i = 0; i < img.values().size(); ++i) scaled.values()[i] = 3.7 * img.values()[i];
    const auto sv = scattering_features(scaled, bank, 2).joined();
    std::vector<double> want(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) want[i] = 3.7 * base[i];
    CHECK(max_rel(want, sv) <= 1e-12);

    const ScatteringVector rotated = scattering_features(quarter_turn(img), bank, 2);
    const ScatteringVector orig = scattering_features(img, bank, 2);
    const int A = bank.n_angles(), jmax = bank.params().j_max;
    std::vector<double> permuted1(orig.first_order.size()), permuted2(orig.second_order.size());
    permuted1[0] = orig.first_order[0];
    for (int j = 1; j <= jmax; ++j) {
      for (int a = 0; a < A; ++a) {
        permuted1[1 + (j - 1) * A + (a + A / 2) % A] = orig.first_order[1 + (j - 1) * A + a];
      }
    }
    std::size_t idx = 0;
    std::vector<std::size_t> offset;
    for (int j1 = 1; j1 <= jmax; ++j1) {
      for (int t1 = 0; t1 < A; ++t1) {
        for (int j2 = j1 + 1; j2 <= jmax; ++j2) {
          for (int t2 = 0; t2 < A; ++t2) {
            (void)t2;
            offset.push_back(idx++);
          }
        }
      }
    }
    // Index of (j1, t1, j2, t2) in the canonical order.
    auto second_index = [&](int j1, int t1, int j2, int t2) {
      std::size_t k = 0;
      for (int a1 = 1; a1 < j1; ++a1) k += static_cast<std::size_t>(A) * (jmax - a1) * A;
      k += static_cast<std::size_t>(t1) * (jmax - j1) * A;
      k += static_cast<std::size_t>(j2 - j1 - 1) * A + t2;
      return k;
    };
    for (int j1 = 1; j1 <= jmax; ++j1) {
      for (int t1 = 0; t1 < A; ++t1) {
        for (int j2 = j1 + 1; j2 <= jmax; ++j2) {
          for (int t2 = 0; t2 < A; ++t2) {
            permuted2[second_index(j1, (t1 + A / 2) % A, j2, (t2 + A / 2) % A)] =
                orig.second_order[second_index(j1, t1, j2, t2)];
          }
        }
      }
    }
    CHECK(max_rel(permuted1, rotated.first_order) <= 1e-10);
    CHECK(max_rel(permuted2, rotated.second_order) <= 1e-10);
  }
  const auto labels = bank.second_order_labels();
  CHECK(labels[8 * 4 + 3] == "s2:j1=1,t1=1,j2=2,t2=3");
}

TEST_CASE("first-order Jacobian matches central differences") {
  const FilterBank& bank = default_bank();
  for (std::uint32_t s = 0; s < 3; ++s) {
    const geomark::PointPattern p = oracle::uniform_pattern(10, 500 + s);
    if (!is_collision_free(p, 128)) continue;
    const auto pixels = pixel_indices(p, 128);
    std::mt19937 gen(s);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    std::vector<double> marks(p.size());
    for (double& m : marks) m = u(gen);
    const Eigen::MatrixXd J = first_order_gradient(marks, pixels, bank, 1e-12);
    REQUIRE(J.rows() == 57);
    REQUIRE(J.cols() == 10);
    for (std::size_t i = 0; i < marks.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(marks[i]));
      auto plus = marks, minus = marks;
      plus[i] += h;
      minus[i] -= h;
      const auto fp = first_order_moments(rasterize(plus, pixels, 128), bank);
      const auto fm = first_order_moments(rasterize(minus, pixels, 128), bank);
      for (int q = 0; q < 57; ++q) {
        const double fd = (fp[q] - fm[q]) / (2.0 * h);
        if (std::abs(J(q, static_cast<Eigen::Index>(i))) > 1e-8) {
          CHECK(std::abs(fd - J(q, static_cast<Eigen::Index>(i))) <= 1e-4 * std::abs(J(q, static_cast<Eigen::Index>(i))));
        }
      }
    }
  }
}

TEST_CASE("first-order Jacobian edge cases") {
  const FilterBank& bank = default_bank();
  const std::vector<Pixel> pixels = {{10, 20}, {70, 3}};
  const Eigen::MatrixXd Jzero = first_order_gradient(std::vector<double>{0.0, 0.0}, pixels, bank, 1e-12);
  CHECK(Jzero.allFinite());
  CHECK(Jzero.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(first_order_gradient(std::vector<double>{1.0, 1.0}, pixels, bank, 0.0), ConfigError);

  const std::vector<Pixel> single = {{50, 60}};
  const double u = 2.5;
  const auto s = first_order_moments(rasterize(std::vector<double>{u}, single, 128), bank);
  // Euler's relation; the smoothing only biases far-tail pixels.
  const Eigen::MatrixXd J = first_order_gradient(std::vector<double>{u}, single, bank, 1e-12);
  const Eigen::MatrixXd J_sharp = first_order_gradient(std::vector<double>{u}, single, bank, 1e-20);
  for (int q = 0; q < 57; ++q) {
    CHECK(J(q, 0) == doctest::Approx(s[q] / u).epsilon(1e-7));
    CHECK(J_sharp(q, 0) == doctest::Approx(s[q] / u).epsilon(1e-11));
  }
}
