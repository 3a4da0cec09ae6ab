#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "aldl/noise.hpp"
#include "oracles.hpp"

using namespace aldl;

namespace {

KernelConfig vacuum_exponential(double lambda) {
  KernelConfig c;
  c.lambda = lambda;
  c.e_squared = 1.0;
  return c;
}

}  // namespace

TEST(Seeds, SplitMixReferenceValues) {
  // First outputs of the reference splitmix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(splitmix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(Seeds, NormalSourceIsReproducible) {
  NormalSource a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a();
    EXPECT_EQ(x, b());
    differs = differs || x != c();
  }
  EXPECT_TRUE(differs);
}

TEST(Noise, SameSeedSamePath) {
  const auto c = vacuum_exponential(1.0);
  const auto p1 = sample_noise_path(c, 256, 0.1, 99);
  const auto p2 = sample_noise_path(c, 256, 0.1, 99);
  const auto p3 = sample_noise_path(c, 256, 0.1, 100);
  ASSERT_EQ(p1.samples.size(), 256u);
  EXPECT_EQ(p1.samples, p2.samples);
  EXPECT_NE(p1.samples, p3.samples);
}

TEST(Noise, ZeroCouplingGivesZeroPath) {
  auto c = vacuum_exponential(1.0);
  c.e_squared = 0.0;
  const auto p = sample_noise_path(c, 64, 0.1, 1);
  for (const auto& v : p.samples) EXPECT_EQ(v, FourVector{});
}

TEST(Noise, AutocovarianceMatchesKernel) {
  // Thermal gaussian scheme, small ensemble: 10 % agreement per lag
  // (the acceptance suite runs the 1e4-path version).
  KernelConfig c;
  c.scheme = CutoffScheme::gaussian;
  c.lambda = 1.0;
  c.beta = 2.0;
  c.e_squared = 0.5;
  const double dtau = 0.1;
  std::vector<NoisePath> paths;
  for (std::uint64_t k = 0; k < 400; ++k) paths.push_back(sample_noise_path(c, 512, dtau, derive_seed(5, k)));
  const auto est = autocovariance_estimate(paths, 30);
  const double peak = c.e_squared * oracle::k_h(0.0, c);
  for (std::size_t lag = 0; lag <= 30; lag += 5) {
    const double target = c.e_squared * oracle::k_h(dtau * lag, c);
    for (std::size_t comp = 0; comp < 4; ++comp) {
      EXPECT_NEAR(est.value[lag][comp], target, 0.1 * peak) << "lag " << lag << " comp " << comp;
    }
  }
}

TEST(Noise, ComponentsAreUncorrelated) {
  const auto c = vacuum_exponential(1.0);
  double cross = 0.0, auto0 = 0.0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const auto p = sample_noise_path(c, 256, 0.1, derive_seed(8, k));
    for (const auto& v : p.samples) {
      cross += v.x * v.y + v.t * v.z + v.x * v.z;
      auto0 += v.x * v.x;
    }
  }
  EXPECT_LT(std::abs(cross / 3.0) / auto0, 0.02);
}

TEST(Noise, CirculantEmbeddingAgreesWithSpectral) {
  KernelConfig c;
  c.scheme = CutoffScheme::gaussian;
  c.beta = 1.0;
  NoiseOptions opt;
  opt.method = SynthesisMethod::circulant_embedding;
  const auto p = sample_noise_path(c, 128, 0.1, 3, opt);
  EXPECT_EQ(p.samples.size(), 128u);
  std::vector<NoisePath> paths;
  for (std::uint64_t k = 0; k < 300; ++k) paths.push_back(sample_noise_path(c, 256, 0.1, k, opt));
  const auto est = autocovariance_estimate(paths, 0);
  const double target = oracle::k_h(0.0, c);
  for (std::size_t comp = 0; comp < 4; ++comp) EXPECT_NEAR(est.value[0][comp], target, 0.1 * target);
}

TEST(Noise, RejectsBadSpectrumAndGrid) {
  try {
    sample_noise_path([](double w) { return w < 1.0 ? -1.0 : 1.0; }, 1.0, 64, 0.1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::spectrum);
  }
  try {
    sample_noise_path(vacuum_exponential(1.0), 1, 0.1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::grid);
  }
  EXPECT_THROW(sample_noise_path(vacuum_exponential(1.0), 64, 0.0, 1), Error);
}

TEST(Noise, CustomSpectrumWhiteLevel) {
  // Flat S = s0 on the grid band gives c_0 = s0 / dtau.
  const double dtau = 0.05;
  std::vector<NoisePath> paths;
  for (std::uint64_t k = 0; k < 300; ++k) {
    paths.push_back(sample_noise_path([](double) { return 2.0; }, 1.0, 256, dtau, k));
  }
  const auto est = autocovariance_estimate(paths, 3);
  for (std::size_t comp = 0; comp < 4; ++comp) {
    EXPECT_NEAR(est.value[0][comp], 2.0 / dtau, 0.1 * 2.0 / dtau);
    EXPECT_NEAR(est.value[2][comp], 0.0, 0.1 * 2.0 / dtau);
  }
}
