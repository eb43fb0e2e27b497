#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tandem/radio.hpp"

using namespace tandem;
using tandem::testing::grid_scenario;
using tandem::testing::make_cell;

namespace {

// Hand-evaluated 38.901 closed forms (computed outside the code base).
constexpr double kUmaNlos500 = 125.723547944362;
constexpr double kUmaNlos100 = 98.845237726074;
constexpr double kUmaLos100 = 78.945870812865;
constexpr double kUmaLos500 = 96.949298189875;
constexpr double kUmiNlos200 = 115.629693023169;
constexpr double kUmiLos200 = 91.987606771311;

// Empirical correlation at an integer lag along both axes.
double correlogram(const std::vector<double>& f, int nx, int ny, int lag) {
  const double mean = std::accumulate(f.begin(), f.end(), 0.0) / f.size();
  double var = 0.0;
  for (double v : f) var += (v - mean) * (v - mean);
  var /= f.size();
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x + lag < nx; ++x, ++n) sum += (f[y * nx + x] - mean) * (f[y * nx + x + lag] - mean);
  for (int y = 0; y + lag < ny; ++y)
    for (int x = 0; x < nx; ++x, ++n) sum += (f[y * nx + x] - mean) * (f[(y + lag) * nx + x] - mean);
  return sum / n / var;
}

ShadowField zero_field(const Scenario& s) {
  return ShadowField(s.area.nx(), s.area.ny(), 0,
                     std::vector<std::vector<double>>(s.cells.size(), std::vector<double>(s.pixels.size(), 0.0)));
}

}  // namespace

TEST(PathLoss, UmaNlosMatchesHandEvaluation) {
  EXPECT_NEAR(propagation_loss(Environment::UrbanMacro, 2.16e9, 25.0, 1.5, 500.0), kUmaNlos500, 1e-9);
  EXPECT_NEAR(propagation_loss(Environment::UrbanMacro, 2.16e9, 25.0, 1.5, 100.0), kUmaNlos100, 1e-9);
}

TEST(PathLoss, LosBranchesMatchHandEvaluation) {
  // 100 m is below the breakpoint (about 346 m), 500 m above it.
  EXPECT_NEAR(propagation_loss(Environment::UrbanMacro, 2.16e9, 25.0, 1.5, 100.0, LinkCondition::Los), kUmaLos100,
              1e-9);
  EXPECT_NEAR(propagation_loss(Environment::UrbanMacro, 2.16e9, 25.0, 1.5, 500.0, LinkCondition::Los), kUmaLos500,
              1e-9);
}

TEST(PathLoss, UmiMatchesHandEvaluation) {
  EXPECT_NEAR(propagation_loss(Environment::UrbanMicro, 3.655e9, 10.0, 1.5, 200.0), kUmiNlos200, 1e-9);
  EXPECT_NEAR(propagation_loss(Environment::UrbanMicro, 3.655e9, 10.0, 1.5, 200.0, LinkCondition::Los), kUmiLos200,
              1e-9);
}

TEST(PathLoss, NlosNeverBelowLos) {
  for (auto env : {Environment::UrbanMacro, Environment::UrbanMicro})
    for (double d = 1.0; d < 5000.0; d *= 1.3)
      EXPECT_GE(propagation_loss(env, 2.16e9, 25.0, 1.5, d), propagation_loss(env, 2.16e9, 25.0, 1.5, d,
                                                                              LinkCondition::Los));
}

TEST(PathLoss, BoresightCellMatchesPropagationLoss) {
  const Site site{"A", {0, 0}, Environment::UrbanMacro};
  CellDef cell = make_cell("c", "A", 0, Layer::Capacity, 2.16e9, 0.0);
  EXPECT_NEAR(path_loss(cell, site, {500.0, 0.0}), kUmaNlos500, 1e-9);
}

TEST(PathLoss, MonotoneInDistance) {
  const Site site{"A", {0, 0}, Environment::UrbanMacro};
  const CellDef cell = make_cell("c", "A", 0, Layer::Capacity, 2.16e9, 0.0);
  EXPECT_GT(path_loss(cell, site, {1000.0, 0.0}), path_loss(cell, site, {500.0, 0.0}));
  double prev = path_loss(cell, site, {1.0, 0.0});
  for (double d = 2.0; d < 8000.0; d *= 1.1) {
    const double pl = path_loss(cell, site, {d, 0.0});
    EXPECT_GT(pl, prev) << d;
    prev = pl;
  }
}

TEST(PathLoss, MonotoneInFrequency) {
  const Site site{"A", {0, 0}, Environment::UrbanMacro};
  const CellDef hi = make_cell("h", "A", 0, Layer::Capacity, 3.655e9);
  const CellDef lo = make_cell("l", "A", 0, Layer::Coverage, 0.773e9);
  for (double d : {10.0, 100.0, 500.0, 2000.0}) EXPECT_GT(path_loss(hi, site, {d, 0}), path_loss(lo, site, {d, 0}));
}

TEST(PathLoss, DistanceClampedAtOneMetre) {
  const Site site{"A", {50, 50}, Environment::UrbanMacro};
  const CellDef cell = make_cell("c", "A", 0, Layer::Coverage, 0.773e9);
  EXPECT_DOUBLE_EQ(path_loss(cell, site, {50, 50}), path_loss(cell, site, {51, 50}));
}

TEST(PathLoss, SectorPatternAttenuatesOffBoresight) {
  const Site site{"A", {0, 0}, Environment::UrbanMacro};
  const CellDef cell = make_cell("c", "A", 0, Layer::Capacity, 2.16e9, 90.0);  // points north (+y)
  const double base = propagation_loss(Environment::UrbanMacro, 2.16e9, 25.0, 1.5, 500.0);
  EXPECT_NEAR(path_loss(cell, site, {0, 500}), base, 1e-9);
  // 65 degrees off boresight: 12 dB; behind the antenna: the 30 dB floor.
  const double th = (90.0 - 65.0) * std::numbers::pi / 180.0;
  EXPECT_NEAR(path_loss(cell, site, {500 * std::cos(th), 500 * std::sin(th)}), base + 12.0, 1e-9);
  EXPECT_NEAR(path_loss(cell, site, {0, -500}), base + 30.0, 1e-9);
}

TEST(LinkModel, MatchesPathLossEverywhere) {
  Scenario s = grid_scenario({{200, 300}, {800, 700}}, 1);
  s.sites[1].environment = Environment::UrbanMicro;
  s.cells[1].azimuth_deg = 30.0;
  s.cells[3].azimuth_deg = 250.0;
  s.cells[2].height_m = 10.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (bool tilt : {false, true}) {
    PropagationConfig cfg;
    cfg.use_tilt = tilt;
    const LinkModel lm(s, cfg);
    for (int i = 0; i < 500; ++i) {
      const Position p{u(rng), u(rng)};
      for (CellIndex c = 0; c < s.cells.size(); ++c)
        for (auto cond : {LinkCondition::Los, LinkCondition::Nlos}) {
          const double ref = path_loss(s.cells[c], s.site_of(c), p, cfg, cond);
          EXPECT_NEAR(lm.loss_db(c, p, cond), ref, 1e-9 * std::abs(ref));
        }
    }
  }
}

TEST(Rsrp, ArithmeticLinkBudget) {
  Scenario s = grid_scenario({{500, 500}}, 1);
  const auto field = zero_field(s);
  const Position p{800, 500};
  const double pl = path_loss(s.cells[1], s.sites[0], p);
  const double expected_wideband = 46.0 - pl;
  EXPECT_NEAR(received_power_dbm(s, 1, p, field), expected_wideband, 1e-9);
  EXPECT_NEAR(rsrp(s, 1, p, field), expected_wideband - 20.0, 1e-9);  // 100 PRBs
}

TEST(Rsrp, ShadowingIsAdditiveAndPixelResolved) {
  Scenario s = grid_scenario({{500, 500}}, 0);
  auto values = std::vector<std::vector<double>>(1, std::vector<double>(s.pixels.size(), 0.0));
  const Position p{812, 534};
  values[0][s.pixel_index(p)] = 6.0;
  const ShadowField shadowed(s.area.nx(), s.area.ny(), 0, values);
  const auto flat = zero_field(s);
  EXPECT_NEAR(rsrp(s, 0, p, shadowed) - rsrp(s, 0, p, flat), 6.0, 1e-12);
  const Position q{899, 501};  // same pixel
  EXPECT_EQ(s.pixel_index(p), s.pixel_index(q));
  EXPECT_NEAR(rsrp(s, 0, q, shadowed) - rsrp(s, 0, q, flat), 6.0, 1e-12);
}

TEST(Noise, ThermalPlusFigure) {
  const CellDef cell = make_cell("c", "A", 0, Layer::Capacity, 2.16e9);
  EXPECT_NEAR(noise_power_dbm(cell, PropagationConfig{}), -174.0 + 10.0 * std::log10(20e6) + 9.0, 1e-12);
}

TEST(Sinr, SingleCellEqualsSnr) {
  Scenario s = grid_scenario({{500, 500}}, 0);
  const auto field = zero_field(s);
  const Position p{700, 650};
  const std::vector<char> tx{1};
  const double snr = received_power_dbm(s, 0, p, field) - noise_power_dbm(s.cells[0], {});
  EXPECT_NEAR(sinr(s, p, 0, tx, field), snr, 1e-9);
}

TEST(Sinr, EqualInterfererGivesZeroDb) {
  // Two co-sited co-channel omni cells: identical received power.
  Scenario s = grid_scenario({{500, 500}}, 2);
  const auto field = zero_field(s);
  const std::vector<char> tx{0, 1, 1};
  const Position p{520, 500};
  // S / (S + N) with S the common received power
  const double s_mw = db_to_linear(received_power_dbm(s, 1, p, field));
  const double n_mw = db_to_linear(noise_power_dbm(s.cells[1], {}));
  EXPECT_NEAR(sinr(s, p, 1, tx, field), linear_to_db(s_mw / (s_mw + n_mw)), 1e-9);
  EXPECT_NEAR(sinr(s, p, 1, tx, field), 0.0, 1e-4);
}

TEST(Sinr, ThreeCellBruteForce) {
  Scenario s = grid_scenario({{100, 100}, {900, 200}, {500, 900}}, 1);
  PropagationConfig cfg;
  cfg.shadowing_sigma_db = 6.0;
  cfg.shadowing_dcorr_m = 50.0;
  const auto field = generate_shadow_field(s, cfg, 11);
  const std::vector<char> tx(s.cells.size(), 1);
  const Position p{430, 480};
  for (CellIndex serving : {CellIndex{1}, CellIndex{3}, CellIndex{5}}) {
    // Independent linear summation over the capacity carrier.
    double interference_mw = 0.0;
    for (CellIndex c : {CellIndex{1}, CellIndex{3}, CellIndex{5}}) {
      if (c == serving) continue;
      const double dbm = 46.0 - path_loss(s.cells[c], s.site_of(c), p) + field.at(c, s.pixel_index(p));
      interference_mw += std::pow(10.0, dbm / 10.0);
    }
    const double sig_dbm = 46.0 - path_loss(s.cells[serving], s.site_of(serving), p) +
                           field.at(serving, s.pixel_index(p));
    const double noise_mw = std::pow(10.0, (-174.0 + 10.0 * std::log10(20e6) + 9.0) / 10.0);
    const double ref = std::pow(10.0, sig_dbm / 10.0) / (noise_mw + interference_mw);
    const double got = std::pow(10.0, sinr(s, p, serving, tx, field, cfg) / 10.0);
    EXPECT_NEAR(got / ref, 1.0, 1e-9);
  }
}

TEST(Sinr, MoreInterferersNeverHelp) {
  Scenario s = grid_scenario({{100, 100}, {900, 200}, {500, 900}, {800, 800}}, 1);
  const auto field = generate_shadow_field(s, PropagationConfig{}, 5);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Position p{u(rng), u(rng)};
    std::vector<char> small(s.cells.size(), 0), large(s.cells.size(), 0);
    small[1] = large[1] = 1;
    for (CellIndex c = 2; c < s.cells.size(); ++c) {
      const bool in_small = (rng() & 3) == 0;
      small[c] = in_small;
      large[c] = in_small || (rng() & 1);
    }
    EXPECT_LE(sinr(s, p, 1, large, field), sinr(s, p, 1, small, field) + 1e-12);
  }
}

TEST(Sinr, OffCarrierAndOffCellsDoNotInterfere) {
  Scenario s = grid_scenario({{500, 500}, {600, 500}}, 1);
  const auto field = zero_field(s);
  const Position p{300, 500};
  const std::vector<char> only{1, 0, 0, 0};
  const std::vector<char> with_other_carrier{1, 1, 0, 1};
  EXPECT_DOUBLE_EQ(sinr(s, p, 0, only, field), sinr(s, p, 0, with_other_carrier, field));
}

TEST(Sinr, InactiveServingIsContractViolation) {
  Scenario s = grid_scenario({{500, 500}}, 1);
  const auto field = zero_field(s);
  const std::vector<char> tx{1, 0};
  EXPECT_THROW(sinr(s, {100, 100}, 1, tx, field), std::logic_error);
}

TEST(SpectralEfficiency, TruncationPoints) {
  EXPECT_EQ(spectral_efficiency(-15.0), 0.0);
  EXPECT_NEAR(spectral_efficiency(0.0), 0.6, 1e-12);
  EXPECT_EQ(spectral_efficiency(40.0), 4.4);
}

TEST(SpectralEfficiency, ClosedFormMidRange) {
  for (double s = -10.0; s <= 22.0; s += 0.37) {
    const double ref = std::min(4.4, 0.6 * std::log2(1.0 + std::pow(10.0, s / 10.0)));
    EXPECT_NEAR(spectral_efficiency(s), ref, 1e-9 * ref) << s;
  }
}

TEST(SpectralEfficiency, MonotoneAndBounded) {
  double prev = 0.0;
  for (double s = -40.0; s <= 60.0; s += 0.01) {
    const double se = spectral_efficiency(s);
    EXPECT_GE(se, prev);
    EXPECT_GE(se, 0.0);
    EXPECT_LE(se, 4.4);
    prev = se;
  }
}

TEST(ShadowField, ZeroSigmaIsExactlyZero) {
  PropagationConfig cfg;
  cfg.shadowing_sigma_db = 0.0;
  const Scenario s = grid_scenario({{500, 500}}, 1);
  const auto field = generate_shadow_field(s, cfg, 4);
  for (CellIndex c = 0; c < s.cells.size(); ++c)
    for (double v : field.cell_map(c)) EXPECT_EQ(v, 0.0);
}

TEST(ShadowField, DeterministicPerSeed) {
  const Scenario s = grid_scenario({{500, 500}}, 2);
  EXPECT_EQ(generate_shadow_field(s, {}, 7), generate_shadow_field(s, {}, 7));
  EXPECT_NE(generate_shadow_field(s, {}, 7), generate_shadow_field(s, {}, 8));
}

TEST(ShadowField, CellsAreIndependent) {
  Scenario s = grid_scenario({{500, 500}}, 1, 5000.0);
  PropagationConfig cfg;
  cfg.shadowing_dcorr_m = 100.0;
  const auto field = generate_shadow_field(s, cfg, 3);
  const auto a = field.cell_map(0), b = field.cell_map(1);
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  EXPECT_LT(std::abs(ab / std::sqrt(aa * bb)), 0.1);
}

TEST(ShadowField, StatisticsOnLargeGrid) {
  const int n = 200;
  const double sigma = 6.0, dcorr = 50.0, spacing = 10.0;
  const auto f = correlated_gaussian_field(n, n, spacing, sigma, dcorr, 21);
  const double mean = std::accumulate(f.begin(), f.end(), 0.0) / f.size();
  double var = 0.0;
  for (double v : f) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / f.size());
  EXPECT_NEAR(sd, sigma, 0.1 * sigma);
  EXPECT_NEAR(mean, 0.0, 1.0);
  const double rho = correlogram(f, n, n, static_cast<int>(dcorr / spacing));
  EXPECT_NEAR(rho, std::exp(-1.0), 0.15);
}

TEST(Conversions, DbRoundTrip) {
  for (double db = -200.0; db <= 200.0; db += 0.731) {
    EXPECT_NEAR(linear_to_db(db_to_linear(db)), db, 1e-12 * std::max(1.0, std::abs(db)));
    const double lin = std::pow(10.0, db / 20.0);
    EXPECT_NEAR(db_to_linear(linear_to_db(lin)) / lin, 1.0, 1e-12);
  }
  EXPECT_NEAR(dbm_to_w(46.0), 39.810717055349734, 1e-12);
}

TEST(PropagationConfig, RejectsInvalidParameters) {
  PropagationConfig cfg;
  cfg.sinr_min_db = 30.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.shannon_alpha = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.shannon_alpha = 1.0;
  EXPECT_NO_THROW(cfg.validate());
}
