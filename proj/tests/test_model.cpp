#include <cmath>
#include <string>

#include "doctest.h"
#include "edt/model.hpp"
#include "edt/rng.hpp"
#include "edt/scenario.hpp"
#include "fixtures.hpp"

using namespace edt;

namespace {

// Runs fn, expects std::domain_error whose message mentions `needle`.
template <class F>
void throws_mentioning(F&& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected a domain_error mentioning \"" << needle << "\"");
  } catch (const std::domain_error& e) {
    CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                  "message \"" << e.what() << "\" does not mention \"" << needle
                               << "\"");
  }
}

}  // namespace

TEST_CASE("distortion is exactly zero at full payload and matches the closed form") {
  CompressionParams cp;  // a = 0.35, b = 19.9
  CHECK(distortion(1.0, cp) == 0.0);
  CHECK(distortion(0.5, cp) == doctest::Approx(5.463756483653318).epsilon(1e-12));
  CHECK_THROWS_AS(distortion(0.0, cp), std::domain_error);
  CHECK_THROWS_AS(distortion(1.5, cp), std::domain_error);
}

TEST_CASE("inverse distortion round-trips to 1e-12 relative") {
  CompressionParams cp;
  CHECK(inverse_distortion(8.0, cp) ==
        doctest::Approx(0.3808123865655752).epsilon(1e-12));
  CHECK(inverse_distortion(15.0, cp) ==
        doctest::Approx(0.20087974170782863).epsilon(1e-12));
  CHECK(inverse_distortion(4.0, cp) ==
        doctest::Approx(0.5925555535141098).epsilon(1e-12));
  CHECK(inverse_distortion(0.0, cp) == 1.0);

  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    double d = rng.next_uniform(0.0, 1000.0);
    double eta = inverse_distortion(d, cp);
    REQUIRE(eta > 0.0);
    REQUIRE(eta <= 1.0);
    CHECK(distortion(eta, cp) == doctest::Approx(d).epsilon(1e-12));
  }
  CHECK_THROWS_AS(inverse_distortion(-1.0, cp), std::domain_error);
}

TEST_CASE("mean gain matches the link-budget closed form") {
  ChannelModel ch = test::reference_channel(0.2);
  CHECK(ch.mean_gain(4.0) == doctest::Approx(78310505254.26117).epsilon(1e-9));
  CHECK(ch.mean_gain(20.0) == doctest::Approx(280172180.9614119).epsilon(1e-9));
  CHECK(ch.mean_gain(100.0) == doctest::Approx(1002374.467254543).epsilon(1e-9));
  CHECK_THROWS_AS(ch.mean_gain(0.0), std::domain_error);
  // margin scales the gain linearly
  ch.snr_margin = 2.5;
  CHECK(ch.mean_gain(4.0) ==
        doctest::Approx(2.5 * 78310505254.26117).epsilon(1e-9));
}

TEST_CASE("fading threshold is the exponential quantile") {
  CHECK(std::fabs(fading_threshold(0.2, Fading::rayleigh) - 1.6094379124341003) <
        1e-9);
  CHECK(std::fabs(fading_threshold(0.6, Fading::rayleigh) - 0.5108256237659907) <
        1e-9);
  CHECK(fading_threshold(1.0, Fading::rayleigh) == 0.0);
  CHECK(fading_threshold(0.2, Fading::none) == 0.0);
  CHECK_THROWS_AS(fading_threshold(0.0, Fading::rayleigh), std::domain_error);
}

TEST_CASE("shannon rate and energy accounting match hand values") {
  CHECK(shannon_rate(1e6, 0.1, 5e6) ==
        doctest::Approx(83048274.50657544).epsilon(1e-9));
  CHECK(shannon_rate(1e6, 0.0, 5e6) == 0.0);

  CompressionParams cp;
  CHECK(processing_energy(0.5e6, 2e6, cp) == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(processing_energy(0.0, 2e6, cp) == 0.0);
  CHECK_THROWS_AS(processing_energy(3e6, 2e6, cp), std::domain_error);

  DeviceParams dev = catalog_device("g1");
  dev.radio.beta_const = 0.0;
  // amplifier draw plus circuitry for a tenth of a second, no payload
  CHECK(total_energy(0.1, 0.1, 0.0, dev) ==
        doctest::Approx(0.03401637931034483).epsilon(1e-12));
  // payload adds its processing cost on top
  CHECK(total_energy(0.1, 0.1, 0.5e6, dev) ==
        doctest::Approx(0.03401637931034483 + 0.025).epsilon(1e-12));
}

TEST_CASE("catalog radios and devices carry the published constants") {
  RadioParams rn = catalog_radio("rn131c");
  CHECK(rn.p_min == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rn.p_max == doctest::Approx(0.2377).epsilon(1e-12));
  CHECK(rn.eta_a == doctest::Approx(0.58).epsilon(1e-12));
  CHECK(rn.e_c_rate == doctest::Approx(0.16775).epsilon(1e-12));
  CHECK(rn.beta_const == doctest::Approx(1e-3).epsilon(1e-12));

  RadioParams rc = catalog_radio("rc2400hp");
  CHECK(rc.p_min == doctest::Approx(0.01122).epsilon(1e-12));
  CHECK(rc.p_max == doctest::Approx(0.10715).epsilon(1e-12));
  CHECK(rc.eta_a == doctest::Approx(0.23).epsilon(1e-12));
  CHECK(rc.e_c_rate == doctest::Approx(0.06015).epsilon(1e-12));

  DeviceParams g1 = catalog_device("g1");
  CHECK(g1.l0 == 2e6);
  CHECK(g1.d_th == 8.0);
  CHECK(g1.priority == 0);
  CHECK(g1.distance == 4.0);
  CHECK(g1.b0 == 240.0);
  CHECK(g1.compression.a == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(g1.compression.b == doctest::Approx(19.9).epsilon(1e-12));
  CHECK(g1.compression.e0_alpha == doctest::Approx(50e-9).epsilon(1e-12));
  CHECK(g1.compression.beta_p == 0.0);

  DeviceParams g2 = catalog_device("g2");
  CHECK(g2.l0 == 1e6);
  CHECK(g2.d_th == 15.0);
  CHECK(g2.priority == 1);
  CHECK(g2.distance == 20.0);

  DeviceParams g3 = catalog_device("g3");
  CHECK(g3.l0 == 1e4);
  CHECK(g3.d_th == 4.0);
  CHECK(g3.priority == 2);
  CHECK(g3.distance == 100.0);
  CHECK(g3.radio.p_max == doctest::Approx(0.10715).epsilon(1e-12));

  CHECK(!catalog_names().empty());
  throws_mentioning([] { catalog_radio("bogus"); }, "bogus");
  throws_mentioning([] { catalog_device("g9"); }, "g9");
}

TEST_CASE("validation failures name the offending key") {
  DeviceParams dev = catalog_device("g1");
  dev.radio.p_min = -1.0;
  throws_mentioning([&] { dev.validate(); }, "p_min");

  dev = catalog_device("g1");
  dev.radio.p_max = dev.radio.p_min / 2;
  throws_mentioning([&] { dev.validate(); }, "p_max");

  dev = catalog_device("g1");
  dev.compression.a = 0.0;
  throws_mentioning([&] { dev.validate(); }, "compression.a");

  dev = catalog_device("g1");
  dev.l0 = 0.0;
  throws_mentioning([&] { dev.validate(); }, "l0");

  dev = catalog_device("g1");
  dev.b0 = -5.0;
  throws_mentioning([&] { dev.validate(); }, "b0");

  ChannelModel ch = test::reference_channel(0.5);
  ch.pr_tx = 1.5;
  throws_mentioning([&] { ch.validate(); }, "pr_tx");
  ch = test::reference_channel(0.5);
  ch.w = 0.0;
  throws_mentioning([&] { ch.validate(); }, "channel.w");
}

TEST_CASE("mode names round-trip") {
  for (CsiMode m : {CsiMode::full_csi, CsiMode::statistical, CsiMode::suboptimal})
    CHECK(mode_from_string(to_string(m)) == m);
  throws_mentioning([] { mode_from_string("psychic"); }, "psychic");
}

TEST_CASE("rng streams are reproducible and tag-separated") {
  Rng a = Rng::stream(42, "alloc", 7);
  Rng b = Rng::stream(42, "alloc", 7);
  Rng c = Rng::stream(42, "alloc", 8);
  Rng d = Rng::stream(42, "admission", 7);
  std::uint64_t a0 = a.next_u64();
  CHECK(a0 == b.next_u64());
  CHECK(a0 != c.next_u64());
  CHECK(a0 != d.next_u64());

  Rng u(123);
  for (int i = 0; i < 1000; ++i) {
    double x = u.next_double();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    double e = u.next_exponential();
    CHECK(e >= 0.0);
    std::size_t k = u.next_index(17);
    CHECK(k < 17);
  }
}
