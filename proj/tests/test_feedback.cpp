#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "qjf/feedback.hpp"
#include "qjf/io.hpp"
#include "qjf/random.hpp"

using namespace qjf;

namespace {

const FeedbackConfig kPaperConfig{70e-6, 400e-6, 600e-9, true};

std::vector<GateCommand> drain(FeedbackController& c, double t) {
  std::vector<GateCommand> out;
  c.advance_to(t, out);
  return out;
}

// Independent re-derivation of the schedule for an empty photon stream:
// a plain alternating recurrence, sharing no code with the controller.
std::vector<GateCommand> hand_schedule(const FeedbackConfig& cfg, double horizon) {
  std::vector<GateCommand> cmds;
  double deadline = 0.0 + cfg.tau_d;
  bool monitoring = true;
  while (deadline <= horizon) {
    const double actuate = deadline + cfg.latency;
    if (monitoring) {
      cmds.push_back({actuate, GateLevel::Off});
      deadline = actuate + cfg.tau_off;
    } else {
      cmds.push_back({actuate, GateLevel::On});
      deadline = actuate + cfg.tau_d;
    }
    monitoring = !monitoring;
  }
  return cmds;
}

}  // namespace

TEST_CASE("config validation names the violated bound") {
  FeedbackConfig bad = kPaperConfig;
  bad.tau_d = 0.0;
  CHECK_THROWS_WITH_AS(bad.validate(), "feedback: tau_d must be > 0", std::invalid_argument);
  bad = kPaperConfig;
  bad.tau_off = -1e-6;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = kPaperConfig;
  bad.latency = -1e-9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("init arms the first window") {
  FeedbackController c(kPaperConfig, 0.0);
  REQUIRE(c.next_deadline().has_value());
  CHECK(*c.next_deadline() == 0.0 + 70e-6);
  CHECK(c.state().phase == ControllerPhase::Monitoring);
  CHECK(c.state().last_command == GateLevel::On);

  FeedbackController late(kPaperConfig, 1.0);
  CHECK(*late.next_deadline() == 1.0 + 70e-6);
  CHECK(*late.next_deadline() == doctest::Approx(1.00007).epsilon(1e-12));

  FeedbackConfig disabled = kPaperConfig;
  disabled.enabled = false;
  FeedbackController off(disabled, 0.0);
  CHECK_FALSE(off.next_deadline().has_value());
  std::vector<GateCommand> cmds;
  off.advance_to(10.0, cmds);
  CHECK(cmds.empty());
}

TEST_CASE("a photon while monitoring resets the window") {
  FeedbackController c(kPaperConfig, 0.0);
  std::vector<GateCommand> cmds;
  c.observe_photon(50e-6, cmds);
  CHECK(cmds.empty());
  CHECK(*c.next_deadline() == 50e-6 + 70e-6);
}

TEST_CASE("a photon while blanked is ignored and tallied") {
  FeedbackController c(kPaperConfig, 0.0);
  std::vector<GateCommand> cmds;
  c.advance_to(70e-6, cmds);  // window expires
  REQUIRE(cmds.size() == 1);
  CHECK(cmds[0].level == GateLevel::Off);
  CHECK(c.state().phase == ControllerPhase::Blanked);
  const double deadline_before = *c.next_deadline();
  c.observe_photon(100e-6, cmds);
  CHECK(cmds.size() == 1);  // nothing new
  CHECK(*c.next_deadline() == deadline_before);
  CHECK(c.state().ignored_photons == 1);
}

TEST_CASE("out-of-order photons are a hard error") {
  FeedbackController c(kPaperConfig, 0.0);
  std::vector<GateCommand> cmds;
  c.observe_photon(50e-6, cmds);
  CHECK_THROWS_AS(c.observe_photon(49e-6, cmds), std::invalid_argument);
  CHECK_THROWS_AS(c.advance_to(1e-6, cmds), std::invalid_argument);
}

TEST_CASE("hand-traced schedule with the paper constants") {
  // photon at t=0, tau_d=70us, tau_off=400us, latency=0.6us, advance to 600us
  FeedbackController c(kPaperConfig, 0.0);
  std::vector<GateCommand> cmds;
  c.observe_photon(0.0, cmds);
  c.advance_to(600e-6, cmds);
  REQUIRE(cmds.size() == 3);
  CHECK(cmds[0].level == GateLevel::Off);
  CHECK(cmds[1].level == GateLevel::On);
  CHECK(cmds[2].level == GateLevel::Off);
  // Bit-exact doubles of the left-to-right recurrence.
  CHECK(cmds[0].actuate_at == (0.0 + 70e-6) + 600e-9);          // 70.6 us
  CHECK(cmds[1].actuate_at == (cmds[0].actuate_at + 400e-6) + 600e-9);  // 471.2 us
  CHECK(cmds[2].actuate_at == (cmds[1].actuate_at + 70e-6) + 600e-9);   // 541.8 us
  CHECK(format_time(cmds[0].actuate_at) == "7.0599999999999995e-05");
  CHECK(format_time(cmds[1].actuate_at) == "0.00047120000000000002");
  CHECK(format_time(cmds[2].actuate_at) == "0.00054180000000000005");
}

TEST_CASE("continuous photons keep the gate open") {
  FeedbackController c(kPaperConfig, 0.0);
  std::vector<GateCommand> cmds;
  for (int k = 1; k <= 200; ++k) c.observe_photon(k * 10e-6, cmds);
  c.advance_to(200 * 10e-6, cmds);
  CHECK(cmds.empty());
}

TEST_CASE("zero latency, equal constants: strictly periodic switching") {
  FeedbackConfig cfg{100e-6, 100e-6, 0.0, true};
  FeedbackController c(cfg, 0.0);
  std::vector<GateCommand> cmds;
  c.advance_to(1e-3, cmds);
  REQUIRE(cmds.size() >= 9);
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    CHECK(cmds[i].level == (i % 2 == 0 ? GateLevel::Off : GateLevel::On));
    CHECK(cmds[i].actuate_at == doctest::Approx((i + 1) * 100e-6).epsilon(1e-12));
  }
}

TEST_CASE("replay of an empty stream equals the hand recurrence") {
  const auto got = replay(kPaperConfig, {}, 600e-6);
  const auto want = hand_schedule(kPaperConfig, 600e-6);
  REQUIRE(got.size() == want.size());
  REQUIRE(got.size() == 3);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].actuate_at == want[i].actuate_at);  // bit-exact
    CHECK(got[i].level == want[i].level);
  }
}

TEST_CASE("replay: saturating photons produce an empty schedule") {
  std::vector<double> photons;
  for (int k = 0; k < 1000; ++k) photons.push_back(k * 1e-6);
  CHECK(replay(kPaperConfig, photons, 1e-3).empty());
}

TEST_CASE("replay: disabled loop emits nothing") {
  FeedbackConfig disabled = kPaperConfig;
  disabled.enabled = false;
  std::vector<double> photons = {10e-6, 500e-6};
  CHECK(replay(disabled, photons, 1e-3).empty());
}

TEST_CASE("replay rejects unsorted input") {
  CHECK_THROWS_AS(replay(kPaperConfig, {2e-6, 1e-6}, 1e-3), std::invalid_argument);
}

TEST_CASE("replay is a pure function") {
  RngEngine rng(123);
  std::vector<double> photons;
  double t = 0.0;
  while (t < 0.1) {
    t += exponential(rng, 30e3);
    photons.push_back(t);
  }
  const auto a = replay(kPaperConfig, photons, 0.1);
  const auto b = replay(kPaperConfig, photons, 0.1);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].actuate_at == b[i].actuate_at);
    CHECK(a[i].level == b[i].level);
  }
}

TEST_CASE("photon at the exact deadline wins the tie") {
  FeedbackController c(kPaperConfig, 0.0);
  std::vector<GateCommand> cmds;
  c.observe_photon(70e-6, cmds);  // exactly the initial expiry
  CHECK(cmds.empty());
  CHECK(*c.next_deadline() == 70e-6 + 70e-6);
}

TEST_CASE("properties of random-stream schedules") {
  RngEngine rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    // Thin Poisson streams make both expiries and resets common.
    const double rate = 5e3 + 30e3 * uniform01(rng);
    std::vector<double> photons;
    double t = 0.0;
    while (t < 0.05) {
      t += exponential(rng, rate);
      photons.push_back(t);
    }
    const auto cmds = replay(kPaperConfig, photons, 0.05);

    // Alternation: strictly alternating levels, starting with Off.
    for (std::size_t i = 0; i < cmds.size(); ++i) {
      CHECK(cmds[i].level == (i % 2 == 0 ? GateLevel::Off : GateLevel::On));
      if (i > 0) CHECK(cmds[i].actuate_at > cmds[i - 1].actuate_at);
    }

    // Blanking duration: every Off->On actuation gap is the latency-shifted
    // tau_off, bit-exactly.
    for (std::size_t i = 0; i + 1 < cmds.size(); i += 2) {
      CHECK(cmds[i + 1].actuate_at ==
            (cmds[i].actuate_at + kPaperConfig.tau_off) + kPaperConfig.latency);
    }

    // Window soundness: an Off actuation at a implies no photon landed in
    // (a - latency - tau_d, a - latency). The arming photon sits at the left
    // endpoint when the window was photon-started; reconstructing that
    // endpoint by subtraction is off by an ulp, hence the femtosecond guard.
    for (const auto& cmd : cmds) {
      if (cmd.level != GateLevel::Off) continue;
      const double decision = cmd.actuate_at - kPaperConfig.latency;
      for (double p : photons) {
        const bool inside = p > decision - kPaperConfig.tau_d + 1e-15 && p < decision;
        CHECK_FALSE(inside);
      }
    }
  }
}

TEST_CASE("false-trigger probability under a Poisson stream") {
  // Window expiry probability for a homogeneous stream is exp(-R*tau_d).
  const double rate = 30e3;
  RngEngine rng(99);
  FeedbackController c(kPaperConfig, 0.0);
  std::vector<GateCommand> cmds;
  double t = 0.0;
  while (c.state().windows_opened < 30000) {
    t += exponential(rng, rate);
    c.observe_photon(t, cmds);
  }
  c.advance_to(t, cmds);
  const auto& st = c.state();
  const bool window_pending =
      st.phase == ControllerPhase::Monitoring && c.next_deadline().has_value();
  const double settled =
      static_cast<double>(st.windows_opened) - (window_pending ? 1.0 : 0.0);
  const double observed = static_cast<double>(st.windows_expired) / settled;
  const double expected = std::exp(-rate * kPaperConfig.tau_d);  // 0.1225
  CHECK(observed == doctest::Approx(expected).epsilon(0.05));
}
