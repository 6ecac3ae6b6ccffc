#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "metrics.hpp"
#include "test_oracles.hpp"

using namespace echobeam;
using namespace echobeam::testing;

TEST_CASE("suppression curves") {
  Rng rng(3);
  const Vec reference = random_vec(rng, 4000);

  SUBCASE("identical signals sit at zero dB") {
    for (double v : erle_curve(reference, reference)) CHECK(v == doctest::Approx(0.0));
  }
  SUBCASE("a ten-to-one amplitude scaling settles at twenty dB") {
    Vec scaled = reference;
    for (double& v : scaled) v *= 0.1;
    const Vec curve = erle_curve(reference, scaled);
    for (std::size_t n = 100; n < curve.size(); ++n) CHECK(curve[n] == doctest::Approx(20.0));
  }
  SUBCASE("a silent output clips at the ceiling") {
    const Vec curve = erle_curve(reference, Vec(reference.size(), 0.0));
    for (std::size_t n = 100; n < curve.size(); ++n) CHECK(curve[n] == kMetricClipDb);
  }
  SUBCASE("bad smoothing factors are rejected") {
    CHECK_THROWS_AS(erle_curve(reference, reference, 1.0), ConfigError);
    CHECK_THROWS_AS(erle_curve(reference, Vec(10, 0.0)), ConfigError);
  }
}

TEST_CASE("interval energy ratios") {
  Rng rng(5);
  const Vec reference = random_vec(rng, 2000);

  SUBCASE("identical signals give zero dB") {
    CHECK(interval_ratio_db(reference, reference, 0, 2000) == doctest::Approx(0.0));
  }
  SUBCASE("scaling by the square root of ten gives ten dB") {
    Vec scaled = reference;
    for (double& v : scaled) v /= std::sqrt(10.0);
    CHECK(interval_ratio_db(reference, scaled, 0, 2000) == doctest::Approx(10.0));
  }
  SUBCASE("the interval value matches the curve's stationary asymptote") {
    Vec scaled = reference;
    for (double& v : scaled) v *= 0.25;  // 12.0412 dB
    const double interval = interval_ratio_db(reference, scaled, 1000, 2000);
    const Vec curve = erle_curve(reference, scaled);
    CHECK(std::abs(interval - curve.back()) < 0.1);
  }
  SUBCASE("disjoint intervals aggregate consistently") {
    Vec processed = random_vec(rng, 2000, 0.5);
    const double full = interval_ratio_db(reference, processed, 0, 2000);
    const double a = energy_of(reference, 0, 700) / std::pow(10.0, 0.1 * interval_ratio_db(reference, processed, 0, 700));
    const double b = energy_of(reference, 700, 2000) /
                     std::pow(10.0, 0.1 * interval_ratio_db(reference, processed, 700, 2000));
    const double recombined = 10.0 * std::log10(energy_of(reference, 0, 2000) / (a + b));
    CHECK(recombined == doctest::Approx(full).epsilon(1e-9));
  }
  SUBCASE("dB metrics are invariant to a common scale") {
    Vec processed = random_vec(rng, 2000, 0.3);
    const double base = interval_ratio_db(reference, processed, 0, 2000);
    Vec ref_scaled = reference, proc_scaled = processed;
    for (double& v : ref_scaled) v *= 7.5;
    for (double& v : proc_scaled) v *= 7.5;
    CHECK(interval_ratio_db(ref_scaled, proc_scaled, 0, 2000) == doctest::Approx(base));
  }
}

TEST_CASE("component loss") {
  Rng rng(7);
  const Vec reference = random_vec(rng, 500);
  const Vec zeros(500, 0.0);

  SUBCASE("a perfect output has zero loss") {
    CHECK(component_loss(zeros, zeros, reference, reference) == doctest::Approx(0.0));
  }
  SUBCASE("a unit echo vector with weight two contributes two") {
    Vec echo(500, 0.0);
    echo[17] = 1.0;
    CHECK(component_loss(echo, zeros, reference, reference, 2.0, 1.0) == doctest::Approx(2.0));
  }
  SUBCASE("the loss grows with the echo weight") {
    const Vec echo = random_vec(rng, 500, 0.2);
    const Vec noise = random_vec(rng, 500, 0.2);
    const Vec speech = random_vec(rng, 500, 0.2);
    double prev = 0.0;
    for (double alpha : {0.5, 1.0, 2.0, 4.0}) {
      const double loss = component_loss(echo, noise, speech, reference, alpha, 1.0);
      CHECK(loss > prev);
      prev = loss;
    }
  }
  SUBCASE("the loss is nonnegative and zero only for the ideal output") {
    const double loss = component_loss(zeros, zeros, zeros, reference);
    CHECK(loss > 0.0);  // distortion term alone
    CHECK(component_loss(zeros, zeros, reference, reference) == doctest::Approx(0.0));
  }
}

TEST_CASE("speech distortion ratio") {
  Rng rng(9);
  const Vec reference = random_vec(rng, 4000);

  SUBCASE("a perfect output clips at the ceiling") {
    CHECK(speech_distortion_ratio(reference, reference) == kMetricClipDb);
  }
  SUBCASE("a silent output scores zero dB") {
    CHECK(speech_distortion_ratio(reference, Vec(reference.size(), 0.0)) == doctest::Approx(0.0));
  }
  SUBCASE("gain alignment removes pure scaling") {
    Vec scaled = reference;
    for (double& v : scaled) v *= 0.03;
    CHECK(speech_distortion_ratio(reference, scaled) == kMetricClipDb);
  }
  SUBCASE("an orthogonal perturbation at minus twenty dB reads twenty dB") {
    // Construct noise orthogonal to the reference with 1% of its energy.
    Vec noise = random_vec(rng, reference.size());
    double cross = 0.0, ref_energy = 0.0;
    for (std::size_t n = 0; n < reference.size(); ++n) {
      cross += noise[n] * reference[n];
      ref_energy += reference[n] * reference[n];
    }
    for (std::size_t n = 0; n < reference.size(); ++n)
      noise[n] -= (cross / ref_energy) * reference[n];
    const double noise_energy = energy_of(noise);
    const double target = std::sqrt(0.01 * ref_energy / noise_energy);
    Vec processed = reference;
    for (std::size_t n = 0; n < reference.size(); ++n) processed[n] += target * noise[n];
    CHECK(speech_distortion_ratio(reference, processed) == doctest::Approx(20.0).epsilon(0.005));
  }
}

TEST_CASE("run evaluation splits phases at the onset and renders CSV") {
  PipelineOutput output;
  Rng rng(11);
  const std::size_t samples = 1000;
  const Vec echo_ref = random_vec(rng, samples);
  const Vec noise_ref = random_vec(rng, samples);
  const Vec speech_ref = random_vec(rng, samples);
  output.valid_samples = samples;

  auto half = [&](const Vec& v, double gain) {
    Vec out = v;
    for (double& x : out) x *= gain;
    return out;
  };
  output.echo = {half(echo_ref, 0.5), half(echo_ref, 0.25), half(echo_ref, 0.1)};
  output.noise = {noise_ref, half(noise_ref, 0.5), half(noise_ref, 0.25)};
  output.speech = {speech_ref, speech_ref, speech_ref};
  output.mixture = output.speech;

  const MetricReport report = evaluate_run(echo_ref, noise_ref, speech_ref, output, 400);
  REQUIRE(report.rows.size() == 6);
  const MetricRow* aec_single = report.find("aec", "single_talk");
  REQUIRE(aec_single != nullptr);
  CHECK(aec_single->erle_db == doctest::Approx(6.0206).epsilon(1e-3));
  CHECK(aec_single->noise_supp_db == doctest::Approx(0.0));
  const MetricRow* pf_double = report.find("pf", "double_talk");
  REQUIRE(pf_double != nullptr);
  CHECK(pf_double->erle_db == doctest::Approx(20.0).epsilon(1e-3));
  CHECK(pf_double->sdr_db == kMetricClipDb);

  const std::string csv = metrics_csv_rows("scn_1", report);
  CHECK(csv.find("scn_1,aec,single_talk,") != std::string::npos);
  CHECK(csv.find("scn_1,pf,double_talk,") != std::string::npos);
  CHECK(std::string(kMetricsCsvHeader) == "scenario_id,tap,phase,E_dB,N_dB,SDR_dB,loss");

  const Vec curve = erle_curve(echo_ref, output.echo.aec);
  const std::string curve_csv = erle_curve_csv(curve);
  CHECK(curve_csv.rfind("sample_index,erle_dB\n", 0) == 0);
}
