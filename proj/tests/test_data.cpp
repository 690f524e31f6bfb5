#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <doctest.h>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gvw/data_io.hpp"
#include "gvw/econbase.hpp"
#include "gvw/error.hpp"
#include "gvw/steady_state.hpp"
#include "gvw/svg.hpp"

using namespace gvw;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("read_csv") {
  SUBCASE("well formed, comments and extra columns") {
    std::istringstream in(
        "# campaign\n"
        "response,note,t,budget\n"
        "0.1,a,0,5\n"
        "\n"
        "0.2,b,1,6\n"
        "0.25,c,2,0\n");
    const auto r = read_csv(in);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == CampaignRecord{0, 5, 0.1});
    CHECK(r[2] == CampaignRecord{2, 0, 0.25});
  }
  SUBCASE("non-numeric budget names its line") {
    std::istringstream in("t,budget,response\n0,1,0.1\n1,1,0.1\n2,1,0.1\n3,abc,0.2\n");
    const std::string msg = message_of([&] { read_csv(in, {}, "f.csv"); });
    CHECK(msg.find("f.csv:5") != std::string::npos);
  }
  SUBCASE("errors") {
    std::istringstream missing("t,response\n0,1\n");
    CHECK_THROWS_AS(read_csv(missing), DataError);
    std::istringstream empty("t,budget,response\n");
    CHECK_THROWS_AS(read_csv(empty), DataError);
    std::istringstream negative("t,budget,response\n0,-1,0.1\n");
    CHECK_THROWS_AS(read_csv(negative), DataError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DataError);
  }
}

TEST_CASE("csv round trip is byte identical") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CampaignRecord> recs;
  for (int i = 0; i < 50; ++i) recs.push_back({i * 0.1 + u(rng), u(rng) * 1e4, u(rng) / 3.0});
  std::ostringstream first;
  write_csv(first, recs);
  const std::string path = "csv_roundtrip_test.csv";
  {
    std::ofstream f(path);
    f << first.str();
  }
  const auto loaded = load_csv(path);
  CHECK(loaded == recs);
  std::ostringstream second;
  write_csv(second, loaded);
  CHECK(second.str() == first.str());
  CHECK(first.str().rfind("t,budget,response\n", 0) == 0);
  std::remove(path.c_str());
}

TEST_CASE("normalize") {
  const std::vector<CampaignRecord> recs{{0, 1, 10}, {1, 1, 40}, {2, 1, 25}};
  NormalizationConfig c;
  c.market_potential = 40;
  CHECK(normalize(recs, c).samples[1].share == 1.0);
  c.market_potential = 80;
  for (const auto& s : normalize(recs, c).samples) CHECK(s.share <= 0.5);
  c.market_potential = default_market_potential(recs);
  const auto tr = normalize(recs, c);
  CHECK(tr.samples[1].share == doctest::Approx(1 / 1.05));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(std::abs(tr.samples[i].share * c.market_potential - recs[i].response) <=
          1e-12 * recs[i].response);
  }
  c.market_potential = 20;
  const std::string msg = message_of([&] { normalize(recs, c); });
  CHECK(msg.find("2") != std::string::npos);
  CHECK_THROWS_AS(normalize(recs, c), DataError);

  NormalizationConfig shift;
  shift.market_potential = 100;
  shift.time_origin = 1;
  shift.time_scale = 0.5;
  CHECK(normalize(recs, shift).samples[2].t == doctest::Approx(0.5));
}

TEST_CASE("budget patterns") {
  const auto pulse = make_budget_fn(parse_budget_pattern("pulse:1,3:10:5"), 100, 1);
  CHECK(pulse(0) == 1.0);
  CHECK(pulse(12) == 0.0);
  CHECK(pulse(16) == 3.0);
  CHECK(pulse(31) == 1.0);
  CHECK(make_budget_fn(parse_budget_pattern("const:2.5"), 10, 1)(7) == 2.5);
  const auto walk = make_budget_fn(parse_budget_pattern("walk:0.5:2:0.3:2"), 100, 4);
  for (double t = 0; t <= 100; t += 0.7) {
    CHECK(walk(t) >= 0.5);
    CHECK(walk(t) <= 2.0);
  }
  CHECK(walk(2.1) == walk(3.9));
  CHECK_THROWS_AS(parse_budget_pattern("pulse:1:0:5"), DomainError);
  CHECK_THROWS_AS(parse_budget_pattern("sine:1"), DomainError);
  CHECK_THROWS_AS(parse_budget_pattern("const:-1"), DomainError);
}

TEST_CASE("generate_synthetic") {
  SyntheticSpec spec;
  spec.true_params = {0.1, 0.7, 0.8, 0.01};
  spec.budget = parse_budget_pattern("pulse:1,3:20:20");
  spec.n_samples = 500;
  const Trajectory clean = generate_synthetic(spec);
  CHECK(clean.size() == 500);
  CHECK(clean.meta.at("source") == "synthetic");

  spec.noise_sigma = 0.01;
  const Trajectory noisy = generate_synthetic(spec);
  const Trajectory again = generate_synthetic(spec);
  CHECK(noisy.samples == again.samples);

  double sum = 0, sq = 0;
  int n = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const double x = clean.samples[i].share;
    if (x < 0.05 || x > 0.95) continue;
    const double d = noisy.samples[i].share - x;
    sum += d;
    sq += d * d;
    ++n;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(n > 300);
  CHECK(sd >= 0.008);
  CHECK(sd <= 0.012);

  spec.n_samples = 1;
  CHECK_THROWS_AS(generate_synthetic(spec), DomainError);
}

TEST_CASE("trajectory json round trip") {
  SyntheticSpec spec;
  spec.budget = parse_budget_pattern("walk:0.5:2:0.3:2");
  spec.n_samples = 30;
  const Trajectory tr = generate_synthetic(spec);
  const Trajectory back = trajectory_from_json(nlohmann::json::parse(to_json(tr).dump()));
  CHECK(back.samples == tr.samples);
  CHECK(back.meta == tr.meta);
}

TEST_CASE("econbase ols") {
  const EconParams truth{1.3, 0.6, 0.25};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  Trajectory tr;
  double s = 0.8;
  for (int i = 0; i < 40; ++i) {
    const double b = u(rng);
    if (i > 0) s = predict_econ(truth, s, b);
    tr.samples.push_back({double(i), b, s});
  }
  const OlsFit fit = fit_ols(tr);
  CHECK(std::abs(fit.params.c0 - truth.c0) < 1e-8);
  CHECK(std::abs(fit.params.c1 - truth.c1) < 1e-8);
  CHECK(std::abs(fit.params.c2 - truth.c2) < 1e-8);
  CHECK(fit.residuals.size() == 39);
  CHECK_FALSE(fit.pseudo_inverse);

  SUBCASE("recursive prediction reproduces the series") {
    double p = tr.samples[0].share;
    for (std::size_t i = 1; i < tr.size(); ++i) {
      p = predict_econ(fit.params, p, tr.samples[i].budget);
      CHECK(std::abs(p - tr.samples[i].share) <= 1e-6 * tr.samples[i].share);
    }
  }
  SUBCASE("constant series are rank deficient") {
    Trajectory flat;
    for (int i = 0; i < 10; ++i) flat.samples.push_back({double(i), 2.0, 0.4});
    CHECK_THROWS_AS(fit_ols(flat), NumericError);
  }
  SUBCASE("shuffled budgets give no advertising effect") {
    std::mt19937_64 g(5);
    std::normal_distribution<double> eps(0.0, 0.05);
    Trajectory ar;
    double x = 0.3;
    std::vector<double> budgets;
    for (int i = 0; i < 500; ++i) budgets.push_back(u(g));
    for (int i = 0; i < 500; ++i) {
      x = std::exp(0.2 + 0.7 * std::log(x) + eps(g));
      ar.samples.push_back({double(i), budgets[static_cast<std::size_t>(i)], x});
    }
    std::shuffle(budgets.begin(), budgets.end(), g);
    for (int i = 0; i < 500; ++i) ar.samples[static_cast<std::size_t>(i)].budget = budgets[static_cast<std::size_t>(i)];
    CHECK(std::abs(fit_ols(ar).params.c2) < 0.05);
  }
  SUBCASE("errors") {
    Trajectory bad = tr;
    bad.samples[4].budget = 0.0;
    const std::string msg = message_of([&] { fit_ols(bad); });
    CHECK(msg.find("row 5") != std::string::npos);
    Trajectory shortone;
    shortone.samples.assign(tr.samples.begin(), tr.samples.begin() + 4);
    CHECK_THROWS_AS(fit_ols(shortone), DataError);
  }
}

TEST_CASE("econbase prediction and steady state") {
  CHECK(predict_econ({1, 0, 0}, 3.0, 7.0) == 1.0);
  CHECK(predict_econ({1, 1, 0}, 3.0, 7.0) == doctest::Approx(3.0));
  CHECK(steady_state_econ({2, 0, 0.5}, 4.0) == doctest::Approx(4.0));
  const EconParams p{0.7, 0.4, 0.3};
  const double s = steady_state_econ(p, 2.5);
  CHECK(std::abs(predict_econ(p, s, 2.5) - s) <= 1e-10 * s);
  double x = 5.0;
  for (int i = 0; i < 200; ++i) x = predict_econ(p, x, 2.5);
  CHECK(x == doctest::Approx(s).epsilon(1e-10));
  CHECK_THROWS_AS(steady_state_econ({1, 1.0, 0.2}, 1.0), DomainError);
  CHECK_THROWS_AS(predict_econ(p, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(predict_econ({0, 0, 0}, 1.0, 1.0), DomainError);
}

TEST_CASE("compare_models") {
  CompareScenario sc;
  sc.pulse = {1.0, 20.0, 0.0};
  sc.horizon = 80;
  for (int i = 0; i < 30; ++i) sc.budget_grid.push_back(0.1 * std::pow(1000.0, i / 29.0));
  const GvwParams g{0.1, 0.7, 0.8, 0.02};

  for (const EconParams e : {EconParams{0.5, 0.5, 0.3}, EconParams{0.9, 0.2, 0.9},
                             EconParams{1.2, 0.0, 1.5}}) {
    const ModelComparison c = compare_models(g, e, sc);
    CHECK(c.gvw_saturates);
    CHECK_FALSE(c.econ_saturates);
    for (double x : c.gvw_steady) CHECK(x < 1.0);
    CHECK(c.econ_steady.back() > c.econ_steady.front());
    const double k = e.c2 / (1 - e.c1);
    CHECK(c.econ_exponent == doctest::Approx(k));
    CHECK((c.econ_curvature == Curvature::diminishing) == (k < 1));
    CHECK(c.gvw_decay_rate == doctest::Approx(0.02).epsilon(1e-9));
    const auto doc = to_json(c);
    for (const char* slot : {"decay_after_cessation", "steady_state", "diminishing_returns",
                             "saturation"}) {
      CHECK(doc.contains(slot));
    }
  }
  CHECK(compare_models(g, {0.5, 0.5, 0.0}, sc).econ_saturates);
  CHECK(compare_models(g, {0.5, 0.0, 1.0}, sc).econ_curvature == Curvature::constant);
  CompareScenario bad = sc;
  bad.horizon = 10;
  CHECK_THROWS_AS(compare_models(g, {0.5, 0.5, 0.3}, bad), DomainError);
  CHECK_THROWS_AS(compare_models({0.1, 1, 1, 0.0}, {0.5, 0.5, 0.3}, sc), DomainError);
}

TEST_CASE("svg is well-formed with one polyline per series") {
  PlotSpec plot{"A & B <test>", "t", "share", {}};
  for (int k = 0; k < 3; ++k) {
    PlotSeries s{"series " + std::to_string(k), {}, {}};
    for (int i = 0; i < 20; ++i) {
      s.x.push_back(i);
      s.y.push_back(std::sin(i * 0.3 + k));
    }
    plot.series.push_back(s);
  }
  plot.series[1].y[4] = NAN;
  std::istringstream in(render_svg(plot));
  boost::property_tree::ptree tree;
  REQUIRE_NOTHROW(boost::property_tree::read_xml(in, tree));
  const auto& svg = tree.get_child("svg");
  CHECK(svg.get<std::string>("<xmlattr>.viewBox") == "0 0 800 600");
  int polylines = 0;
  for (const auto& child : svg) {
    if (child.first == "polyline") {
      ++polylines;
      const auto points = child.second.get<std::string>("<xmlattr>.points");
      CHECK(points.find("nan") == std::string::npos);
    }
  }
  CHECK(polylines == 3);
  CHECK_THROWS_AS(render_svg({"", "", "", {{"bad", {1, 2}, {1}}}}), DomainError);
}
