#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "lscp/io.hpp"

using namespace lscp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("lscp_io_" + std::to_string(counter_++) + "_" +
                                                   std::to_string(::testing::UnitTest::GetInstance()->random_seed()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

json minimal_fit() {
  return json::parse(R"({"window": [0, 10, 0, 10], "data": {"path": "points.csv"}})");
}

}  // namespace

TEST(Config, DefaultsAreResolved) {
  const RunConfig cfg = parse_config(minimal_fit());
  EXPECT_EQ(cfg.mode, "fit");
  EXPECT_EQ(cfg.model.K, 3);
  EXPECT_EQ(cfg.model.r, 2500);
  EXPECT_EQ(cfg.model.m, 16);
  EXPECT_DOUBLE_EQ(cfg.model.covariance.gamma, 1.95);
  EXPECT_EQ(cfg.model.rate_prior.alpha, (std::vector<double>{1.2, 1.2, 1.2}));
  EXPECT_EQ(cfg.model.window, Window(0, 10, 0, 10));
}

TEST(Config, UnknownKeysAreRejectedByName) {
  json j = minimal_fit();
  j["model"] = {{"K", 2}, {"colour", "blue"}};
  try {
    parse_config(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
  j = minimal_fit();
  j["samplr"] = json::object();
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, InvalidValues) {
  json j = minimal_fit();
  j["window"] = {0, 10, 5, 5};
  EXPECT_THROW(parse_config(j), ConfigError);
  j = minimal_fit();
  j["model"] = {{"K", 0}};
  EXPECT_THROW(parse_config(j), ConfigError);
  j = minimal_fit();
  j["sampler"] = {{"iterations", 10}, {"burn_in", 20}};
  EXPECT_THROW(parse_config(j), ConfigError);
  j = minimal_fit();
  j["mode"] = "fly";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = minimal_fit();
  j["model"] = {{"covariance", {{"gamma", 2.5}}}};
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, ResolvedEchoRoundTrips) {
  json j = minimal_fit();
  j["mode"] = "fit-st";
  j["seed"] = 42;
  j["model"] = {{"K", 2}, {"r", 400}};
  j["temporal"] = {{"rate_prior", "ngar1"}};
  const RunConfig a = parse_config(j);
  ASSERT_TRUE(a.temporal.has_value());
  EXPECT_EQ(a.temporal->a, default_ngar1_a(2));
  EXPECT_DOUBLE_EQ(a.temporal->varrho2, 1.0);  // raised to tau2
  const json echo = to_json(a);
  const RunConfig b = parse_config(echo);
  EXPECT_EQ(to_json(b), echo);
  EXPECT_EQ(b.seed, 42u);
}

TEST(Config, DefaultNgar1Precisions) {
  EXPECT_EQ(default_ngar1_a(1), (std::vector<double>{5}));
  EXPECT_EQ(default_ngar1_a(2), (std::vector<double>{5, 30}));
  EXPECT_EQ(default_ngar1_a(3), (std::vector<double>{5, 15, 30}));
}

TEST(Config, LoadReportsMissingAndMalformedFiles) {
  TempDir dir;
  EXPECT_THROW(load_config(dir / "nope.json"), ConfigError);
  write_file(dir / "bad.json", "{ not json");
  EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
}

TEST(FormatReal, SeventeenDigitsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 12345.678901234567, 5e-324, -2.5e300}) {
    EXPECT_EQ(std::strtod(format_real(v).c_str(), nullptr), v);
  }
}

TEST(Ingest, RescalesSourceWindow) {
  TempDir dir;
  std::string text = "x,y\n";
  for (int i = 0; i < 448; ++i) text += std::to_string(i * 2) + "," + std::to_string(924 - i * 2) + "\n";
  write_file(dir / "oaks.csv", text);
  const PointPattern p = ingest_pattern(dir / "oaks.csv", Window(0, 10, 0, 10), Window(0, 924, 0, 924), false);
  ASSERT_EQ(p.size(), 448u);
  EXPECT_DOUBLE_EQ(p.points[0].y, 10.0);
  EXPECT_NEAR(p.points[100].x, 200.0 / 92.4, 1e-12);
  p.validate();
}

TEST(Ingest, IdentityAndFormatVariants) {
  TempDir dir;
  write_file(dir / "a.csv", "\xEF\xBB\xBFx,y,t\r\n0.25,0.5,3\r\n\r\n1,1,0\r\n");
  const PointPattern p = ingest_pattern(dir / "a.csv", Window(0, 1, 0, 1), std::nullopt, false);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.points[0], (Point{0.25, 0.5}));
  EXPECT_FALSE(p.has_times());
  const PointPattern q = ingest_pattern(dir / "a.csv", Window(0, 1, 0, 1), std::nullopt, true);
  EXPECT_EQ(q.times, (std::vector<int>{3, 0}));
}

TEST(Ingest, ErrorsNameLines) {
  TempDir dir;
  auto message = [&](const std::string& text, bool temporal = false) {
    write_file(dir / "e.csv", text);
    try {
      ingest_pattern(dir / "e.csv", Window(0, 1, 0, 1), std::nullopt, temporal);
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("x,y\n0.1,0.2\n0.3,abc\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("x,y\n0.1,0.2,0.3\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("x,y\n0.1,0.2\n5,5\n0.2,0.2\n7,0\n").find("lines 3, 5"), std::string::npos);
  EXPECT_NE(message("lon,lat\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("x,y\n0.1,0.1\n", true).find("t column"), std::string::npos);
  EXPECT_NE(message("x,y,t\n0.1,0.1,1.5\n", true).find("line 2"), std::string::npos);
}

TEST(Pattern, WriteReadRoundTrip) {
  TempDir dir;
  PointPattern p;
  p.window = Window(0, 3, 0, 3);
  p.points = {{0.1, 2.9}, {1.0 / 3.0, std::nextafter(1.0, 2.0)}};
  p.times = {0, 1};
  write_pattern(dir / "p.csv", p);
  const PointPattern q = ingest_pattern(dir / "p.csv", p.window, std::nullopt, true);
  EXPECT_EQ(q.points, p.points);
  EXPECT_EQ(q.times, p.times);
}

TEST(Samples, WriterAndReaderAgree) {
  TempDir dir;
  const auto header = sample_header(2, 2);
  EXPECT_EQ(header[1], "lambda_0_1");
  EXPECT_EQ(header[5], "c_1");
  {
    SampleWriter w(dir / "s.csv", header, 4);
    for (long i = 1; i <= 50; ++i) {
      SampleRecord r;
      r.iteration = i;
      r.times = 2;
      r.lambda = {1.0 / i, 2.0, 3.0, 4.0};
      r.c = {0.125};
      r.log_pm = -1.0 / 7.0;
      r.n_aux = 1000 + i;
      w.push(r);
    }
    w.close();
  }
  const SampleTable t = read_samples(dir / "s.csv");
  EXPECT_EQ(t.header, header);
  ASSERT_EQ(t.columns[0].size(), 50u);
  EXPECT_EQ(t.columns[1][2], 1.0 / 3.0);
  EXPECT_EQ(t.columns[6][0], -1.0 / 7.0);
  EXPECT_EQ(t.columns[7][49], 1050.0);
}

TEST(Draws, JsonRoundTrip) {
  TempDir dir;
  PosteriorDraw d;
  d.iteration = 12;
  d.lambda = {0.1, 7.25};
  d.c = {-0.3};
  d.grid = {Eigen::VectorXd::LinSpaced(9, -1.0 / 3.0, 2.0)};
  d.y_regions = {{0, 1, 1}};
  write_draws(dir / "d.jsonl", {d, d});
  const auto back = read_draws(dir / "d.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].iteration, 12);
  EXPECT_EQ(back[1].lambda, d.lambda);
  EXPECT_EQ(back[1].grid[0], d.grid[0]);
  EXPECT_EQ(back[1].y_regions, d.y_regions);
}

TEST(GridSummaryFile, OneBasedRegions) {
  TempDir dir;
  write_grid_summary(dir / "g.csv", {{0.5, 0.5, 2.0, 0, 1.5}, {1.5, 0.5, 9.0, 2, 9.5}});
  std::ifstream in(dir / "g.csv");
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header, "x,y,mean_IF,modal_region,modal_IF");
  EXPECT_EQ(first, "0.5,0.5,2,1,1.5");
  EXPECT_EQ(second, "1.5,0.5,9,3,9.5");
}
