#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lscp/dynamic_prior.hpp"
#include "lscp/geometry.hpp"
#include "lscp/mcmc.hpp"
#include "lscp/predict.hpp"

namespace lscp {

/// Schema violation in a run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulateSpec {
  /// One rate vector per time (a single row for spatial patterns).
  std::vector<std::vector<double>> lambda;
  std::vector<double> levels;
  int times = 1;
};

struct DataSpec {
  std::string path;
  /// Coordinates of the source file; points are mapped onto the model
  /// window. Defaults to the model window (identity).
  std::optional<Window> source;
};

struct OutputSpec {
  std::string dir = "out";
  int summary_nx = 50;
  int summary_ny = 50;
};

struct PredictSpec {
  std::string draws;
  std::string kind = "integrated_intensity";  // or replicate, future
  std::optional<Window> region;
  int time = 0;
  int horizons = 1;
  std::optional<double> reference;
  bool patterns = false;
};

struct DiagnoseSpec {
  std::string samples;
  std::string draws;
  long mc_area_points = 10000;
};

struct RunConfig {
  std::string mode = "fit";
  std::uint64_t seed = 1;
  int threads = 0;
  ModelSpec model;
  SamplerConfig sampler;
  std::optional<TemporalSpec> temporal;
  DataSpec data;
  OutputSpec output;
  SimulateSpec simulate;
  PredictSpec predict;
  DiagnoseSpec diagnose;
};

/// Default NGAR1 precisions: 5 for one level, (5, 30) for two, (5, 15, 30)
/// for three, evenly spaced on [5, 30] beyond.
std::vector<double> default_ngar1_a(int K);

/// Parses and validates a configuration. Unknown keys and invalid values
/// raise ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
/// Fully resolved configuration with every default written out.
nlohmann::json to_json(const RunConfig& cfg);

/// Reads `x,y[,t]` rows and maps them from `source` onto `target`.
/// Points outside `source` are rejected with their line numbers.
PointPattern ingest_pattern(const std::filesystem::path& path, const Window& target,
                            const std::optional<Window>& source, bool temporal);
void write_pattern(const std::filesystem::path& path, const PointPattern& pattern);

/// Formats a real with 17 significant digits.
std::string format_real(double v);

std::vector<std::string> sample_header(int times, int K);
std::string sample_row(const SampleRecord& rec);

/// Single writer thread fed through a bounded queue; push() blocks when the
/// queue is full.
class SampleWriter {
 public:
  SampleWriter(const std::filesystem::path& path, std::vector<std::string> header, std::size_t capacity = 1024);
  ~SampleWriter();
  SampleWriter(const SampleWriter&) = delete;
  SampleWriter& operator=(const SampleWriter&) = delete;

  void push(const SampleRecord& rec);
  /// Flushes, joins the writer and rethrows a write failure.
  void close();

 private:
  void loop();

  std::ofstream out_;
  std::size_t capacity_;
  std::deque<std::string> queue_;
  std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  bool done_ = false;
  bool failed_ = false;
  std::thread worker_;
};

struct SampleTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};
SampleTable read_samples(const std::filesystem::path& path);

nlohmann::json draw_to_json(const PosteriorDraw& draw);
PosteriorDraw draw_from_json(const nlohmann::json& j);
void write_draws(const std::filesystem::path& path, const std::vector<PosteriorDraw>& draws);
std::vector<PosteriorDraw> read_draws(const std::filesystem::path& path);

/// Columns x, y, mean_IF, modal_region (one-based), modal_IF.
void write_grid_summary(const std::filesystem::path& path, const std::vector<GridSummaryRow>& rows);

}  // namespace lscp
