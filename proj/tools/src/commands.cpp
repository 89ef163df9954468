#include "commands.hpp"

#include <chrono>
#include <fstream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <spdlog/version.h>

#include "lscp/diagnostics.hpp"
#include "lscp/io.hpp"
#include "lscp/mcmc.hpp"
#include "lscp/parallel.hpp"
#include "lscp/predict.hpp"
#include "lscp/spatiotemporal.hpp"

namespace lscp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json library_versions() {
  return {{"lscp", "0.1.0"},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"threading", parallel_backend()},
          {"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." + std::to_string(SPDLOG_VER_MINOR) + "." +
                         std::to_string(SPDLOG_VER_PATCH)}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json summary_json(const FitSummary& s) {
  return {{"acceptance", {{"beta", s.acc_beta}, {"aux", s.acc_aux}, {"lambda", s.acc_lambda}, {"levels", s.acc_levels}}},
          {"final", {{"varsigma", s.varsigma}, {"L", s.L}, {"delta", s.delta}, {"level_width", s.level_width}}},
          {"sampler_seconds", s.seconds}};
}

json predictive_json(const PredictiveSummary& s) {
  json j{{"mean", s.mean}, {"sd", s.sd}, {"q025", s.q025}, {"q975", s.q975}};
  j["quadratic_error"] = s.quadratic_error ? json(*s.quadratic_error) : json(nullptr);
  return j;
}

void run_simulate(const RunConfig& cfg, const fs::path& out, json& manifest) {
  const ChainContext ctx = make_context(cfg.model, cfg.sampler, cfg.temporal);
  const auto& sim = cfg.simulate;
  const PartitionLevels levels(sim.levels);
  const auto grids = ctx.prior->sample(sim.times, StreamKey{cfg.seed, StreamTag::kSimulate, 0, 0});
  PointPattern all;
  all.window = cfg.model.window;
  for (int t = 0; t < sim.times; ++t) {
    Engine eng = substream(cfg.seed, StreamTag::kSimulate, {1, static_cast<std::uint64_t>(t)});
    const NngpPrior& base = ctx.prior->base();
    const Eigen::VectorXd& g = grids[t];
    FieldSampler field = [&](std::span<const Point> pts) {
      std::vector<double> v(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) v[i] = conditional_draw(base.conditional_at(pts[i]), g, std_normal(eng));
      return v;
    };
    const PointPattern p = simulate_lscp(cfg.model.window, levels, sim.lambda[t], field, eng);
    all.points.insert(all.points.end(), p.points.begin(), p.points.end());
    if (sim.times > 1) all.times.insert(all.times.end(), p.points.size(), t);
  }
  write_pattern(out / "pattern.csv", all);
  manifest["points"] = all.size();
  manifest["outputs"] = {"pattern.csv"};
}

void run_fit(const RunConfig& cfg, const fs::path& out, json& manifest, bool temporal) {
  const PointPattern pattern = ingest_pattern(cfg.data.path, cfg.model.window, cfg.data.source, temporal);
  const ChainContext ctx = make_context(cfg.model, cfg.sampler, temporal ? cfg.temporal : std::nullopt);
  const auto data = temporal ? split_by_time(pattern) : std::vector<std::vector<Point>>{pattern.points};
  SampleWriter writer(out / "samples.csv", sample_header(static_cast<int>(data.size()), cfg.model.K));
  std::ofstream draws_out(out / "draws.jsonl");
  if (!draws_out) throw std::runtime_error("cannot write draws.jsonl");
  std::vector<PosteriorDraw> draws;
  RunSinks sinks;
  sinks.keep = false;
  sinks.on_record = [&](const SampleRecord& r) { writer.push(r); };
  sinks.on_draw = [&](const PosteriorDraw& d) {
    draws_out << draw_to_json(d).dump() << '\n';
    draws.push_back(d);
  };
  spdlog::info("{}: {} points, {} time slice(s), {} iterations", temporal ? "fit-st" : "fit", pattern.size(),
               data.size(), cfg.sampler.iterations);
  const FitResult res = run_chain(data, ctx, sinks);
  writer.close();
  draws_out.close();
  if (!draws_out) throw std::runtime_error("failed writing draws.jsonl");
  json outputs = {"samples.csv", "draws.jsonl"};
  if (!draws.empty() && cfg.output.summary_nx > 0 && cfg.output.summary_ny > 0) {
    for (std::size_t t = 0; t < data.size(); ++t) {
      const auto rows = grid_summary(ctx.prior->base(), draws, cfg.model.window, cfg.output.summary_nx,
                                     cfg.output.summary_ny, cfg.seed, static_cast<int>(t));
      const std::string name = data.size() == 1 ? "grid_summary.csv" : "grid_summary_t" + std::to_string(t) + ".csv";
      write_grid_summary(out / name, rows);
      outputs.push_back(name);
    }
  }
  manifest.update(summary_json(res.summary));
  manifest["points"] = pattern.size();
  manifest["draws"] = draws.size();
  manifest["outputs"] = outputs;
}

void run_predict(const RunConfig& cfg, const fs::path& out, json& manifest) {
  const auto draws = read_draws(cfg.predict.draws);
  if (draws.empty()) throw std::runtime_error("no draws in '" + cfg.predict.draws + "'");
  const ChainContext ctx = make_context(cfg.model, cfg.sampler, cfg.temporal);
  const auto& p = cfg.predict;
  const Window region = p.region.value_or(cfg.model.window);
  std::ofstream table(out / "predictions.csv");
  if (!table) throw std::runtime_error("cannot write predictions.csv");
  if (p.kind == "integrated_intensity") {
    const auto vals = integrated_intensity(ctx.prior->base(), draws, region, cfg.seed, p.time);
    table << "draw,iteration,value\n";
    for (std::size_t i = 0; i < vals.size(); ++i) table << i << ',' << draws[i].iteration << ',' << format_real(vals[i]) << '\n';
    manifest["summary"] = predictive_json(summarize(vals, p.reference));
  } else if (p.kind == "replicate") {
    table << "draw,x,y\n";
    std::vector<double> counts;
    for (std::size_t i = 0; i < draws.size(); ++i) {
      Engine eng = substream(cfg.seed, StreamTag::kPredict, {3, i});
      const PointPattern rep = replicate_pattern(ctx.prior->base(), draws[i], cfg.model.window, eng, p.time);
      for (const auto& pt : rep.points) table << i << ',' << format_real(pt.x) << ',' << format_real(pt.y) << '\n';
      std::size_t in_region = 0;
      for (const auto& pt : rep.points) in_region += region.contains(pt) ? 1 : 0;
      counts.push_back(static_cast<double>(in_region));
    }
    manifest["summary"] = predictive_json(summarize(counts, p.reference));
  } else {
    const auto& t = *cfg.temporal;
    table << "draw,horizon";
    for (int k = 1; k <= cfg.model.K; ++k) table << ",lambda_" << k;
    table << ",integrated_intensity" << (p.patterns ? ",count" : "") << '\n';
    std::vector<std::vector<double>> per_h(p.horizons);
    for (std::size_t i = 0; i < draws.size(); ++i) {
      Engine eng = substream(cfg.seed, StreamTag::kPredict, {4, i});
      const FutureDraw f = future_draw(*ctx.prior, draws[i], p.horizons, t.w, t.a, eng, p.patterns);
      for (int h = 0; h < p.horizons; ++h) {
        PosteriorDraw as_draw;
        as_draw.lambda = f.lambda[h];
        as_draw.c = draws[i].c;
        as_draw.grid = {f.grid[h]};
        const double v = integrated_intensity_draw(ctx.prior->base(), as_draw, region, eng);
        per_h[h].push_back(v);
        table << i << ',' << h + 1;
        for (double l : f.lambda[h]) table << ',' << format_real(l);
        table << ',' << format_real(v);
        if (p.patterns) table << ',' << f.patterns[h].size();
        table << '\n';
      }
    }
    json hs = json::array();
    for (const auto& v : per_h) hs.push_back(predictive_json(summarize(v, p.reference)));
    manifest["summary"] = hs;
  }
  if (!table) throw std::runtime_error("failed writing predictions.csv");
  manifest["outputs"] = {"predictions.csv"};
}

void run_diagnose(const RunConfig& cfg, const fs::path& out, json& manifest) {
  json result;
  if (!cfg.diagnose.samples.empty()) {
    const SampleTable table = read_samples(cfg.diagnose.samples);
    json cols = json::object();
    for (std::size_t i = 1; i < table.header.size(); ++i) {
      const auto& col = table.columns[i];
      if (col.size() < 10) throw std::runtime_error("need at least 10 samples for ESS");
      const PredictiveSummary s = summarize(col);
      cols[table.header[i]] = {{"mean", s.mean}, {"sd", s.sd}, {"ess", ess(col)}};
    }
    result["columns"] = cols;
  }
  if (!cfg.diagnose.draws.empty()) {
    const auto draws = read_draws(cfg.diagnose.draws);
    const ChainContext ctx = make_context(cfg.model, cfg.sampler, cfg.temporal);
    const DicResult d = dic(draws, ctx.prior->base(), static_cast<std::size_t>(cfg.diagnose.mc_area_points), cfg.seed);
    result["dic"] = {{"dic", d.dic}, {"mean_deviance", d.mean_deviance}, {"plugin_deviance", d.plugin_deviance},
                     {"p_d", d.p_d}};
  }
  write_json(out / "diagnostics.json", result);
  manifest["outputs"] = {"diagnostics.json"};
}

}  // namespace

int run_command(const std::string& mode, const fs::path& config_path, const Overrides& overrides) {
  RunConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file '" + config_path.string() + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("mode") && j["mode"] != mode) {
      spdlog::warn("config mode '{}' overridden by subcommand '{}'", j["mode"].dump(), mode);
    }
    j["mode"] = mode;
    if (overrides.seed) j["seed"] = *overrides.seed;
    if (overrides.threads) j["threads"] = *overrides.threads;
    if (overrides.out) j["output"]["dir"] = *overrides.out;
    cfg = parse_config(j);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 1;
  }

  try {
    const auto start = std::chrono::steady_clock::now();
    set_thread_count(cfg.threads);
    const fs::path out = cfg.output.dir;
    fs::create_directories(out);
    write_json(out / "resolved_config.json", to_json(cfg));
    json manifest{{"mode", mode}, {"seed", cfg.seed}, {"threads", thread_count()}, {"versions", library_versions()}};
    if (mode == "simulate") {
      run_simulate(cfg, out, manifest);
    } else if (mode == "fit" || mode == "fit-st") {
      run_fit(cfg, out, manifest, mode == "fit-st");
    } else if (mode == "predict") {
      run_predict(cfg, out, manifest);
    } else {
      run_diagnose(cfg, out, manifest);
    }
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(out / "manifest.json", manifest);
    spdlog::info("{} finished; outputs in {}", mode, out.string());
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{} failed: {}", mode, e.what());
    return 2;
  }
  return 0;
}

}  // namespace lscp::cli
