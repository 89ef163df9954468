#include "lscp/io.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace lscp {

using nlohmann::json;

namespace {

// Object reader that remembers consumed keys so leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return convert<T>(key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) throw ConfigError("unknown key '" + path(item.key()) + "'");
    }
  }

 private:
  template <class T>
  T convert(const std::string& key) {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("invalid value for '" + path(key) + "'");
    }
  }

  const json& j_;
  std::string name_;
  std::set<std::string> used_;
};

Window parse_window(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(where + " must be [x_min, x_max, y_min, y_max]");
  try {
    return Window(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

json window_json(const Window& w) { return json::array({w.x_min(), w.x_max(), w.y_min(), w.y_max()}); }

template <class Fn>
void checked(const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(v);
}

bool getline_lf(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

std::vector<double> default_ngar1_a(int K) {
  switch (K) {
    case 1: return {5.0};
    case 2: return {5.0, 30.0};
    case 3: return {5.0, 15.0, 30.0};
    default: {
      std::vector<double> a(K);
      for (int k = 0; k < K; ++k) a[k] = 5.0 + 25.0 * k / (K - 1);
      return a;
    }
  }
}

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  Section top(j, "config");
  cfg.mode = top.get<std::string>("mode", "fit");
  static const std::set<std::string> modes{"simulate", "fit", "fit-st", "predict", "diagnose"};
  if (!modes.count(cfg.mode)) throw ConfigError("unknown mode '" + cfg.mode + "'");
  cfg.seed = top.get<std::uint64_t>("seed", 1);
  cfg.threads = top.get<int>("threads", 0);
  if (cfg.threads < 0) throw ConfigError("threads must be >= 0");
  if (top.has("window")) cfg.model.window = parse_window(top.raw("window"), "config.window");

  // model
  {
    const json empty = json::object();
    Section s(top.has("model") ? top.raw("model") : empty, "model");
    auto& m = cfg.model;
    m.K = s.get<int>("K", 3);
    if (m.K < 1 || m.K > 255) throw ConfigError("model.K must lie in [1, 255]");
    m.r = s.get<int>("r", 2500);
    m.m = s.get<int>("m", 16);
    if (s.has("covariance")) {
      Section c(s.raw("covariance"), "model.covariance");
      m.covariance.tau2 = c.get<double>("tau2", 1.0);
      m.covariance.gamma = c.get<double>("gamma", 1.95);
      c.finish();
    }
    m.rate_prior = RGSpec::defaults(m.K);
    if (s.has("prior")) {
      Section p(s.raw("prior"), "model.prior");
      m.rate_prior.alpha = p.get<std::vector<double>>("alpha", m.rate_prior.alpha);
      m.rate_prior.eta = p.get<std::vector<double>>("eta", m.rate_prior.eta);
      m.rate_prior.rho = p.get<double>("rho", 1.0);
      m.rate_prior.nu = p.get<double>("nu", 3.0);
      m.rate_prior.upper_bound = p.opt<double>("upper_bound");
      p.finish();
    }
    if (auto c = s.opt<std::vector<double>>("initial_levels")) {
      checked("model.initial_levels", [&] { m.initial_levels = PartitionLevels(*c); });
    }
    s.finish();
    checked("model", [&] { m.validate(); });
  }

  // sampler
  {
    const json empty = json::object();
    Section s(top.has("sampler") ? top.raw("sampler") : empty, "sampler");
    auto& c = cfg.sampler;
    c.iterations = s.get<long>("iterations", c.iterations);
    c.burn_in = s.get<long>("burn_in", c.burn_in);
    c.thin = s.get<int>("thin", c.thin);
    c.L = s.get<int>("L", c.L);
    c.tune_L = s.get<bool>("tune_L", c.tune_L);
    c.delta = s.opt<double>("delta");
    c.target_aux = s.get<double>("target_aux", c.target_aux);
    c.varsigma = s.get<double>("varsigma", c.varsigma);
    c.beta_steps = s.get<int>("beta_steps", c.beta_steps);
    c.lambda_scale = s.get<double>("lambda_scale", c.lambda_scale);
    c.log_scale_walk = s.get<bool>("log_scale_walk", c.log_scale_walk);
    c.level_width = s.get<double>("level_width", c.level_width);
    c.adapt_horizon = s.opt<long>("adapt_horizon");
    c.fixed_ordering = s.opt<bool>("fixed_ordering");
    c.snapshot_every = s.get<int>("snapshot_every", c.snapshot_every);
    c.audit = s.get<bool>("audit", c.audit);
    c.seed = cfg.seed;
    s.finish();
    checked("sampler", [&] { c.validate(); });
  }

  if (top.has("temporal") || cfg.mode == "fit-st") {
    const json empty = json::object();
    Section s(top.has("temporal") ? top.raw("temporal") : empty, "temporal");
    TemporalSpec t;
    t.xi2 = s.get<double>("xi2", 1.0);
    t.varrho2 = s.get<double>("varrho2", std::max(0.5, cfg.model.covariance.tau2));
    const auto kind = s.get<std::string>("rate_prior", "independent");
    if (kind == "independent") {
      t.rate_prior = TemporalSpec::RatePrior::kIndependent;
    } else if (kind == "ngar1") {
      t.rate_prior = TemporalSpec::RatePrior::kNgar1;
    } else {
      throw ConfigError("temporal.rate_prior must be 'independent' or 'ngar1'");
    }
    t.w = s.get<std::vector<double>>("w", std::vector<double>(cfg.model.K, 0.5));
    t.a = s.get<std::vector<double>>("a", default_ngar1_a(cfg.model.K));
    s.finish();
    checked("temporal", [&] { t.validate(cfg.model.covariance, cfg.model.K); });
    cfg.temporal = t;
  }

  if (top.has("data")) {
    Section s(top.raw("data"), "data");
    cfg.data.path = s.get<std::string>("path", "");
    if (s.has("source_window")) cfg.data.source = parse_window(s.raw("source_window"), "data.source_window");
    s.finish();
  }
  if (top.has("output")) {
    Section s(top.raw("output"), "output");
    cfg.output.dir = s.get<std::string>("dir", cfg.output.dir);
    cfg.output.summary_nx = s.get<int>("summary_nx", cfg.output.summary_nx);
    cfg.output.summary_ny = s.get<int>("summary_ny", cfg.output.summary_ny);
    s.finish();
    if (cfg.output.summary_nx < 0 || cfg.output.summary_ny < 0) throw ConfigError("summary lattice must be >= 0");
  }
  if (top.has("simulate")) {
    Section s(top.raw("simulate"), "simulate");
    const json& lam = s.has("lambda") ? s.raw("lambda") : json::array();
    try {
      if (!lam.empty() && lam[0].is_array()) {
        cfg.simulate.lambda = lam.get<std::vector<std::vector<double>>>();
      } else if (!lam.empty()) {
        cfg.simulate.lambda = {lam.get<std::vector<double>>()};
      }
    } catch (const json::exception&) {
      throw ConfigError("invalid value for 'simulate.lambda'");
    }
    cfg.simulate.levels = s.get<std::vector<double>>("levels", PartitionLevels::initial(cfg.model.K).thresholds());
    cfg.simulate.times = s.get<int>("times", static_cast<int>(std::max<std::size_t>(1, cfg.simulate.lambda.size())));
    s.finish();
  } else {
    cfg.simulate.levels = PartitionLevels::initial(cfg.model.K).thresholds();
  }
  if (top.has("predict")) {
    Section s(top.raw("predict"), "predict");
    auto& p = cfg.predict;
    p.draws = s.get<std::string>("draws", "");
    p.kind = s.get<std::string>("kind", p.kind);
    if (s.has("region")) p.region = parse_window(s.raw("region"), "predict.region");
    p.time = s.get<int>("time", 0);
    p.horizons = s.get<int>("horizons", 1);
    p.reference = s.opt<double>("reference");
    p.patterns = s.get<bool>("patterns", false);
    s.finish();
  }
  if (top.has("diagnose")) {
    Section s(top.raw("diagnose"), "diagnose");
    cfg.diagnose.samples = s.get<std::string>("samples", "");
    cfg.diagnose.draws = s.get<std::string>("draws", "");
    cfg.diagnose.mc_area_points = s.get<long>("mc_area_points", 10000);
    s.finish();
  }
  top.finish();

  // mode-specific requirements
  const int K = cfg.model.K;
  if (cfg.mode == "fit" || cfg.mode == "fit-st") {
    if (cfg.data.path.empty()) throw ConfigError("data.path is required for " + cfg.mode);
  }
  if (cfg.mode == "simulate") {
    auto& sim = cfg.simulate;
    if (sim.lambda.empty()) throw ConfigError("simulate.lambda is required");
    if (sim.times < 1) throw ConfigError("simulate.times must be >= 1");
    if (sim.times > 1 && !cfg.temporal) throw ConfigError("simulating several times needs a temporal section");
    if (sim.lambda.size() == 1 && sim.times > 1) sim.lambda.assign(sim.times, sim.lambda[0]);
    if (static_cast<int>(sim.lambda.size()) != sim.times) throw ConfigError("simulate.lambda needs one row per time");
    for (const auto& row : sim.lambda) {
      if (static_cast<int>(row.size()) != K) throw ConfigError("simulate.lambda rows need K entries");
      for (double v : row)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("simulate.lambda entries must be positive");
    }
    if (static_cast<int>(sim.levels.size()) != K - 1 || !PartitionLevels::is_valid(sim.levels)) {
      throw ConfigError("simulate.levels must hold K - 1 increasing thresholds");
    }
  }
  if (cfg.mode == "predict") {
    auto& p = cfg.predict;
    if (p.draws.empty()) throw ConfigError("predict.draws is required");
    if (p.kind != "integrated_intensity" && p.kind != "replicate" && p.kind != "future") {
      throw ConfigError("predict.kind must be integrated_intensity, replicate or future");
    }
    if (p.region && !cfg.model.window.contains(*p.region)) throw ConfigError("predict.region must lie inside the window");
    if (p.horizons < 1) throw ConfigError("predict.horizons must be >= 1");
    if (p.time < 0) throw ConfigError("predict.time must be >= 0");
    if (p.kind == "future" && !cfg.temporal) throw ConfigError("future predictions need a temporal section");
  }
  if (cfg.mode == "diagnose") {
    if (cfg.diagnose.samples.empty() && cfg.diagnose.draws.empty()) {
      throw ConfigError("diagnose needs diagnose.samples or diagnose.draws");
    }
    if (!cfg.diagnose.draws.empty() && cfg.diagnose.mc_area_points < 1000) {
      throw ConfigError("diagnose.mc_area_points must be >= 1000");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

json to_json(const RunConfig& cfg) {
  json j;
  j["mode"] = cfg.mode;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["window"] = window_json(cfg.model.window);
  const auto& m = cfg.model;
  json prior{{"alpha", m.rate_prior.alpha}, {"eta", m.rate_prior.eta}, {"rho", m.rate_prior.rho},
             {"nu", m.rate_prior.nu}, {"upper_bound", nullptr}};
  if (m.rate_prior.upper_bound) prior["upper_bound"] = *m.rate_prior.upper_bound;
  j["model"] = {{"K", m.K},
                {"r", m.r},
                {"m", m.m},
                {"covariance", {{"tau2", m.covariance.tau2}, {"gamma", m.covariance.gamma}}},
                {"prior", prior},
                {"initial_levels", m.initial_levels.value_or(PartitionLevels::initial(m.K)).thresholds()}};
  const auto& s = cfg.sampler;
  j["sampler"] = {{"iterations", s.iterations},
                  {"burn_in", s.burn_in},
                  {"thin", s.thin},
                  {"L", s.L},
                  {"tune_L", s.tune_L},
                  {"delta", s.delta ? json(*s.delta) : json(nullptr)},
                  {"target_aux", s.target_aux},
                  {"beta_steps", s.beta_steps},
                  {"varsigma", s.varsigma},
                  {"lambda_scale", s.lambda_scale},
                  {"log_scale_walk", s.log_scale_walk},
                  {"level_width", s.level_width},
                  {"adapt_horizon", s.horizon()},
                  {"fixed_ordering", s.fixed_ordering.value_or(m.K >= 3)},
                  {"snapshot_every", s.snapshot_every},
                  {"audit", s.audit}};
  if (cfg.temporal) {
    const auto& t = *cfg.temporal;
    j["temporal"] = {{"xi2", t.xi2},
                     {"varrho2", t.varrho2},
                     {"rate_prior", t.rate_prior == TemporalSpec::RatePrior::kNgar1 ? "ngar1" : "independent"},
                     {"w", t.w},
                     {"a", t.a}};
  }
  j["data"] = {{"path", cfg.data.path},
               {"source_window", window_json(cfg.data.source.value_or(cfg.model.window))}};
  j["output"] = {{"dir", cfg.output.dir}, {"summary_nx", cfg.output.summary_nx}, {"summary_ny", cfg.output.summary_ny}};
  j["simulate"] = {{"lambda", cfg.simulate.lambda}, {"levels", cfg.simulate.levels}, {"times", cfg.simulate.times}};
  const auto& p = cfg.predict;
  j["predict"] = {{"draws", p.draws},
                  {"kind", p.kind},
                  {"region", window_json(p.region.value_or(cfg.model.window))},
                  {"time", p.time},
                  {"horizons", p.horizons},
                  {"reference", p.reference ? json(*p.reference) : json(nullptr)},
                  {"patterns", p.patterns}};
  j["diagnose"] = {{"samples", cfg.diagnose.samples},
                   {"draws", cfg.diagnose.draws},
                   {"mc_area_points", cfg.diagnose.mc_area_points}};
  return j;
}

PointPattern ingest_pattern(const std::filesystem::path& path, const Window& target,
                            const std::optional<Window>& source, bool temporal) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file '" + path.string() + "'");
  std::string line;
  if (!getline_lf(in, line)) throw std::runtime_error("data file '" + path.string() + "' is empty");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split(line);
  const bool has_t = header.size() == 3 && header[2] == "t";
  if (header.size() < 2 || header[0] != "x" || header[1] != "y" || header.size() > 3 || (header.size() == 3 && !has_t)) {
    throw std::runtime_error("line 1: expected header x,y or x,y,t");
  }
  if (temporal && !has_t) throw std::runtime_error("time-stamped data needs a t column");
  if (!temporal && has_t) spdlog::warn("ignoring the t column of '{}' for a spatial fit", path.string());

  const Window src = source.value_or(target);
  const bool identity = src == target;
  PointPattern pattern;
  pattern.window = target;
  std::vector<long> outside;
  long lineno = 1;
  while (getline_lf(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                               " columns");
    }
    Point p;
    if (!parse_double(cells[0], p.x) || !parse_double(cells[1], p.y)) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": malformed coordinate");
    }
    if (!src.contains(p)) {
      outside.push_back(lineno);
      continue;
    }
    pattern.points.push_back(identity ? p : src.map_to(p, target));
    if (temporal) {
      double t = 0.0;
      if (!parse_double(cells[2], t) || t < 0.0 || t != std::floor(t) || t > 1e6) {
        throw std::runtime_error("line " + std::to_string(lineno) + ": time must be a non-negative integer");
      }
      pattern.times.push_back(static_cast<int>(t));
    }
  }
  if (!outside.empty()) {
    std::string rows;
    for (std::size_t i = 0; i < outside.size() && i < 20; ++i) rows += (i ? ", " : "") + std::to_string(outside[i]);
    if (outside.size() > 20) rows += ", ...";
    throw std::runtime_error("points outside the source window on lines " + rows);
  }
  return pattern;
}

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

void write_pattern(const std::filesystem::path& path, const PointPattern& pattern) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << (pattern.has_times() ? "x,y,t\n" : "x,y\n");
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    out << format_real(pattern.points[i].x) << ',' << format_real(pattern.points[i].y);
    if (pattern.has_times()) out << ',' << pattern.times[i];
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<std::string> sample_header(int times, int K) {
  std::vector<std::string> h{"iteration"};
  for (int t = 0; t < times; ++t)
    for (int k = 1; k <= K; ++k) h.push_back(times == 1 ? fmt::format("lambda_{}", k) : fmt::format("lambda_{}_{}", t, k));
  for (int k = 1; k < K; ++k) h.push_back(fmt::format("c_{}", k));
  for (const char* s : {"log_pm", "n_aux", "acc_beta", "acc_aux", "acc_lambda", "acc_levels"}) h.emplace_back(s);
  return h;
}

std::string sample_row(const SampleRecord& rec) {
  std::string row = std::to_string(rec.iteration);
  for (double v : rec.lambda) row += "," + format_real(v);
  for (double v : rec.c) row += "," + format_real(v);
  row += "," + format_real(rec.log_pm);
  row += "," + std::to_string(rec.n_aux);
  for (double v : {rec.acc_beta, rec.acc_aux, rec.acc_lambda, rec.acc_levels}) row += "," + format_real(v);
  return row;
}

SampleWriter::SampleWriter(const std::filesystem::path& path, std::vector<std::string> header, std::size_t capacity)
    : out_(path), capacity_(std::max<std::size_t>(1, capacity)) {
  if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
  worker_ = std::thread([this] { loop(); });
}

SampleWriter::~SampleWriter() {
  try {
    close();
  } catch (const std::exception& e) {
    spdlog::error("sample writer: {}", e.what());
  }
}

void SampleWriter::push(const SampleRecord& rec) {
  std::string row = sample_row(rec);
  std::unique_lock lock(mu_);
  not_full_.wait(lock, [this] { return queue_.size() < capacity_ || failed_; });
  if (failed_) throw std::runtime_error("sample writer failed");
  queue_.push_back(std::move(row));
  not_empty_.notify_one();
}

void SampleWriter::loop() {
  for (;;) {
    std::string row;
    {
      std::unique_lock lock(mu_);
      not_empty_.wait(lock, [this] { return !queue_.empty() || done_; });
      if (queue_.empty()) return;
      row = std::move(queue_.front());
      queue_.pop_front();
      not_full_.notify_one();
    }
    out_ << row << '\n';
    if (!out_) {
      std::lock_guard lock(mu_);
      failed_ = true;
      not_full_.notify_all();
      return;
    }
  }
}

void SampleWriter::close() {
  {
    std::lock_guard lock(mu_);
    if (done_ && !worker_.joinable()) return;
    done_ = true;
  }
  not_empty_.notify_all();
  if (worker_.joinable()) worker_.join();
  out_.flush();
  if (failed_ || !out_) throw std::runtime_error("failed writing samples");
}

SampleTable read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open samples '" + path.string() + "'");
  std::string line;
  if (!getline_lf(in, line)) throw std::runtime_error("samples file is empty");
  SampleTable table;
  table.header = split(line);
  table.columns.resize(table.header.size());
  long lineno = 1;
  while (getline_lf(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != table.header.size()) throw std::runtime_error("line " + std::to_string(lineno) + ": wrong column count");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v;
      if (!parse_double(cells[i], v)) throw std::runtime_error("line " + std::to_string(lineno) + ": malformed value");
      table.columns[i].push_back(v);
    }
  }
  return table;
}

json draw_to_json(const PosteriorDraw& draw) {
  json grids = json::array();
  for (const auto& g : draw.grid) grids.push_back(std::vector<double>(g.data(), g.data() + g.size()));
  return {{"iteration", draw.iteration}, {"lambda", draw.lambda}, {"c", draw.c}, {"grid", grids},
          {"y_regions", draw.y_regions}};
}

PosteriorDraw draw_from_json(const json& j) {
  PosteriorDraw d;
  d.iteration = j.at("iteration").get<long>();
  d.lambda = j.at("lambda").get<std::vector<double>>();
  d.c = j.at("c").get<std::vector<double>>();
  for (const auto& g : j.at("grid")) {
    const auto v = g.get<std::vector<double>>();
    d.grid.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  d.y_regions = j.at("y_regions").get<std::vector<std::vector<std::uint8_t>>>();
  return d;
}

void write_draws(const std::filesystem::path& path, const std::vector<PosteriorDraw>& draws) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const auto& d : draws) out << draw_to_json(d).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<PosteriorDraw> read_draws(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open draws '" + path.string() + "'");
  std::vector<PosteriorDraw> out;
  std::string line;
  long lineno = 0;
  while (getline_lf(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(draw_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw std::runtime_error("draws line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_grid_summary(const std::filesystem::path& path, const std::vector<GridSummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "x,y,mean_IF,modal_region,modal_IF\n";
  for (const auto& r : rows) {
    out << format_real(r.x) << ',' << format_real(r.y) << ',' << format_real(r.mean_if) << ','
        << r.modal_region + 1 << ',' << format_real(r.modal_if) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace lscp
