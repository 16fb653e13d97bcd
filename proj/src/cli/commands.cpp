#include "ullgm/cli/commands.hpp"

#include "ullgm/chain.hpp"
#include "ullgm/predictive.hpp"
#include "ullgm/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <future>
#include <iostream>
#include <numeric>
#include <sstream>

namespace ullgm::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

/// Configuration problems (bad prior, bad family, unsatisfiable settings).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct DataOptions {
  std::string input;
  std::string outcome;
  std::string trials;
  std::string covariates;
  std::string family = "pln";
  int r = 1;
  std::string standardize = "center";
};

struct SamplerOptions {
  std::string gprior = "uip";
  double msize = 0.0;
  long iters = 550000;
  long burnin = 250000;
  int thin = 1;
  std::uint64_t seed = 1;
  int chains = 1;
  double pin_sigma2 = 0.0;
};

void add_data_options(CLI::App* cmd, DataOptions& o, bool need_outcome = true) {
  cmd->add_option("--input", o.input, "CSV file with a header row")->required();
  auto* outcome = cmd->add_option("--outcome", o.outcome, "outcome (count) column");
  if (need_outcome) outcome->required();
  cmd->add_option("--trials", o.trials, "trial-count column (bil)");
  cmd->add_option("--covariates", o.covariates,
                  "comma-separated covariate columns (default: all remaining)");
  cmd->add_option("--family", o.family, "pln, bil or nbl")
      ->check(CLI::IsMember({"pln", "bil", "nbl"}))
      ->capture_default_str();
  cmd->add_option("--r", o.r, "fixed r for nbl")->capture_default_str();
  cmd->add_option("--standardize", o.standardize, "center or zscore")
      ->check(CLI::IsMember({"center", "zscore"}))
      ->capture_default_str();
}

void add_sampler_options(CLI::App* cmd, SamplerOptions& o) {
  cmd->add_option("--gprior", o.gprior, "uip, fixed:<g> or hyper-gn:<a>")->capture_default_str();
  cmd->add_option("--msize", o.msize, "prior expected model size (default p/2)");
  cmd->add_option("--iters", o.iters, "total iterations including burn-in")->capture_default_str();
  cmd->add_option("--burnin", o.burnin, "burn-in iterations")->capture_default_str();
  cmd->add_option("--thin", o.thin, "keep every k-th draw")->capture_default_str();
  cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  cmd->add_option("--chains", o.chains, "independent chains (seeds seed+c)")->capture_default_str();
  cmd->add_option("--pin-sigma2", o.pin_sigma2,
                  "hold sigma2 fixed at this value (GLM-limit comparisons)");
}

FamilyTag family_from(const DataOptions& o) {
  try {
    return parse_family(o.family, o.r);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Standardization standardization_from(const std::string& s) {
  return s == "zscore" ? Standardization::ZScore : Standardization::Center;
}

PriorConfig prior_from(const SamplerOptions& o, int p) {
  PriorConfig prior;
  try {
    prior.gprior = parse_gprior(o.gprior);
    prior.expected_model_size = o.msize;
    validate_prior(prior, p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return prior;
}

ChainConfig chain_config_from(const SamplerOptions& o, const DataOptions* d) {
  ChainConfig c;
  c.n_iter = o.iters;
  c.burn_in = o.burnin;
  c.thin = o.thin;
  c.seed = o.seed;
  c.store_beta = true;
  if (d) c.standardize = standardization_from(d->standardize);
  if (o.pin_sigma2 > 0.0) c.pinned_sigma2 = o.pin_sigma2;
  if (o.chains < 1) throw ConfigError("--chains must be at least 1");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ColumnBinding binding_from(const DataOptions& o) {
  return {o.outcome, o.trials, split_list(o.covariates)};
}

/// Maps validation failures onto the exit-code contract: impropriety risk
/// is a validation failure, structural problems are malformed input.
void check_dataset(const Dataset& d) {
  const auto report = validate_dataset(d);
  if (report.status == ValidationReport::Status::PosteriorImproprietyRisk) {
    throw PosteriorImproprietyRisk(report.message);
  }
  if (report.status == ValidationReport::Status::StructuralError) throw InputError(report.message);
}

Json manifest_base(const std::string& command) {
  Json m;
  m["tool"] = "ullgm";
  m["version"] = kVersion;
  m["command"] = command;
  return m;
}

Json dataset_fingerprint(const std::string& path, const std::string& bytes, const Dataset& d) {
  Json j;
  j["path"] = path;
  j["rows"] = d.n();
  j["covariates"] = d.p();
  j["fnv1a64"] = hex64(fnv1a64(bytes));
  return j;
}

Json sampler_json(const SamplerOptions& o, const PriorConfig& prior, int p) {
  Json j;
  j["gprior"] = prior.gprior.describe();
  j["msize"] = prior.resolved_model_size(p);
  j["iters"] = o.iters;
  j["burnin"] = o.burnin;
  j["thin"] = o.thin;
  j["seed"] = o.seed;
  j["chains"] = o.chains;
  if (o.pin_sigma2 > 0.0) j["pin_sigma2"] = o.pin_sigma2;
  return j;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw InputError("cannot create output directory '" + p.string() + "': " + ec.message());
  return p;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_fit_outputs(const fs::path& dir, const Dataset& d, const ChainOutput& out,
                       bool save_draws) {
  {
    CsvWriter w(dir / "summary.csv", {"covariate", "pip", "beta_mean", "beta_sd"});
    for (int j = 0; j < d.p(); ++j) {
      w.row({d.covariate_name(j), format_double(out.pip(j)), format_double(out.beta_mean(j)),
             format_double(out.beta_sd(j))});
    }
  }
  {
    CsvWriter w(dir / "scalars.csv", {"parameter", "mean", "sd", "q025", "q50", "q975"});
    const auto put = [&](const char* name, const ScalarSummary& s) {
      w.row({name, format_double(s.mean), format_double(s.sd), format_double(s.q025),
             format_double(s.q50), format_double(s.q975)});
    };
    put("alpha", out.alpha);
    put("sigma2", out.sigma2);
    put("g", out.g);
  }
  {
    CsvWriter w(dir / "top_models.csv", {"rank", "model", "size", "frequency"});
    const std::size_t top = std::min<std::size_t>(out.top_models.size(), 100);
    for (std::size_t k = 0; k < top; ++k) {
      const auto& m = out.top_models[k];
      w.row({std::to_string(k + 1), m.bits, std::to_string(m.size), format_double(m.frequency)});
    }
  }
  {
    CsvWriter w(dir / "model_size.csv", {"size", "count", "probability"});
    for (std::size_t s = 0; s < out.model_size_hist.size(); ++s) {
      w.row({std::to_string(s), std::to_string(out.model_size_hist[s]),
             format_double(static_cast<double>(out.model_size_hist[s]) / out.n_kept)});
    }
  }
  if (save_draws) {
    std::vector<std::string> header{"draw", "model", "alpha", "sigma2", "g"};
    for (int j = 0; j < d.p(); ++j) header.push_back(d.covariate_name(j));
    CsvWriter w(dir / "draws.csv", header);
    const DrawStore& dr = out.draws;
    std::vector<std::string> row(header.size());
    for (long s = 0; s < dr.size(); ++s) {
      row[0] = std::to_string(s + 1);
      row[1] = dr.model_bits(s);
      row[2] = format_double(dr.alpha[s]);
      row[3] = format_double(dr.sigma2[s]);
      row[4] = format_double(dr.g[s]);
      const auto b = dr.beta_row(s);
      for (int j = 0; j < d.p(); ++j) row[5 + j] = format_double(b(j));
      w.row(row);
    }
  }
}

Json fit_manifest(const std::string& command, const DataOptions& data_opt,
                  const SamplerOptions& samp_opt, const PriorConfig& prior, const Dataset& d,
                  const std::string& bytes) {
  Json m = manifest_base(command);
  Json cfg;
  cfg["family"] = d.family.name();
  if (d.family.kind == Family::NBL) cfg["r"] = d.family.r;
  cfg["outcome"] = data_opt.outcome;
  cfg["trials"] = data_opt.trials;
  std::vector<std::string> names;
  for (int j = 0; j < d.p(); ++j) names.push_back(d.covariate_name(j));
  cfg["covariates"] = names;
  cfg["standardize"] = data_opt.standardize;
  cfg["sampler"] = sampler_json(samp_opt, prior, d.p());
  m["config"] = cfg;
  m["dataset"] = dataset_fingerprint(data_opt.input, bytes, d);
  return m;
}

int cmd_fit(const DataOptions& data_opt, const SamplerOptions& samp_opt, const std::string& out_dir,
            bool save_draws) {
  const auto start = std::chrono::steady_clock::now();
  const FamilyTag family = family_from(data_opt);
  const std::string bytes = read_file(data_opt.input);
  const CsvTable table = parse_csv(bytes);
  const Dataset d = load_dataset(table, binding_from(data_opt), family);
  check_dataset(d);
  const PriorConfig prior = prior_from(samp_opt, d.p());
  const ChainConfig cc = chain_config_from(samp_opt, &data_opt);
  const fs::path dir = prepare_out_dir(out_dir);

  const ChainOutput out = run_chains(d, prior, cc, samp_opt.chains, thread_cap_from_env());
  write_fit_outputs(dir, d, out, save_draws);

  Json m = fit_manifest("fit", data_opt, samp_opt, prior, d, bytes);
  m["config"]["save_draws"] = save_draws;
  m["transform"] = {{"col_means", to_vector(out.col_means)},
                    {"col_scales", to_vector(out.col_scales)}};
  m["diagnostics"] = {{"kept_draws", out.n_kept},
                      {"acceptance_model", out.acceptance.model},
                      {"acceptance_latent", out.acceptance.latent},
                      {"acceptance_g", out.acceptance.g}};
  m["wall_clock_seconds"] = seconds_since(start);
  write_json(dir / "manifest.json", m);

  std::cout << "fit: " << out.n_kept << " kept draws, posterior mean sigma2 "
            << format_double(out.sigma2.mean) << ", mean model size "
            << format_double(out.mean_model_size) << " -> " << dir.string() << '\n';
  return kExitOk;
}

/// Draws previously written by `fit --save-draws`.
DrawStore read_draws(const fs::path& path, int p) {
  const CsvTable t = read_csv(path);
  if (static_cast<int>(t.header.size()) != 5 + p) {
    throw InputError(path.string() + ": expected " + std::to_string(5 + p) + " columns");
  }
  DrawStore draws(p, 0);
  GaussianLayerState s;
  s.beta.resize(p);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const long line = static_cast<long>(r) + 1;
    ModelIndicator m;
    try {
      m = ModelIndicator::from_bit_string(row[1]);
    } catch (const std::invalid_argument&) {
      throw InputError("row " + std::to_string(line) + ", column 'model': bad bit pattern");
    }
    if (m.p() != p) throw InputError("row " + std::to_string(line) + ": model width mismatch");
    s.alpha = parse_double(row[2], line, "alpha");
    s.sigma2 = parse_double(row[3], line, "sigma2");
    s.g = parse_double(row[4], line, "g");
    for (int j = 0; j < p; ++j) s.beta(j) = parse_double(row[5 + j], line, t.header[5 + j]);
    draws.push(m, s, true, false);
  }
  if (draws.size() == 0) throw InputError(path.string() + ": no draws");
  return draws;
}

void check_columns_present(const CsvTable& table, const std::vector<std::string>& names) {
  for (const auto& name : names) {
    if (table.find(name) < 0) {
      throw ConfigError("holdout data lacks training covariate '" + name + "'");
    }
  }
}

void write_points(CsvWriter& w, const Dataset& d, const LpsResult& r,
                  const std::vector<int>* rows = nullptr, const std::string* split = nullptr) {
  for (int i = 0; i < d.n(); ++i) {
    std::vector<std::string> f;
    if (split) f.push_back(*split);
    f.push_back(std::to_string(rows ? (*rows)[i] + 1 : i + 1));
    f.push_back(std::to_string(d.y[i]));
    f.push_back(format_double(r.log_pred[i]));
    f.push_back(r.floored[i] ? "1" : "0");
    w.row(f);
  }
}

int cmd_predict(const std::string& fit_dir, const DataOptions& data_opt,
                const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path fdir(fit_dir);
  Json fit;
  try {
    fit = Json::parse(read_file(fdir / "manifest.json"));
  } catch (const Json::exception& e) {
    throw InputError(std::string("cannot parse fit manifest: ") + e.what());
  }
  if (!fit.value("config", Json::object()).value("save_draws", false)) {
    throw InputError("fit in '" + fit_dir + "' was run without --save-draws");
  }
  const Json& cfg = fit["config"];
  const auto names = cfg["covariates"].get<std::vector<std::string>>();
  const int p = static_cast<int>(names.size());
  const FamilyTag family = parse_family(cfg["family"].get<std::string>(), cfg.value("r", 1));
  const auto means = fit["transform"]["col_means"].get<std::vector<double>>();
  const auto scales = fit["transform"]["col_scales"].get<std::vector<double>>();

  const std::string bytes = read_file(data_opt.input);
  const CsvTable table = parse_csv(bytes);
  check_columns_present(table, names);
  ColumnBinding binding{data_opt.outcome.empty() ? cfg["outcome"].get<std::string>()
                                                 : data_opt.outcome,
                        data_opt.trials.empty() ? cfg.value("trials", std::string())
                                                : data_opt.trials,
                        names};
  const Dataset holdout = load_dataset(table, binding, family);
  for (int i = 0; i < holdout.n(); ++i) {
    if (family.kind == Family::BiL && holdout.y[i] > (*holdout.trials)[i]) {
      throw InputError("row " + std::to_string(i + 1) + ": count exceeds trials");
    }
  }

  const DrawStore draws = read_draws(fdir / "draws.csv", p);
  const LpsResult r =
      lps(holdout, draws, Eigen::Map<const Eigen::VectorXd>(means.data(), p),
          Eigen::Map<const Eigen::VectorXd>(scales.data(), p));

  const fs::path dir = prepare_out_dir(out_dir);
  {
    CsvWriter w(dir / "predictions.csv", {"row", "y", "log_pred", "floored"});
    write_points(w, holdout, r);
  }
  const long floored = std::count(r.floored.begin(), r.floored.end(), true);
  {
    CsvWriter w(dir / "lps.csv", {"n_points", "lps", "n_floored"});
    w.row({std::to_string(holdout.n()), format_double(r.lps), std::to_string(floored)});
  }
  Json m = manifest_base("predict");
  m["config"] = {{"fit_dir", fit_dir}, {"family", family.name()}, {"draws", draws.size()}};
  m["dataset"] = dataset_fingerprint(data_opt.input, bytes, holdout);
  m["wall_clock_seconds"] = seconds_since(start);
  write_json(dir / "manifest.json", m);
  std::cout << "predict: LPS " << format_double(r.lps) << " over " << holdout.n() << " points\n";
  return kExitOk;
}

Dataset subset(const Dataset& d, const std::vector<int>& rows) {
  Dataset s;
  s.family = d.family;
  s.names = d.names;
  s.X.resize(static_cast<Eigen::Index>(rows.size()), d.p());
  s.y.reserve(rows.size());
  if (d.trials) s.trials = std::vector<int>();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    s.X.row(static_cast<Eigen::Index>(k)) = d.X.row(rows[k]);
    s.y.push_back(d.y[rows[k]]);
    if (d.trials) s.trials->push_back((*d.trials)[rows[k]]);
  }
  return s;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

int cmd_cv(const DataOptions& data_opt, const SamplerOptions& samp_opt, const std::string& out_dir,
           int splits, double test_share) {
  const auto start = std::chrono::steady_clock::now();
  if (splits < 1) throw ConfigError("--splits must be at least 1");
  if (!(test_share > 0.0 && test_share < 1.0)) throw ConfigError("--test-share must lie in (0, 1)");
  const FamilyTag family = family_from(data_opt);
  const std::string bytes = read_file(data_opt.input);
  const CsvTable table = parse_csv(bytes);
  const Dataset d = load_dataset(table, binding_from(data_opt), family);
  check_dataset(d);
  const PriorConfig prior = prior_from(samp_opt, d.p());
  const ChainConfig base = chain_config_from(samp_opt, &data_opt);
  const int n_test = std::max(1, static_cast<int>(std::lround(test_share * d.n())));
  if (n_test >= d.n() - 1) throw ConfigError("test share leaves fewer than two training rows");
  const fs::path dir = prepare_out_dir(out_dir);

  struct SplitResult {
    std::vector<int> test_rows;
    Dataset test;
    LpsResult score;
    double sigma2 = 0.0;
    double size = 0.0;
    int n_train = 0;
  };
  const auto run_split = [&](int s) {
    Rng rng = make_rng(samp_opt.seed, 0x5eed0000ull + static_cast<std::uint64_t>(s));
    std::vector<int> perm(d.n());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> test_rows(perm.begin(), perm.begin() + n_test);
    std::vector<int> train_rows(perm.begin() + n_test, perm.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    SplitResult r;
    r.test_rows = test_rows;
    r.test = subset(d, test_rows);
    const Dataset train = subset(d, train_rows);
    check_dataset(train);
    ChainConfig cc = base;
    cc.seed = samp_opt.seed + static_cast<std::uint64_t>(s);
    const ChainOutput fit = run_chains(train, prior, cc, samp_opt.chains, 1);
    r.score = lps(r.test, fit);
    r.sigma2 = fit.sigma2.mean;
    r.size = fit.mean_model_size;
    r.n_train = train.n();
    return r;
  };

  std::vector<SplitResult> results(splits);
  const int workers = std::max(1, std::min(thread_cap_from_env(), splits));
  for (int first = 0; first < splits; first += workers) {
    std::vector<std::future<SplitResult>> batch;
    for (int s = first; s < std::min(splits, first + workers); ++s) {
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                 run_split, s));
    }
    for (std::size_t b = 0; b < batch.size(); ++b) results[first + b] = batch[b].get();
  }

  std::vector<double> scores;
  {
    CsvWriter w(dir / "cv.csv",
                {"split", "n_train", "n_test", "lps", "n_floored", "sigma2_mean", "model_size"});
    CsvWriter pw(dir / "cv_points.csv", {"split", "row", "y", "log_pred", "floored"});
    for (int s = 0; s < splits; ++s) {
      const auto& r = results[s];
      const long floored = std::count(r.score.floored.begin(), r.score.floored.end(), true);
      w.row({std::to_string(s + 1), std::to_string(r.n_train), std::to_string(r.test.n()),
             format_double(r.score.lps), std::to_string(floored), format_double(r.sigma2),
             format_double(r.size)});
      const std::string tag = std::to_string(s + 1);
      write_points(pw, r.test, r.score, &r.test_rows, &tag);
      scores.push_back(r.score.lps);
    }
  }
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / splits;
  const double median = median_of(scores);
  const double lo = *std::min_element(scores.begin(), scores.end());
  const double hi = *std::max_element(scores.begin(), scores.end());
  {
    CsvWriter w(dir / "cv_summary.csv", {"splits", "mean", "median", "min", "max"});
    w.row({std::to_string(splits), format_double(mean), format_double(median), format_double(lo),
           format_double(hi)});
  }
  Json m = fit_manifest("cv", data_opt, samp_opt, prior, d, bytes);
  m["config"]["splits"] = splits;
  m["config"]["test_share"] = test_share;
  m["wall_clock_seconds"] = seconds_since(start);
  write_json(dir / "manifest.json", m);
  std::cout << "cv: mean LPS " << format_double(mean) << " over " << splits << " splits\n";
  return kExitOk;
}

struct SimOptions {
  int n = 1000;
  int p = 50;
  double rho = 0.6;
  std::string family = "pln";
  int r = 1;
  int ntrials = 30;
  std::string dgp = "ullgm";
  double sigma2 = 0.2;
  int replicates = 1;
  bool run = false;
};

void write_sim_data(const fs::path& path, const Dataset& d) {
  std::vector<std::string> header{"y"};
  const bool bil = d.family.kind == Family::BiL;
  if (bil) header.push_back("N");
  for (int j = 0; j < d.p(); ++j) header.push_back("x" + std::to_string(j + 1));
  CsvWriter w(path, header);
  std::vector<std::string> row(header.size());
  for (int i = 0; i < d.n(); ++i) {
    std::size_t k = 0;
    row[k++] = std::to_string(d.y[i]);
    if (bil) row[k++] = std::to_string((*d.trials)[i]);
    for (int j = 0; j < d.p(); ++j) row[k++] = format_double(d.X(i, j));
    w.row(row);
  }
}

void write_sim_truth(const fs::path& path, const SimConfig& cfg, const SimTruth& truth) {
  CsvWriter w(path, {"parameter", "value"});
  w.row({"intercept", format_double(cfg.intercept)});
  w.row({"sigma2", format_double(cfg.noise_sigma2())});
  w.row({"dgp", to_string(cfg.noise)});
  w.row({"rho", format_double(cfg.rho)});
  for (Eigen::Index j = 0; j < truth.beta_star.size(); ++j) {
    w.row({"x" + std::to_string(j + 1), format_double(truth.beta_star(j))});
  }
}

std::vector<std::string> metric_fields(const MetricsReport& r) {
  return {format_double(r.model_size), format_double(r.frac_true), format_double(r.brier),
          format_double(r.fnr),        format_double(r.fpr),       format_double(r.ln_g),
          format_double(r.sigma2),     format_double(r.seconds)};
}

int cmd_simulate(const SimOptions& o, const SamplerOptions& samp_opt, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  SimConfig cfg;
  try {
    cfg.n = o.n;
    cfg.p = o.p;
    cfg.rho = o.rho;
    cfg.family = parse_family(o.family, o.r);
    cfg.noise = parse_noise(o.dgp);
    cfg.sigma2 = o.sigma2;
    cfg.trials = o.ntrials;
    cfg.validate();
    if (o.p < 10) throw std::invalid_argument("the simulation coefficient pattern needs --p >= 10");
    if (o.replicates < 1) throw std::invalid_argument("--replicates must be at least 1");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const PriorConfig prior = o.run ? prior_from(samp_opt, o.p) : PriorConfig{};
  const ChainConfig base = o.run ? chain_config_from(samp_opt, nullptr) : ChainConfig{};
  const fs::path dir = prepare_out_dir(out_dir);
  const SimTruth truth = gen_beta_star(o.n, o.p);

  const auto suffix = [&](int r) {
    if (o.replicates == 1) return std::string();
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%03d", r);
    return std::string(buf);
  };

  std::vector<Dataset> datasets;
  for (int r = 1; r <= o.replicates; ++r) {
    Rng rng = make_rng(samp_opt.seed, static_cast<std::uint64_t>(r));
    const Eigen::MatrixXd X = gen_design(o.n, o.p, o.rho, rng);
    datasets.push_back(gen_outcomes(X, truth, cfg, rng));
    write_sim_data(dir / ("data" + suffix(r) + ".csv"), datasets.back());
    write_sim_truth(dir / ("truth" + suffix(r) + ".csv"), cfg, truth);
  }

  Json m = manifest_base("simulate");
  m["config"] = {{"n", o.n},         {"p", o.p},           {"rho", o.rho},
                 {"family", o.family}, {"r", o.r},         {"trials", o.ntrials},
                 {"dgp", o.dgp},     {"sigma2", cfg.noise_sigma2()},
                 {"replicates", o.replicates}, {"seed", samp_opt.seed}, {"run", o.run}};

  if (o.run) {
    std::vector<MetricsReport> reports(o.replicates);
    const auto run_rep = [&](int r) {
      const Dataset& d = datasets[r];
      check_dataset(d);
      ChainConfig cc = base;
      cc.seed = samp_opt.seed + static_cast<std::uint64_t>(r);
      cc.store_beta = false;
      const ChainOutput out = run_chains(d, prior, cc, samp_opt.chains, 1);
      return metrics(out, truth);
    };
    const int workers = std::max(1, std::min(thread_cap_from_env(), o.replicates));
    for (int first = 0; first < o.replicates; first += workers) {
      std::vector<std::future<MetricsReport>> batch;
      for (int r = first; r < std::min(o.replicates, first + workers); ++r) {
        batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                   run_rep, r));
      }
      for (std::size_t b = 0; b < batch.size(); ++b) reports[first + b] = batch[b].get();
    }
    CsvWriter w(dir / "metrics.csv", {"replicate", "size", "frac_true", "brier", "fnr", "fpr",
                                      "ln_g", "sigma2", "seconds"});
    for (int r = 0; r < o.replicates; ++r) {
      auto f = metric_fields(reports[r]);
      f.insert(f.begin(), std::to_string(r + 1));
      w.row(f);
    }
    auto f = metric_fields(average(reports));
    f.insert(f.begin(), "mean");
    w.row(f);
    m["config"]["sampler"] = sampler_json(samp_opt, prior, o.p);
    std::cout << "simulate: " << o.replicates << " replicates, mean Brier "
              << format_double(average(reports).brier) << '\n';
  } else {
    std::cout << "simulate: wrote " << o.replicates << " dataset(s) to " << dir.string() << '\n';
  }
  m["wall_clock_seconds"] = seconds_since(start);
  write_json(dir / "manifest.json", m);
  return kExitOk;
}

}  // namespace

Dataset load_dataset(const CsvTable& table, const ColumnBinding& binding, const FamilyTag& family) {
  Dataset d;
  d.family = family;
  if (binding.outcome.empty()) throw InputError("no outcome column given");
  const int y_col = table.require(binding.outcome);
  int n_col = -1;
  if (family.kind == Family::BiL) {
    if (binding.trials.empty()) throw InputError("family bil requires a --trials column");
    n_col = table.require(binding.trials);
  } else if (!binding.trials.empty()) {
    n_col = table.require(binding.trials);
  }

  std::vector<int> cols;
  if (binding.covariates.empty()) {
    for (int j = 0; j < static_cast<int>(table.header.size()); ++j) {
      if (j != y_col && j != n_col) cols.push_back(j);
    }
  } else {
    for (const auto& name : binding.covariates) cols.push_back(table.require(name));
  }
  if (cols.empty()) throw InputError("no covariate columns");
  for (int j : cols) d.names.push_back(table.header[j]);

  const int n = static_cast<int>(table.rows.size());
  d.y.resize(n);
  d.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  if (family.kind == Family::BiL) d.trials = std::vector<int>(n);
  for (int i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    d.y[i] = parse_count(row[y_col], i + 1, table.header[y_col]);
    if (family.kind == Family::BiL) {
      (*d.trials)[i] = parse_count(row[n_col], i + 1, table.header[n_col]);
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double v = parse_double(row[cols[k]], i + 1, table.header[cols[k]]);
      if (!std::isfinite(v)) {
        throw InputError("row " + std::to_string(i + 1) + ", column '" + table.header[cols[k]] +
                         "': non-finite value");
      }
      d.X(i, static_cast<Eigen::Index>(k)) = v;
    }
  }
  return d;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Bayesian model averaging for univariate-link latent Gaussian count models"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags take precedence)");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  DataOptions data_opt;
  SamplerOptions samp_opt;
  std::string out_dir = ".";
  bool save_draws = false;

  auto* fit = app.add_subcommand("fit", "run the sampler and write posterior summaries");
  add_data_options(fit, data_opt);
  add_sampler_options(fit, samp_opt);
  fit->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  fit->add_flag("--save-draws", save_draws, "also write draws.csv (needed by predict)");

  std::string fit_dir;
  DataOptions pred_opt;
  std::string pred_out = ".";
  auto* predict = app.add_subcommand("predict", "score holdout data against saved draws");
  predict->add_option("--fit-dir", fit_dir, "output directory of a fit run with --save-draws")
      ->required();
  predict->add_option("--input", pred_opt.input, "holdout CSV")->required();
  predict->add_option("--outcome", pred_opt.outcome, "outcome column (default: as in the fit)");
  predict->add_option("--trials", pred_opt.trials, "trial-count column (default: as in the fit)");
  predict->add_option("--out-dir", pred_out, "output directory")->capture_default_str();

  DataOptions cv_data;
  SamplerOptions cv_samp;
  std::string cv_out = ".";
  int splits = 10;
  double test_share = 0.15;
  auto* cv = app.add_subcommand("cv", "random-partition cross-validation of the LPS");
  add_data_options(cv, cv_data);
  add_sampler_options(cv, cv_samp);
  cv->add_option("--out-dir", cv_out, "output directory")->capture_default_str();
  cv->add_option("--splits", splits, "number of random partitions")->capture_default_str();
  cv->add_option("--test-share", test_share, "holdout share per partition")->capture_default_str();

  SimOptions sim;
  SamplerOptions sim_samp;
  sim_samp.msize = 5.0;
  std::string sim_out = ".";
  auto* simulate = app.add_subcommand("simulate", "generate synthetic data (and optionally fit it)");
  simulate->add_option("--n", sim.n, "observations")->capture_default_str();
  simulate->add_option("--p", sim.p, "candidate covariates (>= 10)")->capture_default_str();
  simulate->add_option("--rho", sim.rho, "AR(1) covariate correlation")->capture_default_str();
  simulate->add_option("--family", sim.family, "pln, bil or nbl")
      ->check(CLI::IsMember({"pln", "bil", "nbl"}))
      ->capture_default_str();
  simulate->add_option("--r", sim.r, "fixed r for nbl")->capture_default_str();
  simulate->add_option("--ntrials", sim.ntrials, "trials per observation (bil)")
      ->capture_default_str();
  simulate->add_option("--dgp", sim.dgp, "ullgm, glm or loggamma")
      ->check(CLI::IsMember({"ullgm", "glm", "loggamma"}))
      ->capture_default_str();
  simulate->add_option("--sigma2", sim.sigma2, "latent noise variance (ullgm dgp)")
      ->capture_default_str();
  simulate->add_option("--replicates", sim.replicates, "number of datasets")->capture_default_str();
  simulate->add_flag("--run", sim.run, "fit every replicate and write metrics.csv");
  simulate->add_option("--out-dir", sim_out, "output directory")->capture_default_str();
  add_sampler_options(simulate, sim_samp);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (fit->parsed()) return cmd_fit(data_opt, samp_opt, out_dir, save_draws);
    if (predict->parsed()) return cmd_predict(fit_dir, pred_opt, pred_out);
    if (cv->parsed()) return cmd_cv(cv_data, cv_samp, cv_out, splits, test_share);
    if (simulate->parsed()) return cmd_simulate(sim, sim_samp, sim_out);
  } catch (const PosteriorImproprietyRisk& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const StructuralError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalFailure& e) {
    std::cerr << "sampler failure: " << e.what() << '\n';
    return 1;
  }
  return kExitValidation;
}

}  // namespace ullgm::cli
