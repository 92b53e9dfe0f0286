#include "tlmix/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "tlmix/bounds.hpp"
#include "tlmix/empu.hpp"
#include "tlmix/homotl.hpp"
#include <json.hpp>

namespace tlmix {

using nlohmann::json;

std::string AlgoSpec::name() const {
  switch (kind) {
    case AlgoKind::Grid:
      return "grid";
    case AlgoKind::SourceFree:
      return "source-free";
    case AlgoKind::Empu: {
      std::string s = "empu";
      if (N) s += "[N=" + std::to_string(*N) + "]";
      return s;
    }
    case AlgoKind::Homotl:
      return "homotl";
    case AlgoKind::Dpm: {
      std::string s = "dpm";
      if (beta) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "[beta=%g]", *beta);
        s += buf;
      }
      return s;
    }
  }
  return "?";
}

void ScenarioConfig::validate() const {
  std::vector<std::string> errs;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  need(repeats >= 1, "repeats must be >= 1");
  need(n >= 0, "n must be >= 0");
  need(m >= 0, "m must be >= 0");
  need(!algorithms.empty(), "algorithms list is empty");
  need(int(theta_t.size()) == family.d || !episodes.empty(),
       "theta_t dimension must match the family");
  bool wants_source = false;
  for (const auto& a : algorithms)
    wants_source |= a.kind != AlgoKind::SourceFree;
  if (wants_source && episodes.empty())
    need(int(theta_s.size()) == family.d,
         "theta_s dimension must match the family");
  need(hyper.N >= 1, "hyper.N must be >= 1");
  need(hyper.K >= 1, "hyper.K must be >= 1");
  need(hyper.sweeps >= 1, "hyper.sweeps must be >= 1");
  need(hyper.alpha > 0.0, "hyper.alpha must be > 0");
  need(hyper.beta >= 0.0 && hyper.beta <= 1.0, "hyper.beta must be in [0,1]");
  need(partition_j >= 0 && partition_j <= family.d,
       "partition_j must lie in [0, d]");
  try {
    prior.validate();
  } catch (const std::exception& e) {
    errs.push_back(e.what());
  }
  try {
    loss.validate();
  } catch (const std::exception& e) {
    errs.push_back(e.what());
  }
  for (const auto& ep : episodes) {
    need(int(ep.theta.size()) == family.d,
         "episode theta dimension must match the family");
    need(ep.n >= 0, "episode n must be >= 0");
    need(ep.j + ep.c_common <= family.d,
         "episode partition blocks overlap (j + c > d)");
  }
  if (!errs.empty()) {
    std::string all = "invalid scenario '" + name + "':";
    for (const auto& e : errs) all += "\n  - " + e;
    throw ConfigError(all);
  }
}

EngineConfig ScenarioConfig::engine(bool source_free) const {
  EngineConfig e;
  e.family = family;
  e.prior = prior;
  e.theta_t = theta_t;
  e.theta_s = theta_s;
  e.m = m;
  e.saturated = saturated;
  e.source_free = source_free;
  e.n = n;
  e.loss = loss;
  e.resolution = hyper.resolution;
  e.episodes = episodes;
  return e;
}

// ---------------------------------------------------------------------------
// config parsing (strict: unknown keys are rejected)

static void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                           const std::string& where,
                           std::vector<std::string>& errs) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) errs.push_back("unknown key '" + it.key() + "' in " + where);
  }
}

static VecD as_vecd(const json& j) { return j.get<VecD>(); }

static AlgoSpec parse_algo(const json& j, std::vector<std::string>& errs) {
  AlgoSpec a;
  std::string kind;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else {
    reject_unknown(j, {"kind", "N", "eta", "beta"}, "algorithms[]", errs);
    kind = j.value("kind", "");
    if (j.contains("N")) a.N = j["N"].get<int>();
    if (j.contains("eta")) a.eta = j["eta"].get<double>();
    if (j.contains("beta")) a.beta = j["beta"].get<double>();
  }
  if (kind == "grid")
    a.kind = AlgoKind::Grid;
  else if (kind == "source-free")
    a.kind = AlgoKind::SourceFree;
  else if (kind == "empu")
    a.kind = AlgoKind::Empu;
  else if (kind == "homotl")
    a.kind = AlgoKind::Homotl;
  else if (kind == "dpm")
    a.kind = AlgoKind::Dpm;
  else
    errs.push_back("unknown algorithm kind '" + kind + "'");
  return a;
}

ScenarioConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  std::vector<std::string> errs;
  ScenarioConfig cfg;
  reject_unknown(j,
                 {"name", "family", "theta_t", "theta_s", "prior", "m",
                  "m_mode", "n", "loss", "algorithms", "repeats", "base_seed",
                  "hyper", "bound_overlay", "partition_j", "episodes"},
                 "top level", errs);

  cfg.name = j.value("name", "scenario");
  if (j.contains("family")) {
    const json& f = j["family"];
    reject_unknown(f, {"kind", "covariate_mean", "covariate_cov_diag",
                       "box_lo", "box_hi"},
                   "family", errs);
    std::string kind = f.value("kind", "bernoulli");
    if (kind == "bernoulli") {
      cfg.family = FamilySpec::bernoulli();
    } else if (kind == "logistic") {
      VecD mean = f.contains("covariate_mean") ? as_vecd(f["covariate_mean"])
                                               : VecD{5.0, -5.0};
      VecD cov = f.contains("covariate_cov_diag")
                     ? as_vecd(f["covariate_cov_diag"])
                     : VecD(mean.size(), 1.0);
      cfg.family = FamilySpec::logistic(mean, cov);
    } else {
      errs.push_back("unknown family kind '" + kind + "'");
    }
    if (f.contains("box_lo")) cfg.family.box.lo = as_vecd(f["box_lo"]);
    if (f.contains("box_hi")) cfg.family.box.hi = as_vecd(f["box_hi"]);
  }
  if (j.contains("theta_t")) cfg.theta_t = as_vecd(j["theta_t"]);
  if (j.contains("theta_s")) cfg.theta_s = as_vecd(j["theta_s"]);

  cfg.prior.domain = cfg.family.box;
  if (j.contains("prior")) {
    const json& p = j["prior"];
    reject_unknown(p, {"marginal", "conditional", "c", "grid_file", "tvtl"},
                   "prior", errs);
    std::string marg = p.value("marginal", "uniform");
    if (marg == "uniform")
      cfg.prior.marginal = MarginalKind::UniformBox;
    else if (marg == "linear_plus_half")
      cfg.prior.marginal = MarginalKind::LinearPlusHalf;
    else
      errs.push_back("unknown marginal kind '" + marg + "'");
    std::string cond = p.value("conditional", "uniform");
    if (cond == "uniform")
      cfg.prior.conditional = ConditionalKind::UniformBox;
    else if (cond == "sum_linear")
      cfg.prior.conditional = ConditionalKind::SumLinear;
    else if (cond == "delta")
      cfg.prior.conditional = ConditionalKind::Delta;
    else if (cond == "box")
      cfg.prior.conditional = ConditionalKind::BoxConditional;
    else if (cond == "gaussian")
      cfg.prior.conditional = ConditionalKind::GaussianConditional;
    else if (cond == "grid_file")
      cfg.prior.conditional = ConditionalKind::GridDensity;
    else
      errs.push_back("unknown conditional kind '" + cond + "'");
    cfg.prior.c = p.value("c", 0.0);
    if (p.contains("grid_file"))
      cfg.prior.table = GridDensityTable::load(p["grid_file"].get<std::string>());
    if (p.contains("tvtl")) {
      const json& t = p["tvtl"];
      reject_unknown(t, {"kind", "width", "j", "c"}, "prior.tvtl", errs);
      TvtlConditional tc;
      std::string k = t.value("kind", "box");
      tc.kind = k == "gaussian" ? ConditionalKind::GaussianConditional
                                : ConditionalKind::BoxConditional;
      tc.width = t.value("width", 0.05);
      tc.j = t.value("j", 0);
      tc.c_common = t.value("c", 0);
      cfg.prior.tvtl = tc;
    }
  }

  cfg.m = j.value("m", 0);
  std::string mmode = j.value("m_mode", "finite");
  if (mmode == "saturated")
    cfg.saturated = true;
  else if (mmode != "finite")
    errs.push_back("m_mode must be 'finite' or 'saturated'");
  cfg.n = j.value("n", 0);

  if (j.contains("loss")) {
    const json& l = j["loss"];
    reject_unknown(l, {"kind", "bound"}, "loss", errs);
    std::string k = l.value("kind", "log");
    if (k == "log")
      cfg.loss.kind = LossKind::Log;
    else if (k == "cross-entropy")
      cfg.loss.kind = LossKind::CrossEntropy;
    else if (k == "zero-one")
      cfg.loss.kind = LossKind::ZeroOne;
    else if (k == "squared")
      cfg.loss.kind = LossKind::Squared;
    else if (k == "hinge")
      cfg.loss.kind = LossKind::Hinge;
    else
      errs.push_back("unknown loss kind '" + k + "'");
    cfg.loss.bound = l.value("bound", 0.0);
  }

  if (j.contains("algorithms"))
    for (const json& a : j["algorithms"])
      cfg.algorithms.push_back(parse_algo(a, errs));

  cfg.repeats = j.value("repeats", 1);
  cfg.base_seed = j.value("base_seed", uint64_t(1));
  cfg.bound_overlay = j.value("bound_overlay", false);
  cfg.partition_j = j.value("partition_j", 0);

  cfg.hyper.g0 = GaussianBase::standard(cfg.family.d);
  if (j.contains("hyper")) {
    const json& h = j["hyper"];
    reject_unknown(h,
                   {"N", "eta", "alpha", "beta", "K", "sweeps", "resolution",
                    "base_mc", "empu_predict", "homotl_variant", "g0_mean",
                    "g0_scale"},
                   "hyper", errs);
    cfg.hyper.N = h.value("N", cfg.hyper.N);
    cfg.hyper.eta = h.value("eta", cfg.hyper.eta);
    cfg.hyper.alpha = h.value("alpha", cfg.hyper.alpha);
    cfg.hyper.beta = h.value("beta", cfg.hyper.beta);
    cfg.hyper.K = h.value("K", cfg.hyper.K);
    cfg.hyper.sweeps = h.value("sweeps", cfg.hyper.sweeps);
    cfg.hyper.resolution = h.value("resolution", cfg.hyper.resolution);
    cfg.hyper.base_mc = h.value("base_mc", cfg.hyper.base_mc);
    std::string ep = h.value("empu_predict", "mixture");
    if (ep == "sample")
      cfg.hyper.empu_sample_predict = true;
    else if (ep != "mixture")
      errs.push_back("empu_predict must be 'mixture' or 'sample'");
    std::string hv = h.value("homotl_variant", "cross-entropy");
    if (hv == "original")
      cfg.hyper.homotl_variant = HomOtlVariant::Original;
    else if (hv != "cross-entropy")
      errs.push_back("homotl_variant must be 'cross-entropy' or 'original'");
    if (h.contains("g0_mean")) cfg.hyper.g0.mean = as_vecd(h["g0_mean"]);
    if (h.contains("g0_scale")) cfg.hyper.g0.scale = as_vecd(h["g0_scale"]);
  }

  if (j.contains("episodes")) {
    for (const json& e : j["episodes"]) {
      reject_unknown(e, {"theta", "n", "j", "c"}, "episodes[]", errs);
      EpisodeSpec ep;
      if (e.contains("theta")) ep.theta = as_vecd(e["theta"]);
      ep.n = e.value("n", 0);
      ep.j = e.value("j", 0);
      ep.c_common = e.value("c", 0);
      cfg.episodes.push_back(std::move(ep));
    }
  }

  if (!errs.empty()) {
    std::string all = "config rejected:";
    for (const auto& e : errs) all += "\n  - " + e;
    throw ConfigError(all);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config not readable: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// per-trial runners

static OtlTrialResult run_trial_empu(const ScenarioConfig& cfg,
                                     const AlgoSpec& algo,
                                     uint64_t trial_seed) {
  auto t0 = std::chrono::steady_clock::now();
  OtlTrialResult res;
  try {
    int N = algo.N.value_or(cfg.hyper.N);
    double eta = algo.eta.value_or(cfg.hyper.eta);
    VecD theta_s_hat;
    if (cfg.saturated) {
      theta_s_hat = cfg.theta_s;
    } else {
      Dataset source =
          draw_source_data(cfg.family, cfg.theta_s, cfg.m, trial_seed);
      theta_s_hat = estimate_source_param(cfg.family, source);
    }
    Dataset target =
        draw_target_stream(cfg.family, cfg.theta_t, cfg.n, trial_seed);

    Rng algo_rng(substream(trial_seed, kStreamAlgo));
    Rng predict_rng(substream(trial_seed, kStreamPredict));
    EmpuState state =
        empu_init(cfg.prior, cfg.family, theta_s_hat, N, algo_rng, eta);

    double mistakes = 0.0;
    for (int k = 0; k < cfg.n; ++k) {
      Observation z = target.obs(k);
      double inst, p1;
      if (cfg.hyper.empu_sample_predict) {
        int pi = empu_sample_particle(state, predict_rng);
        auto th = state.particle(pi);
        double lq = log_density(cfg.family, th, z);
        if (cfg.family.kind == FamilyKind::Bernoulli) {
          p1 = th[0];
        } else {
          double t = 0.0;
          for (int jd = 0; jd < cfg.family.d; ++jd) t += th[jd] * z.x[jd];
          p1 = sigmoid(t);
        }
        inst = -lq - optimal_log_loss(cfg.family, cfg.theta_t, z);
      } else {
        double lq = empu_predict_log_density(state, z);
        if (!std::isfinite(lq))
          throw TrialAbort("EMPU predictive density is 0 at the observed point");
        p1 = empu_predict_prob_one(state, z.x);
        inst = -lq - optimal_log_loss(cfg.family, cfg.theta_t, z);
      }
      if ((p1 > 0.5 ? 1.0 : 0.0) != z.y) mistakes += 1.0;
      res.instantaneous.push_back(inst);
      res.cumulative.push_back(
          (res.cumulative.empty() ? 0.0 : res.cumulative.back()) + inst);
      res.mistakes.push_back(mistakes);
      empu_step(state, z, cfg.loss, eta);
    }
  } catch (const TrialAbort& e) {
    res.aborted = true;
    res.diagnostic = e.what();
  }
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

static OtlTrialResult run_trial_homotl(const ScenarioConfig& cfg,
                                       const AlgoSpec& algo,
                                       uint64_t trial_seed) {
  auto t0 = std::chrono::steady_clock::now();
  OtlTrialResult res;
  try {
    VecD theta_s_hat;
    if (cfg.saturated) {
      theta_s_hat = cfg.theta_s;
    } else {
      Dataset source =
          draw_source_data(cfg.family, cfg.theta_s, cfg.m, trial_seed);
      theta_s_hat = estimate_source_param(cfg.family, source);
    }
    Dataset target =
        draw_target_stream(cfg.family, cfg.theta_t, cfg.n, trial_seed);
    Rng algo_rng(substream(trial_seed, kStreamAlgo));
    VecD theta_t0(cfg.family.d, 0.0);
    if (cfg.hyper.homotl_variant == HomOtlVariant::CrossEntropy)
      for (int i = 0; i < cfg.family.d; ++i)
        theta_t0[i] =
            algo_rng.uniform(cfg.family.box.lo[i], cfg.family.box.hi[i]);
    HomOtlState state =
        homotl_init(cfg.family, theta_s_hat, theta_t0,
                    algo.eta.value_or(cfg.hyper.eta), cfg.hyper.homotl_variant);

    double mistakes = 0.0;
    for (int k = 0; k < cfg.n; ++k) {
      Observation z = target.obs(k);
      HomOtlPrediction pr = homotl_predict(state, z.x);
      double q = z.y != 0.0 ? pr.prob_one : 1.0 - pr.prob_one;
      double lq = q > 0.0 ? std::log(q) : kNegInf;
      if (!std::isfinite(lq))
        throw TrialAbort("HomOTL predictive probability is 0 at the label");
      double inst = -lq - optimal_log_loss(cfg.family, cfg.theta_t, z);
      if (pr.label != z.y) mistakes += 1.0;
      res.instantaneous.push_back(inst);
      res.cumulative.push_back(
          (res.cumulative.empty() ? 0.0 : res.cumulative.back()) + inst);
      res.mistakes.push_back(mistakes);
      homotl_step(state, z);
    }
  } catch (const TrialAbort& e) {
    res.aborted = true;
    res.diagnostic = e.what();
  }
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

static OtlTrialResult run_trial_dpm(const ScenarioConfig& cfg,
                                    const AlgoSpec& algo, uint64_t trial_seed,
                                    const SourceClusters* shared_source) {
  auto t0 = std::chrono::steady_clock::now();
  OtlTrialResult res;
  try {
    DpmOptions opt;
    opt.alpha = cfg.hyper.alpha;
    opt.beta = algo.beta.value_or(cfg.hyper.beta);
    opt.g0 = cfg.hyper.g0;
    opt.sweeps = cfg.hyper.sweeps;
    opt.K = cfg.hyper.K;
    opt.base_mc = cfg.hyper.base_mc;
    SourceClusters src =
        shared_source ? *shared_source : SourceClusters{};
    DpmState state = dpm_init(cfg.family, std::move(src), opt, trial_seed);

    Dataset target =
        draw_target_stream(cfg.family, cfg.theta_t, cfg.n, trial_seed);
    Rng gibbs_rng(substream(trial_seed, kStreamAlgo));
    Rng predict_rng(substream(trial_seed, kStreamPredict));

    double mistakes = 0.0;
    for (int k = 0; k < cfg.n; ++k) {
      Observation z = target.obs(k);
      DpmPrediction pr = dpm_predict(state, z, opt.K, predict_rng);
      if (!std::isfinite(pr.log_density))
        throw TrialAbort("dpm predictive density is 0 at the observed point");
      double inst = -pr.log_density - optimal_log_loss(cfg.family, cfg.theta_t, z);
      if ((pr.prob_one > 0.5 ? 1.0 : 0.0) != z.y) mistakes += 1.0;
      res.instantaneous.push_back(inst);
      res.cumulative.push_back(
          (res.cumulative.empty() ? 0.0 : res.cumulative.back()) + inst);
      res.mistakes.push_back(mistakes);
      dpm_observe(state, z, gibbs_rng);
    }
  } catch (const TrialAbort& e) {
    res.aborted = true;
    res.diagnostic = e.what();
  }
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

OtlTrialResult run_trial(const ScenarioConfig& cfg, const AlgoSpec& algo,
                         uint64_t trial_seed,
                         const SourceClusters* dpm_source) {
  switch (algo.kind) {
    case AlgoKind::Grid: {
      if (!cfg.episodes.empty()) {
        // concatenate per-episode curves; cumulative regret carries across
        auto eps = run_tvtl_grid(cfg.engine(false), trial_seed);
        OtlTrialResult all;
        double base = 0.0, mbase = 0.0;
        for (const auto& ep : eps) {
          if (ep.aborted) {
            all.aborted = true;
            all.diagnostic = ep.diagnostic;
            break;
          }
          for (size_t i = 0; i < ep.instantaneous.size(); ++i) {
            all.instantaneous.push_back(ep.instantaneous[i]);
            all.cumulative.push_back(base + ep.cumulative[i]);
            all.mistakes.push_back(mbase + ep.mistakes[i]);
          }
          if (!ep.cumulative.empty()) {
            base += ep.cumulative.back();
            mbase += ep.mistakes.back();
          }
        }
        return all;
      }
      return run_otl_grid(cfg.engine(false), trial_seed);
    }
    case AlgoKind::SourceFree:
      return run_otl_grid(cfg.engine(true), trial_seed);
    case AlgoKind::Empu:
      return run_trial_empu(cfg, algo, trial_seed);
    case AlgoKind::Homotl:
      return run_trial_homotl(cfg, algo, trial_seed);
    case AlgoKind::Dpm:
      return run_trial_dpm(cfg, algo, trial_seed, dpm_source);
  }
  throw std::logic_error("unreachable algorithm kind");
}

VecD bound_overlay_curve(const ScenarioConfig& cfg, bool source_free) {
  if (!cfg.loss.is_log() || cfg.theta_t.empty()) return {};
  double density;
  if (source_free) {
    density = marginal_density(cfg.prior, cfg.theta_t);
  } else if (cfg.prior.atomic()) {
    bool same = cfg.theta_t == cfg.theta_s;
    density = same ? kPosInf : 0.0;
  } else {
    density = conditional_density(cfg.prior, cfg.theta_t, cfg.theta_s);
  }

  VecD curve(cfg.n);
  if (cfg.family.d == 1) {
    double it = fisher_information(cfg.family, cfg.theta_t)(0, 0);
    for (int k = 1; k <= cfg.n; ++k)
      curve[k - 1] = otl_asymptote_scalar(k, it, density).total;
    return curve;
  }
  int j = source_free ? 0 : cfg.partition_j;
  FisherBlocks blocks =
      fisher_blocks(cfg.family, source_free ? cfg.theta_t : cfg.theta_s,
                    cfg.theta_t, j);
  double m_eff = cfg.saturated ? kPosInf : double(std::max(cfg.m, 1));
  for (int k = 1; k <= cfg.n; ++k)
    curve[k - 1] = otl_asymptote_general(k, m_eff, blocks, density).total;
  return curve;
}

int default_thread_count() {
  if (const char* env = std::getenv("TLMIX_THREADS")) {
    int t = std::atoi(env);
    if (t >= 1) return t;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? int(hc) : 1;
}

std::vector<CurveSummary> run_scenario(const ScenarioConfig& cfg, int threads) {
  cfg.validate();
  if (threads < 1) threads = default_thread_count();

  // the DPM source fit is shared read-only across every trial of the scenario
  SourceClusters dpm_source;
  bool needs_dpm = false;
  for (const auto& a : cfg.algorithms) needs_dpm |= a.kind == AlgoKind::Dpm;
  if (needs_dpm && cfg.m > 0) {
    uint64_t fit_seed = substream(cfg.base_seed, 0xD1A7ULL);
    Dataset source = draw_source_data(cfg.family, cfg.theta_s, cfg.m, fit_seed);
    auto atoms = dpm_fit_source(cfg.family, source, cfg.hyper.alpha,
                                cfg.hyper.g0, cfg.hyper.sweeps, fit_seed,
                                cfg.hyper.base_mc);
    dpm_source = collapse_atoms(atoms);
  }

  struct Task {
    int algo;
    int trial;
  };
  std::vector<Task> tasks;
  for (int a = 0; a < int(cfg.algorithms.size()); ++a)
    for (int t = 0; t < cfg.repeats; ++t) tasks.push_back({a, t});
  std::vector<std::vector<OtlTrialResult>> results(cfg.algorithms.size());
  for (auto& r : results) r.resize(cfg.repeats);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& tk = tasks[i];
      results[tk.algo][tk.trial] =
          run_trial(cfg, cfg.algorithms[tk.algo], cfg.base_seed + tk.trial,
                    needs_dpm ? &dpm_source : nullptr);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // deterministic reduction in trial order
  std::vector<CurveSummary> out;
  for (size_t a = 0; a < cfg.algorithms.size(); ++a) {
    CurveSummary cs;
    cs.scenario = cfg.name;
    cs.algorithm = cfg.algorithms[a].name();
    int steps = 0;
    for (const auto& r : results[a])
      if (!r.aborted) steps = std::max(steps, int(r.cumulative.size()));
    VecD sum(steps, 0.0), sumsq(steps, 0.0), msum(steps, 0.0);
    double secs = 0.0;
    for (const auto& r : results[a]) {
      if (r.aborted) {
        cs.aborted++;
        cs.diagnostics.push_back(r.diagnostic);
        continue;
      }
      cs.completed++;
      secs += r.seconds;
      for (int k = 0; k < steps; ++k) {
        sum[k] += r.cumulative[k];
        sumsq[k] += r.cumulative[k] * r.cumulative[k];
        msum[k] += r.mistakes[k];
      }
    }
    int ntr = std::max(cs.completed, 1);
    cs.mean_regret.resize(steps);
    cs.stderr_regret.resize(steps);
    cs.mean_mistakes.resize(steps);
    for (int k = 0; k < steps; ++k) {
      double mean = sum[k] / ntr;
      cs.mean_regret[k] = mean;
      double var = cs.completed > 1
                       ? std::max(0.0, (sumsq[k] - ntr * mean * mean) /
                                           (cs.completed - 1))
                       : 0.0;
      cs.stderr_regret[k] = std::sqrt(var / ntr);
      cs.mean_mistakes[k] = msum[k] / ntr;
    }
    cs.mean_trial_seconds = cs.completed ? secs / cs.completed : 0.0;
    if (cfg.bound_overlay && cfg.episodes.empty())
      cs.overlay = bound_overlay_curve(
          cfg, cfg.algorithms[a].kind == AlgoKind::SourceFree);
    out.push_back(std::move(cs));
  }
  return out;
}

static void fmt17(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

void emit_csv(const std::vector<CurveSummary>& results,
              const std::string& path) {
  if (results.empty()) throw ConfigError("emit_csv: no results");
  std::vector<const CurveSummary*> order;
  for (const auto& r : results) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const CurveSummary* a, const CurveSummary* b) {
              if (a->scenario != b->scenario) return a->scenario < b->scenario;
              return a->algorithm < b->algorithm;
            });
  std::ofstream out(path, std::ios::binary);  // LF endings on every platform
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  out << "scenario,algorithm,step,mean_regret,stderr,mean_mistakes,bound_overlay\n";
  for (const CurveSummary* cs : order) {
    for (size_t k = 0; k < cs->mean_regret.size(); ++k) {
      std::string line = cs->scenario + "," + cs->algorithm + "," +
                         std::to_string(k + 1) + ",";
      fmt17(line, cs->mean_regret[k]);
      line += ",";
      fmt17(line, cs->stderr_regret[k]);
      line += ",";
      fmt17(line, cs->mean_mistakes[k]);
      line += ",";
      fmt17(line, k < cs->overlay.size()
                      ? cs->overlay[k]
                      : std::numeric_limits<double>::quiet_NaN());
      out << line << "\n";
    }
  }
  if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

}  // namespace tlmix
