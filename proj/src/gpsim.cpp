#include "spatialiv/gpsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "spatialiv/rng.hpp"

namespace spatialiv {

double matern_corr(double dist, double theta, bool scaled_argument) {
  if (!(theta > 0.0)) throw Error(ErrorCode::DomainError, "Matern range must be positive");
  if (!(dist >= 0.0)) throw Error(ErrorCode::DomainError, "distance must be nonnegative");
  if (dist == 0.0) return 1.0;
  const double x = (scaled_argument ? 2.0 : 1.0) * dist / theta;
  if (x > 740.0) return 0.0;  // below the smallest subnormal
  return 0.5 * x * x * bessel_k(2, x);
}

Matrix matern_matrix(const Matrix& coords, double theta, bool scaled_argument,
                     const std::vector<int>* region_ids) {
  const Eigen::Index n = coords.rows();
  if (region_ids && static_cast<Eigen::Index>(region_ids->size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "region ids do not match coordinates");
  }
  Matrix r(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = 0.0;
      if (!region_ids || (*region_ids)[static_cast<std::size_t>(i)] ==
                             (*region_ids)[static_cast<std::size_t>(j)]) {
        v = matern_corr((coords.row(i) - coords.row(j)).norm(), theta, scaled_argument);
      }
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::M1: return "M1";
    case Mechanism::M2: return "M2";
    case Mechanism::M3: return "M3";
  }
  return "?";
}

std::string to_string(OutcomeModel m) { return m == OutcomeModel::Linear ? "linear" : "nonlinear"; }

Mechanism parse_mechanism(const std::string& s) {
  if (s == "M1" || s == "1") return Mechanism::M1;
  if (s == "M2" || s == "2") return Mechanism::M2;
  if (s == "M3" || s == "3") return Mechanism::M3;
  throw Error(ErrorCode::ConfigError, "unknown mechanism '" + s + "'");
}

OutcomeModel parse_outcome_model(const std::string& s) {
  if (s == "linear") return OutcomeModel::Linear;
  if (s == "nonlinear") return OutcomeModel::NonLinear;
  throw Error(ErrorCode::ConfigError, "unknown outcome model '" + s + "'");
}

OutcomeCoefficients OutcomeCoefficients::for_model(OutcomeModel m) {
  OutcomeCoefficients c;
  if (m == OutcomeModel::NonLinear) {
    c.a2 = -0.1;
    c.a2u = 0.1;
  }
  return c;
}

SimScenario SimScenario::defaults(Mechanism m, OutcomeModel o) {
  SimScenario s;
  s.mechanism = m;
  s.theta_uc = m == Mechanism::M2 ? 0.05 : 0.01;
  s.outcome_model = o;
  s.coefficients = OutcomeCoefficients::for_model(o);
  return s;
}

void SimScenario::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (!(theta_uc > 0.0) || !(theta_c > 0.0)) fail("Matern ranges must be positive");
  if (!(layout_width > 0.0) || !(layout_height > 0.0)) fail("layout extent must be positive");
  if (!(cross_corr > -1.0 && cross_corr < 1.0)) fail("cross_corr must lie in (-1, 1)");
  if (!(noise_sd >= 0.0)) fail("noise_sd must be nonnegative");
  if (coords_source.kind == CoordsSource::Kind::Synthetic && n < 3) fail("n must be at least 3");
  if (mechanism == Mechanism::M3 && coords_source.kind == CoordsSource::Kind::Synthetic &&
      region_count < 2) {
    fail("mechanism M3 needs at least 2 regions");
  }
}

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

std::vector<int> dense_ids(const std::vector<std::string>& labels) {
  std::map<std::string, int> index;
  std::vector<int> ids;
  ids.reserve(labels.size());
  for (const auto& l : labels) {
    auto it = index.find(l);
    if (it == index.end()) it = index.emplace(l, static_cast<int>(index.size())).first;
    ids.push_back(it->second);
  }
  return ids;
}

}  // namespace

SimLayout synthetic_layout(int n, std::uint64_t layout_seed, int region_count, double width,
                           double height) {
  CounterRng rng(layout_seed, 0);
  const double shift_x = rng.uniform(), shift_y = rng.uniform();
  SimLayout layout;
  layout.coords.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<std::uint64_t>(i + 1);
    layout.coords(i, 0) = width * std::fmod(radical_inverse(idx, 2) + shift_x, 1.0);
    layout.coords(i, 1) = height * std::fmod(radical_inverse(idx, 3) + shift_y, 1.0);
    layout.ids.push_back("u" + std::to_string(i + 1));
  }
  if (region_count > 0) {
    CounterRng site_rng(layout_seed, 1);
    Matrix sites(region_count, 2);
    for (int k = 0; k < region_count; ++k) {
      sites(k, 0) = width * site_rng.uniform();
      sites(k, 1) = height * site_rng.uniform();
    }
    for (int i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (sites.rowwise() - layout.coords.row(i)).rowwise().squaredNorm().minCoeff(&best);
      layout.region.push_back("R" + std::to_string(best + 1));
    }
    layout.region_ids = dense_ids(layout.region);
  }
  return layout;
}

SimLayout make_layout(const SimScenario& s) {
  s.validate();
  if (s.coords_source.kind == CoordsSource::Kind::Synthetic) {
    return synthetic_layout(s.n, s.layout_seed, s.mechanism == Mechanism::M3 ? s.region_count : 0,
                            s.layout_width, s.layout_height);
  }
  CsvSchema schema;
  schema.x = s.coords_source.x_column;
  schema.y = s.coords_source.y_column;
  schema.exposure = s.coords_source.x_column;  // placeholder, coordinates only
  schema.id = s.coords_source.id_column;
  schema.region = s.coords_source.region_column;
  auto loaded = load_csv(s.coords_source.path, schema);
  SimLayout layout;
  layout.coords = loaded.dataset.coords;
  layout.ids = loaded.dataset.ids;
  if (loaded.dataset.region) {
    layout.region = *loaded.dataset.region;
    layout.region_ids = dense_ids(layout.region);
  }
  if (s.mechanism == Mechanism::M3) {
    const int levels = layout.region_ids.empty()
                           ? 0
                           : *std::max_element(layout.region_ids.begin(), layout.region_ids.end()) + 1;
    if (levels < 2) {
      throw Error(ErrorCode::ConfigError, "mechanism M3 needs region labels with at least 2 levels");
    }
  }
  return layout;
}

SymMatrix joint_covariance(const Matrix& coords, const SimScenario& s,
                           const std::vector<int>* region_ids) {
  if (s.mechanism == Mechanism::M3 && !region_ids) {
    throw Error(ErrorCode::InvalidArgument, "mechanism M3 needs region ids");
  }
  const auto* regions = s.mechanism == Mechanism::M3 ? region_ids : nullptr;
  const Eigen::Index n = coords.rows();
  const Matrix r_uc = matern_matrix(coords, s.theta_uc, s.matern_scaled_argument, regions);
  const Matrix r_c = matern_matrix(coords, s.theta_c, s.matern_scaled_argument, regions);
  Matrix cov = Matrix::Zero(3 * n, 3 * n);
  cov.block(0, 0, n, n) = r_uc;
  cov.block(n, n, n, n) = r_c;
  cov.block(2 * n, 2 * n, n, n) = r_c;
  cov.block(n, 2 * n, n, n) = s.cross_corr * r_c;
  cov.block(2 * n, n, n, n) = s.cross_corr * r_c;
  return SymMatrix(cov);
}

SymMatrix joint_covariance(const SimLayout& layout, const SimScenario& s) {
  return joint_covariance(layout.coords, s, layout.region_ids.empty() ? nullptr : &layout.region_ids);
}

GpSampler::GpSampler(SimLayout layout, SimScenario scenario)
    : layout_(std::move(layout)), scenario_(std::move(scenario)) {
  scenario_.validate();
  const auto* regions = scenario_.mechanism == Mechanism::M3 ? &layout_.region_ids : nullptr;
  if (regions && regions->empty()) {
    throw Error(ErrorCode::ConfigError, "mechanism M3 needs region labels");
  }
  auto uc = cholesky_jittered(SymMatrix(matern_matrix(layout_.coords, scenario_.theta_uc,
                                                      scenario_.matern_scaled_argument, regions)));
  auto c = cholesky_jittered(SymMatrix(matern_matrix(layout_.coords, scenario_.theta_c,
                                                     scenario_.matern_scaled_argument, regions)));
  lower_uc_ = std::move(uc.lower);
  jitter_uc_ = uc.jitter;
  lower_c_ = std::move(c.lower);
  jitter_c_ = c.jitter;
}

SimTruth GpSampler::draw_fields(std::uint64_t seed, std::uint64_t stream) const {
  const Eigen::Index n = layout_.coords.rows();
  CounterRng rng(seed, stream);
  Vector z(3 * n);
  for (Eigen::Index i = 0; i < 3 * n; ++i) z(i) = rng.normal();
  const double r = scenario_.cross_corr;
  SimTruth t;
  t.a_uc = lower_uc_.triangularView<Eigen::Lower>() * z.segment(0, n);
  const Vector g1 = lower_c_.triangularView<Eigen::Lower>() * z.segment(n, n);
  const Vector g2 = lower_c_.triangularView<Eigen::Lower>() * z.segment(2 * n, n);
  t.a_c = g1;
  t.u = r * g1 + std::sqrt(1.0 - r * r) * g2;
  t.a_uc.array() += scenario_.mean_uc;
  t.a_c.array() += scenario_.mean_c;
  t.u.array() += scenario_.mean_u;
  return t;
}

SimDraw GpSampler::draw(std::uint64_t seed) const {
  SimDraw out;
  out.truth = draw_fields(seed, 0);
  const Eigen::Index n = layout_.coords.rows();
  auto& d = out.dataset;
  d.coords = layout_.coords;
  d.ids = layout_.ids;
  if (!layout_.region.empty()) d.region = layout_.region;
  d.covariates.resize(n, 0);
  d.exposure = out.truth.a_uc + out.truth.a_c;
  CounterRng noise(seed, 2);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = scenario_.coefficients.mean(d.exposure(i), out.truth.u(i)) +
           scenario_.noise_sd * noise.normal();
  }
  d.outcome = std::move(y);
  return out;
}

SymMatrix GpSampler::implied_covariance() const {
  const Eigen::Index n = layout_.coords.rows();
  const double r = scenario_.cross_corr;
  const Matrix ruc = lower_uc_ * lower_uc_.transpose();
  const Matrix rc = lower_c_ * lower_c_.transpose();
  Matrix cov = Matrix::Zero(3 * n, 3 * n);
  cov.block(0, 0, n, n) = ruc;
  cov.block(n, n, n, n) = rc;
  cov.block(2 * n, 2 * n, n, n) = rc;
  cov.block(n, 2 * n, n, n) = r * rc;
  cov.block(2 * n, n, n, n) = r * rc;
  return SymMatrix(cov);
}

SimDraw sample_draw(const SimScenario& scenario) {
  GpSampler sampler(make_layout(scenario), scenario);
  return sampler.draw(scenario.seed);
}

TruthEstimate true_truncated_effect(const GpSampler& sampler, double c, int reps) {
  if (reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be positive");
  const auto& coef = sampler.scenario().coefficients;
  const std::uint64_t base = sampler.scenario().seed;
  Vector num(reps), den(reps);
  for (int r = 0; r < reps; ++r) {
    const SimTruth t = sampler.draw_fields(base + static_cast<std::uint64_t>(r), 1);
    double sn = 0.0, sd = 0.0;
    for (Eigen::Index i = 0; i < t.u.size(); ++i) {
      const double a = t.a_uc(i) + t.a_c(i);
      sn += coef.mean(std::min(a, c), t.u(i));
      sd += coef.mean(a, t.u(i));
    }
    num(r) = sn / static_cast<double>(t.u.size());
    den(r) = sd / static_cast<double>(t.u.size());
  }
  const double mn = num.mean(), md = den.mean();
  TruthEstimate out;
  out.reps = reps;
  out.value = mn / md;
  if (reps > 1) {
    // delta method for a ratio of means
    const Vector infl = (num.array() - mn) / md - mn * (den.array() - md) / (md * md);
    out.se = std::sqrt(stats::variance(infl) / reps);
  }
  return out;
}

TruthEstimate true_truncated_effect(const SimScenario& scenario, double c, int reps) {
  if (std::isinf(c) && c > 0) return {1.0, 0.0, reps};
  GpSampler sampler(make_layout(scenario), scenario);
  return true_truncated_effect(sampler, c, reps);
}

std::vector<ReplicationRecord> run_replications(const GpSampler& sampler, int replicates,
                                                const EstimatorSuite& suite,
                                                const std::vector<std::string>& method_names,
                                                int threads) {
  if (replicates < 1) throw Error(ErrorCode::InvalidArgument, "need at least one replicate");
  std::vector<std::vector<ReplicationRecord>> per_rep(static_cast<std::size_t>(replicates));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < replicates; r = next++) {
      const std::uint64_t seed = sampler.scenario().seed + static_cast<std::uint64_t>(r);
      auto& out = per_rep[static_cast<std::size_t>(r)];
      try {
        const SimDraw draw = sampler.draw(seed);
        for (auto& row : suite(draw)) out.push_back({r, seed, std::move(row)});
      } catch (const std::exception& e) {
        out.clear();
        for (const auto& m : method_names) {
          ReplicateRow row;
          row.method = m;
          row.estimate = row.ci_lo = row.ci_hi = std::nan("");
          row.status = std::string("error: ") + e.what();
          out.push_back({r, seed, std::move(row)});
        }
      }
    }
  };
  const int nthreads = std::clamp(threads, 1, replicates);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<ReplicationRecord> records;
  for (auto& rows : per_rep) {
    for (auto& rec : rows) records.push_back(std::move(rec));
  }
  return records;
}

std::vector<MethodSummary> summarize(const std::vector<ReplicationRecord>& records, double truth) {
  std::vector<MethodSummary> out;
  std::map<std::pair<std::string, double>, std::size_t> index;
  std::vector<std::vector<const ReplicateRow*>> rows;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.row.method, rec.row.cutoff);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({rec.row.method, rec.row.cutoff});
      rows.emplace_back();
    }
    rows[it->second].push_back(&rec.row);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& s = out[k];
    std::vector<double> err;
    int covered = 0;
    for (const auto* r : rows[k]) {
      if (r->status != "ok" || !std::isfinite(r->estimate)) {
        ++s.failed;
        continue;
      }
      err.push_back(r->estimate - truth);
      if (r->ci_lo <= truth && truth <= r->ci_hi) ++covered;
    }
    s.ok = static_cast<int>(err.size());
    if (s.ok == 0) {
      s.mean_estimate = s.bias = s.rmse = s.mc_se = s.coverage = std::nan("");
      continue;
    }
    double sum = 0.0, sq = 0.0;
    for (double e : err) {
      sum += e;
      sq += e * e;
    }
    s.bias = sum / s.ok;
    s.mean_estimate = truth + s.bias;
    s.rmse = std::sqrt(sq / s.ok);
    double var = 0.0;
    for (double e : err) var += (e - s.bias) * (e - s.bias);
    s.mc_se = s.ok > 1 ? std::sqrt(var / (s.ok - 1) / s.ok) : 0.0;
    s.coverage = static_cast<double>(covered) / s.ok;
  }
  return out;
}

}  // namespace spatialiv
