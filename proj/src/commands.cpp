#include "spatialiv/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <thread>

#include "spatialiv/rng.hpp"
#include "spatialiv/svg.hpp"

namespace spatialiv {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::KTooLarge:
    case ErrorCode::DfOutOfRange:
    case ErrorCode::MOutOfRange:
    case ErrorCode::InvalidInterval:
      return kExitConfig;
    default:
      return kExitData;
  }
}

namespace {

using Metadata = std::vector<std::pair<std::string, std::string>>;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

// Runs fn(0..count-1) on up to `threads` workers. Results must go to
// per-index slots; the exception of the lowest failing index is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min(threads, count));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class Output {
 public:
  Output(const RunConfig& c, CommandResult& result) : c_(c), result_(result) {
    write("resolved_config.json", resolved_json(c));
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = join(c_.output_dir, name);
    write_file_atomic(path, content);
    result_.files.push_back(path);
  }

  /// Writes `stem`.csv or `stem`.json according to the configured format.
  void table(const std::string& stem, Table t) {
    t.metadata.insert(t.metadata.begin(), {"resolved_config", "resolved_config.json"});
    if (c_.format == "json") {
      write(stem + ".json", t.to_json());
    } else {
      write(stem + ".csv", t.to_csv());
    }
  }

 private:
  const RunConfig& c_;
  CommandResult& result_;
};

Metadata simulation_metadata(const GpSampler& s) {
  const bool scaled = s.scenario().matern_scaled_argument;
  return {{"matern", scaled ? "nu=2, argument 2*d/theta" : "nu=2, argument d/theta"},
          {"matern_scaled_argument", scaled ? "true" : "false"},
          {"rng", std::string(CounterRng::kAlgorithm)},
          {"jitter_uc", format_number(s.jitter_uc())},
          {"jitter_c", format_number(s.jitter_c())}};
}

SpatialDataset load_dataset(const RunConfig& c, std::ostream& log) {
  if (c.dataset.path.empty()) config_error("dataset.path is required for this command");
  auto loaded = load_csv(c.dataset.path, c.dataset.schema());
  if (loaded.dropped_rows > 0) {
    log << "dropped " << loaded.dropped_rows << " rows with missing values from " << c.dataset.path << "\n";
  }
  return std::move(loaded.dataset);
}

// Builds bases of one kind for a fixed dataset; eigen kinds reuse one decomposition.
class BasisFactory {
 public:
  BasisFactory(const SpatialDataset& d, const BasisSpec& spec) : d_(d), spec_(spec) {
    if (spec.kind == "laplacian" || spec.kind == "precision") {
      const SpatialGraph g = spec.edge_list ? load_edge_list(*spec.edge_list, d) : knn_graph(d, spec.knn_k);
      zero_eigenvalues_ = static_cast<int>(g.component_count);
      eig_ = sym_eigen(graph_laplacian(g));
    }
  }

  SpatialBasis make(int dim) const {
    if (spec_.kind == "tps") return tps_basis(d_, dim);
    if (spec_.kind == "region") return region_basis(d_);
    return eigen_basis(eig_, dim, EigenOrder::Smoothest,
                       spec_.kind == "precision" ? BasisKind::PrecisionEigen : BasisKind::LaplacianEigen);
  }

  int zero_eigenvalues() const { return zero_eigenvalues_; }
  bool has_dimension() const { return spec_.kind != "region"; }
  int min_dimension() const {
    if (spec_.min_dimension > 0) return spec_.min_dimension;
    return spec_.kind == "tps" ? 4 : 1;
  }
  int max_dimension() const {
    const auto n = static_cast<int>(d_.n());
    return spec_.max_dimension > 0 ? spec_.max_dimension : std::max(min_dimension(), n / 2);
  }

 private:
  const SpatialDataset& d_;
  const BasisSpec& spec_;
  EigenDecomposition eig_;
  int zero_eigenvalues_ = 0;
};

struct ResolvedDecomposition {
  ExposureDecomposition dec;
  int dimension = 0;
  std::string source;
};

ResolvedDecomposition resolve_decomposition(const SpatialDataset& d, const BasisSpec& spec) {
  BasisFactory factory(d, spec);
  ResolvedDecomposition out;
  if (!factory.has_dimension()) {
    out.dec = decompose(d.exposure, std::make_shared<const SpatialBasis>(factory.make(0)));
    out.dimension = static_cast<int>(out.dec.basis->dimension());
    out.source = "region levels";
    return out;
  }
  if (spec.dimension) {
    out.dimension = *spec.dimension;
    out.source = "fixed";
  } else if (spec.variance_target) {
    const auto choice = choose_dimension(
        d.exposure, [&](int dim) { return factory.make(dim); }, factory.min_dimension(),
        factory.max_dimension(), *spec.variance_target);
    out.dimension = choice.dimension;
    out.source = "variance target " + format_number(*spec.variance_target);
  } else {
    out.dimension = std::max(factory.min_dimension(), static_cast<int>(std::floor(0.07 * d.n())));
    out.source = "default floor(0.07 n)";
  }
  out.dec = decompose(d.exposure, std::make_shared<const SpatialBasis>(factory.make(out.dimension)));
  return out;
}

bool needs_decomposition(AdjustmentSet a) {
  return a == AdjustmentSet::AC || a == AdjustmentSet::ACPlusCoords;
}

Metadata decomposition_metadata(const ResolvedDecomposition& r, const std::string& kind) {
  return {{"basis", kind},
          {"dimension", std::to_string(r.dimension)},
          {"dimension_source", r.source},
          {"confounded_share", format_number(r.dec.confounded_share())},
          {"instrument_share", format_number(r.dec.instrument_share())}};
}

TruncatedEffectConfig estimator_config(const RunConfig& c) {
  TruncatedEffectConfig t;
  t.nuisance = c.estimator;
  t.bandwidths = c.bandwidths;
  return t;
}

std::string replicate_name(const std::string& stem, int r, int total) {
  const auto width = std::max<std::size_t>(4, std::to_string(total).size());
  std::string index = std::to_string(r + 1);
  index.insert(0, width - index.size(), '0');
  return stem + "_" + index + ".csv";
}

}  // namespace

CommandResult cmd_simulate(const RunConfig& c, std::ostream& log) {
  CommandResult result;
  Output out(c, result);
  const GpSampler sampler(make_layout(c.scenario), c.scenario);
  const Metadata meta = simulation_metadata(sampler);

  std::vector<SimDraw> draws(static_cast<std::size_t>(c.replicates));
  parallel_for(c.replicates, c.threads, [&](int r) {
    draws[static_cast<std::size_t>(r)] = sampler.draw(c.seed + static_cast<std::uint64_t>(r));
  });

  Table manifest;
  manifest.columns = {"replicate", "seed", "dataset", "truth"};
  for (int r = 0; r < c.replicates; ++r) {
    const auto& draw = draws[static_cast<std::size_t>(r)];
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(r);
    Metadata dmeta = meta;
    dmeta.insert(dmeta.begin(), {"seed", std::to_string(seed)});
    dmeta.insert(dmeta.begin(), {"resolved_config", "resolved_config.json"});
    const auto dname = replicate_name("dataset", r, c.replicates);
    const auto tname = replicate_name("truth", r, c.replicates);
    write_csv(draw.dataset, join(c.output_dir, dname), dmeta);
    result.files.push_back(join(c.output_dir, dname));

    Table truth;
    truth.columns = {"id", "a_uc", "a_c", "u"};
    for (Eigen::Index i = 0; i < draw.truth.u.size(); ++i) {
      truth.add_row({draw.dataset.ids[static_cast<std::size_t>(i)], draw.truth.a_uc(i), draw.truth.a_c(i),
                     draw.truth.u(i)});
    }
    truth.metadata = dmeta;
    write_file_atomic(join(c.output_dir, tname), truth.to_csv());
    result.files.push_back(join(c.output_dir, tname));
    manifest.add_row({std::int64_t{r + 1}, std::to_string(seed), dname, tname});
  }
  manifest.metadata = meta;
  manifest.metadata.emplace_back("n", std::to_string(sampler.layout().coords.rows()));
  out.table("manifest", manifest);

  Table effect;
  effect.columns = {"cutoff", "truth", "se", "replicates", "source"};
  for (double cut : c.cutoffs) {
    if (auto f = frozen_truth(c.scenario, cut)) {
      effect.add_row({cut, f->value, f->se, std::int64_t{f->reps}, std::string("frozen")});
    } else {
      const auto t = true_truncated_effect(sampler, cut, c.benchmark.truth_reps);
      effect.add_row({cut, t.value, t.se, std::int64_t{t.reps}, std::string("monte carlo")});
    }
  }
  effect.metadata = meta;
  out.table("truth_effect", effect);
  log << "simulated " << c.replicates << " datasets of " << sampler.layout().coords.rows() << " units into "
      << c.output_dir << "\n";
  return result;
}

CommandResult cmd_decompose(const RunConfig& c, std::ostream& log) {
  CommandResult result;
  Output out(c, result);
  const SpatialDataset d = load_dataset(c, log);
  const auto r = resolve_decomposition(d, c.basis);
  Table t;
  t.columns = {"id", "a", "a_c", "a_uc"};
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    t.add_row({d.ids[static_cast<std::size_t>(i)], d.exposure(i), r.dec.a_c(i), r.dec.a_uc(i)});
  }
  t.metadata = decomposition_metadata(r, c.basis.kind);
  out.table("decomposition", t);
  log << c.basis.kind << " basis, dimension " << r.dimension << " (" << r.source
      << "), Var(a_c)/Var(a) = " << format_number(r.dec.confounded_share()) << "\n";
  return result;
}

CommandResult cmd_estimate(const RunConfig& c, std::ostream& log) {
  CommandResult result;
  Output out(c, result);
  const SpatialDataset d = load_dataset(c, log);
  if (!d.outcome) config_error("estimate needs dataset.outcome");

  if (c.model == "linear") {
    const auto r = resolve_decomposition(d, c.basis);
    const IvStrategy strategy = parse_iv_strategy(c.strategy);
    IvFit fit;
    if (strategy == IvStrategy::TwoSLS) fit = fit_2sls(*d.outcome, r.dec);
    if (strategy == IvStrategy::TwoSRI) fit = fit_2sri(*d.outcome, r.dec);
    if (strategy == IvStrategy::DoublePrediction) fit = fit_double_prediction(*d.outcome, d.exposure, *r.dec.basis);
    Table t;
    t.columns = {"beta", "intercept", "strategy", "instrument_variance_share"};
    t.add_row({fit.beta, fit.intercept, to_string(fit.strategy), fit.instrument_variance_share});
    t.metadata = decomposition_metadata(r, c.basis.kind);
    out.table("linear_iv", t);
    log << to_string(fit.strategy) << " beta = " << format_number(fit.beta) << "\n";
    return result;
  }

  std::vector<AdjustmentSet> sets;
  for (const auto& a : c.adjustments) sets.push_back(parse_adjustment(a));
  std::optional<ResolvedDecomposition> r;
  if (std::any_of(sets.begin(), sets.end(), needs_decomposition)) r = resolve_decomposition(d, c.basis);

  const auto cfg = estimator_config(c);
  const int ncut = static_cast<int>(c.cutoffs.size());
  const int jobs = static_cast<int>(sets.size()) * ncut;
  std::vector<TruncatedEffectEstimate> est(static_cast<std::size_t>(jobs));
  parallel_for(jobs, c.threads, [&](int k) {
    const AdjustmentSet a = sets[static_cast<std::size_t>(k / ncut)];
    const double cut = c.cutoffs[static_cast<std::size_t>(k % ncut)];
    est[static_cast<std::size_t>(k)] =
        truncated_effect(d, a, needs_decomposition(a) ? &r->dec : nullptr, cut, cfg);
  });

  Table t;
  t.columns = {"cutoff", "method", "psi", "ci_lo", "ci_hi", "se", "bandwidth", "clamped_count", "min_density"};
  for (int k = 0; k < jobs; ++k) {
    const auto& e = est[static_cast<std::size_t>(k)];
    t.add_row({c.cutoffs[static_cast<std::size_t>(k % ncut)], c.adjustments[static_cast<std::size_t>(k / ncut)],
               e.psi, e.ci_lo, e.ci_hi, e.se, e.bandwidth, e.clamped_count, e.min_density});
  }
  if (r) t.metadata = decomposition_metadata(*r, c.basis.kind);
  t.metadata.emplace_back("n", std::to_string(d.n()));
  out.table("estimates", t);
  log << "estimated " << jobs << " truncated effects\n";
  return result;
}

CommandResult cmd_benchmark(const RunConfig& c, std::ostream& log) {
  CommandResult result;
  Output out(c, result);
  if (c.cutoffs.size() != 1) config_error("benchmark takes exactly one cutoff");
  BenchmarkConfig b;
  b.scenario = c.scenario;
  b.scenario.seed = c.seed;
  b.replicates = c.replicates;
  b.cutoff = c.cutoffs.front();
  b.methods = c.benchmark.methods;
  b.basis_dimension = c.benchmark.basis_dimension;
  b.knn_k = c.benchmark.knn_k;
  b.truth_reps = c.benchmark.truth_reps;
  b.truth = c.benchmark.truth;
  b.estimator = estimator_config(c);
  b.threads = c.threads;

  const BenchmarkReport report = run_benchmark(b);
  const Metadata meta = {{"matern_scaled_argument", c.scenario.matern_scaled_argument ? "true" : "false"},
                         {"rng", std::string(CounterRng::kAlgorithm)},
                         {"jitter_uc", format_number(report.jitter_uc)},
                         {"jitter_c", format_number(report.jitter_c)},
                         {"mechanism", to_string(c.scenario.mechanism)},
                         {"outcome_model", to_string(c.scenario.outcome_model)},
                         {"replicates", std::to_string(c.replicates)}};
  Table summary = report.summary_table();
  summary.metadata.insert(summary.metadata.begin(), meta.begin(), meta.end());
  out.table("benchmark_summary", summary);
  Table reps = report.replicate_table();
  reps.metadata = meta;
  out.table("benchmark_replicates", reps);
  const std::string text = report.text();
  out.write("benchmark.txt", text);
  log << text;
  if (!report.all_pass()) {
    log << "one or more methods fall outside their reference band\n";
    result.exit_code = kExitBand;
  }
  return result;
}

CommandResult cmd_sensitivity(const RunConfig& c, std::ostream& log) {
  CommandResult result;
  Output out(c, result);
  if (c.cutoffs.size() != 1) config_error("sensitivity takes exactly one cutoff");
  if (c.basis.dimensions.empty()) config_error("sensitivity needs basis.dimensions");
  if (c.basis.kind == "region") config_error("region bases have no dimension to vary");
  const AdjustmentSet adjust = parse_adjustment(c.adjustments.front());
  if (!needs_decomposition(adjust)) config_error("sensitivity needs an adjustment set containing a_c");

  const SpatialDataset d = load_dataset(c, log);
  if (!d.outcome) config_error("sensitivity needs dataset.outcome");
  const BasisFactory factory(d, c.basis);
  const int zeros = factory.zero_eigenvalues();
  if (zeros >= 2) {
    for (int dim : c.basis.dimensions) {
      if (dim <= zeros) {
        config_error("dimension " + std::to_string(dim) + " is rejected: the graph has " +
                     std::to_string(zeros) + " zero Laplacian eigenvalues (one per connected component), "
                     "so the smoothest " + std::to_string(zeros) +
                     " eigenvectors only encode component membership; start above " + std::to_string(zeros));
      }
    }
  }

  const double cut = c.cutoffs.front();
  const auto cfg = estimator_config(c);
  const int count = static_cast<int>(c.basis.dimensions.size());
  std::vector<TruncatedEffectEstimate> est(static_cast<std::size_t>(count));
  std::vector<double> share(static_cast<std::size_t>(count));
  parallel_for(count, c.threads, [&](int k) {
    const int dim = c.basis.dimensions[static_cast<std::size_t>(k)];
    const auto dec = decompose(d.exposure, std::make_shared<const SpatialBasis>(factory.make(dim)));
    share[static_cast<std::size_t>(k)] = dec.confounded_share();
    est[static_cast<std::size_t>(k)] = truncated_effect(d, adjust, &dec, cut, cfg);
  });

  Table t;
  t.columns = {"dimension", "confounded_share", "cutoff", "psi", "ci_lo", "ci_hi", "se", "bandwidth"};
  PlotSeries series;
  for (int k = 0; k < count; ++k) {
    const auto& e = est[static_cast<std::size_t>(k)];
    const int dim = c.basis.dimensions[static_cast<std::size_t>(k)];
    t.add_row({std::int64_t{dim}, share[static_cast<std::size_t>(k)], cut, e.psi, e.ci_lo, e.ci_hi, e.se,
               e.bandwidth});
    series.x.push_back(dim);
    series.y.push_back(e.psi);
    series.lo.push_back(e.ci_lo);
    series.hi.push_back(e.ci_hi);
  }
  t.metadata = {{"basis", c.basis.kind}, {"adjustment", to_string(adjust)}};
  out.table("sensitivity", t);
  out.write("sensitivity.svg",
            svg_points_whiskers(series, {"Truncated effect by basis dimension (c = " + format_number(cut) + ")",
                                         "basis dimension", "psi"}));
  log << "estimated " << count << " basis dimensions\n";
  return result;
}

CommandResult cmd_erc(const RunConfig& c, std::ostream& log) {
  CommandResult result;
  Output out(c, result);
  const AdjustmentSet adjust = parse_adjustment(c.adjustments.front());
  const SpatialDataset d = load_dataset(c, log);
  if (!d.outcome) config_error("erc needs dataset.outcome");
  std::optional<ResolvedDecomposition> r;
  if (needs_decomposition(adjust)) r = resolve_decomposition(d, c.basis);
  const ExposureDecomposition* dec = r ? &r->dec : nullptr;

  GridSpec grid;
  grid.points = c.erc.points;
  grid.lower_percentile = c.erc.lower_percentile;
  grid.upper_percentile = c.erc.upper_percentile;
  grid.values = c.erc.values;
  const auto cfg = estimator_config(c);
  const ErcCurve curve = erc_grid(d, adjust, dec, grid, cfg);

  Table t;
  t.columns = {"a", "nu", "ci_lo", "ci_hi", "se"};
  PlotSeries series;
  for (const auto& p : curve.points) {
    t.add_row({p.a, p.nu, p.ci_lo, p.ci_hi, p.se});
    series.x.push_back(p.a);
    series.y.push_back(p.nu);
    series.lo.push_back(p.ci_lo);
    series.hi.push_back(p.ci_hi);
  }
  if (r) t.metadata = decomposition_metadata(*r, c.basis.kind);
  t.metadata.emplace_back("adjustment", to_string(adjust));
  t.metadata.emplace_back("bandwidth", format_number(curve.bandwidth));
  t.metadata.emplace_back("clamped_count", std::to_string(curve.clamped_count));
  out.table("erc", t);
  if (c.erc.svg) {
    out.write("erc.svg", svg_line_band(series, {"Exposure-response curve", "exposure", "E(Y(a))"}));
  }

  if (c.erc.risk_ratio) {
    GridSpec pair;
    pair.values = *c.erc.risk_ratio;
    const ErcCurve pts = erc_grid(d, adjust, dec, pair, cfg);
    const double num = pts.points[0].nu, den = pts.points[1].nu;
    Table rr;
    rr.columns = {"a_numerator", "a_denominator", "nu_numerator", "nu_denominator", "risk_ratio"};
    rr.add_row({pts.points[0].a, pts.points[1].a, num, den, den != 0.0 ? num / den : std::nan("")});
    rr.metadata.emplace_back("bandwidth", format_number(pts.bandwidth));
    out.table("risk_ratio", rr);
    log << "risk ratio " << format_number(num / den) << "\n";
  }
  log << "exposure-response curve at " << curve.points.size() << " points\n";
  return result;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"simulate", "decompose", "estimate",
                                                 "benchmark", "sensitivity", "erc"};
  return names;
}

CommandResult run_command(const std::string& name, const RunConfig& c, std::ostream& log) {
  if (name == "simulate") return cmd_simulate(c, log);
  if (name == "decompose") return cmd_decompose(c, log);
  if (name == "estimate") return cmd_estimate(c, log);
  if (name == "benchmark") return cmd_benchmark(c, log);
  if (name == "sensitivity") return cmd_sensitivity(c, log);
  if (name == "erc") return cmd_erc(c, log);
  config_error("unknown command '" + name + "'");
}

}  // namespace spatialiv
