#include "structnet/experiment.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "structnet/io.hpp"

namespace structnet {

ExperimentDatasets build_experiment_datasets(const RunConfig& cfg) {
  ExperimentDatasets ds;
  if (!cfg.train_dir.empty()) {
    ds.train = load_dataset_dir(cfg.train_dir, cfg.img_side, cfg.n_points);
    if (!cfg.valid_dir.empty()) {
      ds.valid = load_dataset_dir(cfg.valid_dir, cfg.img_side, cfg.n_points);
    } else {
      if (cfg.valid_count <= 0) {
        throw ConfigError(
            "experiment: set valid_dir or a positive valid_count");
      }
      Rng split_rng(mix_seed(cfg.data_seed, 14));
      auto [train, valid] = split_dataset(ds.train, cfg.valid_count, split_rng);
      ds.train = std::move(train);
      ds.valid = std::move(valid);
    }
    if (cfg.test_dir.empty()) {
      throw ConfigError("experiment: test_dir is required with train_dir");
    }
    ds.test = load_dataset_dir(cfg.test_dir, cfg.img_side, cfg.n_points);
  } else {
    const ShapeTemplate tmpl = ShapeTemplate::face10();
    if (cfg.n_points != tmpl.n_points()) {
      throw ConfigError("synthetic datasets have " +
                        std::to_string(tmpl.n_points()) +
                        " points; set n_points accordingly");
    }
    SynthParams p = cfg.synth;
    p.img_side = cfg.img_side;
    Rng train_rng(mix_seed(cfg.data_seed, 10));
    Rng valid_rng(mix_seed(cfg.data_seed, 11));
    Rng test_rng(mix_seed(cfg.data_seed, 12));
    p.n = cfg.synth_train_n;
    ds.train = synth_generate(tmpl, p, train_rng);
    p.n = cfg.synth_valid_n;
    ds.valid = synth_generate(tmpl, p, valid_rng);
    p.n = cfg.synth_test_n;
    ds.test = synth_generate(tmpl, p, test_rng);
  }

  if (cfg.augment_input_only > 0 || cfg.augment_label_only > 0) {
    const ShapeTemplate tmpl = ShapeTemplate::face10();
    if (ds.train.n_points != tmpl.n_points()) {
      throw ConfigError("augmentation requires a " +
                        std::to_string(tmpl.n_points()) + "-point dataset");
    }
    SynthParams p = cfg.synth;
    p.img_side = cfg.img_side;
    p.n = cfg.augment_input_only + cfg.augment_label_only;
    Rng aug_rng(mix_seed(cfg.data_seed, 13));
    Dataset extra = synth_generate(tmpl, p, aug_rng);
    for (Index i = 0; i < p.n; ++i) {
      Sample& s = extra.samples[i];
      if (i < cfg.augment_input_only) {
        s.kind = SampleKind::InputOnly;
        s.y.resize(0);
      } else {
        s.kind = SampleKind::LabelOnly;
        s.x.resize(0);
      }
    }
    for (Sample& s : extra.samples) {
      ds.train.samples.push_back(std::move(s));
    }
  }
  return ds;
}

ParamStore initial_store_for_seed(const FrameworkSpec& spec,
                                  std::uint64_t seed) {
  Framework fw = build_framework(spec);
  Rng rng(seed);
  init_params(fw.store, rng);
  return fw.store.clone_params();
}

void assign_params(ParamStore& dst, const ParamStore& src) {
  const auto dst_ids = dst.ids();
  const auto src_ids = src.ids();
  if (dst_ids != src_ids) {
    throw ConfigError("assign_params: stores have different block sets");
  }
  for (const std::string& id : dst_ids) {
    ParamBlock& d = dst.at(id);
    const ParamBlock& s = src.at(id);
    if (d.W.rows() != s.W.rows() || d.W.cols() != s.W.cols()) {
      throw ConfigError("assign_params: block " + id + " shape mismatch");
    }
    d.W = s.W;
    d.b = s.b;
  }
}

Predictor main_predictor(Network main, ParamStore params) {
  return [main = std::move(main), params = std::move(params)](const Vector& x) {
    return Vector(forward(main, params, x).output());
  };
}

std::string ExperimentResult::to_csv() const {
  std::string out = "seed,mode,best_valid_mse,auc,cdf_0_1\n";
  for (const RunRow& r : rows) {
    if (!r.done) continue;
    out += std::to_string(r.seed);
    out += ",";
    out += to_string(r.mode);
    out += "," + format_double(r.best_valid_mse);
    out += "," + format_double(r.auc);
    out += "," + format_double(r.cdf_0_1);
    out += "\n";
  }
  for (const ModeSummary& m : means) {
    out += "mean,";
    out += to_string(m.mode);
    out += "," + format_double(m.mean_best_valid_mse);
    out += "," + format_double(m.mean_auc);
    out += "," + format_double(m.mean_cdf_0_1);
    out += "\n";
  }
  return out;
}

void run_experiment(const RunConfig& cfg, ExperimentResult& out,
                    std::ostream* progress) {
  cfg.validate();

  const ExperimentDatasets data = build_experiment_datasets(cfg);
  data.train.validate();
  data.valid.validate();
  data.test.validate();

  // Baseline: constant mean shape estimated on the training labels.
  {
    const Predictor base = mean_shape(data.train);
    const EvalReport report = evaluate(base, data.test, cfg.eyes, cfg.img_side);
    out.baseline_auc = report.auc_percent;
    out.baseline_cdf_0_1 = report.cdf_at_0_1_percent;
    const Partition vp = partition(data.valid);
    const Index n_valid = static_cast<Index>(vp.full.size());
    out.baseline_valid_mse =
        mse(gather_y(data.valid, vp.full),
            Matrix(base(Vector()).replicate(1, n_valid)));
  }

  // One shared initialization per seed, cloned into every mode.
  std::vector<ParamStore> init_stores;
  init_stores.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) {
    init_stores.push_back(initial_store_for_seed(cfg.framework, seed));
  }

  const std::size_t n_runs = cfg.seeds.size() * cfg.modes.size();
  out.rows.assign(n_runs, RunRow{});

  std::atomic<std::size_t> next{0};
  std::mutex mtx;
  std::exception_ptr first_error;

  auto worker = [&]() {
    while (true) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n_runs) return;
      {
        std::lock_guard<std::mutex> lock(mtx);
        if (first_error) return;  // stop picking up new work
      }
      const std::size_t seed_idx = task / cfg.modes.size();
      const std::size_t mode_idx = task % cfg.modes.size();
      try {
        RunConfig run_cfg = cfg;
        run_cfg.mode = cfg.modes[mode_idx];
        run_cfg.seed = cfg.seeds[seed_idx];

        Framework fw =
            build_framework(run_cfg.framework, run_cfg.corruption_level);
        assign_params(fw.store, init_stores[seed_idx]);

        const TrainResult trained =
            train(fw, data.train, run_cfg.resolved_schedules(),
                  run_cfg.optimizer, data.valid, run_cfg.seed);

        const Predictor pred = main_predictor(fw.main, trained.best_params);
        const EvalReport report =
            evaluate(pred, data.test, run_cfg.eyes, run_cfg.img_side);

        RunRow row;
        row.seed = run_cfg.seed;
        row.mode = run_cfg.mode;
        row.best_valid_mse = trained.best_valid_mse;
        row.best_epoch = trained.best_epoch;
        row.auc = report.auc_percent;
        row.cdf_0_1 = report.cdf_at_0_1_percent;
        row.done = true;

        std::lock_guard<std::mutex> lock(mtx);
        out.rows[task] = row;
        if (progress) {
          (*progress) << "seed " << row.seed << " " << to_string(row.mode)
                      << ": best_valid_mse=" << format_double(row.best_valid_mse)
                      << " auc=" << format_double(row.auc)
                      << " cdf_0.1=" << format_double(row.cdf_0_1)
                      << " (epoch " << row.best_epoch << ")\n";
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mtx);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  int jobs = cfg.jobs > 0
                 ? cfg.jobs
                 : static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  jobs = std::min<int>(jobs, static_cast<int>(n_runs));

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  if (first_error) std::rethrow_exception(first_error);

  out.means.clear();
  for (RunMode mode : cfg.modes) {
    ModeSummary m;
    m.mode = mode;
    int count = 0;
    for (const RunRow& r : out.rows) {
      if (r.mode != mode || !r.done) continue;
      m.mean_best_valid_mse += r.best_valid_mse;
      m.mean_auc += r.auc;
      m.mean_cdf_0_1 += r.cdf_0_1;
      ++count;
    }
    if (count > 0) {
      m.mean_best_valid_mse /= count;
      m.mean_auc /= count;
      m.mean_cdf_0_1 /= count;
    }
    out.means.push_back(m);
  }
}

}  // namespace structnet
