// Command-line front end: dataset stats, training, grid sweeps, scaling
// benchmarks, and surrogate dataset generation.
//
// Dataset arguments accept a file path, a file named <name>.tsv under
// $SBGL_DATA_DIR, or a named generator preset, tried in that order.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>

#include <sbgl/model.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace sbgl;

namespace {

int exit_code_for(Err code) {
  switch (code) {
    case Err::InvalidArgument:
    case Err::InvalidRatio:
    case Err::RankTooLarge:
    case Err::ShapeMismatch:
    case Err::EmptyInput:
      return 1;
    case Err::Numeric:
      return 3;
    default:
      return 2;
  }
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

RawDataset resolve_dataset(const std::string& name) {
  if (fs::exists(name) && fs::is_regular_file(name)) return load_edge_list(name);
  if (const char* dir = std::getenv("SBGL_DATA_DIR")) {
    fs::path candidate = fs::path(dir) / (name + ".tsv");
    if (fs::exists(candidate)) return load_edge_list(candidate.string());
  }
  if (auto preset = find_preset(name)) {
    RawDataset ds = synth_planted(*preset);
    ds.name = name;
    return ds;
  }
  raise(Err::InvalidArgument,
        "unknown dataset '" + name + "': not a file, not under SBGL_DATA_DIR, not a preset");
}

// The resolved-configuration echo. Written before any real work so a failed
// run still records what it was asked to do.
void write_config(const std::string& outdir,
                  const std::vector<std::pair<std::string, std::string>>& kv) {
  fs::create_directories(outdir);
  std::ofstream out(fs::path(outdir) / "config.txt");
  if (!out) raise(Err::Io, "cannot write " + outdir + "/config.txt");
  for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i)
    s += (i ? "," : "") + std::to_string(seeds[i]);
  return s;
}

std::vector<std::pair<std::string, std::string>> hp_config_lines(const HyperParams& hp) {
  return {
      {"final-dim", std::to_string(hp.final_dim)},
      {"layers", std::to_string(hp.layers)},
      {"injection-ratio", fmt_double(hp.injection_ratio)},
      {"rank-ratio", fmt_double(hp.rank_ratio)},
      {"rank-override", std::to_string(hp.rank_override)},
      {"lr", fmt_double(hp.learning_rate)},
      {"weight-decay", fmt_double(hp.weight_decay)},
      {"epochs", std::to_string(hp.epochs)},
      {"mlp-hidden", std::to_string(hp.mlp_hidden)},
      {"ablation", ablation_name(hp.ablation)},
  };
}

constexpr double kTrainFrac = 0.85;
constexpr double kValFrac = 0.05;

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Err error_code = Err::InvalidArgument;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  double best_val_macro_f1 = 0.0;
  EvalReport test;
  double seconds = 0.0;
  double preprocess_seconds = 0.0;
};

// Distinct sub-streams per protocol round. Splitting and parameter
// initialization must not read correlated randomness: with a shared stream,
// one unlucky seed can pair a skewed validation fold with an init that
// happens to score it well, freezing the snapshot at epoch one.
constexpr std::uint64_t kSplitStream = 0;
constexpr std::uint64_t kModelStream = 1;

// One full protocol round for one seed: fresh split, training graph,
// factorization, training, test evaluation at the best-validation snapshot.
SeedOutcome run_seed(const RawDataset& ds, HyperParams hp, std::uint64_t seed,
                     const std::string& outdir, bool write_files) {
  SeedOutcome out;
  out.seed = seed;
  auto t0 = std::chrono::steady_clock::now();
  hp.seed = derive_seed(seed, kModelStream);
  hp.validate();

  EdgeSplit sp = split(ds, kTrainFrac, kValFrac, derive_seed(seed, kSplitStream));
  NormalizedGraph ng = normalize(training_graph(sp, ds.n_u(), ds.n_v()));
  LowRankStore store;
  const LowRankStore* store_ptr = nullptr;
  if (hp.encoder_config().use_rmp) {
    auto tp = std::chrono::steady_clock::now();
    store = preprocess(ng, hp.resolve_rank(ds.n_u(), ds.n_v()), hp.seed);
    out.preprocess_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tp).count();
    store_ptr = &store;
  }

  TrainedModel model = fit(sp, ds.n_u(), ds.n_v(), hp, store_ptr);
  FinalReps z = forward_reps(ng, store_ptr, hp.encoder_config(), model.params);
  out.test = evaluate_edges(z, EdgeBatch::from(sp.test), model.params);
  out.best_epoch = model.best_epoch;
  out.best_val_auc = model.best_val_auc;
  out.best_val_macro_f1 =
      model.log[static_cast<std::size_t>(model.best_epoch) - 1].val_macro_f1;

  if (write_files) {
    std::string tag = std::to_string(seed);
    write_training_log(model.log, (fs::path(outdir) / ("log_seed" + tag + ".csv")).string());
    save_checkpoint(model, (fs::path(outdir) / ("checkpoint_seed" + tag + ".bin")).string());
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.ok = true;
  return out;
}

void write_report(const std::string& outdir, const HyperParams& hp,
                  const std::vector<SeedOutcome>& outcomes) {
  std::ofstream out(fs::path(outdir) / "report.csv");
  if (!out) raise(Err::Io, "cannot write " + outdir + "/report.csv");
  out << "seed,rank_ratio,injection_ratio,layers,best_epoch,best_val_auc,"
         "test_auc,test_binary_f1,test_macro_f1,test_micro_f1,seconds,"
         "preprocess_seconds\n";

  std::vector<std::vector<double>> columns(8);
  for (const SeedOutcome& o : outcomes) {
    if (!o.ok) continue;
    double row[8] = {static_cast<double>(o.best_epoch), o.best_val_auc,
                     o.test.auc,       o.test.binary_f1, o.test.macro_f1,
                     o.test.micro_f1,  o.seconds,        o.preprocess_seconds};
    out << o.seed << "," << fmt_double(hp.rank_ratio) << ","
        << fmt_double(hp.injection_ratio) << "," << hp.layers;
    for (int i = 0; i < 8; ++i) {
      out << "," << fmt_double(row[i]);
      columns[static_cast<std::size_t>(i)].push_back(row[i]);
    }
    out << "\n";
  }

  if (!columns[0].empty()) {
    const auto n = static_cast<double>(columns[0].size());
    for (const char* label : {"mean", "std"}) {
      out << label << "," << fmt_double(hp.rank_ratio) << ","
          << fmt_double(hp.injection_ratio) << "," << hp.layers;
      for (const auto& col : columns) {
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= n;
        if (std::string(label) == "mean") {
          out << "," << fmt_double(mean);
        } else {
          double ss = 0.0;
          for (double v : col) ss += (v - mean) * (v - mean);
          out << "," << fmt_double(n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
        }
      }
      out << "\n";
    }
  }
}

// Runs every seed, honoring --keep-going, and writes report.csv. Returns the
// process exit code.
int train_and_report(const RawDataset& ds, const HyperParams& hp,
                     const std::vector<std::uint64_t>& seeds, const std::string& outdir,
                     bool keep_going) {
  std::vector<SeedOutcome> outcomes;
  for (std::uint64_t seed : seeds) {
    try {
      outcomes.push_back(run_seed(ds, hp, seed, outdir, true));
      const SeedOutcome& o = outcomes.back();
      std::cout << "seed " << seed << ": best epoch " << o.best_epoch << ", val auc "
                << o.best_val_auc << ", test auc " << o.test.auc << ", test macro-f1 "
                << o.test.macro_f1 << "\n";
    } catch (const Error& e) {
      if (!keep_going) throw;
      SeedOutcome failed;
      failed.seed = seed;
      failed.error = e.what();
      failed.error_code = e.code();
      outcomes.push_back(failed);
      std::cerr << "seed " << seed << " failed: " << e.what() << "\n";
    }
  }
  write_report(outdir, hp, outcomes);
  bool any_ok = false;
  for (const SeedOutcome& o : outcomes) any_ok = any_ok || o.ok;
  if (!any_ok) {
    for (const SeedOutcome& o : outcomes)
      if (!o.ok) return exit_code_for(o.error_code);
  }
  return 0;
}

int cmd_stats(const std::string& dataset, bool csv) {
  RawDataset ds = resolve_dataset(dataset);
  DatasetStats st = stats(ds);
  double pos_pct = 100.0 * st.pos_fraction;
  double neg_pct = st.m == 0 ? 0.0 : 100.0 - pos_pct;
  if (csv) {
    std::cout << "dataset,n_u,n_v,m,m_pos,m_neg,pos_fraction\n"
              << ds.name << "," << st.n_u << "," << st.n_v << "," << st.m << ","
              << st.m_pos << "," << st.m_neg << "," << fmt_double(st.pos_fraction)
              << "\n";
  } else {
    std::printf("dataset   %s\n", ds.name.c_str());
    std::printf("n_u       %lld\n", static_cast<long long>(st.n_u));
    std::printf("n_v       %lld\n", static_cast<long long>(st.n_v));
    std::printf("edges     %lld\n", static_cast<long long>(st.m));
    std::printf("positive  %lld (%.2f%%)\n", static_cast<long long>(st.m_pos), pos_pct);
    std::printf("negative  %lld (%.2f%%)\n", static_cast<long long>(st.m_neg), neg_pct);
  }
  return 0;
}

struct GridCell {
  double rank_ratio;
  double injection_ratio;
  int layers;
};

struct CellResult {
  bool ok = false;
  std::string error;
  Err error_code = Err::InvalidArgument;
  double val_auc = 0.0;
  double val_macro_f1 = 0.0;
};

int cmd_sweep(const RawDataset& ds, HyperParams base, std::vector<double> rank_ratios,
              std::vector<double> injection_ratios, std::vector<int> layer_counts,
              const std::vector<std::uint64_t>& seeds, const std::string& metric,
              int threads, bool deterministic, const std::string& outdir) {
  if (rank_ratios.empty() || injection_ratios.empty() || layer_counts.empty())
    raise(Err::InvalidArgument, "sweep grid must be non-empty on every axis");

  std::vector<GridCell> grid;
  for (double r : rank_ratios)
    for (double c : injection_ratios)
      for (int layers : layer_counts) grid.push_back({r, c, layers});

  // results[cell * n_seeds + seed_index]
  const std::size_t n_seeds = seeds.size();
  std::vector<CellResult> results(grid.size() * n_seeds);
  const int workers = deterministic ? 1 : std::max(1, threads);

  for (std::size_t si = 0; si < n_seeds; ++si) {
    const std::uint64_t seed = seeds[si];
    // Same sub-stream derivation as a single training run, so the winning
    // cell's re-run below reproduces the grid measurement exactly.
    const std::uint64_t model_seed = derive_seed(seed, kModelStream);
    EdgeSplit sp = split(ds, kTrainFrac, kValFrac, derive_seed(seed, kSplitStream));
    NormalizedGraph ng = normalize(training_graph(sp, ds.n_u(), ds.n_v()));

    // One factorization per (seed, rank); every (c, L) cell reuses it.
    for (std::size_t ri = 0; ri < rank_ratios.size(); ++ri) {
      HyperParams probe = base;
      probe.rank_ratio = rank_ratios[ri];
      probe.seed = model_seed;
      LowRankStore store;
      const LowRankStore* store_ptr = nullptr;
      if (probe.encoder_config().use_rmp) {
        store = preprocess(ng, probe.resolve_rank(ds.n_u(), ds.n_v()), model_seed,
                           std::min(workers, 4));
        store_ptr = &store;
      }

      std::vector<std::size_t> cell_ids;
      for (std::size_t g = 0; g < grid.size(); ++g)
        if (grid[g].rank_ratio == rank_ratios[ri]) cell_ids.push_back(g);

      std::atomic<std::size_t> cursor{0};
      auto run_cells = [&]() {
        for (std::size_t i = cursor++; i < cell_ids.size(); i = cursor++) {
          const GridCell& cell = grid[cell_ids[i]];
          CellResult& slot = results[cell_ids[i] * n_seeds + si];
          try {
            HyperParams hp = base;
            hp.rank_ratio = cell.rank_ratio;
            hp.injection_ratio = cell.injection_ratio;
            hp.layers = cell.layers;
            hp.seed = model_seed;
            hp.validate();
            TrainedModel model = fit(sp, ds.n_u(), ds.n_v(), hp, store_ptr);
            slot.val_auc = model.best_val_auc;
            slot.val_macro_f1 =
                model.log[static_cast<std::size_t>(model.best_epoch) - 1].val_macro_f1;
            slot.ok = true;
          } catch (const Error& e) {
            slot.error = e.what();
            slot.error_code = e.code();
            std::cerr << "cell (r=" << cell.rank_ratio << ", c=" << cell.injection_ratio
                      << ", layers=" << cell.layers << ", seed=" << seed
                      << ") failed: " << e.what() << "\n";
          }
        }
      };

      if (workers == 1 || cell_ids.size() == 1) {
        run_cells();
      } else {
        std::vector<std::thread> pool;
        const std::size_t count = std::min<std::size_t>(
            static_cast<std::size_t>(workers), cell_ids.size());
        for (std::size_t t = 0; t < count; ++t) pool.emplace_back(run_cells);
        for (std::thread& t : pool) t.join();
      }
    }
    std::cout << "seed " << seed << ": grid evaluated\n";
  }

  {
    std::ofstream out(fs::path(outdir) / "grid.csv");
    if (!out) raise(Err::Io, "cannot write " + outdir + "/grid.csv");
    out << "rank_ratio,injection_ratio,layers,seed,val_auc,val_macro_f1,status\n";
    for (std::size_t g = 0; g < grid.size(); ++g)
      for (std::size_t si = 0; si < n_seeds; ++si) {
        const CellResult& r = results[g * n_seeds + si];
        out << fmt_double(grid[g].rank_ratio) << "," << fmt_double(grid[g].injection_ratio)
            << "," << grid[g].layers << "," << seeds[si] << "," << fmt_double(r.val_auc)
            << "," << fmt_double(r.val_macro_f1) << "," << (r.ok ? "ok" : "failed")
            << "\n";
      }
  }

  // Mean validation metric across seeds; a config with any failed seed is out
  // of the running. Ties keep the earliest grid cell.
  std::ptrdiff_t best = -1;
  double best_score = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    bool all_ok = true;
    for (std::size_t si = 0; si < n_seeds; ++si) {
      const CellResult& r = results[g * n_seeds + si];
      all_ok = all_ok && r.ok;
      sum += metric == "macro_f1" ? r.val_macro_f1 : r.val_auc;
    }
    if (!all_ok) continue;
    double score = sum / static_cast<double>(n_seeds);
    if (score > best_score) {
      best_score = score;
      best = static_cast<std::ptrdiff_t>(g);
    }
  }
  if (best < 0) {
    for (const CellResult& r : results)
      if (!r.ok) return exit_code_for(r.error_code);
    raise(Err::InvalidArgument, "sweep selected nothing");
  }

  const GridCell& chosen = grid[static_cast<std::size_t>(best)];
  HyperParams hp = base;
  hp.rank_ratio = chosen.rank_ratio;
  hp.injection_ratio = chosen.injection_ratio;
  hp.layers = chosen.layers;
  std::cout << "selected: rank-ratio " << chosen.rank_ratio << ", injection-ratio "
            << chosen.injection_ratio << ", layers " << chosen.layers << " (mean val "
            << metric << " " << best_score << ")\n";

  // Test metrics come only from a clean re-run of the selected config.
  return train_and_report(ds, hp, seeds, outdir, false);
}

int cmd_bench(std::vector<long long> sizes, int epochs, std::uint64_t seed,
              const std::string& outdir) {
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1])
      raise(Err::InvalidArgument, "bench sizes must be strictly ascending");

  HyperParams hp;
  hp.final_dim = 32;
  hp.layers = 3;
  hp.rank_override = 32;
  hp.epochs = epochs;

  std::ofstream out(fs::path(outdir) / "report.csv");
  if (!out) raise(Err::Io, "cannot write " + outdir + "/report.csv");
  out << "m,n_u,n_v,rank,preprocess_seconds,epoch_seconds\n";

  for (long long m : sizes) {
    const index_t n_u = std::max<index_t>(4, m / 5);
    const index_t n_v = std::max<index_t>(4, m / 10);
    RawDataset ds = synth_graph(n_u, n_v, m, 0.8, seed);
    EdgeSplit sp = split(ds, kTrainFrac, kValFrac, seed);
    NormalizedGraph ng = normalize(training_graph(sp, n_u, n_v));

    auto t0 = std::chrono::steady_clock::now();
    LowRankStore store = preprocess(ng, hp.resolve_rank(n_u, n_v), seed);
    double pre_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    hp.seed = seed;
    TrainedModel model = fit(sp, n_u, n_v, hp, &store);
    double epoch_seconds = 0.0;
    for (const EpochLog& row : model.log) epoch_seconds += row.seconds;
    epoch_seconds /= static_cast<double>(model.log.size());

    out << m << "," << n_u << "," << n_v << "," << hp.resolve_rank(n_u, n_v) << ","
        << fmt_double(pre_seconds) << "," << fmt_double(epoch_seconds) << "\n";
    out.flush();
    std::cout << "m=" << m << ": preprocess " << pre_seconds << " s, epoch "
              << epoch_seconds << " s\n";
  }
  return 0;
}

int cmd_gen(const std::string& preset_name, const std::string& out_path,
            std::uint64_t seed, bool seed_given, double flip_prob, bool flip_given) {
  auto preset = find_preset(preset_name);
  if (!preset) raise(Err::InvalidArgument, "unknown preset: " + preset_name);
  PlantedConfig cfg = *preset;
  if (seed_given) cfg.seed = seed;
  if (flip_given) cfg.flip_prob = flip_prob;
  RawDataset ds = synth_planted(cfg);
  ds.name = preset_name;
  save_edge_list(ds, out_path);
  DatasetStats st = stats(ds);
  std::cout << "wrote " << out_path << ": " << st.n_u << " x " << st.n_v << ", " << st.m
            << " edges, " << st.m_pos << " positive\n";
  return 0;
}

void add_hp_options(CLI::App* cmd, HyperParams& hp, std::string& ablation) {
  cmd->add_option("--final-dim", hp.final_dim, "Width of the final node representation")
      ->envname("SBGL_FINAL_DIM");
  cmd->add_option("--layers", hp.layers, "Propagation layers")->envname("SBGL_LAYERS");
  cmd->add_option("--injection-ratio", hp.injection_ratio,
                  "Feature injection ratio in [0, 1]")
      ->envname("SBGL_INJECTION_RATIO");
  cmd->add_option("--rank-ratio", hp.rank_ratio, "SVD rank as a fraction of min(|U|, |V|)")
      ->envname("SBGL_RANK_RATIO");
  cmd->add_option("--rank-override", hp.rank_override, "Exact SVD rank; 0 uses the ratio")
      ->envname("SBGL_RANK_OVERRIDE");
  cmd->add_option("--epochs", hp.epochs, "Training epochs")->envname("SBGL_EPOCHS");
  cmd->add_option("--lr", hp.learning_rate, "Adam learning rate")->envname("SBGL_LR");
  cmd->add_option("--weight-decay", hp.weight_decay, "Quadratic penalty coefficient")
      ->envname("SBGL_WEIGHT_DECAY");
  cmd->add_option("--mlp-hidden", hp.mlp_hidden, "Classifier hidden width")
      ->envname("SBGL_MLP_HIDDEN");
  cmd->add_option("--ablation", ablation, "Encoder selection: full, no-rmp, no-spmp")
      ->check(CLI::IsMember({"full", "no-rmp", "no-spmp"}))
      ->envname("SBGL_ABLATION");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link sign prediction on signed bipartite graphs"};
  app.require_subcommand(1);

  std::string dataset, outdir, metric = "auc", ablation = "full";
  std::vector<std::uint64_t> seeds;
  HyperParams hp;
  bool csv = false, keep_going = false, deterministic = false;
  int threads = 1;

  CLI::App* stats_cmd = app.add_subcommand("stats", "Print dataset statistics");
  stats_cmd->add_option("--dataset", dataset, "Dataset path or preset name")->required();
  stats_cmd->add_flag("--csv", csv, "Emit one CSV row instead of the table");

  CLI::App* train_cmd = app.add_subcommand("train", "Train and evaluate per seed");
  train_cmd->add_option("--dataset", dataset, "Dataset path or preset name")->required();
  train_cmd->add_option("--seed", seeds, "Run seed; repeat for multi-seed protocol")
      ->envname("SBGL_SEED");
  train_cmd->add_option("--outdir", outdir, "Output directory")->required();
  train_cmd->add_flag("--keep-going", keep_going, "Continue past failed seeds");
  add_hp_options(train_cmd, hp, ablation);
  train_cmd->set_config("--config", "", "Flat key = value config file; flags win");

  std::vector<double> rank_ratios = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> injection_ratios = {0.01, 0.02, 0.15, 0.45, 0.75, 1.0};
  std::vector<int> layer_counts = {0, 1, 2, 3, 4, 5};
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Grid search, then test the winner");
  sweep_cmd->add_option("--dataset", dataset, "Dataset path or preset name")->required();
  sweep_cmd->add_option("--seed", seeds, "Run seed; repeat for multi-seed protocol")
      ->envname("SBGL_SEED");
  sweep_cmd->add_option("--outdir", outdir, "Output directory")->required();
  sweep_cmd->add_option("--rank-ratios", rank_ratios, "Grid values for the rank ratio");
  sweep_cmd->add_option("--injection-ratios", injection_ratios,
                        "Grid values for the injection ratio");
  sweep_cmd->add_option("--layer-counts", layer_counts, "Grid values for the layer count");
  sweep_cmd->add_option("--metric", metric, "Selection metric")
      ->check(CLI::IsMember({"auc", "macro_f1"}))
      ->envname("SBGL_METRIC");
  sweep_cmd->add_option("--threads", threads, "Worker cap for grid cells")
      ->check(CLI::PositiveNumber)
      ->envname("SBGL_THREADS");
  sweep_cmd->add_flag("--deterministic", deterministic, "Force single-threaded execution");
  add_hp_options(sweep_cmd, hp, ablation);
  sweep_cmd->set_config("--config", "", "Flat key = value config file; flags win");

  std::vector<long long> sizes = {10000, 20000, 40000, 80000};
  int bench_epochs = 5;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Scaling benchmark on random graphs");
  bench_cmd->add_option("--size", sizes, "Edge counts, strictly ascending");
  bench_cmd->add_option("--epochs", bench_epochs, "Epochs to time per size");
  bench_cmd->add_option("--seed", seeds, "Graph and model seed");
  bench_cmd->add_option("--outdir", outdir, "Output directory")->required();

  std::string gen_out;
  std::uint64_t gen_seed = 0;
  double gen_flip = 0.0;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Write a generated dataset to disk");
  gen_cmd->add_option("--dataset", dataset, "Preset name")->required();
  gen_cmd->add_option("--out", gen_out, "Output edge list path")->required();
  CLI::Option* gen_seed_opt = gen_cmd->add_option("--seed", gen_seed, "Generator seed");
  CLI::Option* gen_flip_opt =
      gen_cmd->add_option("--flip-prob", gen_flip, "Label noise probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (auto parsed = parse_ablation(ablation)) hp.ablation = *parsed;
    if (seeds.empty()) seeds = {0};

    if (app.got_subcommand(stats_cmd)) return cmd_stats(dataset, csv);

    if (app.got_subcommand(train_cmd)) {
      auto kv = hp_config_lines(hp);
      kv.insert(kv.begin(), {{"command", "train"},
                             {"dataset", dataset},
                             {"seeds", join_seeds(seeds)},
                             {"train-frac", fmt_double(kTrainFrac)},
                             {"val-frac", fmt_double(kValFrac)}});
      kv.push_back({"keep-going", keep_going ? "true" : "false"});
      write_config(outdir, kv);
      RawDataset ds = resolve_dataset(dataset);
      return train_and_report(ds, hp, seeds, outdir, keep_going);
    }

    if (app.got_subcommand(sweep_cmd)) {
      auto join_doubles = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
        return s;
      };
      std::string layer_list;
      for (std::size_t i = 0; i < layer_counts.size(); ++i)
        layer_list += (i ? "," : "") + std::to_string(layer_counts[i]);
      auto kv = hp_config_lines(hp);
      kv.insert(kv.begin(), {{"command", "sweep"},
                             {"dataset", dataset},
                             {"seeds", join_seeds(seeds)},
                             {"train-frac", fmt_double(kTrainFrac)},
                             {"val-frac", fmt_double(kValFrac)},
                             {"rank-ratios", join_doubles(rank_ratios)},
                             {"injection-ratios", join_doubles(injection_ratios)},
                             {"layer-counts", layer_list},
                             {"metric", metric},
                             {"threads", std::to_string(threads)},
                             {"deterministic", deterministic ? "true" : "false"}});
      write_config(outdir, kv);
      RawDataset ds = resolve_dataset(dataset);
      return cmd_sweep(ds, hp, rank_ratios, injection_ratios, layer_counts, seeds, metric,
                       threads, deterministic, outdir);
    }

    if (app.got_subcommand(bench_cmd)) {
      std::string size_list;
      for (std::size_t i = 0; i < sizes.size(); ++i)
        size_list += (i ? "," : "") + std::to_string(sizes[i]);
      write_config(outdir, {{"command", "bench"},
                            {"sizes", size_list},
                            {"epochs", std::to_string(bench_epochs)},
                            {"seed", std::to_string(seeds[0])}});
      return cmd_bench(sizes, bench_epochs, seeds[0], outdir);
    }

    if (app.got_subcommand(gen_cmd)) {
      return cmd_gen(dataset, gen_out, gen_seed, gen_seed_opt->count() > 0, gen_flip,
                     gen_flip_opt->count() > 0);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
