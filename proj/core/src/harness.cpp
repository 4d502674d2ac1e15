#include "semeq/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "semeq/errors.hpp"

namespace semeq {

namespace {

constexpr const char* kCsvTag = "# semeq-csv v1";
constexpr int kNumCols = 21;
constexpr int kKeyCols = 12;  // through `seed`; the resume identity of a row
constexpr int kPointCols = 11;  // through `zeta`; the aggregation identity

const char* kColumnNames =
    "method,task,mismatch,k_uses,n_t,n_r,n_phi,snr_db,n_train,beta,zeta,seed,"
    "mse,accuracy,flops,sparsity,power_dev,phi_dev,wall_time,error,"
    "objective_history";

// Shortest round-trip decimal; NaN becomes the empty cell.
std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

std::string join_history(const std::vector<double>& h) {
  std::string out;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) out += ';';
    out += fmt(h[i]);
  }
  return out;
}

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string join_front(const std::vector<std::string>& cells, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ',';
    out += cells[static_cast<std::size_t>(i)];
  }
  return out;
}

double parse_cell(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::strtod(s.c_str(), nullptr);
}

std::string key_cells(const ResultRow& row) {
  std::string out;
  out += sanitize(row.method);
  out += ',' + sanitize(row.task);
  out += ',' + sanitize(row.mismatch);
  out += ',' + std::to_string(row.k_uses);
  out += ',' + std::to_string(row.n_t);
  out += ',' + std::to_string(row.n_r);
  out += ',' + std::to_string(row.n_phi);
  out += ',' + fmt(row.snr_db);
  out += ',' + std::to_string(row.n_train);
  out += ',' + fmt(row.beta);
  out += ',' + fmt(row.zeta);
  out += ',' + std::to_string(row.seed);
  return out;
}

}  // namespace

std::string csv_header() {
  return std::string(kCsvTag) + "\n" + kColumnNames;
}

std::string csv_line(const ResultRow& row) {
  std::string out = key_cells(row);
  out += ',' + fmt(row.mse);
  out += ',' + fmt(row.accuracy);
  out += ',' + std::to_string(row.flops);
  out += ',' + fmt(row.sparsity);
  out += ',' + fmt(row.power_dev);
  out += ',' + fmt(row.phi_dev);
  out += ',' + fmt(row.wall_time);
  out += ',' + sanitize(row.error);
  out += ',' + join_history(row.objective_history);
  return out;
}

EvalResult evaluate_linear(const LinearEqualizer& eq, const RMat& S_theta,
                           const RMat& S_gamma, const ChannelRealization& chan,
                           const CVec& phi, int n_draws, std::uint64_t noise_seed,
                           const RMat* centroids,
                           const std::vector<std::uint32_t>* labels) {
  if (n_draws < 1) throw std::invalid_argument("evaluate_linear: n_draws must be >= 1");
  const CMat X = eq.encode(S_theta);
  const CMat block = ris_block(chan, phi);
  const CMat Y0 = apply_effective(block, chan.params.k_uses, X);
  const NoiseModel nm{noise_sigma2(chan.params), static_cast<int>(Y0.rows())};
  Rng rng(noise_seed);
  const bool with_acc = centroids && labels && !labels->empty();
  double mse = 0.0, acc = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    const CMat Y = Y0 + sample_noise_mat(nm, Y0.cols(), rng);
    const RMat S_hat = eq.decode(Y);
    mse += (S_hat - S_gamma).colwise().squaredNorm().mean();
    if (with_acc) acc += centroid_accuracy(S_hat, *labels, *centroids);
  }
  EvalResult out;
  out.mse = mse / n_draws;
  out.accuracy = with_acc ? acc / n_draws : -1.0;
  return out;
}

EvalResult evaluate_neural(const NeuralEqualizer& eq, const RMat& S_theta,
                           const RMat& S_gamma, const ChannelRealization& chan,
                           const CVec& phi, int n_draws, std::uint64_t noise_seed,
                           const RMat* centroids,
                           const std::vector<std::uint32_t>* labels) {
  if (n_draws < 1) throw std::invalid_argument("evaluate_neural: n_draws must be >= 1");
  const CMat X = eq.encode(S_theta);
  const CMat block = ris_block(chan, phi);
  const CMat Y0 = apply_effective(block, chan.params.k_uses, X);
  const NoiseModel nm{noise_sigma2(chan.params), static_cast<int>(Y0.rows())};
  Rng rng(noise_seed);
  const bool with_acc = centroids && labels && !labels->empty();
  double mse = 0.0, acc = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    const CMat Y = Y0 + sample_noise_mat(nm, Y0.cols(), rng);
    const RMat S_hat = eq.decode(Y);
    mse += (S_hat - S_gamma).colwise().squaredNorm().mean();
    if (with_acc) acc += centroid_accuracy(S_hat, *labels, *centroids);
  }
  EvalResult out;
  out.mse = mse / n_draws;
  out.accuracy = with_acc ? acc / n_draws : -1.0;
  return out;
}

double matched_target_accuracy(const PilotSplits& splits, int n_classes) {
  const RMat centroids =
      class_centroids(splits.train.S_gamma, splits.train.labels, n_classes);
  return centroid_accuracy(splits.test.S_gamma, splits.test.labels, centroids);
}

namespace {

struct SeedChain {
  std::uint64_t task, chan, fit, noise;
};

SeedChain chain_for(const ExperimentConfig& cfg, int s) {
  const std::uint64_t base =
      mix_seed(cfg.task.spec.seed, static_cast<std::uint64_t>(s));
  SeedChain c;
  c.task = mix_seed(base, 101);
  c.chan = mix_seed(base, 21);
  c.fit = mix_seed(base, 303);
  c.noise = static_cast<std::uint64_t>(s) * 1000003ull + 999ull;
  return c;
}

struct PreparedTask {
  PilotSplits splits;
  int n_classes = 0;
  bool has_labels = false;
  RMat centroids;
};

// `cached` carries file-mode pilots loaded once per sweep.
PreparedTask prepare_task(const ExperimentConfig& cfg, const PilotSet* cached,
                          int n_train, std::uint64_t task_seed) {
  PreparedTask out;
  if (cfg.task.synthetic) {
    SyntheticTaskSpec spec = cfg.task.spec;
    spec.n_train = n_train;
    spec.seed = task_seed;
    out.splits = generate_synthetic(spec);
    out.n_classes = spec.n_classes;
  } else {
    out.splits = split(*cached, n_train, cfg.task.spec.n_val, task_seed);
    std::uint32_t top = 0;
    for (const std::uint32_t l : cached->labels) top = std::max(top, l);
    out.n_classes = cached->labels.empty() ? 0 : static_cast<int>(top) + 1;
  }
  out.has_labels =
      !out.splits.train.labels.empty() && !out.splits.test.labels.empty();
  if (out.has_labels)
    out.centroids = class_centroids(out.splits.train.S_gamma,
                                    out.splits.train.labels, out.n_classes);
  return out;
}

PilotSet load_task_files(const ExperimentConfig& cfg) {
  std::optional<std::string> labels;
  if (!cfg.task.labels_path.empty()) labels = cfg.task.labels_path;
  return load_pilots(cfg.task.theta_path, cfg.task.gamma_path, labels);
}

struct PointSettings {
  int k_uses, n_t, n_r, n_phi, n_train;
  double snr_db, beta;
};

ChannelParams point_params(const ExperimentConfig& cfg, const PointSettings& pt) {
  ChannelParams params = cfg.channel;
  params.k_uses = pt.k_uses;
  params.n_t = pt.n_t;
  params.n_r = pt.n_r;
  params.n_phi = pt.n_phi;
  params.snr_db = pt.snr_db;
  return params;
}

// Fit + evaluate one (point, seed) cell; fills the metric columns.
void fill_point(ResultRow& row, const ExperimentConfig& cfg, const PilotSet* cached,
                const PointSettings& pt, int s) {
  const SeedChain seeds = chain_for(cfg, s);
  const PreparedTask task = prepare_task(cfg, cached, pt.n_train, seeds.task);
  const ChannelParams params = point_params(cfg, pt);
  const ChannelRealization chan = sample_channel(params, seeds.chan);
  const double sigma2 = noise_sigma2(params);

  const RMat* cen = task.has_labels ? &task.centroids : nullptr;
  const std::vector<std::uint32_t>* lab =
      task.has_labels ? &task.splits.test.labels : nullptr;
  const int n_theta = static_cast<int>(task.splits.train.S_theta.rows());
  const int n_gamma = static_cast<int>(task.splits.train.S_gamma.rows());

  switch (cfg.method) {
    case Method::Linear: {
      AdmmConfig acfg = cfg.admm;
      acfg.seed = seeds.fit;
      const LinearEqualizer eq = fit_linear(task.splits.train.S_theta,
                                            task.splits.train.S_gamma, chan, acfg);
      const EvalResult ev =
          evaluate_linear(eq, task.splits.test.S_theta, task.splits.test.S_gamma,
                          chan, eq.phi, cfg.n_noise_draws, seeds.noise, cen, lab);
      row.mse = ev.mse;
      if (ev.accuracy >= 0) row.accuracy = ev.accuracy;
      row.flops = flops_linear(n_theta, n_gamma, params.k_uses, params.n_t, params.n_r);
      row.power_dev = eq.power_dev;
      row.phi_dev = eq.phi_dev;
      row.objective_history = eq.history;
      break;
    }
    case Method::Neural: {
      TrainConfig tcfg = cfg.train;
      tcfg.beta = pt.beta;
      tcfg.seed = seeds.fit;
      const NeuralEqualizer eq =
          train_neural(task.splits.train.S_theta, task.splits.train.S_gamma,
                       task.splits.val.S_theta, task.splits.val.S_gamma, chan, tcfg);
      const EvalResult ev = evaluate_neural(eq, task.splits.test.S_theta,
                                            task.splits.test.S_gamma, chan, eq.phases(),
                                            cfg.n_noise_draws, seeds.noise, cen, lab);
      row.mse = ev.mse;
      if (ev.accuracy >= 0) row.accuracy = ev.accuracy;
      row.flops = flops_neural_exact(eq);
      row.sparsity = weight_sparsity(eq);
      row.power_dev = eq.max_power_dev;
      row.phi_dev = eq.max_phase_dev;
      row.objective_history = eq.train_history;
      break;
    }
    default: {
      const AlignmentMap align =
          fit_alignment(task.splits.train.S_theta, task.splits.train.S_gamma);
      const PhysicalEqualizer phy = fit_physical(chan, sigma2, cfg.phy_iters, seeds.fit);
      const std::uint64_t bseed = static_cast<std::uint64_t>(s);
      BaselineEval bev;
      if (cfg.method == Method::FirstK)
        bev = run_first_k(task.splits.test.S_theta, task.splits.test.S_gamma, align,
                          phy, chan, sigma2, cfg.n_noise_draws, bseed, cen, lab);
      else if (cfg.method == Method::TopK)
        bev = run_top_k(task.splits.test.S_theta, task.splits.test.S_gamma, align,
                        phy, chan, sigma2, cfg.n_noise_draws, bseed, cen, lab);
      else
        bev = run_eigen_k(task.splits.test.S_theta, task.splits.test.S_gamma, align,
                          phy, chan, sigma2, cfg.n_noise_draws, bseed, cen, lab);
      row.mse = bev.mse;
      if (bev.accuracy >= 0) row.accuracy = bev.accuracy;
      // Digital baselines ride the same complex-linear air interface; report
      // the matching transform cost so zeta-vs-flops plots stay comparable.
      row.flops = flops_linear(n_theta, n_gamma, params.k_uses, params.n_t, params.n_r);
      double pd = 0.0;
      for (Eigen::Index i = 0; i < phy.phi.size(); ++i)
        pd = std::max(pd, std::abs(std::abs(phy.phi[i]) - 1.0));
      row.phi_dev = pd;
      break;
    }
  }
}

ResultRow parse_row(const std::vector<std::string>& cells) {
  ResultRow row;
  row.method = cells[0];
  row.task = cells[1];
  row.mismatch = cells[2];
  row.k_uses = std::atoi(cells[3].c_str());
  row.n_t = std::atoi(cells[4].c_str());
  row.n_r = std::atoi(cells[5].c_str());
  row.n_phi = std::atoi(cells[6].c_str());
  row.snr_db = parse_cell(cells[7]);
  row.n_train = std::atoi(cells[8].c_str());
  row.beta = parse_cell(cells[9]);
  row.zeta = parse_cell(cells[10]);
  row.seed = std::strtoull(cells[11].c_str(), nullptr, 10);
  row.mse = parse_cell(cells[12]);
  row.accuracy = parse_cell(cells[13]);
  row.flops = std::strtoll(cells[14].c_str(), nullptr, 10);
  row.sparsity = parse_cell(cells[15]);
  row.power_dev = parse_cell(cells[16]);
  row.phi_dev = parse_cell(cells[17]);
  row.wall_time = parse_cell(cells[18]);
  row.error = cells[19];
  if (!cells[20].empty())
    for (const std::string& v : split_on(cells[20], ';'))
      row.objective_history.push_back(parse_cell(v));
  return row;
}

bool is_data_line(const std::string& line, const std::vector<std::string>& cells) {
  return !line.empty() && line[0] != '#' &&
         cells.size() == static_cast<std::size_t>(kNumCols) && cells[0] != "method";
}

std::vector<std::vector<std::string>> read_data_cells(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  std::ifstream in(path);
  std::string line;
  while (in && std::getline(in, line)) {
    auto cells = split_on(line, ',');
    if (is_data_line(line, cells)) out.push_back(std::move(cells));
  }
  return out;
}

// Per-point mean/min/max over the seed axis; errored rows only count toward
// n_err. Rewritten wholesale so reruns stay reproducible.
void rewrite_aggregate(const std::string& rows_path, const std::string& agg_path) {
  struct Agg {
    std::string point;
    long n_ok = 0, n_err = 0;
    std::vector<double> mse, acc;
  };
  std::vector<Agg> aggs;
  std::map<std::string, std::size_t> index;
  for (const auto& cells : read_data_cells(rows_path)) {
    const std::string point = join_front(cells, kPointCols);
    auto it = index.find(point);
    if (it == index.end()) {
      it = index.emplace(point, aggs.size()).first;
      aggs.push_back(Agg{point, 0, 0, {}, {}});
    }
    Agg& a = aggs[it->second];
    if (!cells[19].empty()) {
      ++a.n_err;
      continue;
    }
    ++a.n_ok;
    if (!cells[12].empty()) a.mse.push_back(parse_cell(cells[12]));
    if (!cells[13].empty()) a.acc.push_back(parse_cell(cells[13]));
  }

  std::ofstream out(agg_path, std::ios::trunc);
  if (!out) throw IoError(agg_path, "cannot write aggregate file");
  out << "# semeq-agg v1\n"
      << "method,task,mismatch,k_uses,n_t,n_r,n_phi,snr_db,n_train,beta,zeta,"
      << "n_ok,n_err,mse_mean,mse_min,mse_max,accuracy_mean,accuracy_min,"
      << "accuracy_max\n";
  auto stats = [](const std::vector<double>& v) -> std::string {
    if (v.empty()) return ",,";
    double sum = 0.0;
    for (const double x : v) sum += x;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return fmt(sum / static_cast<double>(v.size())) + ',' + fmt(*mn) + ',' + fmt(*mx);
  };
  for (const Agg& a : aggs)
    out << a.point << ',' << a.n_ok << ',' << a.n_err << ',' << stats(a.mse) << ','
        << stats(a.acc) << '\n';
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void run_sweep(const ExperimentConfig& cfg, const std::string& out_path,
               bool emit_json) {
  SweepAxes ax = cfg.sweep;
  const bool nt_swept = !ax.n_t.empty();
  if (ax.k_uses.empty()) ax.k_uses = {cfg.channel.k_uses};
  if (ax.n_t.empty()) ax.n_t = {cfg.channel.n_t};
  if (ax.n_phi.empty()) ax.n_phi = {cfg.channel.n_phi};
  if (ax.n_train.empty()) ax.n_train = {cfg.task.spec.n_train};
  if (ax.snr_db.empty()) ax.snr_db = {cfg.channel.snr_db};
  if (ax.beta.empty()) ax.beta = {cfg.train.beta};

  PilotSet file_pilots;
  const PilotSet* cached = nullptr;
  int n_theta_rows = cfg.task.spec.n_theta;
  if (!cfg.task.synthetic) {
    file_pilots = load_task_files(cfg);
    cached = &file_pilots;
    n_theta_rows = static_cast<int>(file_pilots.S_theta.rows());
  }

  // Resume: (point, seed) keys already present in the output are skipped.
  std::set<std::string> done;
  bool had_content = false;
  {
    std::ifstream in(out_path);
    std::string line;
    while (in && std::getline(in, line)) {
      if (!line.empty()) had_content = true;
      const auto cells = split_on(line, ',');
      if (is_data_line(line, cells)) done.insert(join_front(cells, kKeyCols));
    }
  }
  std::ofstream out(out_path, std::ios::app);
  if (!out) throw IoError(out_path, "cannot open results file for append");
  if (!had_content) out << csv_header() << '\n' << std::flush;

  ResultRow base;
  base.method = method_name(cfg.method);
  base.task = cfg.task.synthetic ? "synthetic" : "files";
  base.mismatch = !cfg.task.synthetic ? ""
                  : cfg.task.spec.mismatch == MismatchKind::Linear ? "linear"
                                                                   : "nonlinear";
  for (const int k : ax.k_uses)
    for (const int nt : ax.n_t)
      for (const int nphi : ax.n_phi)
        for (const double snr : ax.snr_db)
          for (const int ntr : ax.n_train)
            for (const double beta : ax.beta)
              for (int s = 0; s < cfg.n_seeds; ++s) {
                PointSettings pt{k, nt, nt_swept ? nt : cfg.channel.n_r,
                                 nphi, ntr, snr, beta};
                ResultRow row = base;
                row.k_uses = pt.k_uses;
                row.n_t = pt.n_t;
                row.n_r = pt.n_r;
                row.n_phi = pt.n_phi;
                row.snr_db = pt.snr_db;
                row.n_train = pt.n_train;
                row.beta = pt.beta;
                row.zeta = compression_factor(point_params(cfg, pt), n_theta_rows);
                row.seed = static_cast<std::uint64_t>(s);
                const std::string key = key_cells(row);
                if (done.count(key)) continue;
                const auto t0 = std::chrono::steady_clock::now();
                try {
                  fill_point(row, cfg, cached, pt, s);
                } catch (const std::exception& e) {
                  row.error = e.what();
                }
                row.wall_time = elapsed_since(t0);
                out << csv_line(row) << '\n' << std::flush;
                done.insert(key);
              }
  out.close();

  rewrite_aggregate(out_path, out_path + ".agg.csv");
  if (emit_json) {
    std::vector<ResultRow> rows;
    for (const auto& cells : read_data_cells(out_path)) rows.push_back(parse_row(cells));
    write_rows_json(rows, out_path + ".json");
  }
}

std::vector<ResultRow> run_adaptation(const ExperimentConfig& cfg) {
  if (cfg.method != Method::Linear && cfg.method != Method::Neural)
    throw ConfigError("method", "adaptation needs a fitted equalizer (linear|neural)");
  std::vector<int> nphis =
      cfg.sweep.n_phi.empty() ? std::vector<int>{cfg.channel.n_phi} : cfg.sweep.n_phi;
  for (const int n_phi : nphis)
    if (n_phi < 1)
      throw ConfigError("sweep.n_phi", "adaptation needs at least one RIS element");

  PilotSet file_pilots;
  const PilotSet* cached = nullptr;
  int n_theta_rows = cfg.task.spec.n_theta;
  if (!cfg.task.synthetic) {
    file_pilots = load_task_files(cfg);
    cached = &file_pilots;
    n_theta_rows = static_cast<int>(file_pilots.S_theta.rows());
  }

  std::vector<ResultRow> rows;
  for (const int n_phi : nphis)
    for (int s = 0; s < cfg.n_seeds; ++s) {
      const SeedChain seeds = chain_for(cfg, s);
      const PreparedTask task =
          prepare_task(cfg, cached, cfg.task.spec.n_train, seeds.task);
      const RMat* cen = task.has_labels ? &task.centroids : nullptr;
      const std::vector<std::uint32_t>* lab =
          task.has_labels ? &task.splits.test.labels : nullptr;

      // The equalizer is designed against a strong direct path with no RIS.
      ChannelParams design = cfg.channel;
      design.alpha_d = cfg.adapt.design_alpha_d;
      design.n_phi = 0;
      const ChannelRealization chan_design = sample_channel(design, seeds.chan);

      ResultRow base;
      base.task = cfg.task.synthetic ? "synthetic" : "files";
      base.mismatch = !cfg.task.synthetic ? ""
                      : cfg.task.spec.mismatch == MismatchKind::Linear ? "linear"
                                                                       : "nonlinear";
      base.k_uses = design.k_uses;
      base.n_t = design.n_t;
      base.n_r = design.n_r;
      base.n_phi = n_phi;  // all three conditions report the swept size
      base.snr_db = design.snr_db;
      base.n_train = cfg.task.spec.n_train;
      base.beta = cfg.train.beta;
      base.zeta = compression_factor(design, n_theta_rows);
      base.seed = static_cast<std::uint64_t>(s);

      const CVec no_phi(0);
      auto t0 = std::chrono::steady_clock::now();

      LinearEqualizer lin;
      NeuralEqualizer net;
      EvalResult pre;
      if (cfg.method == Method::Linear) {
        AdmmConfig acfg = cfg.admm;
        acfg.seed = seeds.fit;
        lin = fit_linear(task.splits.train.S_theta, task.splits.train.S_gamma,
                         chan_design, acfg);
        pre = evaluate_linear(lin, task.splits.test.S_theta, task.splits.test.S_gamma,
                              chan_design, no_phi, cfg.n_noise_draws, seeds.noise,
                              cen, lab);
        base.flops = flops_linear(static_cast<int>(task.splits.train.S_theta.rows()),
                                  static_cast<int>(task.splits.train.S_gamma.rows()),
                                  design.k_uses, design.n_t, design.n_r);
        base.power_dev = lin.power_dev;
      } else {
        TrainConfig tcfg = cfg.train;
        tcfg.seed = seeds.fit;
        net = train_neural(task.splits.train.S_theta, task.splits.train.S_gamma,
                           task.splits.val.S_theta, task.splits.val.S_gamma,
                           chan_design, tcfg);
        pre = evaluate_neural(net, task.splits.test.S_theta, task.splits.test.S_gamma,
                              chan_design, no_phi, cfg.n_noise_draws, seeds.noise,
                              cen, lab);
        base.flops = flops_neural_exact(net);
        base.sparsity = weight_sparsity(net);
        base.power_dev = net.max_power_dev;
      }
      ResultRow row = base;
      row.method = method_name(cfg.method) + "_pre";
      row.mse = pre.mse;
      if (pre.accuracy >= 0) row.accuracy = pre.accuracy;
      row.phi_dev = 0.0;
      row.wall_time = elapsed_since(t0);
      rows.push_back(row);

      // Direct path collapses to the default attenuation; equalizer untouched.
      t0 = std::chrono::steady_clock::now();
      ChannelRealization chan_blocked = chan_design;
      chan_blocked.params.alpha_d = cfg.adapt.blocked_alpha_d;
      chan_blocked.H_d *= std::sqrt(cfg.adapt.design_alpha_d / cfg.adapt.blocked_alpha_d);
      const EvalResult blk =
          cfg.method == Method::Linear
              ? evaluate_linear(lin, task.splits.test.S_theta, task.splits.test.S_gamma,
                                chan_blocked, no_phi, cfg.n_noise_draws, seeds.noise,
                                cen, lab)
              : evaluate_neural(net, task.splits.test.S_theta, task.splits.test.S_gamma,
                                chan_blocked, no_phi, cfg.n_noise_draws, seeds.noise,
                                cen, lab);
      row = base;
      row.method = method_name(cfg.method) + "_blocked";
      row.mse = blk.mse;
      if (blk.accuracy >= 0) row.accuracy = blk.accuracy;
      row.phi_dev = 0.0;
      row.wall_time = elapsed_since(t0);
      rows.push_back(row);

      // A RIS appears next to the blocked link; only its phases are tuned.
      t0 = std::chrono::steady_clock::now();
      ChannelRealization chan_adapt = chan_blocked;
      chan_adapt.params.n_phi = n_phi;
      Rng ris_rng(mix_seed(mix_seed(cfg.task.spec.seed, static_cast<std::uint64_t>(s)),
                           4242));
      chan_adapt.H_1 = ris_rng.cnormal_mat(n_phi, design.n_t, 1.0 / design.alpha_1);
      chan_adapt.H_2 = ris_rng.cnormal_mat(design.n_r, n_phi, 1.0 / design.alpha_2);

      EvalResult adp;
      CVec phi;
      if (cfg.method == Method::Linear) {
        const CMat Zt = real_to_complex_cols(
            lin.weq * (task.splits.train.S_theta.colwise() - lin.mu_theta));
        const CMat Zg = real_to_complex_cols(task.splits.train.S_gamma.colwise() -
                                             lin.mu_gamma);
        const RisSystem sys = build_ris_system(Zt, Zg, lin.F, lin.G, chan_adapt);
        phi = project_phases(CVec(sys.D.adjoint() * sys.v));  // matched-filter start
        for (int it = 0; it < cfg.adapt.n_steps; ++it) phi = phi_step(phi, sys);
        adp = evaluate_linear(lin, task.splits.test.S_theta, task.splits.test.S_gamma,
                              chan_adapt, phi, cfg.n_noise_draws, seeds.noise, cen, lab);
      } else {
        NeuralEqualizer tuned = net;
        Rng init_rng(mix_seed(
            mix_seed(cfg.task.spec.seed, static_cast<std::uint64_t>(s)), 4343));
        tuned.phi_raw = init_rng.unit_phase_vec(n_phi);
        const CMat Zin = real_to_complex_cols(
            net.weq * (task.splits.train.S_theta.colwise() - net.mu_theta));
        const CMat Ztgt = real_to_complex_cols(task.splits.train.S_gamma);
        const CMat zero_noise =
            CMat::Zero(chan_adapt.params.k_uses * chan_adapt.params.n_r, Zin.cols());
        for (int it = 0; it < cfg.adapt.n_steps; ++it) {
          NeuralGradients g;
          neural_loss_and_grads(tuned, Zin, Ztgt, chan_adapt, zero_noise, nullptr, &g);
          const CVec prev = tuned.phi_raw;
          tuned.phi_raw =
              project_phases(CVec(tuned.phi_raw - cfg.adapt.step * g.dp), &prev);
        }
        phi = tuned.phases();
        adp = evaluate_neural(net, task.splits.test.S_theta, task.splits.test.S_gamma,
                              chan_adapt, phi, cfg.n_noise_draws, seeds.noise, cen, lab);
      }
      row = base;
      row.method = method_name(cfg.method) + "_adapted";
      row.mse = adp.mse;
      if (adp.accuracy >= 0) row.accuracy = adp.accuracy;
      double pd = 0.0;
      for (Eigen::Index i = 0; i < phi.size(); ++i)
        pd = std::max(pd, std::abs(std::abs(phi[i]) - 1.0));
      row.phi_dev = pd;
      row.wall_time = elapsed_since(t0);
      rows.push_back(row);
    }
  return rows;
}

void write_rows_csv(const std::vector<ResultRow>& rows, const std::string& out_path) {
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError(out_path, "cannot write results file");
  out << csv_header() << '\n';
  for (const ResultRow& row : rows) out << csv_line(row) << '\n';
}

void write_rows_json(const std::vector<ResultRow>& rows, const std::string& out_path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ResultRow& r : rows) {
    nlohmann::json j;
    j["method"] = r.method;
    j["task"] = r.task;
    j["mismatch"] = r.mismatch;
    j["k_uses"] = r.k_uses;
    j["n_t"] = r.n_t;
    j["n_r"] = r.n_r;
    j["n_phi"] = r.n_phi;
    j["snr_db"] = r.snr_db;
    j["n_train"] = r.n_train;
    j["beta"] = r.beta;
    j["zeta"] = r.zeta;
    j["seed"] = r.seed;
    j["mse"] = r.mse;
    j["accuracy"] = r.accuracy;
    j["flops"] = r.flops;
    j["sparsity"] = r.sparsity;
    j["power_dev"] = r.power_dev;
    j["phi_dev"] = r.phi_dev;
    j["wall_time"] = r.wall_time;
    j["error"] = r.error;
    j["objective_history"] = r.objective_history;
    arr.push_back(std::move(j));
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError(out_path, "cannot write json file");
  out << arr.dump(2) << '\n';
}

namespace {

// Values that are not valid TOML scalars (bare words, paths) are treated as
// strings so `--set method=neural` works without shell-quoted quotes.
std::string toml_ready(const std::string& v) {
  if (v.empty()) return "\"\"";
  if (v == "true" || v == "false") return v;
  if (v.front() == '[' || v.front() == '"') return v;
  const char* s = v.c_str();
  char* end = nullptr;
  std::strtod(s, &end);
  if (end && *end == '\0') return v;
  std::string quoted = "\"";
  for (const char c : v) {
    if (c == '"' || c == '\\') quoted += '\\';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<int> k, nt, nr, nphi, ntheta, ngamma, n_train, seeds, draws;
  std::optional<double> snr, beta;
  std::optional<std::string> mismatch, method;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--config", c.config_path, "experiment config (.toml or .json)");
  sub->add_option("--set", c.sets, "dotted-path override, key=value (repeatable)");
  sub->add_option("-K,--K", c.k, "channel uses per latent");
  sub->add_option("--nt", c.nt, "transmit antennas (sets n_r too unless --nr given)");
  sub->add_option("--nr", c.nr, "receive antennas");
  sub->add_option("--nphi", c.nphi, "RIS elements");
  sub->add_option("--snr", c.snr, "SNR in dB");
  sub->add_option("--ntheta", c.ntheta, "source latent dimension");
  sub->add_option("--ngamma", c.ngamma, "target latent dimension");
  sub->add_option("--N,--ntrain", c.n_train, "training pilots");
  sub->add_option("--beta", c.beta, "pruning threshold multiplier");
  sub->add_option("--seeds", c.seeds, "number of seeds");
  sub->add_option("--draws", c.draws, "noise draws per evaluation");
  sub->add_option("--mismatch", c.mismatch, "synthetic mismatch: linear|nonlinear");
  sub->add_option("--method", c.method,
                  "linear|neural|first_k|top_k|eigen_k");
  sub->add_option("--seed", c.seed, "base seed");
}

ExperimentConfig build_config(const CommonOpts& c) {
  std::vector<std::pair<std::string, std::string>> ov;
  for (const std::string& kv : c.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set", "expected key=value, got '" + kv + "'");
    ov.emplace_back(kv.substr(0, eq), toml_ready(kv.substr(eq + 1)));
  }
  auto push = [&ov](const char* key, const std::string& val) {
    ov.emplace_back(key, val);
  };
  if (c.k) push("channel.k_uses", std::to_string(*c.k));
  if (c.nt) {
    push("channel.n_t", std::to_string(*c.nt));
    if (!c.nr) push("channel.n_r", std::to_string(*c.nt));
  }
  if (c.nr) push("channel.n_r", std::to_string(*c.nr));
  if (c.nphi) push("channel.n_phi", std::to_string(*c.nphi));
  if (c.snr) push("channel.snr_db", fmt(*c.snr));
  if (c.ntheta) push("task.n_theta", std::to_string(*c.ntheta));
  if (c.ngamma) push("task.n_gamma", std::to_string(*c.ngamma));
  if (c.n_train) push("task.n_train", std::to_string(*c.n_train));
  if (c.beta) push("train.beta", fmt(*c.beta));
  if (c.seeds) push("n_seeds", std::to_string(*c.seeds));
  if (c.draws) push("n_noise_draws", std::to_string(*c.draws));
  if (c.mismatch) push("task.mismatch", toml_ready(*c.mismatch));
  if (c.method) push("method", toml_ready(*c.method));
  if (c.seed) push("task.seed", std::to_string(*c.seed));
  return c.config_path.empty() ? parse_config_text("", /*toml=*/true, ov)
                               : load_config(c.config_path, ov);
}

std::string sniff_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  if (!in || !in.read(magic, 8)) throw IoError(path, "cannot read model header");
  return std::string(magic, 8);
}

void check_model_dims(const std::string& model_path, int k_uses, int n_t, int n_r,
                      int n_phi, Eigen::Index weq_cols, Eigen::Index n_theta_rows,
                      const ExperimentConfig& cfg) {
  if (k_uses != cfg.channel.k_uses || n_t != cfg.channel.n_t ||
      n_r != cfg.channel.n_r || n_phi != cfg.channel.n_phi)
    throw ConfigError("channel",
                      "model was fitted for different channel dimensions [" +
                          model_path + "]");
  if (weq_cols != n_theta_rows)
    throw ConfigError("task", "model latent dimension disagrees with the task [" +
                                  model_path + "]");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"semeq: joint semantic + physical equalization over RIS-aided MIMO"};
  app.require_subcommand(1);

  CommonOpts gen_c;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen-pilots", "generate and save synthetic pilots");
  add_common(gen, gen_c);
  gen->add_option("--out", gen_out, "output prefix (.theta/.gamma/.labels.bin)")
      ->required();

  CommonOpts fit_c;
  std::string fit_out;
  CLI::App* fit = app.add_subcommand("fit", "fit an equalizer and save the model");
  add_common(fit, fit_c);
  fit->add_option("--out", fit_out, "model output path")->required();

  CommonOpts eval_c;
  std::string eval_model, eval_out;
  CLI::App* ev = app.add_subcommand("eval", "evaluate a saved model on the test split");
  add_common(ev, eval_c);
  ev->add_option("--model", eval_model, "model path (format sniffed)")->required();
  ev->add_option("--out", eval_out, "optional single-row CSV");

  CommonOpts sweep_c;
  std::string sweep_out, sweep_emit;
  CLI::App* sw = app.add_subcommand("sweep", "cross-product sweep with resume");
  add_common(sw, sweep_c);
  sw->add_option("--out", sweep_out, "results CSV (appended; .agg.csv rewritten)")
      ->required();
  sw->add_option("--emit", sweep_emit, "also mirror rows: json");

  CommonOpts adapt_c;
  std::string adapt_out, adapt_emit;
  CLI::App* ad = app.add_subcommand("adapt", "blocked-link RIS adaptation study");
  add_common(ad, adapt_c);
  ad->add_option("--out", adapt_out, "results CSV (rewritten)")->required();
  ad->add_option("--emit", adapt_emit, "also mirror rows: json");

  CommonOpts flops_c;
  double flops_sparsity = 0.0;
  int flops_gelu = 100;
  CLI::App* fl = app.add_subcommand("flops", "print decoder FLOPs for a configuration");
  add_common(fl, flops_c);
  fl->add_option("--sparsity", flops_sparsity, "pruned weight fraction (neural)");
  fl->add_option("--gelu-cost", flops_gelu, "per-activation cost constant");

  gen->callback([&] {
    const ExperimentConfig cfg = build_config(gen_c);
    if (!cfg.task.synthetic)
      throw ConfigError("task.kind", "gen-pilots only makes sense for synthetic tasks");
    const PilotSet pilots = generate_synthetic_full(cfg.task.spec);
    save_pilots(pilots, gen_out + ".theta.bin", gen_out + ".gamma.bin",
                gen_out + ".labels.bin");
    std::cout << "wrote " << pilots.n() << " pilots (n_theta="
              << pilots.S_theta.rows() << ", n_gamma=" << pilots.S_gamma.rows()
              << ") to " << gen_out << ".{theta,gamma,labels}.bin\n";
  });

  fit->callback([&] {
    const ExperimentConfig cfg = build_config(fit_c);
    if (cfg.method != Method::Linear && cfg.method != Method::Neural)
      throw ConfigError("method", "fit produces a model only for linear|neural");
    PilotSet file_pilots;
    const PilotSet* cached = nullptr;
    if (!cfg.task.synthetic) {
      file_pilots = load_task_files(cfg);
      cached = &file_pilots;
    }
    const SeedChain seeds = chain_for(cfg, 0);
    const PreparedTask task =
        prepare_task(cfg, cached, cfg.task.spec.n_train, seeds.task);
    const ChannelRealization chan = sample_channel(cfg.channel, seeds.chan);
    if (cfg.method == Method::Linear) {
      AdmmConfig acfg = cfg.admm;
      acfg.seed = seeds.fit;
      const LinearEqualizer eq = fit_linear(task.splits.train.S_theta,
                                            task.splits.train.S_gamma, chan, acfg);
      save_linear(eq, fit_out);
      std::cout << "linear: objective=" << fmt(eq.history.back())
                << " iters=" << eq.history.size() << " power_dev=" << fmt(eq.power_dev)
                << " -> " << fit_out << "\n";
    } else {
      TrainConfig tcfg = cfg.train;
      tcfg.seed = seeds.fit;
      const NeuralEqualizer eq =
          train_neural(task.splits.train.S_theta, task.splits.train.S_gamma,
                       task.splits.val.S_theta, task.splits.val.S_gamma, chan, tcfg);
      save_neural(eq, fit_out);
      std::cout << "neural: best_val=" << fmt(eq.best_val)
                << " epochs=" << eq.epochs_run
                << " sparsity=" << fmt(weight_sparsity(eq)) << " -> " << fit_out
                << "\n";
    }
  });

  ev->callback([&] {
    const ExperimentConfig cfg = build_config(eval_c);
    PilotSet file_pilots;
    const PilotSet* cached = nullptr;
    if (!cfg.task.synthetic) {
      file_pilots = load_task_files(cfg);
      cached = &file_pilots;
    }
    const SeedChain seeds = chain_for(cfg, 0);
    const PreparedTask task =
        prepare_task(cfg, cached, cfg.task.spec.n_train, seeds.task);
    const ChannelRealization chan = sample_channel(cfg.channel, seeds.chan);
    const RMat* cen = task.has_labels ? &task.centroids : nullptr;
    const std::vector<std::uint32_t>* lab =
        task.has_labels ? &task.splits.test.labels : nullptr;

    ResultRow row;
    row.task = cfg.task.synthetic ? "synthetic" : "files";
    row.mismatch = !cfg.task.synthetic ? ""
                   : cfg.task.spec.mismatch == MismatchKind::Linear ? "linear"
                                                                    : "nonlinear";
    row.k_uses = cfg.channel.k_uses;
    row.n_t = cfg.channel.n_t;
    row.n_r = cfg.channel.n_r;
    row.n_phi = cfg.channel.n_phi;
    row.snr_db = cfg.channel.snr_db;
    row.n_train = cfg.task.spec.n_train;
    row.zeta = compression_factor(cfg.channel,
                                  static_cast<int>(task.splits.train.S_theta.rows()));
    const auto t0 = std::chrono::steady_clock::now();

    const std::string magic = sniff_magic(eval_model);
    EvalResult res;
    if (magic == "SEMEQLIN") {
      const LinearEqualizer eq = load_linear(eval_model);
      check_model_dims(eval_model, eq.k_uses, eq.n_t, eq.n_r,
                       static_cast<int>(eq.phi.size()), eq.weq.cols(),
                       task.splits.test.S_theta.rows(), cfg);
      res = evaluate_linear(eq, task.splits.test.S_theta, task.splits.test.S_gamma,
                            chan, eq.phi, cfg.n_noise_draws, seeds.noise, cen, lab);
      row.method = "linear";
      row.flops = flops_linear(static_cast<int>(task.splits.test.S_theta.rows()),
                               static_cast<int>(task.splits.test.S_gamma.rows()),
                               cfg.channel.k_uses, cfg.channel.n_t, cfg.channel.n_r);
    } else if (magic == "SEMEQNN1") {
      const NeuralEqualizer eq = load_neural(eval_model);
      check_model_dims(eval_model, eq.k_uses, eq.n_t, eq.n_r,
                       static_cast<int>(eq.phi_raw.size()), eq.weq.cols(),
                       task.splits.test.S_theta.rows(), cfg);
      res = evaluate_neural(eq, task.splits.test.S_theta, task.splits.test.S_gamma,
                            chan, eq.phases(), cfg.n_noise_draws, seeds.noise, cen, lab);
      row.method = "neural";
      row.flops = flops_neural_exact(eq);
      row.sparsity = weight_sparsity(eq);
    } else {
      throw IoError(eval_model, "unknown model format");
    }
    row.mse = res.mse;
    if (res.accuracy >= 0) row.accuracy = res.accuracy;
    row.wall_time = elapsed_since(t0);
    std::cout << "mse=" << fmt(res.mse);
    if (res.accuracy >= 0) std::cout << " accuracy=" << fmt(res.accuracy);
    std::cout << "\n";
    if (!eval_out.empty()) write_rows_csv({row}, eval_out);
  });

  sw->callback([&] {
    if (!sweep_emit.empty() && sweep_emit != "json")
      throw ConfigError("--emit", "only 'json' is supported");
    const ExperimentConfig cfg = build_config(sweep_c);
    run_sweep(cfg, sweep_out, sweep_emit == "json");
    std::cout << "sweep complete -> " << sweep_out << "\n";
  });

  ad->callback([&] {
    if (!adapt_emit.empty() && adapt_emit != "json")
      throw ConfigError("--emit", "only 'json' is supported");
    const ExperimentConfig cfg = build_config(adapt_c);
    const std::vector<ResultRow> rows = run_adaptation(cfg);
    write_rows_csv(rows, adapt_out);
    if (adapt_emit == "json") write_rows_json(rows, adapt_out + ".json");
    std::cout << rows.size() << " rows -> " << adapt_out << "\n";
  });

  fl->callback([&] {
    const ExperimentConfig cfg = build_config(flops_c);
    const ChannelParams& ch = cfg.channel;
    std::int64_t n = 0;
    if (cfg.method == Method::Neural)
      n = flops_neural(cfg.task.spec.n_theta, cfg.task.spec.n_gamma, ch.k_uses,
                       ch.n_t, ch.n_r, flops_sparsity, flops_gelu);
    else
      n = flops_linear(cfg.task.spec.n_theta, cfg.task.spec.n_gamma, ch.k_uses,
                       ch.n_t, ch.n_r);
    std::cout << n << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace semeq
