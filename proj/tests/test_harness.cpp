#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "semeq/errors.hpp"
#include "semeq/harness.hpp"
#include "semeq/linear_eq.hpp"

using namespace semeq;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> cells_of(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("csv header carries the v1 tag and all 21 columns") {
  const auto hdr = lines_of(csv_header());
  REQUIRE(hdr.size() == 2);
  CHECK(hdr[0] == "# semeq-csv v1");
  const auto cols = cells_of(hdr[1]);
  REQUIRE(cols.size() == 21);
  CHECK(cols[0] == "method");
  CHECK(cols[10] == "zeta");
  CHECK(cols[11] == "seed");
  CHECK(cols[12] == "mse");
  CHECK(cols[18] == "wall_time");
  CHECK(cols[19] == "error");
  CHECK(cols[20] == "objective_history");
}

TEST_CASE("csv rows blank NaNs and sanitize error text") {
  ResultRow row;
  row.method = "linear";
  row.task = "synthetic";
  row.mismatch = "linear";
  row.seed = 3;
  row.error = "boom, with\nnewline";
  row.objective_history = {1.5, 0.25};
  const auto cells = cells_of(csv_line(row));
  REQUIRE(cells.size() == 21);
  CHECK(cells[12].empty());   // mse defaults to NaN
  CHECK(cells[16].empty());   // power_dev
  CHECK(cells[19] == "boom; with;newline");
  CHECK(cells[20] == "1.5;0.25");

  row.mse = 0.1;
  row.error.clear();
  CHECK(cells_of(csv_line(row))[12] == "0.1");
}

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.task.spec.concept_dim = 8;
  cfg.task.spec.n_classes = 5;
  cfg.task.spec.n_theta = 32;
  cfg.task.spec.n_gamma = 16;
  cfg.task.spec.n_total = 340;
  cfg.task.spec.n_train = 240;
  cfg.task.spec.n_val = 40;
  cfg.channel.n_t = 4;
  cfg.channel.n_r = 4;
  cfg.channel.n_phi = 2;
  cfg.channel.k_uses = 2;
  cfg.channel.snr_db = 10.0;
  cfg.admm.max_iters = 6;
  cfg.n_seeds = 1;
  cfg.n_noise_draws = 1;
  return cfg;
}

}  // namespace

TEST_CASE("monte-carlo evaluation agrees with the training objective") {
  ExperimentConfig cfg = tiny_config();
  const PilotSplits sp = generate_synthetic(cfg.task.spec);
  const ChannelRealization chan = sample_channel(cfg.channel, 77);
  AdmmConfig acfg = cfg.admm;
  acfg.max_iters = 20;
  const LinearEqualizer eq =
      fit_linear(sp.train.S_theta, sp.train.S_gamma, chan, acfg);

  const CMat Zt = real_to_complex_cols(
      RMat(eq.weq * (sp.train.S_theta.colwise() - eq.mu_theta)));
  const CMat Zg =
      real_to_complex_cols(RMat(sp.train.S_gamma.colwise() - eq.mu_gamma));
  const double sigma2 = noise_sigma2(chan.params);
  const double obj = admm_objective(Zt, Zg, eq.F, eq.G, eq.phi, chan, sigma2);

  const EvalResult ev = evaluate_linear(eq, sp.train.S_theta, sp.train.S_gamma,
                                        chan, eq.phi, 400, 9001);
  CHECK(std::abs(ev.mse - obj) / obj < 0.02);

  CHECK_THROWS_AS(evaluate_linear(eq, sp.train.S_theta, sp.train.S_gamma, chan,
                                  eq.phi, 0, 1),
                  std::invalid_argument);
}

TEST_CASE("matched target latents classify almost perfectly") {
  for (const auto kind : {MismatchKind::Linear, MismatchKind::Nonlinear}) {
    SyntheticTaskSpec spec = tiny_config().task.spec;
    spec.mismatch = kind;
    spec.seed = 5;
    const PilotSplits sp = generate_synthetic(spec);
    CHECK(matched_target_accuracy(sp, spec.n_classes) > 0.95);
  }
}

TEST_CASE("sweep writes one row per point with the right compression factor") {
  ExperimentConfig cfg = tiny_config();
  cfg.sweep.k_uses = {2, 4, 8};
  const std::string path = "/tmp/semeq_h_sweep.csv";
  std::remove(path.c_str());
  std::remove((path + ".agg.csv").c_str());

  run_sweep(cfg, path);
  const std::string first = slurp(path);
  const auto rows = lines_of(first);
  REQUIRE(rows.size() == 5);  // tag + columns + 3 data rows
  const std::vector<std::string> zetas = {"0.5", "1", "2"};
  for (int i = 0; i < 3; ++i) {
    const auto cells = cells_of(rows[static_cast<std::size_t>(2 + i)]);
    REQUIRE(cells.size() == 21);
    CHECK(cells[0] == "linear");
    CHECK(cells[10] == zetas[static_cast<std::size_t>(i)]);
    CHECK(cells[19].empty());
    CHECK(!cells[12].empty());
  }

  // a re-run resumes every key and leaves the file byte-identical
  run_sweep(cfg, path);
  CHECK(slurp(path) == first);

  // raising n_seeds appends the new seed only, keeping old rows untouched
  cfg.n_seeds = 2;
  run_sweep(cfg, path);
  const std::string grown = slurp(path);
  CHECK(grown.substr(0, first.size()) == first);
  const auto grown_rows = lines_of(grown);
  REQUIRE(grown_rows.size() == 8);
  for (int i = 5; i < 8; ++i)
    CHECK(cells_of(grown_rows[static_cast<std::size_t>(i)])[11] == "1");

  // aggregate file: one line per point, min <= mean <= max, no errors
  const auto agg = lines_of(slurp(path + ".agg.csv"));
  REQUIRE(agg.size() == 5);
  CHECK(agg[0] == "# semeq-agg v1");
  for (int i = 2; i < 5; ++i) {
    const auto cells = cells_of(agg[static_cast<std::size_t>(i)]);
    const auto num = [&](int j) { return std::stod(cells[static_cast<std::size_t>(j)]); };
    CHECK(cells[11] == "2");  // n_ok
    CHECK(cells[12] == "0");  // n_err
    CHECK(num(14) <= num(13));
    CHECK(num(13) <= num(15));
  }
  std::remove(path.c_str());
  std::remove((path + ".agg.csv").c_str());
}

TEST_CASE("a failing point becomes an error row, not a crash") {
  ExperimentConfig cfg = tiny_config();
  cfg.method = Method::EigenK;
  cfg.channel.k_uses = 8;  // 2*K*n_t = 64 > min(16, 32): eigen-k must refuse
  const std::string path = "/tmp/semeq_h_err.csv";
  std::remove(path.c_str());
  std::remove((path + ".agg.csv").c_str());

  run_sweep(cfg, path);
  const auto rows = lines_of(slurp(path));
  REQUIRE(rows.size() == 3);
  const auto cells = cells_of(rows[2]);
  CHECK(cells[0] == "eigen_k");
  CHECK(cells[12].empty());
  CHECK(cells[19].find("eigen-k") != std::string::npos);

  const auto agg = lines_of(slurp(path + ".agg.csv"));
  REQUIRE(agg.size() == 3);
  const auto acells = cells_of(agg[2]);
  CHECK(acells[11] == "0");  // n_ok
  CHECK(acells[12] == "1");  // n_err
  CHECK(acells[13].empty()); // no mse to aggregate
  std::remove(path.c_str());
  std::remove((path + ".agg.csv").c_str());
}

TEST_CASE("json mirror lists every row with typed fields") {
  ExperimentConfig cfg = tiny_config();
  const std::string path = "/tmp/semeq_h_json.csv";
  std::remove(path.c_str());
  std::remove((path + ".agg.csv").c_str());
  std::remove((path + ".json").c_str());
  run_sweep(cfg, path, /*emit_json=*/true);
  const std::string js = slurp(path + ".json");
  CHECK(js.find("\"method\": \"linear\"") != std::string::npos);
  CHECK(js.find("\"zeta\": 0.5") != std::string::npos);
  std::remove(path.c_str());
  std::remove((path + ".agg.csv").c_str());
  std::remove((path + ".json").c_str());
}

TEST_CASE("config text parses with strict keys in both formats") {
  const std::string toml = R"(method = "neural"
n_seeds = 3

[task]
n_theta = 48
mismatch = "nonlinear"

[channel]
n_t = 2
snr_db = 7.5

[sweep]
n_phi = [2, 4]

[train]
beta = 1.5
)";
  const ExperimentConfig cfg = parse_config_text(toml, true);
  CHECK(cfg.method == Method::Neural);
  CHECK(cfg.n_seeds == 3);
  CHECK(cfg.task.spec.n_theta == 48);
  CHECK(cfg.task.spec.mismatch == MismatchKind::Nonlinear);
  CHECK(cfg.channel.n_t == 2);
  CHECK(cfg.channel.snr_db == 7.5);
  CHECK(cfg.sweep.n_phi == std::vector<int>{2, 4});
  CHECK(cfg.train.beta == 1.5);

  const ExperimentConfig over =
      parse_config_text(toml, true, {{"channel.n_t", "6"}, {"method", "\"linear\""}});
  CHECK(over.channel.n_t == 6);
  CHECK(over.method == Method::Linear);

  const ExperimentConfig js = parse_config_text(
      R"({"channel": {"n_phi": 9}, "n_noise_draws": 4})", false);
  CHECK(js.channel.n_phi == 9);
  CHECK(js.n_noise_draws == 4);

  CHECK_THROWS_AS(parse_config_text("[channel]\nbogus = 1\n", true), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[channel]\nn_t = \"four\"\n", true), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[channel]\nn_t = 0\n", true), ConfigError);
  CHECK_THROWS_AS(parse_config_text("method = \"ols\"\n", true), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[task]\nkind = \"files\"\n", true), ConfigError);
}

namespace {

int run_cli(std::vector<std::string> args) {
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("cli exit codes distinguish config, io and usage failures") {
  CHECK(run_cli({"semeq", "flops", "--method", "linear"}) == 0);
  CHECK(run_cli({"semeq", "eval", "--model", "/tmp/semeq_no_such_model.bin"}) == 3);
  CHECK(run_cli({"semeq", "fit", "--method", "eigen_k", "--out", "/tmp/semeq_x.bin"}) ==
        2);
  CHECK(run_cli({"semeq", "gen-pilots", "--no-such-flag"}) != 0);
  CHECK(run_cli({"semeq"}) != 0);  // a subcommand is required
}
