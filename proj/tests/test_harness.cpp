#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "srrl/checkpoint.hpp"
#include "srrl/config.hpp"
#include "srrl/dataset.hpp"
#include "srrl/diagnostics.hpp"
#include "srrl/metrics.hpp"
#include "srrl/svg.hpp"
#include "support/oracles.hpp"

using namespace srrl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "srrl_harness_test";
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("key-value parsing") {
  SUBCASE("comments, blanks and dotted keys") {
    KeyValueConfig kv = KeyValueConfig::parse_string(
        "# header comment\n"
        "task = relational\n"
        "\n"
        "guidance.lambda_forward = 0.25  # trailing comment\n"
        "seed = 12\n");
    CHECK(kv.get_string("task", "") == "relational");
    CHECK(kv.get_double("guidance.lambda_forward", 0.0) == 0.25);
    CHECK(kv.get_uint64("seed", 0) == 12);
    CHECK(kv.get_int("missing", 7) == 7);
  }

  SUBCASE("parse errors carry line numbers") {
    try {
      KeyValueConfig::parse_string("a = 1\nnot a pair\n", "test.cfg");
      FAIL("expected a parse error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("test.cfg:2") != std::string::npos);
    }
  }

  SUBCASE("duplicate keys are rejected") {
    CHECK_THROWS_AS(KeyValueConfig::parse_string("a = 1\na = 2\n"), ConfigError);
  }

  SUBCASE("type errors carry the key and line") {
    KeyValueConfig kv = KeyValueConfig::parse_string("count = many\n", "test.cfg");
    try {
      kv.get_int("count", 0);
      FAIL("expected a type error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("test.cfg:1") != std::string::npos);
      CHECK(msg.find("count") != std::string::npos);
    }
  }
}

TEST_CASE("experiment config") {
  SUBCASE("defaults resolve and round-trip through the resolved text") {
    KeyValueConfig kv = KeyValueConfig::parse_string("task = relational\n");
    const ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    CHECK(cfg.train_rounds == 10);
    CHECK(cfg.samples_per_batch == 32);
    CHECK(cfg.epochs_per_round == 2);
    CHECK(cfg.num_steps == 20);
    CHECK(cfg.guidance.lambda_forward == 0.5);
    CHECK(cfg.guidance.lambda_denoise == 3.0);
    CHECK(cfg.guidance.lambda_inference == 7.5);
    CHECK(cfg.adapter_rank == 4);

    KeyValueConfig again = KeyValueConfig::parse_string(cfg.resolved_text());
    const ExperimentConfig cfg2 = ExperimentConfig::from_kv(again);
    CHECK(cfg2.resolved_text() == cfg.resolved_text());
  }

  SUBCASE("modes task parses per-condition targets") {
    KeyValueConfig kv = KeyValueConfig::parse_string(
        "task = modes\n"
        "num_conditions = 2\n"
        "modes.cond0 = 3,0,1\n"
        "modes.cond1 = -3,0,0.5 ; 0,3,0.5\n");
    const ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    REQUIRE(cfg.modes.size() == 2);
    CHECK(cfg.modes[0].size() == 1);
    CHECK(cfg.modes[1].size() == 2);
    CHECK(cfg.modes[1][0].mean == Vec{-3.0, 0.0});
    CHECK(cfg.modes[1][1].weight == 0.5);
  }

  SUBCASE("rejections") {
    KeyValueConfig unknown_task = KeyValueConfig::parse_string("task = painting\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(unknown_task), ConfigError);

    KeyValueConfig no_conds = KeyValueConfig::parse_string("num_conditions = 0\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(no_conds), ConfigError);

    KeyValueConfig missing_modes =
        KeyValueConfig::parse_string("task = modes\nnum_conditions = 1\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(missing_modes), ConfigError);

    KeyValueConfig typo = KeyValueConfig::parse_string("task = relational\nsede = 3\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(typo), ConfigError);

    KeyValueConfig same_index = KeyValueConfig::parse_string(
        "task = relational\nrelational.index_a = 1\nrelational.index_b = 1\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(same_index), ConfigError);
  }
}

TEST_CASE("dataset generation") {
  SUBCASE("single-mode sample mean lands on the mode") {
    KeyValueConfig kv = KeyValueConfig::parse_string(
        "task = modes\n"
        "num_conditions = 1\n"
        "modes.cond0 = 3,0,1\n"
        "pretrain.dataset_size = 10000\n");
    const ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    const auto data = generate_dataset(cfg, 5);
    REQUIRE(data.size() == 10000);
    Vec mean{0.0, 0.0};
    for (const auto& ex : data) {
      mean[0] += ex.x0[0];
      mean[1] += ex.x0[1];
    }
    mean[0] /= 10000.0;
    mean[1] /= 10000.0;
    CHECK(std::fabs(mean[0] - 3.0) < 0.05);
    CHECK(std::fabs(mean[1]) < 0.05);
  }

  SUBCASE("fixed seed reproduces the dataset") {
    KeyValueConfig kv = KeyValueConfig::parse_string("task = relational\n");
    const ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    const auto a = generate_dataset(cfg, 9);
    const auto b = generate_dataset(cfg, 9);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].x0 == b[i].x0);
      CHECK(a[i].c == b[i].c);
    }
  }

  SUBCASE("relational data is roughly standard normal") {
    KeyValueConfig kv =
        KeyValueConfig::parse_string("task = relational\npretrain.dataset_size = 20000\n");
    const ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    const auto data = generate_dataset(cfg, 11);
    std::vector<double> xs;
    xs.reserve(data.size());
    for (const auto& ex : data) xs.push_back(ex.x0[0]);
    const auto stats = oracles::sample_stats(xs);
    CHECK(std::fabs(stats.mean) < 0.03);
    CHECK(std::fabs(stats.variance - 1.0) < 0.04);
  }
}

TEST_CASE("checkpoint round trip") {
  const fs::path dir = temp_dir();
  const fs::path path_a = dir / "ckpt_a.json";
  const fs::path path_b = dir / "ckpt_b.json";

  Checkpoint ckpt;
  ckpt.num_steps = 8;
  ckpt.beta_start = 1e-3;
  ckpt.beta_end = 0.05;
  ckpt.params = make_denoiser(2, 3, 6, 4, Activation::tanh, true, 2, 123);
  ckpt.config_hash = fnv1a_hex("some config");
  ckpt.seed = 99;
  ckpt.rounds_completed = 4;

  SUBCASE("save, load, save is byte-identical") {
    save_checkpoint(ckpt, path_a);
    const Checkpoint loaded = load_checkpoint(path_a);
    save_checkpoint(loaded, path_b);
    CHECK(read_file(path_a) == read_file(path_b));
    CHECK(read_file(path_a).size() > 0);

    CHECK(loaded.params.w1.data == ckpt.params.w1.data);
    CHECK(loaded.params.adapter1.down.data == ckpt.params.adapter1.down.data);
    CHECK(loaded.seed == 99);
    CHECK(loaded.rounds_completed == 4);
    CHECK(loaded.num_steps == 8);

    // derived schedule tables are rebuilt, not stored
    const NoiseSchedule s = schedule_of(loaded);
    CHECK(s.num_steps == 8);
    CHECK(s.alpha_bars.size() == 8);
  }

  SUBCASE("version mismatch is an explicit error") {
    save_checkpoint(ckpt, path_a);
    std::string text = read_file(path_a);
    const auto at = text.find("\"format_version\": 1");
    REQUIRE(at != std::string::npos);
    text.replace(at, std::string("\"format_version\": 1").size(), "\"format_version\": 2");
    std::ofstream(path_a) << text;
    try {
      load_checkpoint(path_a);
      FAIL("expected a version error");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
  }

  SUBCASE("missing file is an error") {
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), CheckpointError);
  }
}

TEST_CASE("metrics csv schema") {
  const fs::path path = temp_dir() / "metrics.csv";
  {
    MetricsCsvWriter writer(path);
    MetricsRow row;
    row.round = 1;
    row.epoch = 0;
    row.mean_reward = 0.5;
    row.std_reward = 0.25;
    row.max_reward = 1.0;
    row.min_reward = 0.0;
    row.objective = 2.5;
    row.clip_fraction = 0.125;
    row.skipped = false;
    writer.write(row);
    row.skipped = true;
    writer.write(row);
  }
  std::ifstream in(path);
  std::string header, line1, line2;
  std::getline(in, header);
  std::getline(in, line1);
  std::getline(in, line2);
  CHECK(header ==
        "round,epoch,mean_reward,std_reward,max_reward,min_reward,objective,clip_fraction,"
        "skipped");
  CHECK(line1 == "1,0,0.5,0.25,1,0,2.5,0.125,0");
  CHECK(line2 == "1,0,0.5,0.25,1,0,2.5,0.125,1");
}

TEST_CASE("svg scatter output") {
  std::vector<ScatterPoint> points;
  for (int i = 0; i < 10; ++i) {
    points.push_back({i * 0.3 - 1.0, 1.0 - i * 0.2, i % 3, i % 5});
  }
  const std::string svg = render_scatter_svg(points, 2, "round 2");
  CHECK(svg.find("viewBox=\"0 0 600 600\"") != std::string::npos);
  CHECK(svg.find("round 2") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);    // condition 0 marker
  CHECK(svg.find("<rect x=") != std::string::npos);   // condition 1 marker
  CHECK(svg.find("<polygon") != std::string::npos);   // condition 2/3 markers
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
  // deterministic
  CHECK(render_scatter_svg(points, 2, "round 2") == svg);
}

TEST_CASE("diagnostics pass on a healthy model and flag injected faults") {
  const DenoiserParams params = make_denoiser(2, 2, 16, 8, Activation::tanh, false, 4, 3);
  const NoiseSchedule schedule = make_linear_schedule(10, 1e-3, 0.05);

  const auto healthy = run_diagnostics(params, schedule);
  CHECK(all_passed(healthy));
  CHECK(healthy.size() >= 4);

  for (const FaultInjection fault :
       {FaultInjection::gradient, FaultInjection::roundtrip, FaultInjection::gap,
        FaultInjection::density}) {
    const auto faulty = run_diagnostics(params, schedule, fault);
    CHECK_FALSE(all_passed(faulty));
  }
}
