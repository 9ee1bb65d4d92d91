// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "pipeline.hpp"
#include "wav.hpp"

using namespace rirkit;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rirkit_pipeline_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return s;
}

RunConfig fast_cfg() {
  RunConfig cfg;
  cfg.excitation_seconds = 1.0;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("synthesis is deterministic and resumable") {
  const RunConfig cfg = fast_cfg();
  const fs::path d1 = fresh_dir("synth_a");
  const fs::path d2 = fresh_dir("synth_b");
  const auto items1 = synth_dataset(cfg, 3, d1);
  const auto items2 = synth_dataset(cfg, 3, d2);
  REQUIRE(items1.size() == 3);
  REQUIRE(items2.size() == 3);
  CHECK(slurp(d1 / "manifest.csv") == slurp(d2 / "manifest.csv"));
  for (const auto& item : items1) {
    CHECK(slurp(d1 / item.x_path) == slurp(d2 / item.x_path));
    CHECK(slurp(d1 / item.h_path) == slurp(d2 / item.h_path));
    CHECK(slurp(d1 / item.y_path) == slurp(d2 / item.y_path));
  }
  SUBCASE("parallel render produces identical bytes") {
    RunConfig par = cfg;
    par.jobs = 4;
    const fs::path d3 = fresh_dir("synth_par");
    synth_dataset(par, 3, d3);
    CHECK(slurp(d3 / "manifest.csv") == slurp(d1 / "manifest.csv"));
    for (const auto& item : items1) {
      CHECK(slurp(d3 / item.y_path) == slurp(d1 / item.y_path));
    }
  }
  SUBCASE("items carry consistent geometry and measured decay") {
    for (const auto& item : items1) {
      CHECK(item.regime == "matched");
      CHECK(item.rt60_target > 0.0);
      CHECK(std::abs(item.rt60_measured - item.rt60_target) / item.rt60_target < 0.25);
      const Waveform x = read_wav(d1 / item.x_path);
      const Waveform h = read_wav(d1 / item.h_path);
      const Waveform y = read_wav(d1 / item.y_path);
      CHECK(x.samples.size() == 16000);
      CHECK(y.samples.size() == x.samples.size() + h.samples.size() - 1);
      CHECK(h.samples[0] == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
  SUBCASE("different seeds change the bytes") {
    RunConfig other = cfg;
    other.seed = 12;
    const fs::path d4 = fresh_dir("synth_seed");
    synth_dataset(other, 1, d4);
    CHECK(slurp(d4 / "manifest.csv") != slurp(d1 / "manifest.csv"));
  }
}

TEST_CASE("manifest round trip") {
  const RunConfig cfg = fast_cfg();
  const fs::path dir = fresh_dir("manifest");
  const auto items = synth_dataset(cfg, 2, dir);
  const auto back = load_manifest(dir / "manifest.csv");
  REQUIRE(back.size() == items.size());
  for (size_t i = 0; i < items.size(); ++i) {
    CHECK(back[i].item_id == items[i].item_id);
    CHECK(back[i].seed == items[i].seed);
    CHECK(back[i].regime == items[i].regime);
    CHECK(back[i].dims == items[i].dims);
    CHECK(back[i].rt60_target == items[i].rt60_target);
    CHECK(back[i].rt60_measured == items[i].rt60_measured);
    CHECK(back[i].source == items[i].source);
    CHECK(back[i].mic == items[i].mic);
    CHECK(back[i].x_path == items[i].x_path);
    CHECK(back[i].h_path == items[i].h_path);
    CHECK(back[i].y_path == items[i].y_path);
  }
  SUBCASE("zero items still writes a header-only manifest") {
    const fs::path d0 = fresh_dir("manifest0");
    const auto none = synth_dataset(cfg, 0, d0);
    CHECK(none.empty());
    CHECK(load_manifest(d0 / "manifest.csv").empty());
  }
  SUBCASE("missing manifest is an io error") {
    try {
      load_manifest(dir / "nope.csv");
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
  }
  SUBCASE("corrupt manifest is rejected") {
    const fs::path bad = dir / "bad.csv";
    std::ofstream os(bad);
    os << "item_id,seed\nx,1\n";
    os.close();
    CHECK_THROWS_AS(load_manifest(bad), Error);
  }
}

TEST_CASE("excitation families") {
  RunConfig cfg = fast_cfg();
  const fs::path base = fresh_dir("excite");
  for (const std::string& kind : {"white", "colored", "chirp"}) {
    cfg.excitation = kind;
    const fs::path dir = base / kind;
    fs::create_directories(dir);
    const auto items = synth_dataset(cfg, 1, dir);
    const Waveform x = read_wav(dir / items[0].x_path);
    REQUIRE(x.samples.size() == 16000);
    double energy = 0.0;
    for (double v : x.samples) energy += v * v;
    const double rms = std::sqrt(energy / 16000.0);
    CHECK(rms > 0.02);  // audible level in every family
    CHECK(rms < 0.5);
  }
  SUBCASE("unknown excitation is rejected") {
    cfg.excitation = "violet";
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
  SUBCASE("excitations differ from each other") {
    CHECK(slurp(base / "white" / "item_00000_x.wav") !=
          slurp(base / "chirp" / "item_00000_x.wav"));
  }
}

TEST_CASE("dry-directory sources are assigned round robin") {
  const fs::path dry = fresh_dir("dry_src");
  // two recognizable dry signals
  for (int k = 0; k < 2; ++k) {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(8000, 0.0);
    w.samples[100 + static_cast<size_t>(k)] = 0.5;
    write_wav(dry / ("src" + std::to_string(k) + ".wav"), w);
  }
  RunConfig cfg = fast_cfg();
  cfg.dry_dir = dry.string();
  const fs::path out = fresh_dir("dry_out");
  const auto items = synth_dataset(cfg, 3, out);
  const Waveform x0 = read_wav(out / items[0].x_path);
  const Waveform x1 = read_wav(out / items[1].x_path);
  const Waveform x2 = read_wav(out / items[2].x_path);
  CHECK(x0.samples[100] > 0.4);   // src0
  CHECK(x1.samples[101] > 0.4);   // src1
  CHECK(x2.samples[100] > 0.4);   // src0 again
  SUBCASE("sample-rate mismatch is rejected") {
    Waveform bad;
    bad.sample_rate = 8000;
    bad.samples.assign(4000, 0.1);
    write_wav(dry / "zz_bad.wav", bad);
    const fs::path out2 = fresh_dir("dry_bad");
    CHECK_THROWS_AS(synth_dataset(cfg, 4, out2), Error);
  }
  SUBCASE("empty directory is rejected") {
    RunConfig none = cfg;
    const fs::path empty = fresh_dir("dry_empty");
    none.dry_dir = empty.string();
    const fs::path out3 = fresh_dir("dry_none");
    CHECK_THROWS_AS(synth_dataset(none, 1, out3), Error);
  }
}

TEST_CASE("oracle evaluation hits the exact-recovery floors") {
  RunConfig cfg = fast_cfg();
  cfg.excitation_seconds = 1.0;
  const fs::path dir = fresh_dir("eval");
  const auto items = synth_dataset(cfg, 2, dir);
  const auto rows =
      eval_manifest(cfg, items, dir, kEvalVariants, std::nullopt);
  REQUIRE(rows.size() == items.size() * kEvalVariants.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const EvalRow& r = rows[i];
    CHECK(r.item_id == items[i / kEvalVariants.size()].item_id);
    CHECK(r.metric == kEvalVariants[i % kEvalVariants.size()]);
    if (r.metric == "SSB" || r.metric == "CSB") {
      CHECK(r.value == 0.0);  // oracle-corrected: exact cancellation
    } else if (r.metric == "SB" || r.metric == "3B") {
      CHECK(r.value > 0.0);
    } else {
      CHECK(r.value < 1e-3);  // EDC-Fourier on the oracle dry signal
    }
    CHECK(std::isfinite(r.masked_mean));
  }
  SUBCASE("csv carries one summary pair per metric") {
    const fs::path csv = dir / "eval.csv";
    save_eval_csv(rows, csv);
    std::ifstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line == "item_id,metric,value,masked_mean");
    int data = 0, mean = 0, stddev = 0;
    while (std::getline(is, line)) {
      if (line.rfind("mean,", 0) == 0) ++mean;
      else if (line.rfind("std,", 0) == 0) ++stddev;
      else ++data;
    }
    CHECK(data == static_cast<int>(rows.size()));
    CHECK(mean == static_cast<int>(kEvalVariants.size()));
    CHECK(stddev == static_cast<int>(kEvalVariants.size()));
  }
  SUBCASE("unknown variant is rejected") {
    CHECK_THROWS_AS(eval_manifest(cfg, items, dir, {"XYZ"}, std::nullopt), Error);
  }
  SUBCASE("estimate_dir reads the provided dry estimate") {
    const fs::path est = fresh_dir("eval_est");
    for (const auto& item : items) {
      fs::copy_file(dir / item.x_path, est / (item.item_id + "_xhat.wav"));
    }
    const auto rows2 = eval_manifest(cfg, items, dir, {"SSB"}, est);
    for (const EvalRow& r : rows2) CHECK(r.value == 0.0);
  }
  SUBCASE("missing estimate file is an io error") {
    const fs::path est = fresh_dir("eval_missing");
    try {
      eval_manifest(cfg, items, dir, {"SSB"}, est);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
  }
}

TEST_CASE("gradient check harness") {
  const GradCheckReport rep = grad_check(5, 4);
  CHECK(rep.trials == 4);
  CHECK(rep.coords == 4 * 40);
  CHECK(rep.max_rel_error < 1e-6);
  SUBCASE("rank-violating shape is rejected up front") {
    try {
      grad_check(5, 1, 40, 1e-5, 16, 16);  // 16 coefficients need more than 16 frames
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::validation);
    }
  }
  SUBCASE("zero trials reports a clean slate") {
    const GradCheckReport none = grad_check(5, 0);
    CHECK(none.trials == 0);
    CHECK(none.max_rel_error == 0.0);
  }
  SUBCASE("negative trials are rejected") {
    CHECK_THROWS_AS(grad_check(5, -1), Error);
  }
}
