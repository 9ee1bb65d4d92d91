// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "rng.hpp"
#include "room.hpp"
#include "wav.hpp"

using namespace rirkit;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(RK_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rirkit_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

Waveform noise_wave(size_t n, uint64_t seed) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(n);
  for (double& v : w.samples) v = 0.3 * rng.gaussian();
  return w;
}

}  // namespace

TEST_CASE("help and argument-parse exit codes") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("estimate --help").code == 0);
  CHECK(run_cli("--definitely-not-a-flag").code == 2);
  CHECK(run_cli("").code == 2);                  // a subcommand is required
  CHECK(run_cli("estimate").code == 2);          // missing required options
  CHECK(run_cli("synth --out /tmp/x --count -3").code == 2);
  CHECK(run_cli("frobnicate").code == 2);        // unknown subcommand
}

TEST_CASE("missing input files exit with the io code") {
  const fs::path dir = fresh_dir("io");
  const RunResult r = run_cli("estimate --x /nonexistent/a.wav --y /nonexistent/b.wav --out-dir " +
                              dir.string());
  CHECK(r.code == 3);
  CHECK(r.out.find("error") != std::string::npos);
  CHECK(run_cli("rt60 /nonexistent/h.wav").code == 3);
}

TEST_CASE("gradient check subcommand") {
  const RunResult ok = run_cli("grad-check --trials 3 --seed 7");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("max_rel_error") != std::string::npos);
  SUBCASE("impossible tolerance flips the numeric exit code") {
    CHECK(run_cli("grad-check --trials 2 --tolerance 1e-16").code == 4);
  }
  SUBCASE("rank-violating shape is a validation error") {
    CHECK(run_cli("grad-check --trials 1 --filter-len 40 --frames 16").code == 2);
  }
}

TEST_CASE("estimate on an identity pair recovers a near-perfect bank") {
  const fs::path dir = fresh_dir("estimate");
  const Waveform x = noise_wave(8000, 21);
  write_wav(dir / "x.wav", x);
  const RunResult r = run_cli("estimate --x " + (dir / "x.wav").string() + " --y " +
                              (dir / "x.wav").string() + " --out-dir " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("bands=257") != std::string::npos);
  CHECK(r.out.find("flagged=0") != std::string::npos);
  CHECK(fs::exists(dir / "bank.rkcb"));
  CHECK(fs::exists(dir / "bank.csv"));
  CHECK(fs::exists(dir / "rir.csv"));
  CHECK(fs::exists(dir / "residuals.csv"));
  // every residual row is numerically zero
  std::ifstream is(dir / "residuals.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line == "f,residual");
  int rows = 0;
  while (std::getline(is, line)) {
    const double v = std::stod(line.substr(line.find(',') + 1));
    CHECK(v < 1e-8);
    ++rows;
  }
  CHECK(rows == 257);
  SUBCASE("rank violation on a short signal") {
    const Waveform tiny = noise_wave(600, 22);
    write_wav(dir / "tiny.wav", tiny);
    const RunResult bad = run_cli("estimate --x " + (dir / "tiny.wav").string() + " --y " +
                                  (dir / "tiny.wav").string() + " --out-dir " + dir.string() +
                                  " --filter-len 10");
    CHECK(bad.code == 2);
  }
}

TEST_CASE("synth and eval are reproducible end to end") {
  const fs::path d1 = fresh_dir("synth1");
  const fs::path d2 = fresh_dir("synth2");
  const std::string args = " --count 2 --seed 9 --excitation-seconds 1.0";
  CHECK(run_cli("synth --out " + d1.string() + args).code == 0);
  CHECK(run_cli("synth --out " + d2.string() + args).code == 0);
  CHECK(slurp(d1 / "manifest.csv") == slurp(d2 / "manifest.csv"));
  CHECK(slurp(d1 / "item_00000_y.wav") == slurp(d2 / "item_00000_y.wav"));

  const RunResult e1 = run_cli("eval --manifest " + (d1 / "manifest.csv").string() + " --out " +
                               (d1 / "eval.csv").string() + " --variant SSB --variant EDC-Fourier");
  CHECK(e1.code == 0);
  CHECK(e1.out.find("mean") != std::string::npos);
  const RunResult e2 = run_cli("eval --manifest " + (d2 / "manifest.csv").string() + " --out " +
                               (d2 / "eval.csv").string() + " --variant SSB --variant EDC-Fourier");
  CHECK(e2.code == 0);
  CHECK(slurp(d1 / "eval.csv") == slurp(d2 / "eval.csv"));
  SUBCASE("unknown variant is a validation error") {
    CHECK(run_cli("eval --manifest " + (d1 / "manifest.csv").string() + " --out " +
                  (d1 / "bad.csv").string() + " --variant QQQ")
              .code == 2);
  }
  SUBCASE("missing manifest is an io error") {
    CHECK(run_cli("eval --manifest " + (d1 / "none.csv").string() + " --out " +
                  (d1 / "bad.csv").string())
              .code == 3);
  }
}

TEST_CASE("rt60 subcommand prints a parseable estimate") {
  const fs::path dir = fresh_dir("rt60");
  const Waveform h = synth_rir_polack(0.45, 0.7, 16000, 5);
  write_wav(dir / "h.wav", h);
  const RunResult r = run_cli("rt60 " + (dir / "h.wav").string());
  CHECK(r.code == 0);
  const double rt = std::stod(r.out);
  CHECK(rt == doctest::Approx(0.45).epsilon(0.10));
  SUBCASE("degenerate response exits with the numeric code") {
    Waveform imp;
    imp.sample_rate = 16000;
    imp.samples = {1.0, 0.0, 0.0};
    write_wav(dir / "imp.wav", imp);
    CHECK(run_cli("rt60 " + (dir / "imp.wav").string()).code == 4);
  }
}

TEST_CASE("deconvolve subcommand recovers the response") {
  const fs::path dir = fresh_dir("deconv");
  const Waveform x = noise_wave(5000, 31);
  Waveform h;
  h.sample_rate = 16000;
  h.samples.resize(300);
  Rng rng(32);
  for (size_t n = 0; n < h.samples.size(); ++n) {
    h.samples[n] = rng.gaussian() * std::exp(-6.9 * static_cast<double>(n) / 300.0);
  }
  const Waveform y = convolve(x, h);
  write_wav(dir / "x.wav", x);
  write_wav(dir / "y.wav", y);
  const RunResult r = run_cli("deconvolve --y " + (dir / "y.wav").string() + " --x " +
                              (dir / "x.wav").string() + " --out " + (dir / "hhat.wav").string());
  CHECK(r.code == 0);
  const Waveform rec = read_wav(dir / "hhat.wav");
  REQUIRE(rec.samples.size() == 300);
  double num = 0.0, den = 0.0;
  for (size_t n = 0; n < 300; ++n) {
    num += (rec.samples[n] - h.samples[n]) * (rec.samples[n] - h.samples[n]);
    den += h.samples[n] * h.samples[n];
  }
  CHECK(std::sqrt(num / den) < 1e-5);  // float wav quantization dominates
}
