// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the command-line surface: collect -> train -> eval ->
// plot on a miniature budget, plus the failure modes (unknown flags,
// unreadable files) that must exit nonzero.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(GMASLAB_CLI_PATH) + " " + args;
  return std::system(cmd.c_str());
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "gmaslab_cli_test") { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("collect, train, eval and plot round-trip on a tiny budget") {
  TempDir dir;
  const std::string data = (dir.path / "mini.gmasdata").string();
  const std::string run = (dir.path / "run").string();

  REQUIRE(cli("collect --n 300 --seed 2 --out " + data + " > /dev/null") == 0);
  REQUIRE(fs::exists(data));

  REQUIRE(cli("train --data " + data + " --seed 3 --iters 8 --batch 8 --alpha 0.05 --train-depth 1 "
              "--eval-every 4 --eval-mazes 2 --freeze 4 --out " + run + " > /dev/null") == 0);
  REQUIRE(fs::exists(run + "/metrics.csv"));
  REQUIRE(fs::exists(run + "/checkpoint.gmasckpt"));

  CHECK(cli("eval --ckpt " + run + "/checkpoint.gmasckpt --depth 1 --mazes 3 --seed 4 > /dev/null") == 0);

  const std::string script = (dir.path / "plot.py").string();
  CHECK(cli("plot --metrics " + run + "/metrics.csv --out " + script + " > /dev/null") == 0);
  std::ifstream py(script);
  std::string body((std::istreambuf_iterator<char>(py)), std::istreambuf_iterator<char>());
  CHECK(body.find("eval_mean") != std::string::npos);
  CHECK(body.find("matplotlib") != std::string::npos);
}

TEST_CASE("unknown flags and unreadable files exit nonzero") {
  TempDir dir;
  CHECK(cli("collect --definitely-not-a-flag 3 --out x.bin > /dev/null 2>&1") != 0);
  CHECK(cli("train --data " + (dir.path / "missing.gmasdata").string() + " --out " + (dir.path / "o").string() +
            " > /dev/null 2>&1") != 0);
  CHECK(cli("eval --ckpt " + (dir.path / "missing.gmasckpt").string() + " > /dev/null 2>&1") != 0);
  CHECK(cli("plot --metrics " + (dir.path / "missing.csv").string() + " > /dev/null 2>&1") != 0);
  CHECK(cli("> /dev/null 2>&1") != 0);  // a subcommand is required
}
