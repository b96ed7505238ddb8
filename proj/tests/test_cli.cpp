// Copyright 2026 The unitac Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the installed binary through a miniature end-to-end pipeline and
// checks exit codes and artifact determinism.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return UNITAC_CLI_PATH; }

int run(const std::string& args) {
  std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "unitac_cli_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run("") == 1);
  CHECK(run("corpus sample --no-such-flag 3") == 1);
  CHECK(run("corpus sample") == 1);  // missing required --out
}

TEST_CASE("data errors exit with code 2") {
  TempDir dir;
  CHECK(run("s2u fit --features /no/such/dir --k 8 --out " + (dir / "cb.bin")) == 2);
  CHECK(run("corpus split --in /no/such/manifest --out-train " + (dir / "a") + " --out-val " +
            (dir / "b")) == 2);
}

TEST_CASE("mini pipeline via the CLI is reproducible") {
  TempDir dir;
  std::string world = " --set world.inventory_size=10 --set world.feature_dim=6"
                      " --set world.k=12 --set world.num_accents=2";

  std::string manifest = dir / "m.txt";
  REQUIRE(run("corpus sample --n 30 --len-min 3 --len-max 6 --seed 5 --out " + manifest + world) ==
          0);
  std::string once = slurp(manifest);
  REQUIRE(run("corpus sample --n 30 --len-min 3 --len-max 6 --seed 5 --out " + manifest + world) ==
          0);
  CHECK(slurp(manifest) == once);

  REQUIRE(run("corpus split --in " + manifest + " --ratio 9:1 --seed 2 --out-train " +
              (dir / "train.txt") + " --out-val " + (dir / "val.txt") + world) == 0);
  {
    std::ifstream is(dir / "val.txt");
    std::string line;
    int lines = 0;
    while (std::getline(is, line)) ++lines;
    CHECK(lines == 3);  // 30 * 1/10
  }

  REQUIRE(run("synth native --manifest " + manifest + " --out-dir " + (dir / "native") + world) ==
          0);
  REQUIRE(run("synth render --manifest " + manifest + " --accent 1 --speaker 1 --seed 4"
              " --out-dir " + (dir / "acc") + world) == 0);

  REQUIRE(run("s2u fit --features " + (dir / "native") + " --k 12 --seed 3 --out " +
              (dir / "cb.bin") + world) == 0);
  std::string cb_once = slurp(dir / "cb.bin");
  REQUIRE(run("s2u fit --features " + (dir / "native") + " --k 12 --seed 3 --out " +
              (dir / "cb.bin") + world) == 0);
  CHECK(slurp(dir / "cb.bin") == cb_once);

  REQUIRE(run("s2u quantize --codebook " + (dir / "cb.bin") + " --features " + (dir / "native") +
              " --out " + (dir / "units.txt") + world) == 0);
  REQUIRE(run("u2s fit --features " + (dir / "native") + " --codebook " + (dir / "cb.bin") +
              " --out " + (dir / "dec.bin") + world) == 0);
  REQUIRE(run("u2s synth --decoder " + (dir / "dec.bin") + " --units " + (dir / "units.txt") +
              " --line 0 --out " + (dir / "resynth.feat") + world) == 0);

  REQUIRE(run("augment build --manifest " + manifest + " --strategy overlapped --budget 60" +
              " --codebook " + (dir / "cb.bin") + " --seed 6 --out-dir " + (dir / "corpus") +
              world) == 0);

  std::string train_flags = " --set experiment.model.model_dim=16"
                            " --set experiment.model.heads=2"
                            " --set experiment.model.enc_layers=1"
                            " --set experiment.model.dec_layers=1"
                            " --set experiment.train.total_updates=20"
                            " --set experiment.train.micro_batch=4"
                            " --set experiment.train.grad_accum=1";
  REQUIRE(run("pc train --corpus " + (dir / "corpus") + " --out " + (dir / "model.ckpt") +
              " --log " + (dir / "log.jsonl") + world + train_flags) == 0);

  std::string one_feat = (dir / "native") + "/00000000.feat";
  REQUIRE(run("pc decode --model " + (dir / "model.ckpt") + " --features " + one_feat +
              " --beam 2 --out " + (dir / "decoded.units") + world) == 0);
  REQUIRE(run("convert --in " + one_feat + " --model " + (dir / "model.ckpt") + " --codebook " +
              (dir / "cb.bin") + " --decoder " + (dir / "dec.bin") + " --out-features " +
              (dir / "converted.feat") + " --out-units " + (dir / "converted.units") + world) ==
          0);
  CHECK(fs::exists(dir / "converted.feat"));

  REQUIRE(run("eval run --model " + (dir / "model.ckpt") + " --codebook " + (dir / "cb.bin") +
              " --decoder " + (dir / "dec.bin") + " --test-manifest " + (dir / "corpus") +
              " --beam 2 --report " + (dir / "report.txt") + world) == 0);
  CHECK(fs::exists(dir / "report.txt"));
  CHECK(fs::exists(dir / "report.txt.jsonl"));
}
