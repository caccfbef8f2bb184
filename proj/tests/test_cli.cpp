// Copyright 2026 The sedkit authors
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace std;
namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("SEDKIT_BIN");
  REQUIRE_MESSAGE(b != nullptr, "SEDKIT_BIN must point at the sedkit binary");
  return b;
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "sedkit_cli_test";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const std::string& stdout_file = "") {
  std::string cmd = bin() + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file;
  cmd += " 2> /dev/null";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string missing = "missing file: " + path.string();
  REQUIRE_MESSAGE(in.good(), missing);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Small fast profile shared by the CLI tests.
void write_tiny_config(const fs::path& path) {
  std::ofstream out(path);
  out << "[corpus]\n"
         "n_sequences = 10\n"
         "seq_frames = 32\n"
         "n_classes = 3\n"
         "events_per_seq = 5\n"
         "dur_min = 4\n"
         "dur_max = 10\n"
         "[model]\n"
         "cnn_filters = 4\n"
         "gru_hidden = 8\n"
         "conditioning = scheduled\n"
         "[train]\n"
         "batch_size = 4\n"
         "max_epochs = 3\n"
         "patience = 3\n"
         "seed = 9\n";
}

}  // namespace

TEST_CASE("generate is byte-reproducible and honors the split ratios") {
  const fs::path dir = work_dir();
  const fs::path cfg = dir / "tiny.cfg";
  write_tiny_config(cfg);

  REQUIRE(run("generate --kind structured --seed 7 --out " + (dir / "c1").string() +
              " --config " + cfg.string()) == 0);
  REQUIRE(run("generate --kind structured --seed 7 --out " + (dir / "c2").string() +
              " --config " + cfg.string()) == 0);

  // Byte-identical output across reruns.
  for (const auto& entry : fs::recursive_directory_iterator(dir / "c1")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir / "c1");
    CHECK(slurp(entry.path()) == slurp(dir / "c2" / rel));
  }

  // Manifest split counts 6/2/2.
  std::map<std::string, int> counts;
  std::ifstream manifest(dir / "c1" / "manifest.tsv");
  std::string line;
  while (std::getline(manifest, line))
    counts[line.substr(line.rfind('\t') + 1)]++;
  CHECK(counts["train"] == 6);
  CHECK(counts["val"] == 2);
  CHECK(counts["test"] == 2);
}

TEST_CASE("unknown kind and bad schedule params exit with code 2") {
  const fs::path dir = work_dir();
  CHECK(run("generate --kind sideways --out " + (dir / "x").string()) == 2);
  CHECK(run("schedule --pmin 0.9 --pmax 0.1 --out " + (dir / "s.txt").string()) == 2);
  CHECK(run("eval --checkpoint " + (dir / "missing.sedm").string() + " --data " +
            (dir / "c1").string()) == 2);
  CHECK(run("definitely-not-a-command") == 2);
}

TEST_CASE("schedule subcommand writes the expected curve") {
  const fs::path dir = work_dir();
  const fs::path out = dir / "curve.txt";
  REQUIRE(run("schedule --updates 200 --out " + out.string()) == 0);
  std::ifstream in(out);
  std::string first;
  std::getline(in, first);
  CHECK(first == "0 0.9");
  // Non-increasing second column.
  double prev = 1.0;
  std::string line;
  in.seekg(0);
  int rows = 0;
  while (std::getline(in, line)) {
    const double v = std::stod(line.substr(line.find(' ') + 1));
    CHECK(v <= prev + 1e-12);
    prev = v;
    ++rows;
  }
  CHECK(rows == 201);
}

TEST_CASE("train then eval: overrides echoed, reports printed, exit codes clean") {
  const fs::path dir = work_dir();
  const fs::path cfg = dir / "tiny.cfg";
  write_tiny_config(cfg);
  const fs::path data = dir / "data";
  REQUIRE(run("generate --kind structured --seed 21 --out " + data.string() +
              " --config " + cfg.string()) == 0);

  const fs::path out = dir / "run1";
  REQUIRE(run("train --config " + cfg.string() + " --data " + data.string() + " --out " +
              out.string() + " --lr 5e-4 --clip 0.5") == 0);
  const std::string log = slurp(out / "train_log.txt");
  CHECK(log.find("# override train.learning_rate=5e-4") != std::string::npos);
  CHECK(log.find("# override train.grad_clip=true") != std::string::npos);
  CHECK(log.find("learning_rate = 0.0005") != std::string::npos);
  CHECK(fs::exists(out / "checkpoint.sedm"));

  const fs::path report = dir / "eval.txt";
  REQUIRE(run("eval --checkpoint " + (out / "checkpoint.sedm").string() + " --data " +
              data.string() + " --split test",
              report.string()) == 0);
  const std::string rep = slurp(report);
  CHECK(rep.find("F1") != std::string::npos);
  CHECK(rep.find("f1=") != std::string::npos);
  CHECK(rep.find("n_ref=") != std::string::npos);
}

TEST_CASE("config/corpus class mismatch exits with code 2") {
  const fs::path dir = work_dir();
  const fs::path cfg = dir / "tiny.cfg";
  write_tiny_config(cfg);
  const fs::path data = dir / "data5";
  REQUIRE(run("generate --kind structured --seed 3 --out " + data.string() +
              " --config " + cfg.string() + " --set corpus.n_classes=5") == 0);
  CHECK(run("train --config " + cfg.string() + " --data " + data.string() + " --out " +
            (dir / "bad").string()) == 2);
}
