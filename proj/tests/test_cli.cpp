#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(SKYHERD_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("skyherd_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("geo to-ecef axis case") {
  const auto r = run("geo to-ecef --lat 0 --lon 0 --alt 0");
  CHECK(r.code == 0);
  CHECK(r.out == "6378137.0 0.0 0.0\n");
  CHECK(run("geo to-ecef --lat 91 --lon 0 --alt 0").code == 2);
}

TEST_CASE("exit codes") {
  CHECK(run("").code == 1);
  CHECK(run("no-such-command").code == 1);
  CHECK(run("run --policy lawnmower --grid 20by20").code == 1);
  CHECK(run("run --policy random --grid 20x20").code == 1);
  CHECK(run("train --data /nonexistent/data.txt --out /nonexistent/p.bin").code == 2);
  CHECK(run("render --records /nonexistent/r.jsonl --format png").code == 1);
}

TEST_CASE("lawnmower run covers the grid") {
  Scratch tmp;
  const auto r = run("run --policy lawnmower --grid 20x20 --targets 17 --seed 7 --max-iter 399 --metrics " +
                     (tmp / "m.csv") + " --records " + (tmp / "r.jsonl"));
  CHECK(r.code == 0);
  CHECK(r.out.find("lawnmower,coverage,1,1.0,") != std::string::npos);
  CHECK(r.out.find("lawnmower,recovered,1,17.0,") != std::string::npos);
  CHECK(slurp(tmp / "m.csv").find("\n0,1.0,399,17,") != std::string::npos);

  const auto ascii = run("render --records " + (tmp / "r.jsonl") + " --format ascii");
  CHECK(ascii.code == 0);
  CHECK(ascii.out.find('.') == std::string::npos);
}

TEST_CASE("dataset generation is byte identical across runs") {
  Scratch tmp;
  CHECK(run("gen-episodes --episodes 100 --seed 1 --out " + (tmp / "a.txt")).code == 0);
  CHECK(run("gen-episodes --episodes 100 --seed 1 --workers 3 --out " + (tmp / "b.txt")).code == 0);
  const auto a = slurp(tmp / "a.txt");
  CHECK_FALSE(a.empty());
  CHECK(a == slurp(tmp / "b.txt"));
}

TEST_CASE("diverging training is a numeric error") {
  Scratch tmp;
  REQUIRE(run("gen-episodes --episodes 5 --grid 8x8 --targets 4 --seed 2 --out " + (tmp / "d.txt")).code == 0);
  std::ofstream(tmp / "cfg.txt") << "learning_rate = 1e300\nmax_epochs = 1\n";
  CHECK(run("train --data " + (tmp / "d.txt") + " --config " + (tmp / "cfg.txt") + " --out " + (tmp / "p.bin"))
            .code == 3);
}

TEST_CASE("fence check and fusion demo") {
  Scratch tmp;
  std::ofstream(tmp / "fence.txt") << "51.3500, -2.5200\n51.3500, -2.5190\n51.3506, -2.5190\n51.3506, -2.5200\n";
  const auto inside = run("geo fence-check --fence " + (tmp / "fence.txt") + " --lat 51.3503 --lon -2.5195");
  CHECK(inside.code == 0);
  CHECK(inside.out == "inside\n");
  const auto outside = run("geo fence-check --fence " + (tmp / "fence.txt") + " --lat 51.36 --lon -2.5195");
  CHECK(outside.out == "outside\n");

  const auto demo = run("fuse-demo --frames 5 --classes 4 --seed 3");
  CHECK(demo.code == 0);
  CHECK(demo.out.rfind("frame,id0,id1,id2,id3\n", 0) == 0);
}
