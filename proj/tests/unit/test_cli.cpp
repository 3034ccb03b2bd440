#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

/// Runs the CLI in `dir` with stdout and stderr captured.
Run run_cli(const fs::path& dir, const std::string& args) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = "cd '" + dir.string() + "' && '" PSCAPE_CLI_PATH "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(log);
  std::ostringstream ss;
  ss << is.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("pscape_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("usage errors exit with 2") {
  TempDir d("usage");
  CHECK(run_cli(d.path, "").code == 2);
  CHECK(run_cli(d.path, "bogus").code == 2);
  const Run missing = run_cli(d.path, "ingest -i does_not_exist.ptraj");
  CHECK(missing.code == 2);
  CHECK(missing.output.find("error: usage:") != std::string::npos);
  CHECK(run_cli(d.path, "gen --hinge --two-state").code == 2);
  CHECK(run_cli(d.path, "gen --frames abc").code == 2);
  CHECK(run_cli(d.path, "--help").code == 0);
}

TEST_CASE("malformed input exits with 1 and names the line") {
  TempDir d("parse");
  std::ofstream(d.path / "bad.ptraj") << "PTRAJ v1 n=4 frames=2\nACDE\nFRAME 0\n0 0 0\n1 0 0\n1 1 0\n";
  const Run r = run_cli(d.path, "ingest -i bad.ptraj");
  CHECK(r.code == 1);
  CHECK(r.output.find("error: parse:") != std::string::npos);
  CHECK(r.output.find("at line 7") != std::string::npos);
}

TEST_CASE("gen, ingest and scatter write headed artifacts") {
  TempDir d("pipeline");
  REQUIRE(run_cli(d.path, "gen --frames 12 --seed 4 -o out").code == 0);
  const std::string traj = slurp(d.path / "out" / "trajectory.ptraj");
  CHECK(traj.rfind("# pscape 0.3.0 gen\n# created: ", 0) == 0);
  CHECK(traj.find("# seed: 4\n") != std::string::npos);
  CHECK(traj.find("# config: frames=12\n") != std::string::npos);
  CHECK(traj.find("PTRAJ v1 n=10 frames=12") != std::string::npos);
  REQUIRE(run_cli(d.path, "ingest -i out/trajectory.ptraj -o out").code == 0);
  CHECK(fs::exists(d.path / "out" / "ingest_report.txt"));
  REQUIRE(run_cli(d.path, "scatter -i out/trajectory.ptraj --frame 0,3 --J 2 -o out").code == 0);
  CHECK(fs::exists(d.path / "out" / "scatter_0.csv"));
  CHECK(fs::exists(d.path / "out" / "scatter_3.csv"));
  CHECK(slurp(d.path / "out" / "scatter_0.csv").find("\"(0,0,A)\"") != std::string::npos);
}

TEST_CASE("two-state generator writes state labels") {
  TempDir d("twostate");
  REQUIRE(run_cli(d.path, "gen --two-state --frames 20 -o out").code == 0);
  CHECK(fs::exists(d.path / "out" / "states.csv"));
}

TEST_CASE("invalid numeric option values are usage errors") {
  TempDir d("badvalue");
  CHECK(run_cli(d.path, "gen --theta-min 3 --theta-max 1 -o out").code == 2);
  CHECK(run_cli(d.path, "gen --switch-prob 0 --two-state -o out").code == 2);
}

TEST_CASE("config file values apply and command-line flags win") {
  TempDir d("config");
  std::ofstream(d.path / "run.ini") << "frames = 7\nn-per-arm = 3\n";
  REQUIRE(run_cli(d.path, "gen --config run.ini --n-per-arm 4 -o out").code == 0);
  const std::string traj = slurp(d.path / "out" / "trajectory.ptraj");
  CHECK(traj.find("PTRAJ v1 n=8 frames=7") != std::string::npos);
}

TEST_CASE("short train, embed, decode, interpolate, metrics") {
  TempDir d("train");
  REQUIRE(run_cli(d.path, "gen --frames 40 --n-per-arm 3 -o out").code == 0);
  const std::string small = "--k 3 --J 2 --t-max 4 --latent-dim 3 --heads 1 --head-dim 2 --hidden 4";
  REQUIRE(run_cli(d.path, "train -i out/trajectory.ptraj --epochs 3 --windows 2 --window-len 3 -q " + small + " -o out")
              .code == 0);
  for (const char* f : {"checkpoint.ckpt", "curve.csv", "split.csv", "train_summary.txt"})
    CHECK(fs::exists(d.path / "out" / f));
  REQUIRE(run_cli(d.path, "embed -i out/trajectory.ptraj --checkpoint out/checkpoint.ckpt -o out").code == 0);
  CHECK(fs::exists(d.path / "out" / "latents.csv"));
  CHECK(fs::exists(d.path / "out" / "time.csv"));
  REQUIRE(run_cli(d.path, "decode --checkpoint out/checkpoint.ckpt --latents out/latents.csv -o out").code == 0);
  CHECK(slurp(d.path / "out" / "decoded.csv").find("pd_0_1") != std::string::npos);
  REQUIRE(run_cli(d.path, "interpolate --checkpoint out/checkpoint.ckpt --latents out/latents.csv --from 0 --to 39 "
                          "--steps 3 -o out")
              .code == 0);
  CHECK(fs::exists(d.path / "out" / "interpolation.csv"));
  REQUIRE(run_cli(d.path, "metrics -i out/trajectory.ptraj --checkpoint out/checkpoint.ckpt --split out/split.csv "
                          "--pca -o out")
              .code == 0);
  const std::string m = slurp(d.path / "out" / "metrics.txt");
  CHECK(m.find("mae_pairdist_mean = ") != std::string::npos);
  CHECK(fs::exists(d.path / "out" / "pca.csv"));
  CHECK(run_cli(d.path, "embed -i out/trajectory.ptraj --checkpoint out/curve.csv -o out").code == 1);
}

TEST_CASE("verify runs a small campaign") {
  TempDir d("verify");
  const Run r = run_cli(d.path, "verify --n 12 --k 4 --trials 2 --J 2 -o out");
  CHECK(r.code == 0);
  CHECK(fs::exists(d.path / "out" / "verify_checks.csv"));
  CHECK(fs::exists(d.path / "out" / "verify_summary.txt"));
}

namespace {

/// File contents without the `# created:` timestamp line.
std::string without_timestamp(const fs::path& p) {
  std::ifstream is(p);
  std::string line, out;
  while (std::getline(is, line))
    if (line.rfind("# created:", 0) != 0) out += line + "\n";
  return out;
}

} // namespace

TEST_CASE("hinge generation is reproducible") {
  TempDir a("gen_a"), b("gen_b");
  REQUIRE(run_cli(a.path, "gen --hinge --frames 300 --seed 7 -o out").code == 0);
  REQUIRE(run_cli(b.path, "gen --hinge --frames 300 --seed 7 -o out").code == 0);
  const std::string ta = without_timestamp(a.path / "out" / "trajectory.ptraj");
  CHECK(ta.find("frames=300") != std::string::npos);
  CHECK(ta == without_timestamp(b.path / "out" / "trajectory.ptraj"));
}

TEST_CASE("full verification campaign has no failed checks") {
  TempDir d("verify_all");
  REQUIRE(run_cli(d.path, "verify --all --n 30 --trials 50 --seed 1 -o out").code == 0);
  const std::string s = slurp(d.path / "out" / "verify_summary.txt");
  CHECK(s.find("failures = 0\n") != std::string::npos);
  CHECK(s.find("c_hat_max_J5") != std::string::npos);
}

TEST_CASE("train, embed and metrics reproduce across invocations") {
  const std::string small = "--k 3 --J 2 --t-max 4 --latent-dim 3 --heads 1 --head-dim 2 --hidden 4";
  std::vector<std::string> reports;
  for (const char* tag : {"repro_a", "repro_b"}) {
    TempDir d(tag);
    REQUIRE(run_cli(d.path, "gen --frames 40 --n-per-arm 3 --seed 2 -o out").code == 0);
    REQUIRE(run_cli(d.path, "train -i out/trajectory.ptraj --epochs 4 --seed 2 --windows 2 --window-len 3 -q " + small +
                                " -o out")
                .code == 0);
    REQUIRE(run_cli(d.path, "embed -i out/trajectory.ptraj --checkpoint out/checkpoint.ckpt -o out").code == 0);
    REQUIRE(run_cli(d.path, "metrics -i out/trajectory.ptraj --checkpoint out/checkpoint.ckpt --split out/split.csv -o out")
                .code == 0);
    reports.push_back(without_timestamp(d.path / "out" / "metrics.txt") + without_timestamp(d.path / "out" / "latents.csv") +
                      without_timestamp(d.path / "out" / "checkpoint.ckpt"));
  }
  CHECK(reports[0] == reports[1]);
  CHECK(reports[0].find("mae_pairdist_mean") != std::string::npos);
}
