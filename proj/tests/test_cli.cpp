/// End-to-end checks of the command-line binary: exit codes, artifacts,
/// and the atlas printout.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_tool(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(SINGLAB_TOOL_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "singlab-cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("run subcommand executes a config and writes artifacts") {
  const auto dir = fresh_dir("run");
  const auto log = dir / "log.txt";
  const fs::path cfg = fs::path(SINGLAB_CONFIG_DIR) / "manufactured.conf";
  REQUIRE(fs::exists(cfg));
  const int code =
      run_tool("run " + cfg.string() + " --out " + (dir / "out").string(), log);
  INFO(slurp(log));
  CHECK(code == 0);
  CHECK(fs::exists(dir / "out" / "report.csv"));
  CHECK(fs::exists(dir / "out" / "field.txt"));
  CHECK(fs::exists(dir / "out" / "config.echo"));
  CHECK(slurp(log).find("PASS") != std::string::npos);
}

TEST_CASE("config errors exit with code 2") {
  const auto dir = fresh_dir("bad");
  {
    std::ofstream bad(dir / "bad.conf");
    bad << "scenario = warp-drive\n";
  }
  CHECK(run_tool("run " + (dir / "bad.conf").string(), dir / "log1.txt") == 2);
  CHECK(run_tool("run " + (dir / "missing.conf").string(), dir / "log2.txt") == 2);
  {
    std::ofstream bad(dir / "field.conf");
    bad << "scenario = manufactured\nmesh.cells = 4\n";
  }
  const int code = run_tool("run " + (dir / "field.conf").string(), dir / "log3.txt");
  CHECK(code == 2);
}

TEST_CASE("atlas subcommand prints the regime report") {
  const auto dir = fresh_dir("atlas");
  const auto log = dir / "log.txt";
  const int code = run_tool(
      "atlas --dim-n 3 --p 2 --theta 0.5 --gamma2 0.5 --m 1", log);
  CHECK(code == 0);
  const auto text = slurp(log);
  CHECK(text.find("theta_max=1.5") != std::string::npos);
  CHECK(text.find("marc_t=3") != std::string::npos);
  CHECK(text.find("existence_ok=true") != std::string::npos);
}

TEST_CASE("sweep subcommand aggregates a summary") {
  const auto dir = fresh_dir("sweep");
  {
    std::ofstream conf(dir / "atlas.conf");
    conf << "scenario = exponent-atlas\n"
            "problem.h.gamma2 = 0.5\n"
            "sweep.problem.theta = 0.0:1.0:0.5\n";
  }
  const int code = run_tool("sweep " + (dir / "atlas.conf").string() + " --out " +
                                (dir / "out").string() + " --workers 2",
                            dir / "log.txt");
  CHECK(code == 0);
  CHECK(fs::exists(dir / "out" / "summary.csv"));
  CHECK(fs::exists(dir / "out" / "point-0002" / "report.csv"));
  const auto summary = slurp(dir / "out" / "summary.csv");
  CHECK(summary.find("problem.theta") != std::string::npos);
}
