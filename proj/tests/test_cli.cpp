#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code = -1;
  std::string out;
};

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "sbstein_cli_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path path = scratch_dir() / name;
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  const fs::path out = scratch_dir() / "stdout.txt";
  const std::string cmd = std::string(SBSTEIN_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + (scratch_dir() / "stderr.txt").string();
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

const std::string kSrw075 = R"({"family": "reflected_srw", "params": {"p": 0.75}})";
const std::string kSrw080 = R"({"family": "reflected_srw", "params": {"p": 0.8}})";
const std::string kMm105 = R"({"family": "mm1_embedded", "params": {"rho": 0.5}})";
const std::string kBadP = R"({"family": "reflected_srw", "params": {"p": 0.4}})";

}  // namespace

TEST_CASE("cli convergence sweep at a fixed rate", "[cli]") {
  const auto cfg = write_config("srw075.json", kSrw075);
  const auto r = run_cli("convergence --chain " + cfg.string() +
                         " --t0 0 --t1 5 --r 1.1");
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 7);
  REQUIRE(lines[0] == "t,r,bound,exact_tv,holds");
  for (size_t k = 1; k < lines.size(); ++k) {
    CAPTURE(lines[k]);
    REQUIRE(lines[k].substr(lines[k].rfind(',')) == ",1");
  }
  REQUIRE(lines[1].rfind("0,1.1", 0) == 0);
}

TEST_CASE("cli convergence with per-step optimised rate", "[cli]") {
  const auto cfg = write_config("mm105.json", kMm105);
  const auto r = run_cli("convergence --chain " + cfg.string() +
                         " --t0 2 --t1 8 --r opt");
  REQUIRE(r.exit_code == 0);
  REQUIRE(lines_of(r.out).size() == 8);
}

TEST_CASE("cli convergence in mean-increment mode", "[cli]") {
  const auto cfg = write_config("srw075.json", kSrw075);
  const auto r = run_cli("convergence --chain " + cfg.string() +
                         " --t0 0 --t1 3 --mode mean");
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 5);
  REQUIRE(lines[1].rfind("0,0,", 0) == 0);
}

TEST_CASE("cli rejects bad configs and bad usage", "[cli]") {
  const auto bad = write_config("bad_p.json", kBadP);
  REQUIRE(run_cli("convergence --chain " + bad.string() + " --t0 0 --t1 3").exit_code == 2);
  REQUIRE(run_cli("verify --chain " + bad.string()).exit_code == 2);

  const auto cfg = write_config("srw075.json", kSrw075);
  REQUIRE(run_cli("convergence --chain " + cfg.string() + " --t0 3 --t1 1").exit_code == 2);
  REQUIRE(run_cli("convergence --chain " + cfg.string() + " --t0 0 --t1 3 --r nope").exit_code == 2);
  REQUIRE(run_cli("convergence --chain " + cfg.string() + " --t0 0").exit_code == 2);
  REQUIRE(run_cli("frobnicate").exit_code == 2);
  REQUIRE(run_cli("").exit_code == 2);
  REQUIRE(run_cli("convergence --chain " + (scratch_dir() / "missing.json").string() +
                  " --t0 0 --t1 1").exit_code == 2);
}

TEST_CASE("cli truncation sweep", "[cli]") {
  const auto cfg = write_config("srw075.json", kSrw075);
  const auto r = run_cli("truncation --chain " + cfg.string() + " --n0 3 --n1 6");
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 5);
  REQUIRE(lines[0] == "n,bound,exact_tv,ratio,holds");
  for (size_t k = 1; k < lines.size(); ++k) {
    CAPTURE(lines[k]);
    REQUIRE(lines[k].substr(lines[k].rfind(',')) == ",1");
  }
}

TEST_CASE("cli truncation handles the single-state cut", "[cli]") {
  const auto cfg = write_config("srw075.json", kSrw075);
  const auto r = run_cli("truncation --chain " + cfg.string() +
                         " --n0 0 --n1 0 --nu point:0");
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 2);

  // Truncating at 0 leaves the point mass at 0; the distance to the full
  // stationary law is exactly 2 (1 - pi_0) = 2 (1 - alpha) with alpha = 2/3.
  const auto first = lines[1].find(',');
  const auto second = lines[1].find(',', first + 1);
  const auto third = lines[1].find(',', second + 1);
  const double exact = std::stod(lines[1].substr(second + 1, third - second - 1));
  REQUIRE(exact == Catch::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("cli truncation rejects a re-entry law beyond the cut", "[cli]") {
  const auto cfg = write_config("srw075.json", kSrw075);
  REQUIRE(run_cli("truncation --chain " + cfg.string() +
                  " --n0 2 --n1 4 --nu point:3").exit_code == 2);
  REQUIRE(run_cli("truncation --chain " + cfg.string() +
                  " --n0 2 --n1 4 --nu wedge").exit_code == 2);
}

TEST_CASE("cli compare emits every applicable variant", "[cli]") {
  const auto cfg_p = write_config("srw075.json", kSrw075);
  const auto cfg_q = write_config("srw080.json", kSrw080);
  const auto r = run_cli("compare --chain " + cfg_p.string() + " --chain2 " +
                         cfg_q.string());
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 4);
  REQUIRE(lines[0] == "variant,bound,exact_tv,holds,detail");
  REQUIRE(lines[1].rfind("rowwise,", 0) == 0);
  REQUIRE(lines[2].rfind("ordered,", 0) == 0);
  REQUIRE(lines[3].rfind("rate_perturbation,", 0) == 0);
  for (size_t k = 1; k < lines.size(); ++k) {
    CAPTURE(lines[k]);
    REQUIRE(lines[k].find(",1,ordering=p_dominates_q") != std::string::npos);
  }
}

TEST_CASE("cli compare of a chain with itself is near zero", "[cli]") {
  const auto cfg = write_config("mm105.json", kMm105);
  const auto r = run_cli("compare --chain " + cfg.string() + " --chain2 " +
                         cfg.string());
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() >= 2);
  const auto first = lines[1].find(',');
  const auto second = lines[1].find(',', first + 1);
  const double bound = std::stod(lines[1].substr(first + 1, second - first - 1));
  REQUIRE(bound < 1e-6);
}

TEST_CASE("cli verify battery passes and honours --out", "[cli]") {
  const fs::path report = scratch_dir() / "verify_report.txt";
  const auto r = run_cli("verify --out " + report.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.empty());
  const std::string text = slurp(report);
  REQUIRE(text.find("[PASS]") != std::string::npos);
  REQUIRE(text.find("[FAIL]") == std::string::npos);
  REQUIRE(text.find("0 failed") != std::string::npos);
}

TEST_CASE("cli verify covers a user-supplied chain", "[cli]") {
  const auto cfg = write_config("bd_user.json",
                                R"({"family": "birth_death",
                                    "params": {"b": [0.3], "d": [0.0, 0.6]}})");
  const auto r = run_cli("verify --chain " + cfg.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("birth_death") != std::string::npos);
  REQUIRE(r.out.find("[FAIL]") == std::string::npos);
}

TEST_CASE("cli writes csv to --out", "[cli]") {
  const auto cfg = write_config("srw075.json", kSrw075);
  const fs::path csv = scratch_dir() / "sweep.csv";
  const auto r = run_cli("convergence --chain " + cfg.string() +
                         " --t0 0 --t1 2 --out " + csv.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.empty());
  REQUIRE(lines_of(slurp(csv)).size() == 4);
}
