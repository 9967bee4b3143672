#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(RSD_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("CLI commands and exit codes") {
  const fs::path root = fs::temp_directory_path() / "rsd_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string r = root.string();

  CHECK(run("") == 1);
  CHECK(run("bogus") == 1);
  CHECK(run("fit --data " + r + "/none.csv --out " + r + "/x") == 1);

  REQUIRE(run("simulate --out " + r + "/sims --grid-cell 3 --seed 5") == 0);
  fs::path cell;
  for (const auto& e : fs::directory_iterator(root / "sims")) cell = e.path();
  REQUIRE(fs::exists(cell / "train.csv"));
  CHECK(run("simulate --out " + r + "/sims --grid-cell 33") == 1);

  const std::string fit_args = "fit --data " + (cell / "train.csv").string() +
                               " --iters 150 --burnin 50 --thin 2 --K 5 --M 3 --seed 4 --chains 2"
                               " --no-intercept --quiet";
  REQUIRE(run(fit_args + " --out " + r + "/fit") == 0);
  for (const char* f : {"labels.csv", "coefficients.csv", "trace.csv", "run.json", "model.json"}) {
    CHECK(fs::exists(root / "fit" / f));
  }
  CHECK(run(fit_args + " --iters 20") == 1);
  CHECK(run(fit_args + " --prior elastic --out " + r + "/y") == 1);

  REQUIRE(run("evaluate --scenario " + cell.string() + " --fit " + r + "/fit --out " + r + "/eval.json") == 0);
  CHECK(slurp(root / "eval.json").find("ari") != std::string::npos);
  REQUIRE(run("predict --model " + r + "/fit --data " + (cell / "test.csv").string() + " --out " + r +
              "/pred.csv") == 0);
  CHECK(slurp(root / "pred.csv").rfind("id,segment,y_hat", 0) == 0);

  // Malformed data is a validation error.
  std::ofstream(root / "bad.csv") << "id,lat,lon,rating_mean,rating_count\na,1,2,x,3\n";
  CHECK(run("fit --data " + r + "/bad.csv --out " + r + "/z") == 1);
  // Missing model files are bad input; an unwritable output is a runtime failure.
  fs::create_directories(root / "empty");
  CHECK(run("predict --model " + r + "/empty --data " + (cell / "test.csv").string() + " --out " + r +
            "/p2.csv") == 1);
  CHECK(run("simulate --grid-cell 1 --out /proc/rsd_cli_nowhere") == 2);
}
