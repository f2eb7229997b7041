#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "testinfo_cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::create_directories(kRoot);
  const auto p = kRoot / (name + ".ini");
  std::ofstream(p) << body;
  return p;
}

// Runs the tool; returns its exit code.
int run(const std::string& args) {
  const std::string cmd = std::string(TESTINFO_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path out_dir(const std::string& name) {
  const auto p = kRoot / name;
  fs::remove_all(p);
  return p;
}

// quantity,value table -> map
std::map<std::string, std::string> key_values(const fs::path& p) {
  std::map<std::string, std::string> out;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto c = line.find(',');
    out[line.substr(0, c)] = line.substr(c + 1);
  }
  return out;
}

const char* kLinear = R"(
[problem]
null = 0, 0
alt_mean = 1, 1
alt_cov = 1, 0; 0, 1
noise_variance = 1
[design]
points = -1, 1
replications = 5
)";

}  // namespace

TEST_CASE("criteria: closed form is deterministic across runs") {
  const auto cfg = write_config("tk", std::string(kLinear) + "[criteria]\nnames = tk, d\n");
  const auto a = out_dir("tk_a"), b = out_dir("tk_b");
  REQUIRE(run("criteria --config " + cfg.string() + " --out " + a.string()) == 0);
  REQUIRE(run("criteria --config " + cfg.string() + " --out " + b.string()) == 0);
  CHECK(slurp(a / "criteria.csv") == slurp(b / "criteria.csv"));
  CHECK(slurp(a / "criteria.csv").rfind("criterion,value,se,draws,seed\nTK,", 0) == 0);
}

TEST_CASE("criteria: MC estimates are reproducible for a fixed seed and json is well formed") {
  const auto cfg = write_config("mc", std::string(kLinear) +
                                          "[criteria]\nnames = expected, box-hill\ndraws = 500\n");
  const auto a = out_dir("mc_a"), b = out_dir("mc_b"), c = out_dir("mc_c");
  REQUIRE(run("criteria --config " + cfg.string() + " --seed 9 --format json --out " + a.string()) == 0);
  REQUIRE(run("criteria --config " + cfg.string() + " --seed 9 --format json --out " + b.string()) == 0);
  REQUIRE(run("criteria --config " + cfg.string() + " --seed 10 --format json --out " + c.string()) == 0);
  CHECK(slurp(a / "criteria.json") == slurp(b / "criteria.json"));
  CHECK(slurp(a / "criteria.json") != slurp(c / "criteria.json"));
  const auto j = nlohmann::json::parse(slurp(a / "criteria.json"));
  REQUIRE(j.size() == 2);
  for (const auto& rec : j) {
    CHECK(rec.contains("criterion"));
    CHECK(rec.contains("value"));
    CHECK(rec["se"].get<double>() > 0.0);
    CHECK(rec["draws"].get<long>() >= 500);
    CHECK(rec.contains("seed"));
  }
}

TEST_CASE("criteria: --draws overrides the config") {
  const auto cfg = write_config("draws", std::string(kLinear) + "[criteria]\nnames = expected\n");
  const auto a = out_dir("draws");
  REQUIRE(run("criteria --config " + cfg.string() + " --draws 321 --format json --out " + a.string()) == 0);
  CHECK(nlohmann::json::parse(slurp(a / "criteria.json"))[0]["draws"] == 321);
}

TEST_CASE("config errors exit with code 2") {
  const auto missing = write_config("missing", "[problem]\nalt_mean = 1, 1\nalt_cov = 1,0;0,1\n"
                                               "[design]\npoints = 1\n");
  CHECK(run("criteria --config " + missing.string() + " --out " + out_dir("e1").string()) == 2);
  const auto unknown = write_config("unknown", std::string(kLinear) + "colour = blue\n");
  CHECK(run("criteria --config " + unknown.string() + " --out " + out_dir("e2").string()) == 2);
  CHECK(run("criteria --config /nonexistent.ini") == 2);
  CHECK(run("appendix-b --format xml --out " + out_dir("e3").string()) == 2);
  CHECK(run("no-such-command") == 2);
}

TEST_CASE("optimize: D criterion on simple linear regression splits half/half at the ends") {
  const auto cfg = write_config("optd", R"(
[problem]
null = 0, 0
alt_mean = 0.5, -0.5
alt_cov = 1, 0; 0, 1
[grid]
count = 21
[search]
criterion = d
n_points = 10
)");
  const auto a = out_dir("optd_a"), b = out_dir("optd_b");
  REQUIRE(run("optimize --config " + cfg.string() + " --out " + a.string()) == 0);
  REQUIRE(run("optimize --config " + cfg.string() + " --out " + b.string()) == 0);
  CHECK(slurp(a / "design.csv") == "point,replications\n-1,5\n1,5\n");
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "trace.csv").rfind("pass,candidate,value,se\n", 0) == 0);
}

TEST_CASE("optimize: empty grid exits 2") {
  const auto cfg = write_config("empty", "[problem]\nnull=0,0\nalt_mean=0,0\nalt_cov=1,0;0,1\n"
                                         "[grid]\ncount = 0\n");
  CHECK(run("optimize --config " + cfg.string() + " --out " + out_dir("empty").string()) == 2);
  const auto cfg2 = write_config("empty2", "[problem]\nnull=0,0\nalt_mean=0,0\nalt_cov=1,0;0,1\n"
                                           "[grid]\npoints =\n");
  CHECK(run("optimize --config " + cfg2.string() + " --out " + out_dir("empty2").string()) == 2);
}

TEST_CASE("simulate writes a dataset that criteria can read back") {
  const auto sim = write_config("sim", std::string(kLinear) + "[simulate]\nhypothesis = h0\n");
  const auto a = out_dir("sim");
  REQUIRE(run("simulate --config " + sim.string() + " --out " + a.string()) == 0);
  CHECK(slurp(a / "dataset.csv").rfind("row_index,point,response\n0,-1,", 0) == 0);
  const auto obs = write_config("obs", std::string(kLinear) + "[criteria]\nnames = observed\ndata = " +
                                           (a / "dataset.csv").string() + "\n");
  const auto b = out_dir("obs");
  REQUIRE(run("criteria --config " + obs.string() + " --out " + b.string()) == 0);
  CHECK(slurp(b / "criteria.csv").find("observed-TK,") != std::string::npos);
}

TEST_CASE("sequential: bad scenario exits 2, constrained flag fills the menu column") {
  const auto bad = write_config("seqbad", "[study]\nscenario = scenario-z\n");
  CHECK(run("sequential --config " + bad.string() + " --out " + out_dir("seqbad").string()) == 2);
  const auto small = "[study]\nbeta_draws = 2\ndatasets_per_beta = 2\ninner_draws = 40\n"
                     "procedures = TK, D\nconstrained = ";
  const auto c1 = write_config("seq1", std::string(small) + "true\n");
  const auto c0 = write_config("seq0", std::string(small) + "false\n");
  const auto a = out_dir("seq1"), b = out_dir("seq0");
  REQUIRE(run("sequential --config " + c1.string() + " --out " + a.string()) == 0);
  REQUIRE(run("sequential --config " + c0.string() + " --out " + b.string()) == 0);
  const auto with = slurp(a / "study.csv"), without = slurp(b / "study.csv");
  CHECK(with.find("TK,parabola,true,") != std::string::npos);
  CHECK(without.find("TK,parabola,false,") != std::string::npos);
  CHECK(without.find(",\n") != std::string::npos);  // empty menu share
}

TEST_CASE("theorem1: log evidence gives 0.5 and symmetrized-kl reports an error record") {
  const auto a = out_dir("t1");
  REQUIRE(run("theorem1 --draws 2000 --out " + a.string()) == 0);
  std::ifstream in(a / "theorem1.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "delta,numeric,analytic,abs_error,se");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string delta, numeric;
    std::getline(ss, delta, ',');
    std::getline(ss, numeric, ',');
    CHECK(std::stod(numeric) == doctest::Approx(0.5).epsilon(1e-6));
  }
  CHECK(rows == 3);

  const auto kl = write_config("kl", "[theorem1]\nevidence = symmetrized-kl\n");
  const auto b = out_dir("t1kl");
  CHECK(run("theorem1 --config " + kl.string() + " --draws 500 --out " + b.string()) == 1);
  const auto err = nlohmann::json::parse(slurp(b / "error.json"));
  CHECK(err["error"] == "degenerate-at-one");
  CHECK(err["command"] == "theorem1");
}

TEST_CASE("appendix-b: default constants give all flags, alpha = 1 zeroes t1, inputs echo") {
  const auto a = out_dir("ab");
  REQUIRE(run("appendix-b --out " + a.string()) == 0);
  auto kv = key_values(a / "appendix_b.csv");
  for (const char* f : {"bh1", "bh2", "bh3", "bh4", "bh5"}) CHECK(kv[f] == "true");

  const auto one = write_config("ab1", "[appendix_b]\nalpha = 1\nprior0 = 0.6\nprior1 = 0.4\n"
                                       "beta1 = 0.2\nbeta2 = 0.7\n");
  const auto b = out_dir("ab1");
  REQUIRE(run("appendix-b --config " + one.string() + " --out " + b.string()) == 0);
  kv = key_values(b / "appendix_b.csv");
  CHECK(std::stod(kv["t1.box_hill"]) == doctest::Approx(0.0));
  CHECK(std::stod(kv["t1.p_criterion"]) == doctest::Approx(0.0));
  CHECK(kv["prior0"] == "0.6");
  CHECK(kv["beta1"] == "0.2");
  CHECK(kv["beta2"] == "0.7");
}

TEST_CASE("lightcurve: zero stages, method subset and reproducibility") {
  const auto zero = write_config("lc0", "[lightcurve]\nn_stars = 10\nn_stages = 0\n");
  const auto a = out_dir("lc0");
  REQUIRE(run("lightcurve --config " + zero.string() + " --out " + a.string()) == 0);
  std::ifstream in(a / "experiment.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "stage,method,correct_count");
  while (std::getline(in, line)) CHECK(line.substr(line.size() - 2) == ",0");

  const auto sub = write_config("lcs", "[lightcurve]\nn_stars = 12\nn_stages = 2\n"
                                       "inner_draws = 100\nmethods = random, testinfo\n");
  const auto b = out_dir("lcs1"), c = out_dir("lcs2");
  REQUIRE(run("lightcurve --config " + sub.string() + " --seed 4 --out " + b.string()) == 0);
  REQUIRE(run("lightcurve --config " + sub.string() + " --seed 4 --out " + c.string()) == 0);
  const auto csv = slurp(b / "experiment.csv");
  CHECK(csv == slurp(c / "experiment.csv"));
  CHECK(csv.find(",oracle,") == std::string::npos);
  CHECK(csv.find(",boxhill,") == std::string::npos);
  CHECK(csv.find("0,random,") != std::string::npos);
  CHECK(csv.find("2,testinfo,") != std::string::npos);
  CHECK(slurp(b / "template0.csv").rfind("phase,mag\n", 0) == 0);
}
