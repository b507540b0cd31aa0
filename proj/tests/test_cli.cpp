#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(KNOPP_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("eval") {
  Run a = run("eval --alpha 0.5 --point rational:1/3");
  CHECK(a.code == 0);
  CHECK(contains(a.out, "1.138071"));

  Run b = run("eval --alpha 0.5 --point dyadic:1/2^1 --format json");
  REQUIRE(b.code == 0);
  auto j = nlohmann::json::parse(b.out);
  CHECK(j["F"]["lo"].get<double>() == 0.5);
  CHECK(j["F"]["hi"].get<double>() == 0.5);
}

TEST_CASE("input errors exit with 2") {
  CHECK(run("eval --point dyadic:3/2^1").code == 2);
  CHECK(run("eval --point nonsense").code == 2);
  CHECK(run("eval --alpha 1.5").code == 2);
  CHECK(run("exponents --kmin 8 --kmax 4").code == 2);
  CHECK(run("exponents --rtol 0.7").code == 2);
  CHECK(run("verify --suite nosuch").code == 2);
  CHECK(run("eval --out /nonexistent/dir/file.txt").code == 2);
  CHECK(run("nosuchcommand").code == 2);
}

TEST_CASE("classify") {
  CHECK(contains(run("classify --alpha 0.5 --point smax:3:2:1").out, "LocalMax"));
  CHECK(contains(run("classify --alpha 0.5 --point dyadic:5/2^4").out, "LocalMin"));
  CHECK(contains(run("classify --alpha 0.5 --point rule:r=2").out, "NotExtremum"));

  Run j = run("classify --alpha 0.5 --point smax:3:2:1 --format json");
  REQUIRE(j.code == 0);
  auto doc = nlohmann::json::parse(j.out);
  CHECK(doc["extremum"] == "LocalMax");
  CHECK(doc["membership"] == "MaximaSet");
}

TEST_CASE("exponents csv is byte-identical across runs") {
  const std::string args = "exponents --alpha 0.5 --point rational:1/7 --kmin 4 --kmax 8 --format csv";
  Run a = run(args);
  Run b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  std::istringstream in(a.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "side,k,r,meas_lo,meas_hi,ratio_lo,ratio_hi,flag");
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream f(line);
    std::string side, k, r, mlo, mhi, rlo, rhi, flag;
    std::getline(f, side, ',');
    std::getline(f, k, ',');
    std::getline(f, r, ',');
    std::getline(f, mlo, ',');
    std::getline(f, mhi, ',');
    std::getline(f, rlo, ',');
    std::getline(f, rhi, ',');
    std::getline(f, flag, ',');
    CHECK((side == "omega" || side == "omega_c"));
    CHECK(std::stod(mlo) <= std::stod(mhi));
    CHECK(std::stod(rlo) <= std::stod(rhi));
    CHECK((flag == "ok" || flag == "tolerance_unreachable"));
    ++rows;
  }
  CHECK(rows == 10);
}

TEST_CASE("json output carries the defaults header") {
  Run a = run("exponents --alpha 0.5 --point rational:1/7 --kmin 4 --kmax 8 --format json");
  REQUIRE(a.code == 0);
  auto doc = nlohmann::json::parse(a.out);
  REQUIRE(doc.contains("defaults"));
  CHECK(doc["defaults"]["rtol"].get<double>() == doctest::Approx(1e-3));
  CHECK(doc["defaults"]["p"].get<double>() == 2.0);
  CHECK(doc["defaults"]["seed"].get<int>() == 1);
}

TEST_CASE("out writes the same bytes as stdout") {
  const auto path = std::filesystem::temp_directory_path() / "knopp_cli_test.csv";
  const std::string args = "exponents --alpha 0.5 --point rational:1/7 --kmin 4 --kmax 6 --format csv";
  Run a = run(args);
  Run b = run(args + " --out " + path.string());
  REQUIRE(b.code == 0);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == a.out);
  std::filesystem::remove(path);
}

TEST_CASE("extrema-scan and boxdim") {
  Run s = run("extrema-scan --alpha 0.5 --depth 3 --format csv");
  CHECK(s.code == 0);
  CHECK(!s.out.empty());

  Run b = run("boxdim --alpha 0.5 --kmin 4 --kmax 12 --format json");
  REQUIRE(b.code == 0);
  auto doc = nlohmann::json::parse(b.out);
  CHECK(doc.contains("defaults"));
}

TEST_CASE("verify suite exit code") {
  Run v = run("verify --suite boxdim");
  CHECK(v.code == 0);
  CHECK(contains(v.out, "PASS"));
}
