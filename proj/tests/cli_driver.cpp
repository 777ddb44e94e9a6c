// Integration checks for the command-line tool: spawns the real binary and
// inspects exit codes and output. Path to the binary comes in as argv[1].

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "friable/additive.hpp"
#include "friable/smooth.hpp"

namespace {

int g_failures = 0;

#define REQUIRE(cond, msg)                                                    \
  do {                                                                        \
    if (!(cond)) {                                                            \
      std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << (msg)   \
                << "\n";                                                      \
      ++g_failures;                                                           \
    }                                                                         \
  } while (0)

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run(const std::string& cmd) {
  std::string full = cmd + " 2>&1";
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) {
    std::cerr << "popen failed for: " << full << "\n";
    std::exit(1);
  }
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, got);
  int status = pclose(pipe);
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return RunResult{code, out};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_driver <path-to-friable-binary>\n";
    return 1;
  }
  const std::string cli = std::string("\"") + argv[1] + "\"";

  // --- alpha ---
  {
    RunResult r = run(cli + " alpha --x 256 --y 2 --json");
    REQUIRE(r.exit_code == 0, "alpha (256,2) should succeed");
    auto j = nlohmann::json::parse(r.out);
    REQUIRE(std::fabs(j["alpha"].get<double>() - std::log2(9.0 / 8.0)) < 1e-12,
            "alpha (256,2) equals log2(9/8)");
    REQUIRE(j["envelope_ok"].get<bool>(), "weight envelope reported ok");
    REQUIRE(j["primes"].size() == 1, "one prime at y = 2");
    REQUIRE(j["primes"][0]["nu_max"].get<int>() == 8, "nu_2(256) = 8");
  }
  {
    RunResult r = run(cli + " alpha --x 2 --y 3");
    REQUIRE(r.exit_code == 2, "x < y is a usage error (exit 2), got " +
                                  std::to_string(r.exit_code));
  }
  {
    RunResult r = run(cli + " alpha --x 3 --y 2 --json");
    REQUIRE(r.exit_code == 0, "alpha (3,2) should succeed");
    auto j = nlohmann::json::parse(r.out);
    double expect = std::log2(1.0 + std::log(2.0) / std::log(3.0));
    REQUIRE(std::fabs(j["alpha"].get<double>() - expect) < 1e-12, "dim-1 alpha fixture");
    REQUIRE(j["h"].get<int>() == 1 && j["ubar"].get<double>() == 1.0, "dim-1 h and ubar");
  }
  {
    RunResult r = run(cli + " alpha --x 1000 --y 5");
    REQUIRE(r.exit_code == 0, "plain-text alpha run");
    REQUIRE(r.out.find("weight envelope: ok") != std::string::npos,
            "envelope status is printed");
  }
  {
    REQUIRE(run(cli + " alpha --x 100 --y 7 --tol 1e-8").exit_code == 0, "loose tol accepted");
    REQUIRE(run(cli + " alpha --x 100 --y 7 --tol 1e-20").exit_code == 2,
            "tol outside [1e-15, 1e-6] is a usage error");
  }

  // --- constant ---
  {
    RunResult biased = run(cli + " constant --x 3 --y 2 --variant biased --json");
    RunResult unbiased = run(cli + " constant --x 3 --y 2 --variant unbiased --json");
    REQUIRE(biased.exit_code == 0 && unbiased.exit_code == 0, "constant (3,2) runs");
    double cb = nlohmann::json::parse(biased.out)["constant"].get<double>();
    double cu = nlohmann::json::parse(unbiased.out)["constant"].get<double>();
    REQUIRE(std::fabs(cb - 1.7634239729393664) < 1e-10, "C(3,2) dim-1 value");
    REQUIRE(std::fabs(cu - 1.1079461271463068) < 1e-10, "C*(3,2) dim-1 value");
  }
  {
    // --x takes decimal integers; scientific notation belongs to grid specs
    RunResult r = run(cli + " constant --x 1e4 --y 7");
    REQUIRE(r.exit_code == 2, "non-integer --x is a usage error");
  }
  {
    RunResult a = run(cli + " constant --x 10000 --y 7 --path counting --json");
    RunResult b = run(cli + " constant --x 10000 --y 7 --path enumeration --json");
    REQUIRE(a.exit_code == 0 && b.exit_code == 0, "constant paths run");
    double ca = nlohmann::json::parse(a.out)["constant"].get<double>();
    double cb2 = nlohmann::json::parse(b.out)["constant"].get<double>();
    REQUIRE(std::fabs(ca - cb2) <= 1e-9 * std::fabs(ca), "paths agree to 1e-9");
  }
  {
    RunResult r = run(cli + " constant --x 10000 --y 7 --variant biased --emit-extremal "
                            "cli_driver_extremal.txt");
    REQUIRE(r.exit_code == 0, "emit-extremal run");
    auto space = std::make_shared<friable::IndexSpace>(friable::SmoothBound(10000, 7));
    friable::AdditiveFunction f =
        friable::parse_additive(slurp("cli_driver_extremal.txt"), space);
    double norm = 0.0;
    for (double c : f.coeffs()) norm += c * c;
    REQUIRE(norm > 0.0, "extremal fixture parses and is nonzero");
    std::remove("cli_driver_extremal.txt");
  }
  {
    RunResult r = run(cli + " constant --x 100 --y 7 --variant sideways");
    REQUIRE(r.exit_code == 2, "bad variant is a usage error");
  }

  // --- verify ---
  {
    RunResult r = run(cli + " verify --suite identities --grid \"(1e3,5)\"");
    REQUIRE(r.exit_code == 0, "identities suite passes:\n" + r.out);
    REQUIRE(r.out.find("[FAIL]") == std::string::npos, "no failing checks");
  }
  {
    RunResult r = run(cli + " verify --suite bounds --grid \"(1e3,5)\" --inject-wp-fault");
    REQUIRE(r.exit_code == 1, "fault injection makes the bounds suite fail");
    REQUIRE(r.out.find("[FAIL]") != std::string::npos &&
                r.out.find("envelope") != std::string::npos &&
                r.out.find("violated") != std::string::npos,
            "the envelope violation is named:\n" + r.out);
  }
  {
    RunResult a = run(cli + " verify --suite all --grid \"(1e3,5)\" --seed 7");
    RunResult b = run(cli + " verify --suite all --grid \"(1e3,5)\" --seed 7");
    REQUIRE(a.exit_code == 0, "verify all passes:\n" + a.out);
    REQUIRE(a.out == b.out, "fixed seed reproduces the report byte for byte");
  }

  // --- study ---
  {
    RunResult r = run(cli + " study --grid \"(1e3,5);(1e4,7)\" --out cli_driver_study.csv");
    REQUIRE(r.exit_code == 0, "study run");
    std::string csv = slurp("cli_driver_study.csv");
    std::istringstream lines(csv);
    std::string line;
    std::vector<std::string> all;
    while (std::getline(lines, line)) all.push_back(line);
    REQUIRE(all.size() == 3, "header plus one row per grid point");
    REQUIRE(all[0] == "x,y,h,u,ubar,alpha,psi,dim,C_biased,C_unbiased,lb_ratio,err_bound,"
                      "runtime_ms",
            "fixed CSV header");
    REQUIRE(all[1].rfind("1000,5,", 0) == 0, "first row is (1000,5)");
    std::remove("cli_driver_study.csv");
  }
  {
    RunResult serial =
        run(cli + " study --grid \"(1e3,5);(2000,7);(1024,3);(256,2)\" --stable-output");
    RunResult parallel = run(
        cli + " study --grid \"(1e3,5);(2000,7);(1024,3);(256,2)\" --stable-output --parallel 4");
    REQUIRE(serial.exit_code == 0 && parallel.exit_code == 0, "study runs");
    REQUIRE(serial.out == parallel.out, "parallel output identical to serial");
    RunResult again =
        run(cli + " study --grid \"(1e3,5);(2000,7);(1024,3);(256,2)\" --stable-output");
    REQUIRE(serial.out == again.out, "stable study output is byte-identical across runs");
  }
  {
    // JSON rows mirror the CSV fields one to one
    RunResult r = run(cli + " study --grid \"(1e3,5);(256,2)\" --stable-output --json");
    REQUIRE(r.exit_code == 0, "json study runs");
    auto arr = nlohmann::json::parse(r.out);
    REQUIRE(arr.is_array() && arr.size() == 2, "one JSON row per grid point");
    const char* keys[] = {"x",   "y",        "h",          "u",        "ubar",
                          "alpha", "psi",    "dim",        "C_biased", "C_unbiased",
                          "lb_ratio", "err_bound", "runtime_ms"};
    for (const char* k : keys)
      REQUIRE(arr[0].contains(k), std::string("study JSON carries field ") + k);
    REQUIRE(arr[0]["x"].get<std::int64_t>() == 1000 && arr[1]["x"].get<std::int64_t>() == 256,
            "rows in grid order");
  }
  {
    // the three-point trend grid: three rows, strictly decreasing C_unbiased
    RunResult r = run(cli + " study --grid \"(1e3,5);(1e5,13);(1e7,23)\" --stable-output");
    REQUIRE(r.exit_code == 0, "trend study runs");
    std::istringstream lines(r.out);
    std::string line;
    std::vector<double> c_unbiased;
    bool first = true;
    while (std::getline(lines, line)) {
      if (first) {
        first = false;
        continue;
      }
      std::istringstream cells(line);
      std::string cell;
      for (int col = 0; std::getline(cells, cell, ','); ++col)
        if (col == 9) c_unbiased.push_back(std::stod(cell));
    }
    REQUIRE(c_unbiased.size() == 3, "one row per grid point");
    REQUIRE(c_unbiased[0] > c_unbiased[1] && c_unbiased[1] > c_unbiased[2],
            "C_unbiased strictly decreasing along the trend grid");
  }
  {
    RunResult r = run(cli + " study --grid \"(oops)\"");
    REQUIRE(r.exit_code == 2, "malformed grid is a usage error");
    RunResult r2 = run(cli + " study");
    REQUIRE(r2.exit_code == 2, "missing --grid is a usage error");
    RunResult r3 = run(cli + " study --grid \"(30,30)\"");
    REQUIRE(r3.exit_code == 1, "spike failure at (30,30) is a computation error, got " +
                                   std::to_string(r3.exit_code));
  }

  // --- global usage errors ---
  {
    REQUIRE(run(cli + " nonsense").exit_code == 2, "unknown subcommand");
    REQUIRE(run(cli + " alpha --x 100").exit_code == 2, "missing required option");
    REQUIRE(run(cli + " --help").exit_code == 0, "help exits 0");
  }

  if (g_failures == 0) {
    std::cout << "cli_driver: all checks passed\n";
    return 0;
  }
  std::cerr << "cli_driver: " << g_failures << " failures\n";
  return 1;
}
