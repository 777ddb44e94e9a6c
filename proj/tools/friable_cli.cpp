// Command-line front end: single-point computations (alpha, constant),
// verification suites (verify), and grid studies with CSV/JSON output
// (study).
//
// Exit codes: 0 success / all checks pass, 1 computation failure, 2 usage
// error. The Buchstab memo cap honors the FRIABLE_MEMO_CAP environment
// variable.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "friable/friable.hpp"
#include "verify_suites.hpp"

namespace {

using friable::format_double;
using json = nlohmann::ordered_json;

struct AlphaOptions {
  std::int64_t x = 0;
  std::int64_t y = 0;
  double tol = 1e-13;
  bool as_json = false;
};

int run_alpha(const AlphaOptions& opt) {
  friable::SmoothBound bound(opt.x, opt.y);
  friable::SaddleContext ctx(bound, opt.tol);
  auto violations = ctx.weight_envelope_violations();

  if (opt.as_json) {
    json out;
    out["x"] = opt.x;
    out["y"] = opt.y;
    out["alpha"] = ctx.alpha();
    out["sigma2"] = ctx.sigma2();
    out["h"] = ctx.h();
    out["u"] = ctx.u();
    out["ubar"] = ctx.ubar();
    out["envelope_ok"] = violations.empty();
    json primes = json::array();
    for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
      json row;
      row["p"] = ctx.prime(i);
      row["nu_max"] = ctx.max_nu(i);
      row["g"] = ctx.g(i);
      row["w"] = ctx.w(i);
      primes.push_back(row);
    }
    out["primes"] = primes;
    std::cout << out.dump(2) << '\n';
    return 0;
  }

  std::cout << "x = " << opt.x << "  y = " << opt.y << '\n';
  std::cout << "alpha  = " << format_double(ctx.alpha()) << '\n';
  std::cout << "sigma2 = " << format_double(ctx.sigma2()) << '\n';
  std::cout << "h = " << ctx.h() << "  u = " << format_double(ctx.u())
            << "  ubar = " << format_double(ctx.ubar()) << '\n';
  std::cout << "p nu_max g_p w_p" << '\n';
  for (std::size_t i = 0; i < ctx.prime_count(); ++i)
    std::cout << ctx.prime(i) << ' ' << ctx.max_nu(i) << ' ' << format_double(ctx.g(i)) << ' '
              << format_double(ctx.w(i)) << '\n';
  if (violations.empty()) {
    std::cout << "weight envelope: ok" << '\n';
  } else {
    for (const auto& v : violations) std::cout << "weight envelope: " << v << '\n';
    return 1;
  }
  return 0;
}

struct ConstantOptions {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::string variant = "unbiased";
  std::string path = "counting";
  std::string emit_extremal;
  double tol = 1e-13;
  bool as_json = false;
};

int run_constant(const ConstantOptions& opt) {
  friable::SmoothBound bound(opt.x, opt.y);
  friable::Variant variant =
      opt.variant == "biased" ? friable::Variant::biased : friable::Variant::unbiased;
  friable::AssemblyPath path = opt.path == "enumeration" ? friable::AssemblyPath::enumeration
                                                         : friable::AssemblyPath::counting;

  friable::SaddleContext ctx(bound, opt.tol);
  friable::FormPair forms = friable::assemble_forms(ctx, variant, path);
  friable::TkResult result = friable::tk_constant(forms);
  std::int64_t psi_count = friable::psi(bound);

  if (!opt.emit_extremal.empty()) {
    std::ofstream out(opt.emit_extremal);
    if (!out) throw std::runtime_error("cannot open " + opt.emit_extremal);
    friable::write_additive(out, result.extremal);
  }

  if (opt.as_json) {
    json out;
    out["x"] = opt.x;
    out["y"] = opt.y;
    out["variant"] = opt.variant;
    out["path"] = opt.path;
    out["alpha"] = ctx.alpha();
    out["psi"] = psi_count;
    out["dim"] = ctx.space().dim();
    out["constant"] = result.constant;
    out["iterations"] = result.iterations;
    out["residual"] = result.residual;
    std::cout << out.dump(2) << '\n';
    return 0;
  }

  std::cout << "x = " << opt.x << "  y = " << opt.y << "  variant = " << opt.variant
            << "  path = " << opt.path << '\n';
  std::cout << "alpha = " << format_double(ctx.alpha()) << "  psi = " << psi_count
            << "  dim = " << ctx.space().dim() << '\n';
  std::cout << (variant == friable::Variant::biased ? "C  = " : "C* = ")
            << format_double(result.constant) << '\n';
  std::cout << "jacobi sweeps = " << result.iterations
            << "  eigen residual = " << format_double(result.residual) << '\n';
  if (!opt.emit_extremal.empty())
    std::cout << "extremal function written to " << opt.emit_extremal << '\n';
  return 0;
}

struct VerifyOptions {
  std::string suite = "all";
  std::string grid = "(1e3,5);(1e4,7)";
  std::uint64_t seed = 42;
  bool inject_wp_fault = false;
};

int run_verify(const VerifyOptions& opt) {
  friable::verify::VerifyConfig cfg;
  cfg.grid = friable::parse_grid_spec(opt.grid);
  cfg.seed = opt.seed;
  cfg.inject_wp_fault = opt.inject_wp_fault;

  friable::verify::Report rep;
  auto merge = [&rep](const friable::verify::Report& other) {
    rep.checks.insert(rep.checks.end(), other.checks.begin(), other.checks.end());
    rep.info.insert(rep.info.end(), other.info.begin(), other.info.end());
  };

  if (opt.suite == "identities" || opt.suite == "all") merge(friable::verify::run_identities(cfg));
  if (opt.suite == "bounds" || opt.suite == "all") merge(friable::verify::run_bounds(cfg));
  if (opt.suite == "sampling" || opt.suite == "all") merge(friable::verify::run_sampling(cfg));
  if (opt.suite == "all") friable::verify::run_diagnostics(cfg, rep);

  int failed = 0;
  for (const auto& c : rep.checks) {
    std::cout << (c.pass ? "[ok]   " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ')';
    std::cout << '\n';
    if (!c.pass) ++failed;
  }
  for (const auto& line : rep.info) std::cout << "[info] " << line << '\n';
  std::cout << rep.checks.size() << " checks, " << failed << " failures" << '\n';
  return failed == 0 ? 0 : 1;
}

struct StudyOptions {
  std::string grid;
  std::string out_file;
  int parallel = 1;
  std::string path = "counting";
  double tol = 1e-13;
  bool stable_output = false;
  bool as_json = false;
};

int run_study_cmd(const StudyOptions& opt) {
  auto grid = friable::parse_grid_spec(opt.grid);
  friable::TkOptions tk_opts;
  tk_opts.alpha_tol = opt.tol;
  tk_opts.path = opt.path == "enumeration" ? friable::AssemblyPath::enumeration
                                           : friable::AssemblyPath::counting;
  std::vector<friable::StudyRow> rows = friable::run_study(grid, opt.parallel, tk_opts);
  if (opt.stable_output)
    for (auto& r : rows) r.runtime_ms = 0;

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!opt.out_file.empty()) {
    file.open(opt.out_file);
    if (!file) throw std::runtime_error("cannot open " + opt.out_file);
    os = &file;
  }

  if (opt.as_json) {
    json arr = json::array();
    for (const auto& r : rows) {
      json row;
      row["x"] = r.x;
      row["y"] = r.y;
      row["h"] = r.h;
      row["u"] = r.u;
      row["ubar"] = r.ubar;
      row["alpha"] = r.alpha;
      row["psi"] = r.psi;
      row["dim"] = r.dim;
      row["C_biased"] = r.c_biased;
      row["C_unbiased"] = r.c_unbiased;
      row["lb_ratio"] = r.lb_ratio;
      row["err_bound"] = r.err_bound;
      row["runtime_ms"] = r.runtime_ms;
      arr.push_back(row);
    }
    *os << arr.dump(2) << '\n';
    return 0;
  }

  *os << friable::study_csv_header() << '\n';
  for (const auto& r : rows) *os << friable::study_csv_row(r) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"friable Turan-Kubilius toolkit: saddle points, smooth counts, "
               "variance forms and their largest generalized eigenvalues"};
  app.require_subcommand(1);

  AlphaOptions alpha_opt;
  CLI::App* alpha_cmd = app.add_subcommand("alpha", "solve the saddle equation at one (x, y)");
  alpha_cmd->add_option("--x", alpha_opt.x, "upper bound x")->required();
  alpha_cmd->add_option("--y", alpha_opt.y, "smoothness bound y")->required();
  alpha_cmd->add_option("--tol", alpha_opt.tol, "relative residual tolerance");
  alpha_cmd->add_flag("--json", alpha_opt.as_json, "machine-readable output");

  ConstantOptions const_opt;
  CLI::App* const_cmd =
      app.add_subcommand("constant", "compute C(x,y) or C*(x,y) and its extremal function");
  const_cmd->add_option("--x", const_opt.x, "upper bound x")->required();
  const_cmd->add_option("--y", const_opt.y, "smoothness bound y")->required();
  const_cmd->add_option("--variant", const_opt.variant, "biased | unbiased")
      ->check(CLI::IsMember({"biased", "unbiased"}));
  const_cmd->add_option("--path", const_opt.path, "enumeration | counting")
      ->check(CLI::IsMember({"enumeration", "counting"}));
  const_cmd->add_option("--emit-extremal", const_opt.emit_extremal,
                        "write the extremal function as 'p nu value' lines");
  const_cmd->add_option("--tol", const_opt.tol, "saddle tolerance");
  const_cmd->add_flag("--json", const_opt.as_json, "machine-readable output");

  VerifyOptions verify_opt;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the verification suites");
  verify_cmd->add_option("--suite", verify_opt.suite, "identities | bounds | sampling | all")
      ->check(CLI::IsMember({"identities", "bounds", "sampling", "all"}));
  verify_cmd->add_option("--grid", verify_opt.grid, "grid spec \"(x,y);(x,y);...\"");
  verify_cmd->add_option("--seed", verify_opt.seed, "seed for the random fixtures");
  verify_cmd->add_flag("--inject-wp-fault", verify_opt.inject_wp_fault)->group("");  // test hook

  StudyOptions study_opt;
  CLI::App* study_cmd = app.add_subcommand("study", "compute a StudyRow per grid point");
  study_cmd->add_option("--grid", study_opt.grid, "grid spec \"(x,y);(x,y);...\"")->required();
  study_cmd->add_option("--out", study_opt.out_file, "CSV output file (default stdout)");
  study_cmd->add_option("--parallel", study_opt.parallel, "worker pool size")
      ->check(CLI::PositiveNumber);
  study_cmd->add_option("--path", study_opt.path, "enumeration | counting")
      ->check(CLI::IsMember({"enumeration", "counting"}));
  study_cmd->add_option("--tol", study_opt.tol, "saddle tolerance");
  study_cmd->add_flag("--stable-output", study_opt.stable_output,
                      "zero the runtime_ms column for byte-stable comparisons");
  study_cmd->add_flag("--json", study_opt.as_json, "JSON rows mirroring the CSV fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(alpha_cmd)) return run_alpha(alpha_opt);
    if (app.got_subcommand(const_cmd)) return run_constant(const_opt);
    if (app.got_subcommand(verify_cmd)) return run_verify(verify_opt);
    if (app.got_subcommand(study_cmd)) return run_study_cmd(study_opt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
