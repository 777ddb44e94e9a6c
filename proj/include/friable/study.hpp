#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "friable/forms.hpp"
#include "friable/numeric.hpp"
#include "friable/saddle.hpp"
#include "friable/tk.hpp"

namespace friable {

// Exact integer parser for grid coordinates: plain decimal ("1000"),
// scientific ("1e3", "2.5e3" when integral), or power form ("2^30").
inline std::int64_t parse_exact_integer(const std::string& s) {
  auto fail = [&]() -> std::int64_t {
    throw std::invalid_argument("not an exact integer: '" + s + "'");
  };
  if (s.empty()) return fail();

  if (auto caret = s.find('^'); caret != std::string::npos) {
    std::int64_t base = parse_exact_integer(s.substr(0, caret));
    std::int64_t exp = parse_exact_integer(s.substr(caret + 1));
    if (base < 2 || exp < 0 || exp > 62) return fail();
    std::int64_t v = 1;
    for (std::int64_t i = 0; i < exp; ++i) {
      if (v > (std::int64_t{1} << 62) / base) return fail();
      v *= base;
    }
    return v;
  }

  std::string digits;
  std::int64_t exponent10 = 0;
  std::size_t pos = 0;
  bool seen_point = false;
  for (; pos < s.size(); ++pos) {
    char c = s[pos];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_point) --exponent10;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c == 'e' || c == 'E') {
      break;
    } else {
      return fail();
    }
  }
  if (digits.empty()) return fail();
  if (pos < s.size()) {  // exponent part
    std::size_t e = pos + 1;
    bool neg = false;
    if (e < s.size() && (s[e] == '+' || s[e] == '-')) neg = s[e++] == '-';
    if (e >= s.size()) return fail();
    std::int64_t ev = 0;
    for (; e < s.size(); ++e) {
      if (s[e] < '0' || s[e] > '9') return fail();
      ev = ev * 10 + (s[e] - '0');
      if (ev > 100) return fail();
    }
    exponent10 += neg ? -ev : ev;
  }
  if (exponent10 < 0) return fail();

  std::int64_t v = 0;
  for (char c : digits) {
    if (v > ((std::int64_t{1} << 62) - 9) / 10) return fail();
    v = v * 10 + (c - '0');
  }
  for (std::int64_t i = 0; i < exponent10; ++i) {
    if (v > (std::int64_t{1} << 62) / 10) return fail();
    v *= 10;
  }
  return v;
}

// Grid mini-language: "(x,y);(x,y);...". Whitespace is ignored; a trailing
// separator is fine.
inline std::vector<std::pair<std::int64_t, std::int64_t>> parse_grid_spec(const std::string& spec) {
  std::string compact;
  for (char c : spec)
    if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);

  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  std::size_t pos = 0;
  while (pos < compact.size()) {
    if (compact[pos] == ';') {
      ++pos;
      continue;
    }
    if (compact[pos] != '(') throw std::invalid_argument("grid spec: expected '(' in " + spec);
    std::size_t comma = compact.find(',', pos);
    std::size_t close = compact.find(')', pos);
    if (comma == std::string::npos || close == std::string::npos || comma > close)
      throw std::invalid_argument("grid spec: malformed point in " + spec);
    out.emplace_back(parse_exact_integer(compact.substr(pos + 1, comma - pos - 1)),
                     parse_exact_integer(compact.substr(comma + 1, close - comma - 1)));
    pos = close + 1;
  }
  if (out.empty()) throw std::invalid_argument("grid spec: no points in " + spec);
  return out;
}

struct StudyRow {
  std::int64_t x = 0;
  std::int64_t y = 0;
  int h = 0;
  double u = 0.0;
  double ubar = 0.0;
  double alpha = 0.0;
  std::int64_t psi = 0;
  std::size_t dim = 0;
  double c_biased = 0.0;
  double c_unbiased = 0.0;
  double lb_ratio = 0.0;
  double err_bound = 0.0;  // y log y/(log x)^2 + (log y)/y
  std::int64_t runtime_ms = 0;
};

inline const char* study_csv_header() {
  return "x,y,h,u,ubar,alpha,psi,dim,C_biased,C_unbiased,lb_ratio,err_bound,runtime_ms";
}

inline std::string study_csv_row(const StudyRow& r) {
  std::string out;
  out += std::to_string(r.x);
  out += ',';
  out += std::to_string(r.y);
  out += ',';
  out += std::to_string(r.h);
  out += ',';
  out += format_double(r.u);
  out += ',';
  out += format_double(r.ubar);
  out += ',';
  out += format_double(r.alpha);
  out += ',';
  out += std::to_string(r.psi);
  out += ',';
  out += std::to_string(r.dim);
  out += ',';
  out += format_double(r.c_biased);
  out += ',';
  out += format_double(r.c_unbiased);
  out += ',';
  out += format_double(r.lb_ratio);
  out += ',';
  out += format_double(r.err_bound);
  out += ',';
  out += std::to_string(r.runtime_ms);
  return out;
}

inline StudyRow study_point(std::int64_t x, std::int64_t y, const TkOptions& opts = {}) {
  auto t0 = std::chrono::steady_clock::now();
  SmoothBound bound(x, y);
  SaddleContext ctx(bound, opts.alpha_tol);
  CountTables tables = build_count_tables(ctx);
  FormPair biased = assemble_forms(ctx, Variant::biased, opts.path, &tables);
  FormPair unbiased = assemble_forms(ctx, Variant::unbiased, opts.path, &tables);

  StudyRow row;
  row.x = x;
  row.y = y;
  row.h = ctx.h();
  row.u = ctx.u();
  row.ubar = ctx.ubar();
  row.alpha = ctx.alpha();
  row.psi = tables.psi_count;
  row.dim = ctx.space().dim();
  row.c_biased = tk_constant(biased, opts.eigen_tol).constant;
  row.c_unbiased = tk_constant(unbiased, opts.eigen_tol).constant;
  row.lb_ratio = spike_lower_bound(ctx, biased).ratio;
  double ly = std::log(static_cast<double>(y));
  row.err_bound = static_cast<double>(y) * ly / (ctx.log_x() * ctx.log_x()) +
                  ly / static_cast<double>(y);
  row.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return row;
}

// Runs the grid on a pool of n_threads workers; every worker owns its own
// counters and contexts, and rows come back in grid order regardless of the
// schedule.
inline std::vector<StudyRow> run_study(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& grid, int n_threads = 1,
    const TkOptions& opts = {}) {
  if (n_threads < 1) throw std::invalid_argument("run_study: need n_threads >= 1");
  std::vector<StudyRow> rows(grid.size());
  if (n_threads == 1 || grid.size() <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      rows[i] = study_point(grid[i].first, grid[i].second, opts);
    return rows;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= grid.size() || failed.load()) return;
        try {
          rows[i] = study_point(grid[i].first, grid[i].second, opts);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(error);
  return rows;
}

}  // namespace friable
