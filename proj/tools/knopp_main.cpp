// knopp: command-line front end for the Takagi-Knopp function and the local
// geometry of the region under its graph.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "knopp/error.hpp"
#include "knopp/extrema.hpp"
#include "knopp/geometry.hpp"
#include "knopp/verify.hpp"

using namespace knopp;
using nlohmann::ordered_json;

namespace {

enum Exit { kPass = 0, kFail = 1, kInput = 2, kPrecision = 3 };

struct Config {
  double alpha = 0.5;
  std::string point = "dyadic:1/2^1";
  std::size_t k_min = 6;
  std::size_t k_max = 20;
  double rel_tol = 1e-3;
  double p = 2;
  bool p_set = false;
  std::uint64_t seed = 1;
  std::string format = "table";
  std::string out;
  std::size_t depth = 4;      // extrema-scan
  std::size_t partial = 0;    // eval: F_n table up to n
  std::size_t k_sub = 256;    // exponents: deepest subsequence scale
  std::string suite = "all";  // verify
  bool alpha_set = false;
  bool rtol_set = false;
  bool verify = false;  // classify: empirical exponents
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ordered_json defaults_json(const Config& c) {
  return ordered_json{{"alpha", c.alpha},  {"point", c.point}, {"kmin", c.k_min},      {"kmax", c.k_max},
                      {"rtol", c.rel_tol}, {"p", c.p},         {"seed", c.seed},       {"depth", c.depth},
                      {"ksub", c.k_sub},   {"norm", "sup"},    {"ratio", "log(meas)/log(r) - 2"}};
}

ordered_json summary_json(const Summary& s) {
  if (!s.valid) return nullptr;
  return ordered_json{{"est", s.est}, {"lo", s.lo}, {"hi", s.hi}};
}

void validate(const Config& c) {
  if (!(c.alpha > 0 && c.alpha < 1)) throw OutOfDomain("alpha must lie in (0, 1)");
  if (!(c.rel_tol > 0 && c.rel_tol < 0.5)) throw OutOfDomain("rtol must lie in (0, 0.5)");
  if (c.k_min < 2) throw OutOfDomain("kmin must be at least 2");
  if (c.k_min >= c.k_max) throw OutOfDomain("kmin must be below kmax");
  if (!(c.p >= 1) || !std::isfinite(c.p)) throw OutOfDomain("p must be finite and at least 1");
}

// -- eval -------------------------------------------------------------------------

int cmd_eval(const Config& c, std::ostream& os) {
  const Alpha a(c.alpha);
  const DigitStream x = parse_point(c.point);
  const double eps = c.rtol_set ? c.rel_tol : 1e-15;
  const RealBound f = eval_F(x, a, eps);
  std::vector<std::pair<std::size_t, RealBound>> rows;
  for (std::size_t n = 0; n < c.partial; ++n)
    rows.emplace_back(n, partial_sum_value(x, n).evaluate(a.t_scale()));
  if (c.format == "json") {
    ordered_json j{{"defaults", defaults_json(c)},
                   {"point_spec", c.point},
                   {"alpha", c.alpha},
                   {"F", {{"lo", f.lower_d()}, {"hi", f.upper_d()}, {"mid", f.mid_d()}}}};
    if (!rows.empty()) {
      j["F_n"] = ordered_json::array();
      for (const auto& [n, v] : rows) j["F_n"].push_back({{"n", n}, {"lo", v.lower_d()}, {"hi", v.upper_d()}});
    }
    os << j.dump(2) << "\n";
  } else if (c.format == "csv") {
    os << "n,lo,hi\n";
    for (const auto& [n, v] : rows) os << n << "," << num(v.lower_d()) << "," << num(v.upper_d()) << "\n";
    os << "inf," << num(f.lower_d()) << "," << num(f.upper_d()) << "\n";
  } else {
    os << "F(" << c.point << ") at alpha " << c.alpha << "\n";
    os << "  in [" << num(f.lower_d()) << ", " << num(f.upper_d()) << "]\n";
    os << "  ~ " << fixed(f.mid_d(), 12) << "\n";
    for (const auto& [n, v] : rows) os << "  F_" << n << " = " << num(v.mid_d()) << "\n";
  }
  return kPass;
}

// -- classify ---------------------------------------------------------------------

struct Prediction {
  std::string omega_w, omega_s, comp_w, comp_s;
};

Prediction predict(const ExtremumReport& r, const RateSummary& dy, const RateSummary& mx, double alpha) {
  const std::string e = fixed(1 / alpha - 1);
  switch (r.kind) {
    case ExtremumKind::LocalMin:
    case ExtremumKind::GlobalMin: return {"0", "0", e, e};
    case ExtremumKind::LocalMax:
    case ExtremumKind::GlobalMax: return {e, e, "0", "0"};
    case ExtremumKind::NotExtremum: break;
  }
  if (r.unknown) return {"unknown", "unknown", "unknown", "unknown"};
  // Strong exponents reach 1/alpha - 1 when the matching rate exceeds 1/alpha.
  const auto strong = [&](const RateSummary& s) {
    return s.infinite || s.lo > 1 / alpha ? e : std::string("<= " + e);
  };
  return {"0", strong(mx), "0", strong(dy)};
}

// Rates are limsups: a rule-based point is scanned until its tail window
// holds a construction scale.
std::size_t rate_scan_depth(const DigitStream& x, RateKind kind) {
  std::size_t j_max = 64;
  if (x.kind() == DigitStream::Kind::Truncated) return std::min(j_max, x.depth().value_or(0));
  if (auto sched = x.schedule()) {
    const auto& pairs = kind == RateKind::Dyadic ? sched->dyadic : sched->maxima;
    for (const ScalePair& p : pairs) {
      if (p.start < j_max || p.start > 4096) continue;
      j_max = p.start * 3 / 2;
      break;
    }
  }
  return j_max;
}

int cmd_classify(const Config& c, std::ostream& os) {
  const Alpha a(c.alpha);
  const DigitStream x = parse_point(c.point);
  const MembershipResult m = classify_membership(x);
  const ExtremumReport r = classify_extremum(x, a);
  const std::size_t dy_max = rate_scan_depth(x, RateKind::Dyadic);
  const std::size_t mx_max = rate_scan_depth(x, RateKind::Maxima);
  const ApproxRateTrace dy = rate_trace(x, RateKind::Dyadic, dy_max, static_cast<mpfr_prec_t>(2 * dy_max + 128));
  const ApproxRateTrace mx = rate_trace(x, RateKind::Maxima, mx_max, static_cast<mpfr_prec_t>(2 * mx_max + 128));
  const Prediction pr = predict(r, dy.limsup, mx.limsup, c.alpha);

  std::optional<std::pair<ExponentTrace, ExponentTrace>> emp;
  if (c.verify) emp = exponent_traces(ProbePoint{x, std::nullopt, c.point}, a, c.k_min, c.k_max, c.rel_tol);

  auto rate_json = [](const RateSummary& s) {
    return ordered_json{{"est", s.estimate}, {"lo", s.lo}, {"hi", s.hi}, {"window", s.window}, {"infinite", s.infinite}};
  };
  if (c.format == "json") {
    ordered_json j{{"defaults", defaults_json(c)},
                   {"point_spec", c.point},
                   {"alpha", c.alpha},
                   {"membership", to_string(m.kind)},
                   {"extremum", to_string(r.kind)},
                   {"membership_unknown", r.unknown},
                   {"F", {{"lo", r.value.lower_d()}, {"hi", r.value.upper_d()}}},
                   {"rates", {{"dyadic", rate_json(dy.limsup)}, {"maxima", rate_json(mx.limsup)}}},
                   {"predicted",
                    {{"omega", {{"E_w", pr.omega_w}, {"E_s", pr.omega_s}}},
                     {"omega_c", {{"E_w", pr.comp_w}, {"E_s", pr.comp_s}}}}}};
    if (emp) {
      j["empirical"] = {
          {"omega", {{"E_w", summary_json(emp->first.weak)}, {"E_s", summary_json(emp->first.strong)}}},
          {"omega_c", {{"E_w", summary_json(emp->second.weak)}, {"E_s", summary_json(emp->second.strong)}}},
          {"k_range", {c.k_min, c.k_max}}};
    }
    os << j.dump(2) << "\n";
    return kPass;
  }
  os << c.point << " at alpha " << c.alpha << "\n";
  os << "  membership  " << to_string(m.kind) << (m.kind == Membership::Unknown ? " (depth " + std::to_string(m.depth) + ")" : "")
     << "\n";
  os << "  extremum    " << to_string(r.kind) << (r.unknown ? " (membership unknown)" : "") << "\n";
  if (!r.locations.empty()) {
    os << "  locations  ";
    for (const auto& q : r.locations) os << " " << q.get_str();
    os << "\n";
  }
  os << "  F           [" << num(r.value.lower_d()) << ", " << num(r.value.upper_d()) << "]\n";
  os << "  rate r(x)   " << fixed(dy.limsup.estimate) << (dy.limsup.infinite ? " (exact hit)" : "") << " over j <= "
     << dy_max << "\n";
  os << "  rate s(x)   " << fixed(mx.limsup.estimate) << (mx.limsup.infinite ? " (exact hit)" : "") << " over j <= "
     << mx_max << "\n";
  os << "  predicted   E_w(omega) " << pr.omega_w << ", E_s(omega) " << pr.omega_s << ", E_w(omega_c) " << pr.comp_w
     << ", E_s(omega_c) " << pr.comp_s << "\n";
  if (emp) {
    auto txt = [](const Summary& s) { return s.valid ? fixed(s.est) : std::string("n/a"); };
    os << "  empirical   E_w(omega) " << txt(emp->first.weak) << ", E_s(omega) " << txt(emp->first.strong)
       << ", E_w(omega_c) " << txt(emp->second.weak) << ", E_s(omega_c) " << txt(emp->second.strong) << " (k "
       << c.k_min << ".." << c.k_max << ")\n";
  }
  return kPass;
}

// -- exponents --------------------------------------------------------------------

bool any_flagged(const ExponentTrace& t) {
  for (const auto& e : t.entries)
    if (e.flagged()) return true;
  return false;
}

ordered_json trace_json(const Config& c, const ExponentTrace& t, const char* kind) {
  ordered_json j{{"point_spec", c.point},
                 {"alpha", c.alpha},
                 {"side", to_string(t.side)},
                 {"E_w", summary_json(t.weak)},
                 {"E_s", summary_json(t.strong)},
                 {"window", t.window},
                 {"k_range", {t.k_min, t.k_max}},
                 {"radii", kind}};
  const Summary reg = regression_exponent(t);
  j["regression"] = summary_json(reg);
  return j;
}

void table_rows(std::ostream& os, const ExponentTrace& t, const char* kind) {
  os << to_string(t.side) << " (" << kind << ")\n";
  os << "    k   meas_lo        meas_hi        ratio_lo  ratio_hi  flag\n";
  for (const auto& e : t.entries) {
    char line[160];
    std::snprintf(line, sizeof line, "  %3zu   %.6e   %.6e   %8.4f  %8.4f  %s\n", e.k, e.measure.lower, e.measure.upper,
                  e.ratio_lo, e.ratio_hi, to_string(e.measure.flag).c_str());
    os << line;
  }
  auto txt = [](const Summary& s) {
    return s.valid ? fixed(s.est) + " [" + fixed(s.lo) + ", " + fixed(s.hi) + "]" : std::string("n/a");
  };
  os << "  E_w " << txt(t.weak) << "  E_s " << txt(t.strong) << "  window " << t.window << "\n";
}

int cmd_exponents(const Config& c, std::ostream& os) {
  const Alpha a(c.alpha);
  const ProbePoint x0{parse_point(c.point), std::nullopt, c.point};
  auto [om, co] = exponent_traces(x0, a, c.k_min, c.k_max, c.rel_tol);
  std::vector<ExponentTrace> subs;
  if (x0.x.kind() == DigitStream::Kind::RuleBased) {
    for (Side s : {Side::Omega, Side::OmegaComplement}) {
      const auto ks = strong_scales(x0.x, s, a, c.k_sub);
      if (!ks.empty()) subs.push_back(exponent_trace_on_subsequence(x0, s, a, ks, c.rel_tol));
    }
  }
  std::optional<PExponent> pe;
  if (c.p_set) pe = p_exponent_direct(x0, c.p, a, c.k_min, c.k_max, c.rel_tol);

  if (c.format == "csv") {
    write_csv_header(os);
    write_csv_rows(os, om);
    write_csv_rows(os, co);
    for (const auto& s : subs) write_csv_rows(os, s);
  } else if (c.format == "json") {
    ordered_json j{{"defaults", defaults_json(c)}, {"results", ordered_json::array()}};
    j["results"].push_back(trace_json(c, om, "dense"));
    j["results"].push_back(trace_json(c, co, "dense"));
    for (const auto& s : subs) {
      ordered_json sj = trace_json(c, s, "subsequence");
      std::vector<std::size_t> ks;
      for (const auto& e : s.entries) ks.push_back(e.k);
      sj["scales"] = ks;
      j["results"].push_back(sj);
    }
    if (pe) j["p_exponent"] = {{"p", pe->p}, {"u", summary_json(pe->u)}, {"window", pe->window}};
    os << j.dump(2) << "\n";
  } else {
    os << c.point << " at alpha " << c.alpha << ", k " << c.k_min << ".." << c.k_max << ", rtol " << c.rel_tol << "\n";
    table_rows(os, om, "dense");
    table_rows(os, co, "dense");
    for (const auto& s : subs) table_rows(os, s, "construction scales");
    if (pe && pe->u.valid) os << "p-exponent p=" << pe->p << ": u " << fixed(pe->u.est) << ", p u " << fixed(pe->p * pe->u.est) << "\n";
  }
  bool flagged = any_flagged(om) || any_flagged(co);
  for (const auto& s : subs) flagged = flagged || any_flagged(s);
  return flagged ? kPrecision : kPass;
}

// -- extrema-scan -----------------------------------------------------------------

int cmd_extrema_scan(const Config& c, std::ostream& os) {
  if (c.depth > 16) throw OutOfDomain("extrema-scan depth is limited to 16");
  const Alpha a(c.alpha);
  ordered_json rows = ordered_json::array();
  if (c.format == "csv") os << "N,k,left,right,min_x,min_F,max_F,argmax\n";
  if (c.format == "table") os << "   N      k  left         right        min_x        min_F        max_F        argmax\n";
  for (std::size_t N = 0; N <= c.depth; ++N) {
    for (long k = 0; k < (1L << N); ++k) {
      const DyadicInterval I(k, N);
      const IntervalMin mn = min_on_interval(I, a);
      const double min_F = mn.value.evaluate(a.t_scale()).mid_d();
      const double max_F = max_on_interval(I, a).mid_d();
      std::string arg;
      for (const auto& q : argmax_on_interval(I, a)) arg += (arg.empty() ? "" : " ") + q.get_str();
      if (c.format == "json") {
        rows.push_back({{"N", N},
                        {"k", k},
                        {"left", I.left().get_str()},
                        {"right", I.right().get_str()},
                        {"min_x", mn.location.get_str()},
                        {"min_F", min_F},
                        {"max_F", max_F},
                        {"argmax", arg}});
      } else if (c.format == "csv") {
        os << N << "," << k << "," << I.left().get_str() << "," << I.right().get_str() << "," << mn.location.get_str()
           << "," << num(min_F) << "," << num(max_F) << "," << arg << "\n";
      } else {
        char line[200];
        std::snprintf(line, sizeof line, "  %2zu  %5ld  %-11s  %-11s  %-11s  %.9f  %.9f  %s\n", N, k,
                      I.left().get_str().c_str(), I.right().get_str().c_str(), mn.location.get_str().c_str(), min_F,
                      max_F, arg.c_str());
        os << line;
      }
    }
  }
  if (c.format == "json") os << ordered_json{{"defaults", defaults_json(c)}, {"intervals", rows}}.dump(2) << "\n";
  return kPass;
}

// -- boxdim -----------------------------------------------------------------------

int cmd_boxdim(const Config& c, std::ostream& os) {
  const Alpha a(c.alpha);
  const BoxDimension b = box_dimension(a, c.k_min, c.k_max);
  if (c.format == "json") {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < b.ks.size(); ++i)
      rows.push_back({{"k", b.ks[i]}, {"count_lo", b.count_lo[i]}, {"count_hi", b.count_hi[i]}});
    os << ordered_json{{"defaults", defaults_json(c)},
                       {"alpha", c.alpha},
                       {"k_range", {c.k_min, c.k_max}},
                       {"slope", summary_json(b.slope)},
                       {"expected", 2 - c.alpha},
                       {"counts", rows}}
              .dump(2)
       << "\n";
  } else if (c.format == "csv") {
    os << "k,count_lo,count_hi\n";
    for (std::size_t i = 0; i < b.ks.size(); ++i) os << b.ks[i] << "," << num(b.count_lo[i]) << "," << num(b.count_hi[i]) << "\n";
  } else {
    for (std::size_t i = 0; i < b.ks.size(); ++i)
      os << "  k=" << b.ks[i] << "  N in [" << num(b.count_lo[i]) << ", " << num(b.count_hi[i]) << "]\n";
    os << "slope " << fixed(b.slope.est) << " [" << fixed(b.slope.lo) << ", " << fixed(b.slope.hi) << "], 2 - alpha = "
       << fixed(2 - c.alpha) << "\n";
  }
  return kPass;
}

// -- verify -----------------------------------------------------------------------

int cmd_verify(const Config& c, std::ostream& os) {
  verify::Options o;
  if (c.alpha_set) o.alpha = c.alpha;
  o.rel_tol = c.rel_tol;
  o.seed = c.seed;
  o.on_check = [](const verify::Check& ch) {
    std::cerr << (ch.pass ? "  ok    " : "  FAIL  ") << ch.name << ": " << ch.detail << std::endl;
  };
  bool all = true;
  ordered_json results = ordered_json::array();
  for (int id : verify::suite_criteria(c.suite)) {
    const verify::CriterionResult r = verify::run_criterion(id, o);
    all = all && r.pass();
    if (c.format == "json") {
      ordered_json checks = ordered_json::array();
      for (const auto& ch : r.checks) checks.push_back({{"name", ch.name}, {"pass", ch.pass}, {"detail", ch.detail}});
      results.push_back({{"criterion", r.id}, {"title", r.title}, {"pass", r.pass()}, {"checks", checks}});
    } else if (c.format == "csv") {
      for (const auto& ch : r.checks) os << r.id << ",\"" << ch.name << "\"," << (ch.pass ? "pass" : "fail") << "\n";
    } else {
      std::size_t ok = 0;
      for (const auto& ch : r.checks) ok += ch.pass;
      os << "criterion " << r.id << ": " << (r.pass() ? "PASS" : "FAIL") << "  " << r.title << " (" << ok << "/"
         << r.checks.size() << " checks)\n";
    }
  }
  if (c.format == "json") os << ordered_json{{"defaults", defaults_json(c)}, {"suite", c.suite}, {"criteria", results}}.dump(2) << "\n";
  return all ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Takagi-Knopp function: evaluation, extrema and local geometry of the region under the graph"};
  app.require_subcommand(1);
  Config c;

  auto common = [&](CLI::App* s) {
    s->add_option("--alpha", c.alpha, "exponent alpha in (0, 1)")->capture_default_str();
    s->add_option("--point", c.point, "point spec: dyadic:K/2^N, rational:P/Q, smax:N:K:v, rule:r=U[,s=S], bits:0.b1b2..")
        ->capture_default_str();
    s->add_option("--kmin", c.k_min, "smallest radius exponent")->capture_default_str();
    s->add_option("--kmax", c.k_max, "largest radius exponent")->capture_default_str();
    s->add_option("--rtol", c.rel_tol, "relative tolerance of measure brackets")->capture_default_str();
    s->add_option("--p", c.p, "p-exponent order (p >= 1)")->capture_default_str();
    s->add_option("--seed", c.seed, "random seed")->capture_default_str();
    s->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json", "table"}))->capture_default_str();
    s->add_option("--out", c.out, "write output to this file");
  };

  CLI::App* eval = app.add_subcommand("eval", "bracket F(x)");
  common(eval);
  eval->add_option("--partial", c.partial, "also print F_n for n < this")->capture_default_str();
  CLI::App* classify = app.add_subcommand("classify", "membership, extremum type, rates and predicted exponents");
  common(classify);
  classify->add_flag("--verify", c.verify, "also estimate the exponents");
  CLI::App* exponents = app.add_subcommand("exponents", "ratio traces and window exponents on both sides");
  common(exponents);
  exponents->add_option("--ksub", c.k_sub, "deepest construction scale for rule-based points")->capture_default_str();
  CLI::App* scan = app.add_subcommand("extrema-scan", "extrema of F on all dyadic intervals to a depth");
  common(scan);
  scan->add_option("--depth", c.depth, "deepest dyadic level")->capture_default_str();
  CLI::App* boxdim = app.add_subcommand("boxdim", "box-counting dimension of the graph");
  common(boxdim);
  CLI::App* ver = app.add_subcommand("verify", "run an acceptance suite");
  common(ver);
  ver->add_option("--suite", c.suite, "suite name")
      ->check(CLI::IsMember(verify::suite_names()))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kInput;
  }
  for (CLI::App* s : {eval, classify, exponents, scan, boxdim, ver}) {
    if (!s->parsed()) continue;
    c.alpha_set = s->count("--alpha") > 0;
    c.rtol_set = s->count("--rtol") > 0;
    c.p_set = s->count("--p") > 0;
  }
  if (boxdim->parsed()) {
    if (boxdim->count("--kmin") == 0) c.k_min = 4;
    if (boxdim->count("--kmax") == 0) c.k_max = 16;
  }

  std::ofstream file;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) {
      std::cerr << "error: cannot open " << c.out << "\n";
      return kInput;
    }
  }
  std::ostream& os = c.out.empty() ? std::cout : file;
  try {
    validate(c);
    if (eval->parsed()) return cmd_eval(c, os);
    if (classify->parsed()) return cmd_classify(c, os);
    if (exponents->parsed()) return cmd_exponents(c, os);
    if (scan->parsed()) return cmd_extrema_scan(c, os);
    if (boxdim->parsed()) return cmd_boxdim(c, os);
    if (ver->parsed()) return cmd_verify(c, os);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const OutOfDomain& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const InvalidTarget& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const DepthExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPrecision;
  } catch (const PrecisionUnreachable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPrecision;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kInput;
}
