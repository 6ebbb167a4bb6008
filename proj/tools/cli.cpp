#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mislab/asymptotics.hpp"
#include "mislab/exact_engine.hpp"
#include "mislab/graph.hpp"
#include "mislab/report.hpp"
#include "mislab/rng.hpp"
#include "mislab/search_cost.hpp"
#include "mislab/stats.hpp"

namespace mislab::cli {

namespace {

struct InvariantFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rows of strings with a `#` header; rendered as CSV or as a JSON object.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out, const ReportHeader& header, const std::string& format) const {
    if (format == "json") {
      nlohmann::ordered_json j;
      nlohmann::ordered_json cfg;
      for (const auto& [k, v] : header.entries()) cfg[k] = v;
      j["config"] = cfg;
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& r : rows) {
        nlohmann::ordered_json o;
        for (std::size_t i = 0; i < columns.size(); ++i) o[columns[i]] = i < r.size() ? r[i] : "";
        arr.push_back(std::move(o));
      }
      j["rows"] = arr;
      out << j.dump(2) << '\n';
      return;
    }
    header.write(out);
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    }
  }
};

std::string dec(const Real& x, std::size_t digits = 20) { return x.to_string(digits); }
std::string dec(const Rational& x, std::size_t digits = 20) { return Real(x, 128).to_string(digits); }
std::string yes_no(bool b) { return b ? "true" : "false"; }

// Shared flags of every subcommand.
struct Output {
  std::string path;
  std::string format = "csv";
};

void add_output(CLI::App* sub, Output& o) {
  sub->add_option("--out", o.path, "Write the report to this file instead of stdout");
  sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
}

// Opens --out if given, otherwise passes through the default stream.
class Sink {
 public:
  Sink(const Output& o, std::ostream& fallback) {
    if (!o.path.empty()) {
      file_ = std::make_unique<std::ofstream>(o.path, std::ios::binary);
      if (!*file_) throw UsageError("cannot open output file " + o.path);
    }
    stream_ = file_ ? file_.get() : &fallback;
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::vector<std::size_t> grid_or_single(const std::string& grid, std::optional<std::size_t> single,
                                        const std::string& fallback) {
  if (!grid.empty()) return parse_grid(grid);
  if (single) return {*single};
  return parse_grid(fallback);
}

unsigned gf_bits(unsigned bits, double x_max) { return std::max(bits, required_precision(x_max) + 64); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact, asymptotic and Monte Carlo analysis of exhaustive independent-set search cost on G(n,p)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kEngineVersion);

  std::function<int()> action;

  // --- exact-mean ----------------------------------------------------------
  struct {
    std::string p, grid, mode = "exact";
    std::optional<std::size_t> n;
    unsigned bits = 256;
    Output o;
  } em;
  {
    auto* s = app.add_subcommand("exact-mean", "Mean search cost mu_n by the binomial recurrence");
    s->add_option("--p", em.p, "Edge probability num/den")->required();
    s->add_option("--n", em.n, "Single size");
    s->add_option("--n-grid", em.grid, "Grid a:b:xk, a:b:+k or a,b,c");
    s->add_option("--mode", em.mode)->check(CLI::IsMember({"exact", "real"}));
    s->add_option("--bits", em.bits, "Working precision for real mode");
    add_output(s, em.o);
    s->callback([&] {
      action = [&] {
        const ModelParams params = parse_probability(em.p);
        const auto ns = grid_or_single(em.grid, em.n, "1:10:+1");
        ReportHeader h("exact-mean");
        h.add("p", params.p_string()).add("mode", em.mode);
        if (em.mode == "real") h.add("precision_bits", std::to_string(em.bits));
        Table t{{"n", "mu"}, {}};
        if (em.mode == "exact") {
          const auto mu = mu_recurrence(ns.back(), params, ExactField{});
          for (auto n : ns) t.rows.push_back({std::to_string(n), to_string(mu[n])});
        } else {
          const auto mu = mu_recurrence(ns.back(), params, RealField{em.bits});
          for (auto n : ns) t.rows.push_back({std::to_string(n), dec(mu[n], 30)});
        }
        Sink sink(em.o, out);
        t.write(*sink, h, em.o.format);
        return Exit::ok;
      };
    });
  }

  // --- closed-forms --------------------------------------------------------
  struct {
    std::string p;
    std::size_t n_max = 150;
    bool values = false;
    Output o;
  } cf;
  {
    auto* s = app.add_subcommand("closed-forms", "Check recurrence, alternating closed form and positive form agree exactly");
    s->add_option("--p", cf.p)->required();
    s->add_option("--n-max", cf.n_max);
    s->add_flag("--values", cf.values, "Print the exact rationals");
    add_output(s, cf.o);
    s->callback([&] {
      action = [&] {
        const ModelParams params = parse_probability(cf.p);
        const auto rec = mu_recurrence(cf.n_max, params, ExactField{});
        const auto closed = mu_closed_form_table(cf.n_max, params);
        ReportHeader h("closed-forms");
        h.add("p", params.p_string()).add("n_max", std::to_string(cf.n_max)).add("mode", "exact");
        Table t{{"n", "mu", "recurrence_eq_closed", "recurrence_eq_positive"}, {}};
        if (cf.values) t.columns.push_back("exact");
        bool all = true;
        for (std::size_t n = 0; n <= cf.n_max; ++n) {
          const bool a = rec[n] == closed[n];
          const bool b = rec[n] == mu_positive_form_exact(n, params);
          all = all && a && b;
          t.rows.push_back({std::to_string(n), dec(rec[n]), yes_no(a), yes_no(b)});
          if (cf.values) t.rows.back().push_back(to_string(rec[n]));
        }
        h.add("all_agree", yes_no(all));
        Sink sink(cf.o, out);
        t.write(*sink, h, cf.o.format);
        if (!all) throw InvariantFailure("closed forms disagree with the recurrence");
        return Exit::ok;
      };
    });
  }

  // --- jn ------------------------------------------------------------------
  struct {
    std::string p, mc_grid;
    std::size_t n_max = 150, R = 10000;
    std::uint64_t seed = 1;
    Output o;
  } jn;
  {
    auto* s = app.add_subcommand("jn", "Expected number of independent sets: direct sum vs recurrence, optional Monte Carlo");
    s->add_option("--p", jn.p)->required();
    s->add_option("--n-max", jn.n_max);
    s->add_option("--mc-grid", jn.mc_grid, "Sizes (<= 25) for a Monte Carlo count check");
    s->add_option("--R", jn.R);
    s->add_option("--seed", jn.seed);
    add_output(s, jn.o);
    s->callback([&] {
      action = [&] {
        const ModelParams params = parse_probability(jn.p);
        const auto jbar = J_bar_recurrence(jn.n_max, params, ExactField{});
        ReportHeader h("jn");
        h.add("p", params.p_string()).add("n_max", std::to_string(jn.n_max));
        Table t{{"n", "J_n", "agree", "mc_mean", "mc_stderr", "mc_within_4se"}, {}};
        bool exact_ok = true;
        for (std::size_t n = 1; n <= jn.n_max; ++n) {
          const Rational direct = J_direct(n, params, ExactField{});
          const bool agree = direct == jbar[n] - 1;
          exact_ok = exact_ok && agree;
          t.rows.push_back({std::to_string(n), dec(direct), yes_no(agree), "", "", ""});
        }
        bool mc_ok = true;
        if (!jn.mc_grid.empty()) {
          h.add("R", std::to_string(jn.R)).add("seed", std::to_string(jn.seed));
          for (auto n : parse_grid(jn.mc_grid)) {
            if (n < 1 || n > jn.n_max) throw UsageError("--mc-grid sizes must lie in [1, n-max]");
            std::vector<double> counts(jn.R);
            for (std::size_t i = 0; i < jn.R; ++i) {
              Xoshiro256 rng = Xoshiro256::stream(jn.seed, static_cast<std::uint64_t>(StreamTag::graph) ^ mix64(n), i);
              counts[i] = static_cast<double>(count_independent_sets(sample_gnp(n, params, rng)));
            }
            const SampleMoments m = sample_moments(counts);
            const double se = std::sqrt(m.variance / static_cast<double>(jn.R));
            const bool within = std::abs(m.mean - Rational(jbar[n] - 1).get_d()) <= 4 * se;
            mc_ok = mc_ok && within;
            auto& row = t.rows[n - 1];
            row[3] = format_double(m.mean);
            row[4] = format_double(se);
            row[5] = yes_no(within);
          }
        }
        h.add("exact_agree", yes_no(exact_ok));
        Sink sink(jn.o, out);
        t.write(*sink, h, jn.o.format);
        if (!exact_ok) throw InvariantFailure("J_n direct sum and recurrence disagree");
        return Exit::ok;
      };
    });
  }

  // --- moments -------------------------------------------------------------
  struct {
    std::string p, grid, mode = "real", cache_dir;
    std::size_t n_max = 200, m_max = 4;
    unsigned bits = 256;
    Output o;
  } mo;
  {
    auto* s = app.add_subcommand("moments", "Central moments M_{n,m} and toll terms T_{n,m} of Y_n");
    s->add_option("--p", mo.p)->required();
    s->add_option("--n-max", mo.n_max);
    s->add_option("--m-max", mo.m_max);
    s->add_option("--n-grid", mo.grid, "Rows to print (default: every n)");
    s->add_option("--mode", mo.mode)->check(CLI::IsMember({"exact", "real"}));
    s->add_option("--bits", mo.bits);
    s->add_option("--cache-dir", mo.cache_dir, "Table cache (default $MISLAB_CACHE_DIR)");
    add_output(s, mo.o);
    s->callback([&] {
      action = [&] {
        const ModelParams params = parse_probability(mo.p);
        if (mo.m_max < 2) throw UsageError("--m-max must be >= 2");
        const auto ns = mo.grid.empty() ? parse_grid("1:" + std::to_string(mo.n_max) + ":+1") : parse_grid(mo.grid);
        if (ns.back() > mo.n_max) throw UsageError("--n-grid exceeds --n-max");
        ReportHeader h("moments");
        h.add("p", params.p_string()).add("mode", mo.mode).add("n_max", std::to_string(mo.n_max));
        h.add("m_max", std::to_string(mo.m_max));
        Table t{{"n", "mu"}, {}};
        for (std::size_t m = 2; m <= mo.m_max; ++m) t.columns.push_back("M" + std::to_string(m));
        for (std::size_t m = 2; m <= mo.m_max; ++m) t.columns.push_back("T" + std::to_string(m));
        auto emit = [&](const auto& table, auto fmt) {
          for (auto n : ns) {
            std::vector<std::string> row{std::to_string(n), fmt(table.mu[n])};
            for (std::size_t m = 2; m <= mo.m_max; ++m) row.push_back(fmt(table.central[m][n]));
            for (std::size_t m = 2; m <= mo.m_max; ++m) row.push_back(fmt(table.toll[m][n]));
            t.rows.push_back(std::move(row));
          }
        };
        if (mo.mode == "exact") {
          emit(central_moments(mo.n_max, mo.m_max, params, ExactField{}), [](const Rational& r) { return to_string(r); });
        } else {
          h.add("precision_bits", std::to_string(mo.bits));
          emit(cached_central_moments(mo.n_max, mo.m_max, params, mo.bits, resolve_cache_dir(mo.cache_dir)),
               [](const Real& r) { return dec(r); });
        }
        Sink sink(mo.o, out);
        t.write(*sink, h, mo.o.format);
        return Exit::ok;
      };
    });
  }

  // --- nu ------------------------------------------------------------------
  struct {
    std::size_t n_max = 60;
    Output o;
  } nu;
  {
    auto* s = app.add_subcommand("nu", "Mean nu_n of the uniform-split cost Z_n, with the integrality of nu_n n!");
    s->add_option("--n-max", nu.n_max);
    add_output(s, nu.o);
    s->callback([&] {
      action = [&] {
        const auto scaled = nu_factorial_scaled(nu.n_max);
        const auto exact = nu_recurrence(nu.n_max, ExactField{});
        ReportHeader h("nu");
        h.add("n_max", std::to_string(nu.n_max)).add("mode", "exact");
        Table t{{"n", "nu", "nu_times_factorial", "integral"}, {}};
        bool all = true;
        for (std::size_t n = 0; n <= nu.n_max; ++n) {
          const bool integral = scaled[n].get_den() == 1;
          all = all && integral;
          t.rows.push_back({std::to_string(n), to_string(exact[n]), to_string(scaled[n]), yes_no(integral)});
        }
        h.add("all_integral", yes_no(all));
        Sink sink(nu.o, out);
        t.write(*sink, h, nu.o.format);
        if (!all) throw InvariantFailure("nu_n n! is not integral");
        return Exit::ok;
      };
    });
  }

  // --- zeta ----------------------------------------------------------------
  struct {
    std::size_t m = 4, order = 8;
    Output o;
  } ze;
  {
    auto* s = app.add_subcommand("zeta", "Moments zeta_m of the limit of Z_n/nu_n and the series identity they satisfy");
    s->add_option("--m", ze.m, "Highest moment");
    s->add_option("--ode-order", ze.order, "Coefficient order of the identity check");
    add_output(s, ze.o);
    s->callback([&] {
      action = [&] {
        if (ze.m < 1) throw UsageError("--m must be >= 1");
        const auto z = zeta_moments(ze.m);
        const SeriesIdentity id = zeta_ode_coefficients(ze.order);
        bool ok = id.lhs == id.rhs;
        ReportHeader h("zeta");
        h.add("m", std::to_string(ze.m)).add("ode_order", std::to_string(ze.order)).add("ode_identity", ok ? "ok" : "FAILED");
        Table t{{"m", "zeta", "decimal"}, {}};
        for (std::size_t m = 1; m <= ze.m; ++m) t.rows.push_back({std::to_string(m), to_string(z[m]), dec(z[m])});
        Sink sink(ze.o, out);
        t.write(*sink, h, ze.o.format);
        if (!ok) throw InvariantFailure("zeta series identity fails");
        return Exit::ok;
      };
    });
  }

  // --- asymptotic ----------------------------------------------------------
  struct {
    std::string p, grid = "500,1000,2000,5000", formula = "mu";
    unsigned bits = 256;
    Output o;
  } as;
  {
    auto* s = app.add_subcommand("asymptotic", "Leading asymptotic estimates against exact values");
    s->add_option("--p", as.p)->required();
    s->add_option("--n-grid", as.grid);
    s->add_option("--formula", as.formula, "mu (leading mu_n), jn (leading J_n) or saddle (saddle leading term vs f~)")
        ->check(CLI::IsMember({"mu", "jn", "saddle"}));
    s->add_option("--bits", as.bits);
    add_output(s, as.o);
    s->callback([&] {
      action = [&] {
        const ModelParams params = parse_probability(as.p);
        const auto ns = parse_grid(as.grid);
        const NumericContext ctx(as.bits);
        std::vector<GridRow> rows;
        std::vector<Real> ref;
        if (as.formula == "mu") ref = mu_recurrence(ns.back(), params, ctx.field());
        if (as.formula == "jn") ref = J_bar_recurrence(ns.back(), params, ctx.field());
        std::optional<PoissonGF> gf;
        if (as.formula == "saddle") gf.emplace(params, NumericContext(gf_bits(as.bits, static_cast<double>(ns.back()))));
        for (auto n : ns) {
          const Real x(static_cast<long>(n), as.bits);
          AsymptoticEstimate est;
          Real reference;
          if (as.formula == "mu") {
            est = mu_leading(x, params, ctx);
            reference = ref[n];
          } else if (as.formula == "jn") {
            est = j_leading(x, params, ctx);
            reference = ref[n] - 1;
          } else {
            est = saddle_leading(x, params, ctx);
            reference = gf->eval(Real(static_cast<long>(n), gf->context().precision_bits()));
            reference.set_precision(as.bits);
          }
          rows.push_back({as.formula, std::to_string(n), params.p_string(), dec(est.value), dec(est.log_value), dec(reference),
                          dec(est.value / reference)});
        }
        Sink sink(as.o, out);
        if (as.o.format == "json") {
          Table t{{"formula", "n_or_x", "p", "value", "log_value", "reference", "ratio"}, {}};
          for (const auto& r : rows) t.rows.push_back({r.formula, r.n_or_x, r.p, r.value, r.log_value, r.reference, r.ratio});
          t.write(*sink, ReportHeader("asymptotic").add("precision_bits", std::to_string(as.bits)), "json");
        } else {
          ReportHeader("asymptotic").add("p", params.p_string()).add("precision_bits", std::to_string(as.bits)).write(*sink);
          write_grid_csv(*sink, rows);
        }
        return Exit::ok;
      };
    });
  }

  // --- charlier ------------------------------------------------------------
  struct {
    std::string p, grid = "100,200,400";
    unsigned bits = 256;
    Output o;
  } ch;
  {
    auto* s = app.add_subcommand("charlier", "Poisson heuristic f~(n) and its Charlier corrections against mu_n");
    s->add_option("--p", ch.p)->required();
    s->add_option("--n-grid", ch.grid);
    s->add_option("--bits", ch.bits);
    add_output(s, ch.o);
    s->callback([&] {
      action = [&] {
        const ModelParams params = parse_probability(ch.p);
        const auto ns = parse_grid(ch.grid);
        const unsigned bits = gf_bits(ch.bits, static_cast<double>(ns.back()));
        PoissonGF gf(params, NumericContext(bits));
        const auto mu = mu_recurrence(ns.back(), params, RealField{bits});
        ReportHeader h("charlier");
        h.add("p", params.p_string()).add("precision_bits", std::to_string(bits));
        Table t{{"n", "mu", "poisson", "two_term", "four_term", "err_poisson", "err_two_term", "err_four_term"}, {}};
        for (auto n : ns) {
          const Real f = gf.eval(Real(static_cast<long>(n), bits));
          const Real c2 = charlier_correction(static_cast<long>(n), 2, gf).value;
          const Real c4 = charlier_correction(static_cast<long>(n), 4, gf).value;
          const Real& m = mu[n];
          t.rows.push_back({std::to_string(n), dec(m), dec(f), dec(c2), dec(c4), dec(f / m - 1), dec(c2 / m - 1), dec(c4 / m - 1)});
        }
        Sink sink(ch.o, out);
        t.write(*sink, h, ch.o.format);
        return Exit::ok;
      };
    });
  }

  // --- alt-expansion -------------------------------------------------------
  struct {
    std::string p, scale = "n";
    double x = 1000;
    unsigned terms = 4, bits = 256;
    Output o;
  } ae;
  {
    auto* s = app.add_subcommand("alt-expansion", "Partial sums of the alternative expansion of f~(x) around N = floor(u)");
    s->add_option("--p", ae.p)->required();
    s->add_option("--x", ae.x);
    s->add_option("--terms", ae.terms);
    s->add_option("--scale", ae.scale, "r x = N (n) or N+1 (n+1)")->check(CLI::IsMember({"n", "n+1"}));
    s->add_option("--bits", ae.bits);
    add_output(s, ae.o);
    s->callback([&] {
      action = [&] {
        const ModelParams params = parse_probability(ae.p);
        if (!(ae.x > 0)) throw UsageError("--x must be positive");
        const unsigned bits = gf_bits(ae.bits, ae.x);
        const NumericContext ctx(bits);
        const Real x = Real::from_double(ae.x, bits);
        const AltExpansion e =
            alt_expansion(x, ae.terms, params, ctx, ae.scale == "n" ? AltScale::n_over_x : AltScale::n_plus_one_over_x);
        PoissonGF gf(params, ctx);
        const Real f = gf.eval(x);
        ReportHeader h("alt-expansion");
        h.add("p", params.p_string()).add("x", format_double(ae.x)).add("scale", ae.scale);
        h.add("N", std::to_string(e.N)).add("Q", dec(e.Q));
        Table t{{"m", "partial_sum", "f_tilde", "rel_error"}, {}};
        for (std::size_t m = 0; m < e.partial_sums.size(); ++m)
          t.rows.push_back({std::to_string(m), dec(e.partial_sums[m]), dec(f), dec(e.partial_sums[m] / f - 1)});
        Sink sink(ae.o, out);
        t.write(*sink, h, ae.o.format);
        return Exit::ok;
      };
    });
  }

  // --- simulate ------------------------------------------------------------
  struct {
    std::string kind = "Y", p, grid, samples_out;
    std::size_t R = 1000, cutoff = 16;
    std::uint64_t seed = 1, budget = kDefaultBudget;
    unsigned threads = 1;
    Output o;
  } si;
  {
    auto* s = app.add_subcommand("simulate", "Monte Carlo campaign for X (graph search), Y or Z (recurrence samplers)");
    s->add_option("--kind", si.kind)->check(CLI::IsMember({"X", "Y", "Z"}));
    s->add_option("--p", si.p, "Required for X and Y");
    s->add_option("--n-grid", si.grid)->required();
    s->add_option("--R", si.R);
    s->add_option("--seed", si.seed);
    s->add_option("--threads", si.threads);
    s->add_option("--budget", si.budget);
    s->add_option("--table-cutoff", si.cutoff);
    s->add_option("--samples-out", si.samples_out, "Per-replicate CSV");
    add_output(s, si.o);
    s->callback([&] {
      action = [&] {
        CampaignConfig c;
        c.kind = parse_cost_kind(si.kind);
        if (c.kind != CostKind::Z) {
          if (si.p.empty()) throw UsageError("--p is required for X and Y");
          c.params = parse_probability(si.p);
        }
        if (si.R < 1) throw UsageError("--R must be >= 1");
        c.n_grid = parse_grid(si.grid);
        c.replicates = si.R;
        c.master_seed = si.seed;
        c.threads = std::max(1u, si.threads);
        c.budget = si.budget;
        c.table_cutoff = si.cutoff;
        c.keep_samples = !si.samples_out.empty();
        const CampaignResult r = run_campaign(c);
        Sink sink(si.o, out);
        if (si.o.format == "json") {
          write_summary_json(*sink, r.summaries);
        } else {
          ReportHeader h("simulate");
          h.add("kind", si.kind).add("p", c.params ? c.params->p_string() : "").add("n_grid", si.grid);
          h.add("R", std::to_string(si.R)).add("seed", std::to_string(si.seed)).add("budget", std::to_string(si.budget));
          h.add("table_cutoff", std::to_string(si.cutoff));
          h.write(*sink);
          write_summary_csv(*sink, r.summaries);
        }
        if (!si.samples_out.empty()) {
          std::ofstream f(si.samples_out, std::ios::binary);
          if (!f) throw UsageError("cannot open " + si.samples_out);
          std::vector<CostSample> all;
          for (const auto& v : r.samples) all.insert(all.end(), v.begin(), v.end());
          write_samples_csv(f, all, c.params ? &*c.params : nullptr);
        }
        return Exit::ok;
      };
    });
  }

  // --- normality -----------------------------------------------------------
  struct {
    std::string p, grid = "50,100,200", exact_grid = "250:2000:+250", cache_dir;
    std::size_t R = 10000, calib_reps = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 1, bits = 128;
    double quantile = 0.99;
    Output o;
  } no;
  {
    auto* s = app.add_subcommand("normality", "Skewness, kurtosis and calibrated KS trend of Y_n");
    s->add_option("--p", no.p)->required();
    s->add_option("--n-grid", no.grid);
    s->add_option("--exact-n-grid", no.exact_grid, "Sizes for the exact standardized moments");
    s->add_option("--R", no.R);
    s->add_option("--seed", no.seed);
    s->add_option("--threads", no.threads);
    s->add_option("--bits", no.bits);
    s->add_option("--calibration-reps", no.calib_reps);
    s->add_option("--ks-quantile", no.quantile)->check(CLI::IsMember({0.95, 0.99}));
    s->add_option("--cache-dir", no.cache_dir);
    add_output(s, no.o);
    s->callback([&] {
      action = [&] {
        CampaignConfig c;
        c.kind = CostKind::Y;
        c.params = parse_probability(no.p);
        c.n_grid = parse_grid(no.grid);
        c.replicates = no.R;
        c.master_seed = no.seed;
        c.threads = std::max(1u, no.threads);
        const auto summaries = run_campaign(c).summaries;
        const KsCalibration cal = calibrate_ks(no.R, no.calib_reps, no.seed, c.threads);
        const double threshold = no.quantile == 0.95 ? cal.quantile_95 : cal.quantile_99;
        const auto exact_ns = parse_grid(no.exact_grid);
        const auto table = cached_central_moments(exact_ns.back(), 4, *c.params, no.bits, resolve_cache_dir(no.cache_dir));
        const NormalityReport rep = normality_report(summaries, threshold, &table, exact_ns);
        ReportHeader h("normality");
        h.add("p", c.params->p_string()).add("n_grid", no.grid).add("R", std::to_string(no.R)).add("seed", std::to_string(no.seed));
        h.add("ks_threshold", format_double(threshold)).add("ks_quantile", format_double(no.quantile));
        h.add("mc_skew_decreasing", yes_no(rep.skew_decreasing)).add("mc_kurtosis_decreasing", yes_no(rep.kurtosis_decreasing));
        h.add("ks_pass", yes_no(rep.ks_pass)).add("exact_skew_shrinks", yes_no(rep.exact->skew_shrinks));
        h.add("exact_kurtosis_to_3", yes_no(rep.exact->kurt_to_3)).add("pass", yes_no(rep.pass()));
        Table t{{"source", "n", "skewness", "excess_kurtosis", "ks"}, {}};
        for (const auto& s : rep.summaries)
          t.rows.push_back({"mc", std::to_string(s.n), format_double(s.skewness), format_double(s.excess_kurtosis),
                            format_double(s.ks_distance)});
        for (std::size_t i = 0; i < rep.exact->ns.size(); ++i)
          t.rows.push_back({"exact", std::to_string(rep.exact->ns[i]), format_double(rep.exact->skew[i]),
                            format_double(rep.exact->kurt[i] - 3), ""});
        Sink sink(no.o, out);
        t.write(*sink, h, no.o.format);
        return Exit::ok;
      };
    });
  }

  // --- z-limit -------------------------------------------------------------
  struct {
    std::string grid = "16,32,64";
    std::size_t R = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    Output o;
  } zl;
  {
    auto* s = app.add_subcommand("z-limit", "Moments of Z_n/nu_n against the limit moments zeta_k");
    s->add_option("--n-grid", zl.grid);
    s->add_option("--R", zl.R);
    s->add_option("--seed", zl.seed);
    s->add_option("--threads", zl.threads);
    add_output(s, zl.o);
    s->callback([&] {
      action = [&] {
        CampaignConfig c;
        c.kind = CostKind::Z;
        c.n_grid = parse_grid(zl.grid);
        c.replicates = zl.R;
        c.master_seed = zl.seed;
        c.threads = std::max(1u, zl.threads);
        c.keep_samples = true;
        const CampaignResult r = run_campaign(c);
        const ZLimitReport rep = z_limit_report(c.n_grid, r.samples);
        ReportHeader h("z-limit");
        h.add("n_grid", zl.grid).add("R", std::to_string(zl.R)).add("seed", std::to_string(zl.seed));
        h.add("zeta_skewness", format_double(rep.zeta_skewness)).add("zeta_excess_kurtosis", format_double(rep.zeta_excess_kurtosis));
        h.add("non_normal", yes_no(rep.non_normal));
        Table t{{"n", "k", "sample_moment", "stderr", "exact_finite_n", "zeta", "within_4se"}, {}};
        for (const auto& row : rep.rows)
          for (std::size_t k = 0; k < row.moments.size(); ++k)
            t.rows.push_back({std::to_string(row.n), std::to_string(k + 1), format_double(row.moments[k]),
                              format_double(row.stderrs[k]), format_double(row.exact_finite[k]), format_double(rep.zeta[k + 1]),
                              yes_no(row.within[k])});
        Sink sink(zl.o, out);
        t.write(*sink, h, zl.o.format);
        return Exit::ok;
      };
    });
  }

  // --- compare -------------------------------------------------------------
  struct {
    std::string p, grid = "500:5000:x2";
    unsigned bits = 256;
    Output o;
  } co;
  {
    auto* s = app.add_subcommand("compare", "mu_n, Poisson f~(n) and the leading estimate side by side");
    s->add_option("--p", co.p)->required();
    s->add_option("--n-grid", co.grid);
    s->add_option("--bits", co.bits);
    add_output(s, co.o);
    s->callback([&] {
      action = [&] {
        const ModelParams params = parse_probability(co.p);
        const auto ns = parse_grid(co.grid);
        const NumericContext ctx(co.bits);
        const auto mu = mu_recurrence(ns.back(), params, ctx.field());
        PoissonGF gf(params, NumericContext(gf_bits(co.bits, static_cast<double>(ns.back()))));
        ReportHeader h("compare");
        h.add("p", params.p_string()).add("n_grid", co.grid).add("precision_bits", std::to_string(co.bits));
        Table t{{"n", "mu", "f_tilde", "leading", "f_tilde_over_mu", "leading_over_mu"}, {}};
        for (auto n : ns) {
          Real f = gf.eval(Real(static_cast<long>(n), gf.context().precision_bits()));
          f.set_precision(co.bits);
          const Real lead = n >= 16 ? mu_leading(Real(static_cast<long>(n), co.bits), params, ctx).value : Real(co.bits);
          t.rows.push_back({std::to_string(n), dec(mu[n]), dec(f), n >= 16 ? dec(lead) : "", dec(f / mu[n]),
                            n >= 16 ? dec(lead / mu[n]) : ""});
        }
        Sink sink(co.o, out);
        t.write(*sink, h, co.o.format);
        return Exit::ok;
      };
    });
  }

  // --- cache ---------------------------------------------------------------
  struct {
    std::string p, cache_dir;
    std::size_t n_max = 500, m_max = 4;
    unsigned bits = 256;
    bool verify = false;
    Output o;
  } ca;
  {
    auto* s = app.add_subcommand("cache", "Build or verify a cached real-mode moment table");
    s->add_option("--p", ca.p)->required();
    s->add_option("--n-max", ca.n_max);
    s->add_option("--m-max", ca.m_max);
    s->add_option("--bits", ca.bits);
    s->add_option("--cache-dir", ca.cache_dir);
    s->add_flag("--verify", ca.verify, "Recompute without the cache and compare every cell");
    add_output(s, ca.o);
    s->callback([&] {
      action = [&] {
        const ModelParams params = parse_probability(ca.p);
        const std::string dir = resolve_cache_dir(ca.cache_dir);
        if (dir.empty()) throw UsageError("no cache directory (use --cache-dir or MISLAB_CACHE_DIR)");
        const auto cached = cached_central_moments(ca.n_max, ca.m_max, params, ca.bits, dir);
        ReportHeader h("cache");
        h.add("p", params.p_string()).add("n_max", std::to_string(ca.n_max)).add("m_max", std::to_string(ca.m_max));
        h.add("precision_bits", std::to_string(ca.bits)).add("file", cache_file_name(params.p_string(), Mode::real, ca.bits));
        bool same = true;
        if (ca.verify) {
          const auto cold = central_moments(ca.n_max, ca.m_max, params, RealField{ca.bits});
          same = cold.mu == cached.mu && cold.central == cached.central && cold.toll == cached.toll;
          h.add("verified_identical", yes_no(same));
        }
        Table t{{"n", "mu", "M2"}, {}};
        t.rows.push_back({std::to_string(ca.n_max), dec(cached.mu[ca.n_max]), dec(cached.central[2][ca.n_max])});
        Sink sink(ca.o, out);
        t.write(*sink, h, ca.o.format);
        if (!same) throw InvariantFailure("cached table differs from a cold computation");
        return Exit::ok;
      };
    });
  }

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return Exit::ok;
  } catch (const CLI::CallForVersion& e) {
    out << kEngineVersion << '\n';
    return Exit::ok;
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg, help;
    app.exit(e, help, msg);
    err << msg.str();
    return Exit::usage;
  }

  try {
    return action ? action() : Exit::usage;
  } catch (const InvariantFailure& e) {
    err << "invariant failed: " << e.what() << '\n';
    return Exit::invariant_failed;
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << '\n';
    return Exit::usage;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return Exit::usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return Exit::usage;
  }
}

}  // namespace mislab::cli
